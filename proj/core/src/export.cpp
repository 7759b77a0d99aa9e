#include <fmt/format.h>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dprom/export.hpp"

namespace dprom {

using json = nlohmann::json;

void write_table(const std::string& path, const ResultTable& t) {
  if (t.columns.empty() ||
      t.data.cols() != static_cast<long>(t.columns.size()))
    throw IoError("result table has inconsistent columns");
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path));
  out << "# dprom-table 1\n";
  for (size_t c = 0; c < t.columns.size(); ++c)
    out << (c ? "," : "") << t.columns[c];
  out << "\n";
  char buf[40];
  for (long r = 0; r < t.data.rows(); ++r) {
    for (long c = 0; c < t.data.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", t.data(r, c));
      out << (c ? "," : "") << buf;
    }
    out << "\n";
  }
}

ResultTable read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path));
  std::string line;
  if (!std::getline(in, line) || line != "# dprom-table 1")
    throw IoError(fmt::format("'{}' is not a version-1 result table", path));
  ResultTable t;
  if (!std::getline(in, line))
    throw IoError(fmt::format("'{}': missing header row", path));
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) t.columns.push_back(cell);
  }
  std::vector<double> vals;
  long rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    long c = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        vals.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw IoError(fmt::format("'{}': bad number '{}'", path, cell));
      }
      ++c;
    }
    if (c != static_cast<long>(t.columns.size()))
      throw IoError(fmt::format("'{}': row with {} cells, expected {}", path,
                                c, t.columns.size()));
    ++rows;
  }
  t.data.resize(rows, t.columns.size());
  for (long r = 0; r < rows; ++r)
    for (long c = 0; c < t.data.cols(); ++c)
      t.data(r, c) = vals[r * t.data.cols() + c];
  return t;
}

namespace {

json load_index(const std::string& dir) {
  std::ifstream in(dir + "/index.json");
  if (!in)
    throw IoError(fmt::format("'{}' has no index.json (not a run dir?)", dir));
  json j;
  in >> j;
  if (j.value("kind", "") != "dprom-run")
    throw IoError(fmt::format("'{}' index.json is not a run manifest", dir));
  return j;
}

// Piecewise-linear inverse lookup omega(amp) over branch rows; rows need not
// be sorted by amplitude, so consecutive pairs are scanned in branch order.
double interp_branch(const VecX& amp, const VecX& omega, double a) {
  for (long k = 0; k + 1 < amp.size(); ++k) {
    const double a0 = amp(k), a1 = amp(k + 1);
    if ((a >= a0 && a <= a1) || (a <= a0 && a >= a1)) {
      const double w = a1 == a0 ? 0.5 : (a - a0) / (a1 - a0);
      return omega(k) + w * (omega(k + 1) - omega(k));
    }
  }
  throw IoError("amplitude outside the shared branch range");
}

double rel_delta(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0 ? 0.0 : (b - a) / s;
}

}  // namespace

std::string compare_runs(const std::string& dir_a, const std::string& dir_b,
                         const std::string& out_path) {
  const json ia = load_index(dir_a), ib = load_index(dir_b);
  const std::string analysis = ia.at("analysis");
  if (ib.at("analysis") != analysis)
    throw IoError(fmt::format("analysis mismatch: '{}' vs '{}'", analysis,
                              ib.at("analysis").get<std::string>()));
  if (ia.at("probes") != ib.at("probes"))
    throw IoError("probe mismatch between the two runs");
  const auto probes = ia.at("probes").get<std::vector<std::string>>();

  const auto grid_a = ia.at("xi_grid").get<std::vector<std::vector<double>>>();
  const auto grid_b = ib.at("xi_grid").get<std::vector<std::vector<double>>>();
  // Pair up grid points with identical amplitude vectors.
  std::vector<std::pair<int, int>> gpairs;
  for (size_t ga = 0; ga < grid_a.size(); ++ga)
    for (size_t gb = 0; gb < grid_b.size(); ++gb) {
      if (grid_a[ga].size() != grid_b[gb].size()) continue;
      bool same = true;
      for (size_t d = 0; d < grid_a[ga].size(); ++d)
        if (std::abs(grid_a[ga][d] - grid_b[gb][d]) > 1e-12) same = false;
      if (same) {
        gpairs.emplace_back(static_cast<int>(ga), static_cast<int>(gb));
        break;
      }
    }
  if (gpairs.empty())
    throw IoError("the runs share no defect-amplitude grid points");

  json out;
  out["format"] = 1;
  out["kind"] = "dprom-compare";
  out["a"] = dir_a;
  out["b"] = dir_b;
  out["analysis"] = analysis;
  out["pairs"] = json::array();

  const bool branchy = analysis == "frf" || analysis == "backbone";
  for (const auto& [ma, fa] : ia.at("files").items()) {
    for (const auto& [mb, fb] : ib.at("files").items()) {
      for (const auto& [ga, gb] : gpairs) {
        const ResultTable ta =
            read_table(dir_a + "/" + fa.at(ga).get<std::string>());
        const ResultTable tb =
            read_table(dir_b + "/" + fb.at(gb).get<std::string>());
        if (ta.columns != tb.columns)
          throw IoError(fmt::format(
              "column mismatch between {} and {}", fa.at(ga).get<std::string>(),
              fb.at(gb).get<std::string>()));
        json rec;
        rec["model_a"] = ma;
        rec["model_b"] = mb;
        rec["xi"] = grid_a[ga];
        if (branchy) {
          json pl = json::array();
          for (size_t pi = 0; pi < probes.size(); ++pi) {
            const long ca = 2 + 2 * static_cast<long>(pi);  // amp column
            long ra, rb2;
            const double pa = ta.data.col(ca).maxCoeff(&ra);
            const double pb = tb.data.col(ca).maxCoeff(&rb2);
            json pj;
            pj["probe"] = probes[pi];
            pj["peak_amp_a"] = pa;
            pj["peak_amp_b"] = pb;
            pj["peak_amp_delta_rel"] = rel_delta(pa, pb);
            pj["peak_omega_a"] = ta.data(ra, 0);
            pj["peak_omega_b"] = tb.data(rb2, 0);
            pj["peak_omega_delta_rel"] =
                rel_delta(ta.data(ra, 0), tb.data(rb2, 0));
            pj["peak_sigma_a"] = ta.data(ra, 1);
            pj["peak_sigma_b"] = tb.data(rb2, 1);
            if (analysis == "backbone") {
              // Frequency offset at matched amplitudes across the shared
              // amplitude range; a constant offset shows up as a tight
              // min-max spread around the mean.
              const VecX aa = ta.data.col(ca), ab = tb.data.col(ca);
              const double lo = std::max(aa.minCoeff(), ab.minCoeff());
              const double hi = std::min(aa.maxCoeff(), ab.maxCoeff());
              if (hi > lo) {
                double mean = 0, mn = 1e300, mx = -1e300;
                const int ns = 21;
                for (int k = 0; k < ns; ++k) {
                  const double a = lo + (hi - lo) * k / (ns - 1);
                  const double wa = interp_branch(aa, ta.data.col(0), a);
                  const double wb = interp_branch(ab, tb.data.col(0), a);
                  const double off = (wb - wa) / wa;
                  mean += off / ns;
                  mn = std::min(mn, off);
                  mx = std::max(mx, off);
                }
                pj["offset_mean_rel"] = mean;
                pj["offset_min_rel"] = mn;
                pj["offset_max_rel"] = mx;
              }
            }
            pl.push_back(pj);
          }
          rec["probes"] = pl;
        } else {
          const long rows = std::min(ta.data.rows(), tb.data.rows());
          double mx = 0, rms = 0;
          for (long r = 0; r < rows; ++r)
            for (long c = 1; c < ta.data.cols(); ++c) {
              const double d = std::abs(ta.data(r, c) - tb.data(r, c));
              mx = std::max(mx, d);
              rms += d * d;
            }
          rec["rows_compared"] = rows;
          rec["max_abs_diff"] = mx;
          rec["rms_diff"] =
              rows ? std::sqrt(rms / (rows * (ta.data.cols() - 1))) : 0.0;
        }
        out["pairs"].push_back(rec);
      }
    }
  }
  const std::string text = out.dump(2) + "\n";
  if (!out_path.empty()) {
    std::ofstream f(out_path);
    if (!f) throw IoError(fmt::format("cannot write '{}'", out_path));
    f << text;
  }
  return text;
}

}  // namespace dprom
