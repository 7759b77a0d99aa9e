#include <fmt/format.h>

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "dprom/assembly.hpp"
#include "dprom/eig.hpp"
#include "dprom/export.hpp"
#include "dprom/scenario.hpp"

namespace dprom {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string fnv1a_hex(const std::string& text) {
  unsigned long long h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return fmt::format("{:016x}", h);
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

int parse_axis(const std::string& s, int dim, const std::string& where) {
  if (s == "x") return 0;
  if (s == "y") return 1;
  if (s == "z" && dim == 3) return 2;
  throw ConfigError(
      fmt::format("{}: '{}' is not a coordinate axis for dim {}", where, s, dim));
}

std::pair<double, double> axis_extent(const NominalMesh& mesh, int axis) {
  return {mesh.nodes.col(axis).minCoeff(), mesh.nodes.col(axis).maxCoeff()};
}

double bbox_diag(const NominalMesh& mesh) {
  double d2 = 0;
  for (int a = 0; a < mesh.dim; ++a) {
    const auto [lo, hi] = axis_extent(mesh, a);
    d2 += (hi - lo) * (hi - lo);
  }
  return std::sqrt(d2);
}

int nearest_node(const NominalMesh& mesh, const VecX& x,
                 const std::string& where) {
  int best = 0;
  double bd = std::numeric_limits<double>::max();
  for (int n = 0; n < mesh.n_nodes(); ++n) {
    const double d = (mesh.nodes.row(n).transpose() - x).norm();
    if (d < bd) {
      bd = d;
      best = n;
    }
  }
  if (bd > 1e-8 * bbox_diag(mesh) + 1e-14)
    throw ConfigError(fmt::format(
        "{}: no mesh node at ({}); nearest is ({}) at distance {:.3g}", where,
        fmt::join(std::vector<double>(x.data(), x.data() + x.size()), ", "),
        fmt::join(std::vector<double>(mesh.nodes.row(best).data(),
                                      mesh.nodes.row(best).data() + mesh.dim),
                  ", "),
        bd));
  return best;
}

NominalMesh mesh_from_config(ConfigFile& cfg) {
  const std::string kind = cfg.get_string("mesh", "kind");
  if (kind == "file") {
    return read_mesh(cfg.get_string("mesh", "file"));
  }
  MaterialParams mat;
  mat.E = cfg.get_double("material", "E");
  mat.nu = cfg.get_double("material", "nu");
  mat.rho = cfg.get_double("material", "rho");
  if (kind == "beam") {
    const double lx = cfg.get_double_or("mesh", "lx", 2.0);
    const double ty = cfg.get_double_or("mesh", "ty", 0.05);
    const double wz = cfg.get_double_or("mesh", "wz", 0.2);
    const int nx = cfg.get_int_or("mesh", "nx", 40);
    const int ny = cfg.get_int_or("mesh", "ny", 2);
    return build_rect_beam_mesh(lx, ty, nx, ny, mat, wz);
  }
  if (kind == "gyro") {
    GyroPlateParams p;
    p.plate_side = cfg.get_double_or("mesh", "plate_side", p.plate_side);
    p.plate_thick = cfg.get_double_or("mesh", "plate_thick", p.plate_thick);
    p.leg_length = cfg.get_double_or("mesh", "leg_length", p.leg_length);
    p.leg_width = cfg.get_double_or("mesh", "leg_width", p.leg_width);
    p.plate_div = cfg.get_int_or("mesh", "plate_div", p.plate_div);
    p.leg_div = cfg.get_int_or("mesh", "leg_div", p.leg_div);
    return build_gyro_plate(p, mat);
  }
  throw ConfigError(
      fmt::format("[mesh] kind '{}' is not beam, gyro, or file", kind));
}

DefectBasis defects_from_config(ConfigFile& cfg, const NominalMesh& mesh,
                                std::vector<std::string>& defect_sections) {
  std::vector<DefectShape> shapes;
  std::vector<DefectBasis> file_bases;
  for (int i = 1;; ++i) {
    const std::string sec = fmt::format("defect{}", i);
    if (!cfg.has_section(sec)) break;
    defect_sections.push_back(sec);
    const std::string kind = cfg.get_string(sec, "kind");
    if (kind == "arch") {
      const auto [x0, x1] = axis_extent(mesh, 0);
      const double length = cfg.get_double_or(sec, "length", x1 - x0);
      shapes.push_back(
          make_arch_defect(length, cfg.get_double(sec, "amplitude")));
    } else if (kind == "taper") {
      const int axial = parse_axis(cfg.get_string_or(sec, "axial", "x"),
                                   mesh.dim, sec);
      const int span =
          parse_axis(cfg.get_string_or(sec, "span", "y"), mesh.dim, sec);
      shapes.push_back(make_beam_taper_defect(
          cfg.get_double(sec, "x0"), cfg.get_double(sec, "length"),
          cfg.get_double(sec, "y_mid"), cfg.get_double(sec, "half_width"),
          cfg.get_double(sec, "amplitude"), axial, span));
    } else if (kind == "wall_angle") {
      if (mesh.dim != 3)
        throw ConfigError(sec + ": wall_angle defects need a 3D mesh");
      const auto [z0, z1] = axis_extent(mesh, 2);
      shapes.push_back(make_wall_angle_defect(
          cfg.get_double_or(sec, "angle_deg", 1.0),
          cfg.get_double_or(sec, "z_mid", 0.5 * (z0 + z1))));
    } else if (kind == "file") {
      file_bases.push_back(
          read_defect_file(mesh, cfg.get_string(sec, "file")));
    } else {
      throw ConfigError(fmt::format(
          "{}: kind '{}' is not arch, taper, wall_angle, or file", sec, kind));
    }
  }
  DefectBasis basis = sample_defects(mesh, shapes);
  for (const auto& fb : file_bases) {
    MatX U(mesh.n_dofs(), basis.U.cols() + fb.U.cols());
    if (basis.U.cols() > 0) U.leftCols(basis.U.cols()) = basis.U;
    U.rightCols(fb.U.cols()) = fb.U;
    basis.U = U;
    basis.names.insert(basis.names.end(), fb.names.begin(), fb.names.end());
    basis.isochoric.insert(basis.isochoric.end(), fb.isochoric.begin(),
                           fb.isochoric.end());
    basis.divergence.insert(basis.divergence.end(), fb.divergence.begin(),
                            fb.divergence.end());
  }
  return basis;
}

MatX grid_from_config(ConfigFile& cfg, int md) {
  if (!cfg.has_section("grid"))
    throw ConfigError("missing [grid] section with the defect amplitude grid");
  std::vector<std::vector<double>> cols;
  if (cfg.has("grid", "xi")) {
    if (md != 1)
      throw ConfigError(
          "[grid] xi is for a single defect; use xi1, xi2, ... per defect");
    cols.push_back(cfg.get_double_list("grid", "xi"));
  } else {
    for (int d = 1; d <= md; ++d)
      cols.push_back(cfg.get_double_list("grid", fmt::format("xi{}", d)));
  }
  const size_t n = cols.front().size();
  for (const auto& c : cols)
    if (c.size() != n)
      throw ConfigError("[grid] amplitude lists must have equal length");
  if (n == 0) throw ConfigError("[grid] amplitude grid is empty");
  MatX g(n, md);
  for (int d = 0; d < md; ++d)
    for (size_t k = 0; k < n; ++k) g(k, d) = cols[d][k];
  return g;
}

}  // namespace

ScenarioDef load_scenario(ConfigFile& cfg) {
  ScenarioDef sc;
  sc.name = cfg.get_string("scenario", "name");
  sc.analysis = cfg.get_string("scenario", "analysis");
  if (sc.analysis != "static" && sc.analysis != "frf" &&
      sc.analysis != "backbone" && sc.analysis != "transient")
    throw ConfigError(fmt::format(
        "[scenario] analysis '{}' is not static, frf, backbone, or transient",
        sc.analysis));
  sc.models = cfg.get_string_list_or("scenario", "models", {});
  if (sc.models.empty())
    throw ConfigError("[scenario] needs a non-empty models list");
  for (const auto& mstr : sc.models) {
    if (mstr == "ROM-d") continue;
    const ModelSpec ms = parse_model_spec(mstr);  // throws on junk
    if (ms.variant == Variant::Exact)
      throw ConfigError(
          "Exact has no polynomial reduced form; it serves as ground truth "
          "only and cannot appear in [scenario] models");
  }
  sc.amp_ref = cfg.get_double_or("scenario", "amp_ref", 1.0);

  sc.mesh = mesh_from_config(cfg);
  std::vector<std::string> defect_sections;
  sc.defects = defects_from_config(cfg, sc.mesh, defect_sections);
  if (sc.defects.count() == 0)
    throw ConfigError("at least one [defect1] section is required");
  sc.xi_grid = grid_from_config(cfg, sc.defects.count());

  sc.recipe.n_modes = cfg.get_int_or("basis", "modes", 5);
  sc.recipe.modal_derivatives =
      cfg.get_bool_or("basis", "modal_derivatives", true);
  sc.recipe.defect_sensitivities =
      cfg.get_bool_or("basis", "defect_sensitivities", true);
  sc.recipe.md_sensitivities =
      cfg.get_bool_or("basis", "md_sensitivities", false);
  sc.recipe.second_order_defect =
      cfg.get_bool_or("basis", "second_order", false);
  sc.recipe.dedup_tol = cfg.get_double_or("basis", "dedup_tol", 1e-8);
  sc.romd_recipe = sc.recipe;
  sc.romd_recipe.defect_sensitivities = false;
  sc.romd_recipe.md_sensitivities = false;
  sc.romd_recipe.second_order_defect = false;

  if (cfg.has_section("damping")) {
    if (cfg.has("damping", "quality")) {
      sc.quality = cfg.get_double("damping", "quality");
      if (sc.quality <= 0) throw ConfigError("[damping] quality must be > 0");
    } else {
      sc.alpha = cfg.get_double("damping", "alpha");
      sc.beta = cfg.get_double("damping", "beta");
    }
  }

  const bool needs_force = sc.analysis != "backbone";
  if (cfg.has_section("forcing")) {
    const double amp = cfg.get_double("forcing", "amplitude");
    const auto at = cfg.get_double_list("forcing", "at");
    if (static_cast<int>(at.size()) != sc.mesh.dim)
      throw ConfigError("[forcing] at must list one coordinate per dimension");
    const int dir =
        parse_axis(cfg.get_string("forcing", "dir"), sc.mesh.dim, "[forcing]");
    const VecX x = Eigen::Map<const VecX>(at.data(), at.size());
    const int node = nearest_node(sc.mesh, x, "[forcing]");
    const int dof = node * sc.mesh.dim + dir;
    const int free = sc.mesh.free_of_dof[dof];
    if (free < 0)
      throw ConfigError("[forcing] point sits on a constrained dof");
    sc.force_free = VecX::Zero(sc.mesh.n_free());
    sc.force_free(free) = amp;
  } else if (needs_force) {
    throw ConfigError(
        fmt::format("analysis '{}' needs a [forcing] section", sc.analysis));
  }

  if (!cfg.has_section("probes"))
    throw ConfigError("missing [probes] section (outputs are probe-based)");
  for (const auto& key : cfg.keys("probes")) {
    const auto toks = cfg.get_string_list_or("probes", key, {});
    if (static_cast<int>(toks.size()) != sc.mesh.dim + 1)
      throw ConfigError(fmt::format(
          "[probes] {}: expected {} coordinates and an axis letter", key,
          sc.mesh.dim));
    VecX x(sc.mesh.dim);
    for (int a = 0; a < sc.mesh.dim; ++a) {
      try {
        x(a) = std::stod(toks[a]);
      } catch (const std::exception&) {
        throw ConfigError(fmt::format("[probes] {}: '{}' is not a number", key,
                                      toks[a]));
      }
    }
    ProbeDef p;
    p.name = key;
    p.dir = parse_axis(toks.back(), sc.mesh.dim, "[probes] " + key);
    p.node = nearest_node(sc.mesh, x, "[probes] " + key);
    p.free_dof = sc.mesh.free_of_dof[p.node * sc.mesh.dim + p.dir];
    if (p.free_dof < 0)
      throw ConfigError(
          fmt::format("[probes] {}: probe dof is constrained", key));
    sc.probes.push_back(std::move(p));
  }

  sc.hb.n_harm = cfg.get_int_or("hb", "harmonics", 7);
  sc.hb.n_samples = cfg.get_int_or("hb", "samples", 0);
  sc.hb.tol = cfg.get_double_or("hb", "tol", 1e-10);
  sc.hb.max_iter = cfg.get_int_or("hb", "max_iter", 25);

  sc.omega_lo = cfg.get_double_or("continuation", "omega_lo", 0.9);
  sc.omega_hi = cfg.get_double_or("continuation", "omega_hi", 1.1);
  sc.cont.ds0 = cfg.get_double_or("continuation", "ds0", sc.cont.ds0);
  sc.cont.ds_min = cfg.get_double_or("continuation", "ds_min", sc.cont.ds_min);
  sc.cont.ds_max = cfg.get_double_or("continuation", "ds_max", sc.cont.ds_max);
  sc.cont.max_points =
      cfg.get_int_or("continuation", "max_points", sc.cont.max_points);

  if (sc.analysis == "backbone") {
    sc.bb_coord = cfg.get_int_or("backbone", "coord", 0);
    sc.bb_amp_lo = cfg.get_double("backbone", "amp_lo");
    sc.bb_amp_hi = cfg.get_double("backbone", "amp_hi");
    sc.bb_points = cfg.get_int_or("backbone", "points", 15);
  }
  if (sc.analysis == "static")
    sc.static_steps = cfg.get_int_or("static", "steps", 10);
  if (sc.analysis == "transient") {
    sc.tr_periods = cfg.get_int_or("transient", "periods", 10);
    sc.tr_steps_per_period =
        cfg.get_int_or("transient", "steps_per_period", 100);
    sc.tr_omega = cfg.get_double_or("transient", "omega", 1.0);
  }

  std::vector<std::string> known = {"scenario", "mesh",    "material",
                                    "grid",     "basis",   "damping",
                                    "forcing",  "probes",  "hb",
                                    "continuation", "backbone", "static",
                                    "transient"};
  known.insert(known.end(), defect_sections.begin(), defect_sections.end());
  cfg.check_consumed(known);

  sc.config_hash = fnv1a_hex(cfg.canonical_text());
  std::string build_text = cfg.canonical_section("mesh") +
                           cfg.canonical_section("material") +
                           cfg.canonical_section("basis");
  for (const auto& s : defect_sections) build_text += cfg.canonical_section(s);
  sc.build_hash = fnv1a_hex(build_text);
  return sc;
}

namespace {

// Everything a solve job needs about one model at one grid point.
struct ModelData {
  std::string name;
  MatX V;            // free dofs x m (per grid point for ROM-d)
  ReducedSystem sys;
  double omega_ref = 0.0;
};

ResultTable branch_table(const ScenarioDef& sc, const MatX& V,
                         const Branch& br, double omega_ref,
                         bool cosine_only) {
  ResultTable t;
  t.columns = {"omega", "sigma"};
  for (const auto& p : sc.probes) {
    t.columns.push_back(p.name + "_amp");
    t.columns.push_back(p.name + "_amp_norm");
  }
  t.data.resize(br.points.size(), t.columns.size());
  for (size_t k = 0; k < br.points.size(); ++k) {
    const auto& pt = br.points[k];
    t.data(k, 0) = pt.Omega;
    t.data(k, 1) = pt.Omega / omega_ref - 1.0;
    for (size_t pi = 0; pi < sc.probes.size(); ++pi) {
      const VecX row = V.row(sc.probes[pi].free_dof).transpose();
      const double amp = first_harmonic_amplitude(br, pt, row, cosine_only);
      t.data(k, 2 + 2 * pi) = amp;
      t.data(k, 3 + 2 * pi) = amp / sc.amp_ref;
    }
  }
  return t;
}

double reduced_first_resonance(const ReducedSystem& sys) {
  const MatX Ks = 0.5 * (sys.Q.Q2 + sys.Q.Q2.transpose());
  Eigen::GeneralizedSelfAdjointEigenSolver<MatX> es(Ks, sys.M);
  if (es.info() != Eigen::Success)
    throw SolveError("reduced eigenvalue solve failed");
  return std::sqrt(std::max(es.eigenvalues()(0), 0.0));
}

ResultTable run_one_job(const ScenarioDef& sc, const ModelData& md) {
  if (sc.analysis == "frf") {
    const VecX p = md.V.transpose() * sc.force_free;
    ContinuationConfig cc = sc.cont;
    Branch br = continue_frf(md.sys, sc.hb, p, sc.omega_lo * md.omega_ref,
                             sc.omega_hi * md.omega_ref, cc);
    return branch_table(sc, md.V, br, md.omega_ref, false);
  }
  if (sc.analysis == "backbone") {
    const double denom =
        std::abs(md.V(sc.probes.front().free_dof, sc.bb_coord));
    if (denom < 1e-12)
      throw SolveError(
          "first probe does not observe the backbone coordinate; pick "
          "another probe or coordinate");
    const double wg = reduced_first_resonance(md.sys);
    Branch br = backbone(md.sys, sc.hb, sc.bb_coord, sc.bb_amp_lo / denom,
                         sc.bb_amp_hi / denom, sc.bb_points, wg);
    return branch_table(sc, md.V, br, md.omega_ref, true);
  }
  if (sc.analysis == "transient") {
    const double Om = sc.tr_omega * md.omega_ref;
    const VecX p = md.V.transpose() * sc.force_free;
    const double dt = 2.0 * M_PI / Om / sc.tr_steps_per_period;
    const int n = sc.tr_periods * sc.tr_steps_per_period;
    auto f = [&](double t) { return VecX(p * std::cos(Om * t)); };
    const int m = md.sys.size();
    const auto res = newmark_transient(md.sys, f, VecX::Zero(m),
                                       VecX::Zero(m), dt, n);
    if (!res.converged)
      throw SolveError("transient integration failed to converge");
    ResultTable t;
    t.columns = {"t"};
    for (const auto& p2 : sc.probes) t.columns.push_back(p2.name);
    t.data.resize(res.t.size(), t.columns.size());
    t.data.col(0) = res.t;
    for (size_t pi = 0; pi < sc.probes.size(); ++pi)
      t.data.col(1 + pi) =
          res.eta * md.V.row(sc.probes[pi].free_dof).transpose();
    return t;
  }
  // static
  const VecX p = md.V.transpose() * sc.force_free;
  ResultTable t;
  t.columns = {"load_factor"};
  for (const auto& p2 : sc.probes) t.columns.push_back(p2.name);
  t.data.resize(sc.static_steps, t.columns.size());
  VecX eta = VecX::Zero(md.sys.size());
  for (int k = 1; k <= sc.static_steps; ++k) {
    const double lf = double(k) / sc.static_steps;
    const auto r = newton_static(md.sys, lf * p, eta);
    if (!r.converged)
      throw SolveError(
          fmt::format("static solve diverged at load factor {:.3g}", lf));
    eta = r.eta;
    t.data(k - 1, 0) = lf;
    for (size_t pi = 0; pi < sc.probes.size(); ++pi)
      t.data(k - 1, 1 + pi) = md.V.row(sc.probes[pi].free_dof) * eta;
  }
  return t;
}

}  // namespace

RunReport run_scenario(const ScenarioDef& sc, const RunOptions& opt) {
  RunReport rep;
  rep.out_dir = opt.out_dir;
  fs::create_directories(opt.out_dir);
  fs::remove(fs::path(opt.out_dir) / "error.json");  // stale failure marker
  const std::string snapdir =
      opt.snapshot_dir.empty() ? opt.out_dir : opt.snapshot_dir;
  fs::create_directories(snapdir);

  std::string stage = "setup";
  try {
    const int n_grid = static_cast<int>(sc.xi_grid.rows());

    stage = "mesh";
    const MeshQuadrature quad = build_quadrature(sc.mesh);
    const SpMat M0 = assemble_mass(sc.mesh, quad);
    const SpMat K0 = assemble_linear_stiffness(sc.mesh, quad);

    stage = "damping";
    double alpha = sc.alpha, beta = sc.beta;
    if (sc.quality > 0) {
      const EigPairs e2 = solve_gevp(K0, M0, 2);
      std::tie(alpha, beta) = rayleigh_from_quality(
          sc.quality, std::sqrt(e2.omega2(0)), std::sqrt(e2.omega2(1)));
    }

    // Defected meshes, their quadratures and mass matrices, and the
    // full-model reference resonance per grid point (the sigma axis).
    stage = "reference";
    std::vector<NominalMesh> meshes;
    std::vector<MeshQuadrature> quads;
    std::vector<SpMat> masses;
    rep.omega_ref.resize(n_grid);
    for (int g = 0; g < n_grid; ++g) {
      meshes.push_back(
          apply_defect(sc.mesh, sc.defects.U, sc.xi_grid.row(g).transpose()));
      quads.push_back(build_quadrature(meshes[g]));
      masses.push_back(assemble_mass(meshes[g], quads[g]));
      if (!opt.build_only) {
        const SpMat Kg = assemble_linear_stiffness(meshes[g], quads[g]);
        const EigPairs e1 = solve_gevp(Kg, masses[g], 1);
        rep.omega_ref[g] = std::sqrt(e1.omega2(0));
      }
    }

    // Construction phase per model; solve jobs are collected and then run on
    // a small worker pool (they are independent and write separate files).
    std::vector<ModelData> jobs_data;
    std::vector<std::string> job_files;
    std::vector<json> snapshot_notes;

    for (const auto& model : sc.models) {
      ModelTiming mt;
      mt.model = model;
      const auto t0 = std::chrono::steady_clock::now();

      if (model == "ROM-d") {
        if (opt.build_only) {
          snapshot_notes.push_back(
              {{"model", model},
               {"note", "rebuilt per grid point; nothing to snapshot"}});
          rep.timing.push_back(mt);
          continue;
        }
        stage = "construction:" + model;
        for (int g = 0; g < n_grid; ++g) {
          const ReductionBasis rb = build_basis(meshes[g], quads[g], nullptr,
                                                sc.romd_recipe, Variant::N1);
          const DpROMTensors T =
              assemble_dprom(meshes[g], quads[g], rb.V, DefectBasis{},
                             ModelSpec{Variant::N1, false}, rb.labels);
          mt.tensor_builds += 1;
          ModelData md;
          md.name = model;
          md.V = rb.V;
          md.omega_ref = rep.omega_ref[g];
          md.sys.Q = evaluate_parametric(T, VecX());
          md.sys.M = rb.V.transpose() * masses[g] * rb.V;
          md.sys.C = alpha * md.sys.M +
                     beta * (rb.V.transpose() * K0 * rb.V);
          jobs_data.push_back(std::move(md));
          job_files.push_back(
              fmt::format("{}_{}_x{}.csv", sc.analysis, model, g));
        }
        mt.t_construction = seconds_since(t0);
        rep.timing.push_back(mt);
        continue;
      }

      stage = "construction:" + model;
      const ModelSpec spec = parse_model_spec(model);
      const ReductionBasis rb =
          build_basis(sc.mesh, quad, &sc.defects, sc.recipe, spec.variant);

      const std::string snap_path = fmt::format(
          "{}/tensors_{}_{}.snap", snapdir, model, sc.build_hash.substr(0, 12));
      DpROMTensors T;
      bool loaded = false;
      if (fs::exists(snap_path)) {
        try {
          T = load_tensors(snap_path);
          loaded = T.mesh_tag == mesh_hash(sc.mesh) &&
                   to_string(T.spec) == to_string(spec) &&
                   T.basis_labels == rb.labels;
          if (!loaded)
            std::cerr << fmt::format(
                "snapshot {} does not match this configuration, rebuilding\n",
                snap_path);
        } catch (const std::exception& e) {
          std::cerr << fmt::format("snapshot {} unreadable ({}), rebuilding\n",
                                   snap_path, e.what());
        }
      }
      if (!loaded) {
        stage = "tensors:" + model;
        T = assemble_dprom(sc.mesh, quad, rb.V, sc.defects, spec, rb.labels);
        mt.tensor_builds = 1;
        save_tensors(T, snap_path);
      } else {
        mt.snapshot_hit = true;
        std::cerr << fmt::format("snapshot hit: {}\n", snap_path);
      }
      mt.t_construction = seconds_since(t0);
      snapshot_notes.push_back({{"model", model},
                               {"snapshot", snap_path},
                               {"reused", mt.snapshot_hit}});
      if (opt.build_only) {
        rep.timing.push_back(mt);
        continue;
      }

      const MatX Mr_nom = rb.V.transpose() * M0 * rb.V;
      const MatX Kr0 = rb.V.transpose() * K0 * rb.V;
      for (int g = 0; g < n_grid; ++g) {
        ModelData md;
        md.name = model;
        md.V = rb.V;
        md.omega_ref = rep.omega_ref[g];
        md.sys.Q = evaluate_parametric(T, sc.xi_grid.row(g).transpose());
        // The volume-corrected variants also keep the mass consistent with
        // the shifted volume; the others use the nominal mass.
        md.sys.M = spec.volume_correction
                       ? MatX(rb.V.transpose() * masses[g] * rb.V)
                       : Mr_nom;
        md.sys.C = alpha * md.sys.M + beta * Kr0;
        jobs_data.push_back(std::move(md));
        job_files.push_back(
            fmt::format("{}_{}_x{}.csv", sc.analysis, model, g));
      }
      rep.timing.push_back(mt);
    }

    if (opt.build_only) {
      stage = "export";
      json man;
      man["format"] = 1;
      man["kind"] = "dprom-build";
      man["name"] = sc.name;
      man["config_hash"] = sc.config_hash;
      man["build_hash"] = sc.build_hash;
      man["seed"] = opt.seed;
      man["snapshots"] = snapshot_notes;
      std::ofstream out(opt.out_dir + "/build.json");
      out << man.dump(2) << "\n";
      rep.files.push_back("build.json");
      return rep;
    }

    stage = "solve";
    const int n_jobs = static_cast<int>(jobs_data.size());
    std::vector<double> job_seconds(n_jobs, 0.0);
    std::atomic<int> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    std::string error_job;

    auto worker = [&]() {
      for (;;) {
        const int j = next.fetch_add(1);
        if (j >= n_jobs) return;
        const auto t0 = std::chrono::steady_clock::now();
        try {
          const ResultTable t = run_one_job(sc, jobs_data[j]);
          write_table(opt.out_dir + "/" + job_files[j], t);
        } catch (...) {
          std::lock_guard<std::mutex> lk(err_mutex);
          if (!first_error) {
            first_error = std::current_exception();
            error_job = job_files[j];
          }
          return;
        }
        job_seconds[j] = seconds_since(t0);
      }
    };
    const int n_threads = std::max(1, std::min(opt.jobs, n_jobs));
    if (n_threads == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }
    if (first_error) {
      stage = "solve:" + error_job;
      std::rethrow_exception(first_error);
    }

    // Attribute solve time back to models (jobs were appended model-major).
    {
      int j = 0;
      for (auto& mt : rep.timing)
        for (; j < n_jobs && jobs_data[j].name == mt.model; ++j)
          mt.t_simulation += job_seconds[j];
    }
    rep.files = job_files;

    stage = "export";
    json man;
    man["format"] = 1;
    man["kind"] = "dprom-run";
    man["name"] = sc.name;
    man["analysis"] = sc.analysis;
    man["config_hash"] = sc.config_hash;
    man["build_hash"] = sc.build_hash;
    man["seed"] = opt.seed;
    man["models"] = sc.models;
    man["defects"] = sc.defects.names;
    man["n_harm"] = sc.hb.n_harm;
    man["hb_tol"] = sc.hb.tol;
    man["amp_ref"] = sc.amp_ref;
    {
      std::vector<std::vector<double>> grid;
      for (int g = 0; g < n_grid; ++g) {
        grid.emplace_back(sc.xi_grid.row(g).data(),
                          sc.xi_grid.row(g).data() + sc.xi_grid.cols());
      }
      man["xi_grid"] = grid;
      man["omega_ref"] = rep.omega_ref;
    }
    {
      std::vector<std::string> probe_names;
      for (const auto& p : sc.probes) probe_names.push_back(p.name);
      man["probes"] = probe_names;
    }
    {
      json files = json::object();
      int j = 0;
      for (const auto& model : sc.models) {
        std::vector<std::string> fl;
        for (; j < n_jobs && jobs_data[j].name == model; ++j)
          fl.push_back(job_files[j]);
        files[model] = fl;
      }
      man["files"] = files;
    }
    {
      std::ofstream out(opt.out_dir + "/index.json");
      out << man.dump(2) << "\n";
      rep.files.push_back("index.json");
    }
    {
      // Wall-clock phase report; kept out of index.json so result artifacts
      // stay bit-identical across reruns.
      json tim;
      tim["format"] = 1;
      tim["models"] = json::array();
      for (const auto& mt : rep.timing)
        tim["models"].push_back({{"model", mt.model},
                                 {"t_construction", mt.t_construction},
                                 {"t_simulation", mt.t_simulation},
                                 {"tensor_builds", mt.tensor_builds},
                                 {"snapshot_hit", mt.snapshot_hit}});
      std::ofstream out(opt.out_dir + "/timing.json");
      out << tim.dump(2) << "\n";
      rep.files.push_back("timing.json");
    }
    return rep;
  } catch (const std::exception& e) {
    json err = {{"format", 1}, {"stage", stage}, {"error", e.what()}};
    std::ofstream out(opt.out_dir + "/error.json");
    out << err.dump(2) << "\n";
    throw;
  }
}

}  // namespace dprom
