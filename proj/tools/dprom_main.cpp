#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <random>

#include "dprom/assembly.hpp"
#include "dprom/config.hpp"
#include "dprom/export.hpp"
#include "dprom/scenario.hpp"
#include "dprom/strain.hpp"
#include "dprom/tensors.hpp"
#include "dprom/voigt.hpp"

namespace fs = std::filesystem;
using namespace dprom;

namespace {

std::string default_out_root() {
  const char* env = std::getenv("DPROM_OUT_ROOT");
  return env && *env ? env : "runs";
}

int run_or_build(const std::string& config_path, std::string out_dir,
                 const std::string& snapshot_dir, int jobs,
                 unsigned long long seed, bool build_only) {
  try {
    ConfigFile cfg = ConfigFile::load(config_path);
    ScenarioDef sc = load_scenario(cfg);
    if (out_dir.empty())
      out_dir = (fs::path(default_out_root()) / sc.name).string();
    RunOptions opt;
    opt.out_dir = out_dir;
    opt.snapshot_dir = snapshot_dir;
    opt.jobs = jobs;
    opt.seed = seed;
    opt.build_only = build_only;
    const RunReport rep = run_scenario(sc, opt);
    fmt::print("wrote {} file(s) to {}\n", rep.files.size(), rep.out_dir);
    for (const auto& mt : rep.timing)
      fmt::print(
          "  {:10s} construction {:8.3f} s  simulation {:8.3f} s  tensor "
          "builds {}{}\n",
          mt.model, mt.t_construction, mt.t_simulation, mt.tensor_builds,
          mt.snapshot_hit ? "  (snapshot hit)" : "");
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

// Fast property smoke suite over the core kinematic identities; a cut-down
// version of the full test suites for use in the field.
int run_check(unsigned long long seed) {
  int failures = 0;
  auto report = [&](const std::string& name, bool ok,
                    const std::string& detail = "") {
    fmt::print("[{}] {}{}\n", ok ? "PASS" : "FAIL", name,
               detail.empty() ? "" : "  (" + detail + ")");
    if (!ok) ++failures;
  };
  std::mt19937 rng(static_cast<unsigned>(seed ? seed : 12345));
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  auto rand_mat = [&](int d, double scale) {
    MatX A(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) A(i, j) = scale * unif(rng);
    return A;
  };
  auto rand_contractive = [&](int d, double target) {
    MatX A = rand_mat(d, 1.0);
    const double s = A.jacobiSvd().singularValues()(0);
    return MatX(A * (target / s));
  };
  auto rand_rotation = [&](int d) {
    if (d == 2) {
      const double a = M_PI * unif(rng);
      MatX R(2, 2);
      R << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
      return R;
    }
    Vec3 axis(unif(rng), unif(rng), unif(rng));
    axis.normalize();
    return MatX(Eigen::AngleAxisd(M_PI * unif(rng), axis).toRotationMatrix());
  };

  {
    const auto& t2 = l_tables(2);
    const auto& t3 = l_tables(3);
    report("coefficient table sizes",
           t2.L1.size() == 8 && t2.L2.size() == 8 && t2.L3.size() == 24 &&
               t3.L1.size() == 27 && t3.L2.size() == 27 &&
               t3.L3.size() == 135,
           fmt::format("2D {}/{}/{}, 3D {}/{}/{}", t2.L1.size(), t2.L2.size(),
                       t2.L3.size(), t3.L1.size(), t3.L2.size(),
                       t3.L3.size()));
  }

  {
    double worst = 0;
    for (int k = 0; k < 100; ++k) {
      const int d = k % 2 ? 3 : 2;
      const MatX Dd = rand_contractive(d, 0.3 * std::abs(unif(rng)));
      const MatX R = rand_rotation(d);
      const MatX D = (R - MatX::Identity(d, d)) * (MatX::Identity(d, d) + Dd);
      worst = std::max(worst, exact_strain(D, Dd).cwiseAbs().maxCoeff());
    }
    report("rigid motions produce zero exact strain", worst < 1e-12,
           fmt::format("max |E| = {:.2e}", worst));
  }

  {
    double worst = 0;
    for (int k = 0; k < 100; ++k) {
      const int d = k % 2 ? 3 : 2;
      const MatX D = rand_mat(d, 1e-2);
      const VecX th = vec_gradient(D);
      const VecX none = VecX::Zero(d * d);
      const VecX e = exact_strain(D, MatX::Zero(d, d));
      for (Variant v : {Variant::N0, Variant::N1, Variant::N1t})
        worst = std::max(
            worst, (approx_strain(th, none, v, d) - e).cwiseAbs().maxCoeff());
    }
    report("all variants collapse to the exact strain without defect",
           worst < 1e-14, fmt::format("max dev = {:.2e}", worst));
  }

  {
    bool ok = true;
    double margin = 1e300;
    for (int k = 0; k < 100; ++k) {
      const int d = k % 2 ? 3 : 2;
      const MatX Dd = rand_contractive(d, 0.05 + 0.6 * std::abs(unif(rng)));
      const auto nb = neumann_bound(Dd, k % 3);
      ok = ok && nb.delta_N <= nb.delta_lim;
      margin = std::min(margin, nb.delta_lim - nb.delta_N);
    }
    report("inverse-gradient truncation stays under the a-priori bound", ok,
           fmt::format("min margin = {:.2e}", margin));
  }

  {
    // Tiny mesh: projected cubic force matches the full assembly projected.
    MaterialParams mat{70e9, 0.3, 2700};
    const NominalMesh mesh = build_rect_beam_mesh(0.2, 0.05, 4, 1, mat, 0.2);
    const MeshQuadrature quad = build_quadrature(mesh);
    MatX V(mesh.n_free(), 2);
    for (int i = 0; i < mesh.n_free(); ++i) {
      V(i, 0) = std::sin(0.37 * (i + 1));
      V(i, 1) = std::cos(0.53 * (i + 2));
    }
    V.col(0).normalize();
    V.col(1).normalize();
    const DpROMTensors T =
        assemble_dprom(mesh, quad, V, DefectBasis{}, ModelSpec{Variant::N1});
    const EvalTensors Q = evaluate_parametric(T, VecX());
    double worst = 0;
    for (int k = 0; k < 5; ++k) {
      VecX eta(2);
      eta << 1e-3 * unif(rng), 1e-3 * unif(rng);
      const VecX fr = reduced_force(Q, eta);
      const VecX ff = assemble_force(mesh, quad, V * eta, MatX(), VecX(),
                                     Variant::N1, QuadDomain::Nominal);
      worst = std::max(worst,
                       (fr - V.transpose() * ff).norm() /
                           std::max(1e-30, (V.transpose() * ff).norm()));
    }
    report("reduced tensors reproduce projected assembly forces",
           worst < 1e-10, fmt::format("max rel dev = {:.2e}", worst));
  }

  fmt::print("{}\n", failures ? "CHECK FAILED" : "CHECK OK");
  return failures ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Defect-parametric reduced order models for geometrically nonlinear "
      "structures"};
  app.require_subcommand(1);

  std::string config_path, out_dir, snapshot_dir, cmp_out;
  std::string dir_a, dir_b;
  int jobs = 1;
  unsigned long long seed = 0;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", config_path, "scenario config file");
    if (needs_config) c->required();
    sub->add_option("--out", out_dir,
                    "output directory (default $DPROM_OUT_ROOT/<name>)");
    sub->add_option("--snapshot", snapshot_dir,
                    "directory for tensor snapshots (default: output dir)");
    sub->add_option("--jobs", jobs, "parallel solve jobs")
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "seed recorded in the manifest");
  };

  auto* cmd_build = app.add_subcommand(
      "build", "assemble basis and parametric tensors, write snapshots");
  add_common(cmd_build, true);
  auto* cmd_run =
      app.add_subcommand("run", "run the scenario end to end");
  add_common(cmd_run, true);
  auto* cmd_cmp = app.add_subcommand(
      "compare", "summarize deltas between two run directories");
  cmd_cmp->add_option("dir_a", dir_a, "first run directory")->required();
  cmd_cmp->add_option("dir_b", dir_b, "second run directory")->required();
  cmd_cmp->add_option("--out", cmp_out, "write the comparison JSON here");
  auto* cmd_check =
      app.add_subcommand("check", "fast property smoke suite");
  cmd_check->add_option("--seed", seed, "random draw seed");

  CLI11_PARSE(app, argc, argv);

  if (app.got_subcommand(cmd_build) || app.got_subcommand(cmd_run))
    return run_or_build(config_path, out_dir, snapshot_dir, jobs, seed,
                        app.got_subcommand(cmd_build));
  if (app.got_subcommand(cmd_cmp)) {
    try {
      const std::string text = compare_runs(dir_a, dir_b, cmp_out);
      if (cmp_out.empty()) std::cout << text;
      return 0;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }
  return run_check(seed);
}
