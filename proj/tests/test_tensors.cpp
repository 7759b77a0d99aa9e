#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <random>

#include "dprom/assembly.hpp"
#include "dprom/basis.hpp"
#include "dprom/defects.hpp"
#include "dprom/mesh.hpp"
#include "dprom/tensors.hpp"

using namespace dprom;

namespace {

const MaterialParams kAl{70e9, 0.30, 2700.0};

struct Scene {
  NominalMesh mesh;
  MeshQuadrature quad;
  DefectBasis defects;
  MatX V;

  // Deterministic smooth basis: interior sine/cosine fields, unit columns.
  // Eigenvectors would work too, but synthetic fields keep the test free of
  // eigensolver behavior.
  Scene(int nx, int ny, int m, int n_defects = 1)
      : mesh(build_rect_beam_mesh(2.0, 0.05, nx, ny, kAl, 0.2)),
        quad(build_quadrature(mesh)) {
    std::vector<DefectShape> shapes;
    shapes.push_back(make_arch_defect(2.0, 0.05));
    if (n_defects > 1)
      shapes.push_back(
          make_beam_taper_defect(0.0, 2.0, 0.025, 0.025, 0.002));
    defects = sample_defects(mesh, shapes);
    V.resize(mesh.n_free(), m);
    for (int c = 0; c < m; ++c) {
      VecX full = VecX::Zero(mesh.n_dofs());
      for (int n = 0; n < mesh.n_nodes(); ++n) {
        const double x = mesh.nodes(n, 0), y = mesh.nodes(n, 1);
        full(2 * n) = std::sin((c + 1) * M_PI * x / 2.0) * (0.3 + y);
        full(2 * n + 1) = std::cos(c * M_PI * x / 2.0) *
                          std::sin(M_PI * x / 2.0);
      }
      V.col(c) = restrict_free(mesh, full);
      V.col(c) /= V.col(c).norm();
    }
  }
};

VecX random_vec(std::mt19937& rng, int n, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  VecX v(n);
  for (int i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

bool bit_equal(const VecX& a, const VecX& b) {
  if (a.size() != b.size()) return false;
  return std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

bool bit_equal(const MatX& a, const MatX& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

}  // namespace

TEST(ReducedTensors, ForceCommutesWithProjection) {
  // The load-bearing identity of the whole tensor pipeline: for polynomial
  // variants, projecting the assembled full-order force of the reduced
  // displacement V eta must equal evaluating the reduced tensor polynomial.
  const Scene s(8, 2, 4);
  std::mt19937 rng(7);
  for (Variant var : {Variant::N0, Variant::N1, Variant::N1t}) {
    ModelSpec spec{var, false};
    const DpROMTensors T = assemble_dprom(s.mesh, s.quad, s.V, s.defects,
                                          spec);
    for (int t = 0; t < 10; ++t) {
      const VecX xi = random_vec(rng, 1, 1.0);
      const VecX eta = random_vec(rng, 4, 0.05);
      const EvalTensors Q = evaluate_parametric(T, xi);
      const VecX fr = reduced_force(Q, eta);
      const VecX ff = assemble_force(s.mesh, s.quad, s.V * eta, s.defects.U,
                                     xi, var, QuadDomain::Nominal);
      const VecX proj = s.V.transpose() * ff;
      EXPECT_LT((fr - proj).norm() / proj.norm(), 1e-10)
          << to_string(var) << " draw " << t;
    }
  }
}

TEST(ReducedTensors, TangentCommutesWithProjection) {
  const Scene s(6, 1, 3);
  std::mt19937 rng(11);
  ModelSpec spec{Variant::N1, false};
  const DpROMTensors T = assemble_dprom(s.mesh, s.quad, s.V, s.defects, spec);
  const VecX xi = random_vec(rng, 1, 0.8);
  const VecX eta = random_vec(rng, 3, 0.05);
  const EvalTensors Q = evaluate_parametric(T, xi);
  const MatX kt = reduced_tangent(Q, eta);
  const ForceTangent ft = assemble_force_tangent(
      s.mesh, s.quad, s.V * eta, s.defects.U, xi, Variant::N1,
      QuadDomain::Nominal);
  const MatX proj = s.V.transpose() * ft.K * s.V;
  EXPECT_LT((kt - proj).cwiseAbs().maxCoeff() / proj.cwiseAbs().maxCoeff(),
            1e-10);
  // And the tangent must be the eta-derivative of the reduced force.
  const double h = 1e-7;
  for (int j = 0; j < 3; ++j) {
    VecX ep = eta, em = eta;
    ep(j) += h;
    em(j) -= h;
    const VecX fd =
        (reduced_force(Q, ep) - reduced_force(Q, em)) / (2 * h);
    EXPECT_LT((fd - kt.col(j)).norm() / kt.col(j).norm(), 1e-6);
  }
}

TEST(ReducedTensors, TwoDefectEvaluationMatchesReassembly) {
  // evaluate_parametric collapses the defect indices; with two defects the
  // cross blocks get exercised. Reference: assemble the reduced tensors from
  // scratch... which would share code. Instead compare reduced forces against
  // the projected full assembly at several (xi1, xi2).
  const Scene s(6, 1, 3, 2);
  std::mt19937 rng(13);
  ModelSpec spec{Variant::N1, false};
  const DpROMTensors T = assemble_dprom(s.mesh, s.quad, s.V, s.defects, spec);
  EXPECT_EQ(T.md, 2);
  for (int t = 0; t < 6; ++t) {
    const VecX xi = random_vec(rng, 2, 1.0);
    const VecX eta = random_vec(rng, 3, 0.04);
    const EvalTensors Q = evaluate_parametric(T, xi);
    const VecX fr = reduced_force(Q, eta);
    const VecX proj =
        s.V.transpose() * assemble_force(s.mesh, s.quad, s.V * eta,
                                         s.defects.U, xi, Variant::N1,
                                         QuadDomain::Nominal);
    EXPECT_LT((fr - proj).norm() / proj.norm(), 1e-10);
  }
}

TEST(ReducedTensors, ParametricDependenceIsExactlyQuadratic) {
  // Every reduced tensor entry is at most quadratic in each defect amplitude;
  // three evaluations along a xi ray must reproduce a fourth exactly.
  const Scene s(6, 1, 3);
  ModelSpec spec{Variant::N1, false};
  const DpROMTensors T = assemble_dprom(s.mesh, s.quad, s.V, s.defects, spec);
  auto q2_at = [&](double a) {
    VecX xi(1);
    xi << a;
    return evaluate_parametric(T, xi).Q2;
  };
  const MatX q0 = q2_at(0.0), q1 = q2_at(1.0), q2 = q2_at(2.0);
  // Quadratic extrapolation to xi = 3: q3 = 3 q2 - 3 q1 + q0.
  const MatX q3 = 3.0 * q2 - 3.0 * q1 + q0;
  const MatX q3_direct = q2_at(3.0);
  EXPECT_LT((q3 - q3_direct).cwiseAbs().maxCoeff() /
                q3_direct.cwiseAbs().maxCoeff(),
            1e-12);
}

TEST(ReducedTensors, NominalBlocksAgreeAcrossAssemblyRoutes) {
  // Two independently coded assembly routes for the defect-free cubic
  // tensors: direct Galerkin projection during the sweep versus per-element
  // tensors contracted with element rows of V afterwards. They must agree to
  // rounding; this guards the scatter logic of both.
  const Scene s(6, 2, 3);
  ModelSpec spec{Variant::N1, false};
  const DpROMTensors T = assemble_dprom(s.mesh, s.quad, s.V, s.defects, spec);
  const NominalTensors N = element_route_nominal_tensors(s.mesh, s.quad, s.V);
  // Entry-wise agreement up to accumulation-order roundoff, which grows with
  // the tensor rank because the oscillatory basis cancels large gauss-point
  // contributions. A scatter bug would show up at order one.
  const double s2 = N.Q2.cwiseAbs().maxCoeff();
  EXPECT_LT((T.base.Q2n - N.Q2).cwiseAbs().maxCoeff() / s2, 1e-12);
  const double s3 = N.Q3.v.cwiseAbs().maxCoeff();
  EXPECT_LT((T.base.Q3n.v - N.Q3.v).cwiseAbs().maxCoeff() / s3, 1e-10);
  const double s4 = N.Q4.v.cwiseAbs().maxCoeff();
  EXPECT_LT((T.base.Q4n.v - N.Q4.v).cwiseAbs().maxCoeff() / s4, 1e-9);
  // The forces the two routes produce agree a decade tighter than a
  // systematic bias in the entries could manage, since such a bias would sum
  // coherently over the contraction.
  std::mt19937 rng(23);
  const EvalTensors Ea = evaluate_parametric(T, VecX::Zero(s.defects.count()));
  for (int t = 0; t < 5; ++t) {
    const VecX eta = random_vec(rng, 3, 0.1);
    VecX fb = N.Q2 * eta;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
          fb(i) += N.Q3(i, j, k) * eta(j) * eta(k);
          for (int l = 0; l < 3; ++l)
            fb(i) += N.Q4(i, j, k, l) * eta(j) * eta(k) * eta(l);
        }
    const VecX fa = reduced_force(Ea, eta);
    EXPECT_LT((fa - fb).norm() / fb.norm(), 1e-10);
  }
}

TEST(ReducedTensors, MassProjectionMatchesDense) {
  const Scene s(6, 1, 3);
  const MatX mr = reduced_mass(s.mesh, s.quad, s.V);
  const SpMat m = assemble_mass(s.mesh, s.quad);
  const MatX expect = s.V.transpose() * m * s.V;
  EXPECT_LT((mr - expect).cwiseAbs().maxCoeff() /
                expect.cwiseAbs().maxCoeff(),
            1e-13);
}

TEST(ReducedTensors, VolumeCorrectionMatchesDefectedQuadrature) {
  // The "-v" model adds the first-order change of the integration volume. Its
  // reduced force must match the projected full assembly over the defected
  // domain to first order in xi: the residual slope at xi -> 0 must vanish
  // compared with the uncorrected variant.
  const Scene s(6, 1, 3, 2);  // taper defect changes volume
  std::mt19937 rng(17);
  const DpROMTensors Tn = assemble_dprom(s.mesh, s.quad, s.V, s.defects,
                                         ModelSpec{Variant::N1, false});
  const DpROMTensors Tv = assemble_dprom(s.mesh, s.quad, s.V, s.defects,
                                         ModelSpec{Variant::N1, true});
  const VecX eta = random_vec(rng, 3, 0.05);
  auto err = [&](const DpROMTensors& T, double a) {
    VecX xi(2);
    xi << 0.0, a;  // only the volume-changing taper
    const VecX fr = reduced_force(evaluate_parametric(T, xi), eta);
    const VecX proj =
        s.V.transpose() * assemble_force(s.mesh, s.quad, s.V * eta,
                                         s.defects.U, xi, Variant::N1,
                                         QuadDomain::Defected);
    return (fr - proj).norm() / proj.norm();
  };
  // Halving xi: the corrected model's error falls quadratically, the
  // uncorrected one only linearly, so their ratio keeps growing.
  const double a = 0.5;
  EXPECT_GT(err(Tn, a) / err(Tv, a), 3.0);
  EXPECT_GT(err(Tn, a / 2) / err(Tv, a / 2), 6.0);
  EXPECT_GT(err(Tn, a / 4) / err(Tv, a / 4), 12.0);
}

TEST(ReducedTensors, IsochoricDefectSkipsVolumeTerms) {
  // For an exactly volume-preserving defect the correction integrand carries
  // divergence zero; the assembly marks it skipped and leaves the set zero.
  const Scene s(6, 1, 3);  // arch only, isochoric
  const DpROMTensors T = assemble_dprom(s.mesh, s.quad, s.V, s.defects,
                                        ModelSpec{Variant::N1, true});
  ASSERT_EQ(T.vol_skipped.size(), 1u);
  EXPECT_TRUE(T.vol_skipped[0]);
  EXPECT_EQ(T.vol[0].Q2n.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(T.vol[0].Q3n.v.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(T.vol[0].Q4n.v.cwiseAbs().maxCoeff(), 0.0);
  // Evaluation with and without correction must coincide.
  const DpROMTensors Tn = assemble_dprom(s.mesh, s.quad, s.V, s.defects,
                                         ModelSpec{Variant::N1, false});
  VecX xi(1);
  xi << 0.8;
  const MatX a = evaluate_parametric(T, xi).Q2;
  const MatX b = evaluate_parametric(Tn, xi).Q2;
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-10 * b.cwiseAbs().maxCoeff());
}

TEST(ReducedTensors, SnapshotRoundTripIsBitExact) {
  const Scene s(6, 1, 3, 2);
  const std::string path =
      (std::filesystem::temp_directory_path() / "tensors.snap").string();
  DpROMTensors T = assemble_dprom(s.mesh, s.quad, s.V, s.defects,
                                  ModelSpec{Variant::N1, true},
                                  {"a", "b", "c"});
  save_tensors(T, path);
  const DpROMTensors R = load_tensors(path);
  EXPECT_EQ(R.m, T.m);
  EXPECT_EQ(R.md, T.md);
  EXPECT_EQ(to_string(R.spec), to_string(T.spec));
  EXPECT_EQ(R.mesh_tag, T.mesh_tag);
  EXPECT_EQ(R.basis_labels, T.basis_labels);
  // Bit-exact payload round trip, including the correction sets.
  EXPECT_TRUE(bit_equal(R.base.Q2n, T.base.Q2n));
  EXPECT_TRUE(bit_equal(R.base.Q3n.v, T.base.Q3n.v));
  EXPECT_TRUE(bit_equal(R.base.Q4n.v, T.base.Q4n.v));
  EXPECT_TRUE(bit_equal(R.base.Q6dd.v, T.base.Q6dd.v));
  ASSERT_EQ(R.vol.size(), T.vol.size());
  for (size_t d = 0; d < T.vol.size(); ++d) {
    EXPECT_EQ(R.vol_skipped[d], T.vol_skipped[d]);
    EXPECT_TRUE(bit_equal(R.vol[d].Q4n.v, T.vol[d].Q4n.v));
  }
  std::remove(path.c_str());
}

TEST(ReducedTensors, TruncatedVariantDropsMixedCubicDefectCoupling) {
  // N1t differs from N1 exactly by the strain term that is quadratic in the
  // displacement and linear in the defect. That term never reaches the
  // linear stiffness, so every Q2-level block matches; the defect-coupled
  // cubic and quartic blocks are where the models part ways.
  const Scene s(6, 1, 3);
  const DpROMTensors T1 = assemble_dprom(s.mesh, s.quad, s.V, s.defects,
                                         ModelSpec{Variant::N1, false});
  const DpROMTensors Tt = assemble_dprom(s.mesh, s.quad, s.V, s.defects,
                                         ModelSpec{Variant::N1t, false});
  // Shared blocks agree, including the defect-linear stiffness.
  EXPECT_LT((T1.base.Q2n - Tt.base.Q2n).cwiseAbs().maxCoeff(),
            1e-12 * T1.base.Q2n.cwiseAbs().maxCoeff());
  EXPECT_LT((T1.base.Q3d.v - Tt.base.Q3d.v).cwiseAbs().maxCoeff(),
            1e-12 * T1.base.Q3d.v.cwiseAbs().maxCoeff());
  EXPECT_LT((T1.base.Q3n.v - Tt.base.Q3n.v).cwiseAbs().maxCoeff(),
            1e-12 * T1.base.Q3n.v.cwiseAbs().maxCoeff());
  EXPECT_LT((T1.base.Q4n.v - Tt.base.Q4n.v).cwiseAbs().maxCoeff(),
            1e-12 * T1.base.Q4n.v.cwiseAbs().maxCoeff());
  // At finite defect amplitude the evaluated linear stiffness still agrees
  // while the nonlinear tensors differ.
  VecX xi(1);
  xi << 1.0;
  const EvalTensors e1 = evaluate_parametric(T1, xi);
  const EvalTensors et = evaluate_parametric(Tt, xi);
  EXPECT_LT((e1.Q2 - et.Q2).cwiseAbs().maxCoeff(),
            1e-12 * e1.Q2.cwiseAbs().maxCoeff());
  EXPECT_GT((e1.Q3.v - et.Q3.v).cwiseAbs().maxCoeff(),
            1e-6 * e1.Q3.v.cwiseAbs().maxCoeff());
  EXPECT_GT((e1.Q4.v - et.Q4.v).cwiseAbs().maxCoeff(),
            1e-6 * e1.Q4.v.cwiseAbs().maxCoeff());
}
