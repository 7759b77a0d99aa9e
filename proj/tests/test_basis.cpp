#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dprom/assembly.hpp"
#include "dprom/basis.hpp"
#include "dprom/defects.hpp"
#include "dprom/eig.hpp"
#include "dprom/mesh.hpp"

using namespace dprom;

namespace {

const MaterialParams kAl{70e9, 0.30, 2700.0};

struct BeamFixture {
  NominalMesh mesh;
  MeshQuadrature quad;
  DefectBasis defects;

  BeamFixture(int nx, int ny)
      : mesh(build_rect_beam_mesh(2.0, 0.05, nx, ny, kAl, 0.2)),
        quad(build_quadrature(mesh)),
        defects(sample_defects(mesh, {make_arch_defect(2.0, 0.05)})) {}
};

// Thin clamped-clamped strip reference: f_1 = (4.730^2 / 2 pi L^2)
// sqrt(E I / (rho A)), stiffened by 1/(1 - nu^2) because the strip is wide
// (plane strain).
double clamped_beam_f1() {
  const double L = 2.0, b = 0.2, h = 0.05;
  const double I = b * h * h * h / 12.0, A = b * h;
  const double e_eff = kAl.E / (1.0 - kAl.nu * kAl.nu);
  const double lam = 4.730040744862704;
  return lam * lam / (2 * M_PI * L * L) * std::sqrt(e_eff * I / (kAl.rho * A));
}

}  // namespace

TEST(Eigensolver, MatchesThinBeamTheory) {
  // Euler-Bernoulli is only the thin-beam limit of the 2D continuum, so a few
  // percent is the expected gap at L/h = 40, not a loose engineering margin.
  const BeamFixture f(40, 2);
  const SpMat m = assemble_mass(f.mesh, f.quad);
  const SpMat k = assemble_linear_stiffness(f.mesh, f.quad);
  const EigPairs eig = solve_gevp(k, m, 3);
  const double f1 = std::sqrt(eig.omega2(0)) / (2 * M_PI);
  EXPECT_NEAR(f1, clamped_beam_f1(), 0.05 * clamped_beam_f1());
  // Mass-orthonormality of the returned shapes.
  const MatX phi = eig.Phi;
  const MatX gram = phi.transpose() * m * phi;
  EXPECT_LT((gram - MatX::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-8);
  // Frequencies must come out sorted.
  EXPECT_LE(eig.omega2(0), eig.omega2(1));
  EXPECT_LE(eig.omega2(1), eig.omega2(2));
}

TEST(BasisBuilder, ModalDerivativeMatchesFiniteDifferenceOfModes) {
  // The static modal derivative solves K0 t = -(dK/dq_j) phi_i. Compare with
  // differentiating the eigenproblem numerically: perturb the configuration
  // along phi_j, reassemble the tangent, and difference the static responses.
  const BeamFixture f(10, 1);
  BasisBuilder b(f.mesh, f.quad, &f.defects);
  const EigPairs& eig = b.modes(2);
  const VecX md = b.modal_derivative(0, 1);

  // Independent route: central difference of K(s phi_j) phi_i against s,
  // then solve with the nominal stiffness.
  const SpMat k0 = assemble_linear_stiffness(f.mesh, f.quad);
  const VecX phi_i = eig.Phi.col(0), phi_j = eig.Phi.col(1);
  const MatX u_none(f.mesh.n_dofs(), 0);
  const double h = 1e-6;
  const ForceTangent kp = assemble_force_tangent(
      f.mesh, f.quad, h * phi_j, u_none, VecX(), Variant::N1,
      QuadDomain::Nominal);
  const ForceTangent km = assemble_force_tangent(
      f.mesh, f.quad, -h * phi_j, u_none, VecX(), Variant::N1,
      QuadDomain::Nominal);
  const VecX rhs = -((kp.K - km.K) * phi_i) / (2 * h);
  Eigen::SimplicialLDLT<SpMat> solver(k0);
  VecX expect = solver.solve(rhs);
  // The builder normalizes basis vectors later; compare directions here.
  const double cosang =
      md.dot(expect) / (md.norm() * expect.norm());
  EXPECT_GT(std::abs(cosang), 1.0 - 1e-7);
  EXPECT_NEAR(md.norm(), expect.norm(), 1e-5 * expect.norm());
  // Symmetry in the two mode indices.
  const VecX md_t = b.modal_derivative(1, 0);
  EXPECT_LT((md - md_t).norm() / md.norm(), 1e-10);
}

TEST(BasisBuilder, ModalDerivativeBendsAxially) {
  // For a clamped flat strip the first modal derivative of the fundamental
  // bending mode is the classical membrane correction: dominantly axial
  // motion, symmetric about midspan.
  const BeamFixture f(20, 2);
  BasisBuilder b(f.mesh, f.quad, &f.defects);
  b.modes(1);
  const VecX md = b.modal_derivative(0, 0);
  double ax = 0.0, tr = 0.0;
  for (int n = 0; n < f.mesh.n_nodes(); ++n) {
    ax += md(2 * n) * md(2 * n);
    tr += md(2 * n + 1) * md(2 * n + 1);
  }
  EXPECT_GT(ax, 10.0 * tr);
}

TEST(BasisBuilder, DefectSensitivityMatchesCrossMeshDifference) {
  // The defect sensitivity approximates how a mode shape migrates as the
  // defect amplitude grows. Reference: difference quotient of the eigenvector
  // computed on meshes at +/- eps defect, aligned in sign and mass-projected
  // to remove the arbitrary normalization drift.
  const BeamFixture f(10, 1);
  BasisBuilder b(f.mesh, f.quad, &f.defects);
  b.modes(1);
  const VecX ds = b.defect_sensitivity(0, 0);

  const double eps = 1e-4;
  const VecX phi0 = b.modes(1).Phi.col(0);
  // Each eigensolve picks its own sign, so both perturbed modes are aligned
  // to the nominal one before differencing.
  auto mode_at = [&](double amp) {
    VecX xi(1);
    xi << amp;
    const NominalMesh m = apply_defect(f.mesh, f.defects.U, xi);
    const MeshQuadrature q = build_quadrature(m);
    EigPairs e = solve_gevp(assemble_linear_stiffness(m, q),
                            assemble_mass(m, q), 1);
    VecX phi = e.Phi.col(0);
    if (phi.dot(phi0) < 0) phi = -phi;
    return phi;
  };
  const VecX pp = mode_at(eps), pm = mode_at(-eps);
  const VecX fd = (pp - pm) / (2 * eps);
  // Remove the component along the mode itself; normalization choices make it
  // meaningless, and the sensitivity solve constrains it differently.
  const SpMat m0 = assemble_mass(f.mesh, f.quad);
  auto deflate = [&](const VecX& v) {
    return VecX(v - phi0 * (phi0.dot(m0 * v) / phi0.dot(m0 * phi0)));
  };
  const VecX a = deflate(ds), c = deflate(fd);
  EXPECT_GT(a.dot(c) / (a.norm() * c.norm()), 1.0 - 1e-4);
  EXPECT_NEAR(a.norm(), c.norm(), 0.02 * c.norm());
}

TEST(BuildBasis, LabelsShapesAndDeduplication) {
  const BeamFixture f(10, 1);
  BasisRecipe r;
  r.n_modes = 3;
  r.modal_derivatives = true;
  r.defect_sensitivities = true;
  const ReductionBasis rb = build_basis(f.mesh, f.quad, &f.defects, r);
  // 3 modes + 6 upper-triangle modal derivatives + 3 defect sensitivities.
  EXPECT_EQ(rb.V.cols(), 3 + 6 + 3);
  EXPECT_EQ(rb.labels.size(), static_cast<size_t>(rb.V.cols()));
  EXPECT_EQ(rb.labels[0], "vm1");
  EXPECT_EQ(rb.labels[3], "md1_1");
  EXPECT_EQ(rb.labels.back(), "ds3_d1");
  // Unit columns.
  for (int c = 0; c < rb.V.cols(); ++c)
    EXPECT_NEAR(rb.V.col(c).norm(), 1.0, 1e-12);
  // Feeding the same shape twice must trigger the near-parallel drop.
  DefectBasis twice = f.defects;
  twice.U.conservativeResize(Eigen::NoChange, 2);
  twice.U.col(1) = twice.U.col(0);
  twice.names.push_back("arch_copy");
  twice.isochoric.push_back(true);
  twice.divergence.push_back(twice.divergence[0]);
  const ReductionBasis rb2 = build_basis(f.mesh, f.quad, &twice, r);
  EXPECT_EQ(rb2.V.cols(), 3 + 6 + 3);
  EXPECT_EQ(rb2.dropped.size(), 3u);
}

TEST(BuildBasis, OmittingDefectsShrinksBasis) {
  const BeamFixture f(10, 1);
  BasisRecipe r;
  r.n_modes = 2;
  const ReductionBasis with = build_basis(f.mesh, f.quad, &f.defects, r);
  const ReductionBasis without = build_basis(f.mesh, f.quad, nullptr, r);
  EXPECT_EQ(with.V.cols(), 2 + 3 + 2);
  EXPECT_EQ(without.V.cols(), 2 + 3);
}
