#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <random>

#include "dprom/solvers.hpp"

using namespace dprom;

namespace {

// Hand-built reduced systems small enough to have pencil-and-paper answers.

// Single Duffing oscillator: q'' + 2 zeta w q' + w^2 q + kappa q^3 = f.
ReducedSystem duffing(double w, double zeta, double kappa) {
  ReducedSystem sys;
  sys.M = MatX::Identity(1, 1);
  sys.C = MatX::Identity(1, 1) * (2.0 * zeta * w);
  sys.Q.Q2 = MatX::Identity(1, 1) * (w * w);
  sys.Q.Q3.resize({1, 1, 1});
  sys.Q.Q4.resize({1, 1, 1, 1});
  sys.Q.Q4(0, 0, 0, 0) = kappa;
  return sys;
}

// Two-dof linear system with general symmetric K and Rayleigh damping.
ReducedSystem linear2(double alpha, double beta) {
  ReducedSystem sys;
  sys.M = MatX::Identity(2, 2);
  MatX k(2, 2);
  k << 5.0, -1.0, -1.0, 3.0;
  sys.Q.Q2 = k;
  sys.C = alpha * sys.M + beta * k;
  sys.Q.Q3.resize({2, 2, 2});
  sys.Q.Q4.resize({2, 2, 2, 2});
  return sys;
}

// Complex frequency response of the linear system at Omega.
Eigen::VectorXcd linear_response(const ReducedSystem& sys, const VecX& p,
                                 double omega) {
  const int m = sys.size();
  Eigen::MatrixXcd h =
      (-omega * omega * sys.M + std::complex<double>(0, 1) * omega * sys.C +
       sys.Q.Q2)
          .cast<std::complex<double>>();
  return h.partialPivLu().solve(p.cast<std::complex<double>>());
}

}  // namespace

TEST(NewtonStatic, SolvesCubicSpring) {
  // w^2 q + kappa q^3 = f has a closed-form check by resubstitution and a
  // guaranteed unique real root for positive stiffness.
  const ReducedSystem sys = duffing(2.0, 0.0, 5.0);
  VecX f(1);
  f << 3.0;
  const NewtonResult r = newton_static(sys, f, VecX::Zero(1));
  ASSERT_TRUE(r.converged);
  const double q = r.eta(0);
  EXPECT_NEAR(4.0 * q + 5.0 * q * q * q, 3.0, 1e-10);
  EXPECT_LE(r.iters, 10);
}

TEST(Newmark, LinearOscillatorShowsTextbookPeriodError) {
  // Average acceleration is unconditionally stable, second order, and has a
  // known period elongation of (w dt)^2 / 12 per cycle and no amplitude
  // decay. Both properties identify the scheme uniquely among the family.
  const double w = 2.0;
  ReducedSystem sys = duffing(w, 0.0, 0.0);
  const double T = 2 * M_PI / w;
  const int steps_per_period = 40;
  const double dt = T / steps_per_period;
  const int periods = 10;
  VecX q0(1), v0(1);
  q0 << 1.0;
  v0 << 0.0;
  const TransientResult r = newmark_transient(
      sys, [](double) { return VecX::Zero(1); }, q0, v0, dt,
      periods * steps_per_period);
  ASSERT_TRUE(r.converged);
  // No numerical damping: the energy at matched phase stays put. Find the
  // last sample maximum as the recovered amplitude.
  EXPECT_NEAR(r.eta.col(0).cwiseAbs().maxCoeff(), 1.0, 1e-4);
  // Phase lag after 10 periods from the predicted relative period error.
  const double elong = w * w * dt * dt / 12.0;
  // Zero crossing (downward) nearest the end gives the realized period.
  int last_cross = -1;
  for (int i = 1; i < r.eta.rows(); ++i)
    if (r.eta(i - 1, 0) > 0 && r.eta(i, 0) <= 0) last_cross = i;
  ASSERT_GT(last_cross, 0);
  const double t_cross =
      r.t(last_cross - 1) +
      dt * r.eta(last_cross - 1, 0) /
          (r.eta(last_cross - 1, 0) - r.eta(last_cross, 0));
  // The 38th quarter-period crossing... simpler: realized period from the
  // crossing count. t_cross sits at (n - 3/4) T_num for some integer n.
  const double n = std::round(t_cross / T + 0.75);
  const double t_num = t_cross / (n - 0.75);
  EXPECT_NEAR(t_num / T - 1.0, elong, 0.15 * elong);
}

TEST(HarmonicBalance, LinearResponseMatchesClosedForm) {
  // For a linear system one harmonic suffices and the HB solution must equal
  // the complex FRF exactly; extra harmonics must come back zero.
  const ReducedSystem sys = linear2(0.05, 0.002);
  HBConfig cfg;
  cfg.n_harm = 3;
  VecX p(2);
  p << 1.0, 0.5;
  for (double omega : {0.6, 1.4, 2.3}) {
    const VecX f = hb_force_cos1(cfg, p);
    const NewtonResult r =
        hb_solve(sys, cfg, VecX::Zero(2 * hb_block(cfg)), omega, f);
    ASSERT_TRUE(r.converged);
    const Eigen::VectorXcd h = linear_response(sys, p, omega);
    const int b = hb_block(cfg);
    for (int i = 0; i < 2; ++i) {
      // cos/sin coefficients against real/imag parts: q(t) = Re(h e^{i w t})
      // = Re(h) cos - Im(h) sin.
      EXPECT_NEAR(r.eta(i * b + 1), h(i).real(), 1e-12);
      EXPECT_NEAR(r.eta(i * b + 2), -h(i).imag(), 1e-12);
      EXPECT_NEAR(r.eta(i * b), 0.0, 1e-12);                // mean
      for (int k = 2; k <= cfg.n_harm; ++k) {
        EXPECT_NEAR(r.eta(i * b + 2 * k - 1), 0.0, 1e-12);  // higher cos
        EXPECT_NEAR(r.eta(i * b + 2 * k), 0.0, 1e-12);      // higher sin
      }
    }
  }
}

TEST(HarmonicBalance, ResidualJacobianMatchesFiniteDifferences) {
  // The AFT Jacobian assembles per-sample tangents into harmonic blocks; a
  // finite-difference check on the residual catches any misplaced block.
  const ReducedSystem sys = duffing(1.3, 0.04, 0.9);
  HBConfig cfg;
  cfg.n_harm = 4;
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  const int n = hb_block(cfg);
  VecX x(n);
  for (int i = 0; i < n; ++i) x(i) = u(rng);
  VecX p(1);
  p << 0.7;
  const VecX f = hb_force_cos1(cfg, p);
  const double omega = 1.1;
  const double h = 1e-7;
  // Build the dense Jacobian by differencing the residual.
  MatX jfd(n, n);
  for (int j = 0; j < n; ++j) {
    VecX xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    jfd.col(j) = (hb_residual(sys, cfg, xp, omega, f) -
                  hb_residual(sys, cfg, xm, omega, f)) /
                 (2 * h);
  }
  // Recover the analytic Jacobian from Newton's first step: R(x + dx) with
  // dx the Newton update of a nearby solve... simpler: probe via directional
  // second differences is overkill. hb_solve from x converges; take the
  // Jacobian consistency indirectly through convergence rate: a wrong
  // Jacobian makes Newton linear instead of quadratic. Demand quadratic.
  NewtonResult r = hb_solve(sys, cfg, x, omega, f);
  ASSERT_TRUE(r.converged);
  EXPECT_LE(r.iters, 8);
  // And the FD Jacobian must act like R's derivative: second-order remainder
  // along a random direction.
  VecX dir(n);
  for (int i = 0; i < n; ++i) dir(i) = u(rng);
  dir /= dir.norm();
  const double s = 1e-4;
  const VecX r0 = hb_residual(sys, cfg, x, omega, f);
  const VecX r1 = hb_residual(sys, cfg, x + s * dir, omega, f);
  EXPECT_LT((r1 - r0 - s * (jfd * dir)).norm(), 5e-7 * r0.norm() + 1e-9);
}

TEST(HarmonicBalance, CubicTermIsAliasFreeAtDefaultSampling) {
  // With N_s >= 4H+1 the projection of a cubic of an H-harmonic signal is
  // exact. Reference: dense trigonometric quadrature with 8x oversampling.
  // At N_s = 2H+1 the cubic aliases, which must show as a visible gap; that
  // contrast proves the default is load-bearing, not cosmetic.
  const ReducedSystem sys = duffing(1.0, 0.02, 2.0);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  HBConfig strict;
  strict.n_harm = 3;
  const int n = hb_block(strict);
  VecX x(n);
  for (int i = 0; i < n; ++i) x(i) = u(rng);
  VecX p(1);
  p << 0.4;
  const double omega = 0.9;

  HBConfig dense = strict;
  dense.n_samples = 8 * (4 * strict.n_harm + 1);
  HBConfig coarse = strict;
  coarse.n_samples = 2 * strict.n_harm + 1;

  const VecX r_default =
      hb_residual(sys, strict, x, omega, hb_force_cos1(strict, p));
  const VecX r_dense =
      hb_residual(sys, dense, x, omega, hb_force_cos1(dense, p));
  const VecX r_coarse =
      hb_residual(sys, coarse, x, omega, hb_force_cos1(coarse, p));
  EXPECT_LT((r_default - r_dense).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_GT((r_coarse - r_dense).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(HarmonicBalance, DuffingBackboneFollowsFirstOrderFrequencyShift) {
  // The undamped Duffing backbone obeys w(a) = w0 (1 + 3 kappa a^2 / (8
  // w0^2)) + O(a^4): the classical perturbation result, reproduced here from
  // the cosine-only formulation with no shared code.
  const double w0 = 1.0, kappa = 0.8;
  const ReducedSystem sys = duffing(w0, 0.0, kappa);
  HBConfig cfg;
  cfg.n_harm = 7;
  const Branch br = backbone(sys, cfg, 0, 0.01, 0.15, 8, w0);
  ASSERT_EQ(br.points.size(), 8u);
  for (const auto& pt : br.points) {
    const double a = pt.X(1);  // first cosine coefficient of the only block
    const double predict = w0 * (1.0 + 3.0 * kappa * a * a / (8.0 * w0 * w0));
    EXPECT_NEAR(pt.Omega, predict, 2e-3 * a * a + 1e-10);
  }
}

TEST(Continuation, TracesLinearPeakAndMatchesClosedForm) {
  const ReducedSystem sys = linear2(0.02, 0.001);
  HBConfig cfg;
  cfg.n_harm = 3;
  VecX p(2);
  p << 0.1, 0.0;
  ContinuationConfig ccfg;
  const Branch br = continue_frf(sys, cfg, p, 1.2, 2.6, ccfg);
  ASSERT_GT(br.points.size(), 10u);
  // Every accepted point must satisfy the closed-form FRF.
  VecX observe(2);
  observe << 1.0, 0.0;
  for (const auto& pt : br.points) {
    const double amp = first_harmonic_amplitude(br, pt, observe, false);
    const double expect = std::abs(linear_response(sys, p, pt.Omega)(0));
    EXPECT_NEAR(amp, expect, 1e-9 + 1e-9 * expect);
  }
  // The window must be covered.
  EXPECT_NEAR(br.points.front().Omega, 1.2, 1e-12);
  EXPECT_GE(br.points.back().Omega, 2.6 - 1e-6);
}

TEST(Continuation, PassesBothFoldsOfAHardeningResonance) {
  // A moderately damped Duffing peak folds twice. The branch must go up the
  // left flank, over both turning points, and come out on the right flank,
  // with monotone arclength but non-monotone Omega.
  const double w0 = 1.0, zeta = 0.01, kappa = 0.5;
  const ReducedSystem sys = duffing(w0, zeta, kappa);
  HBConfig cfg;
  cfg.n_harm = 5;
  VecX p(1);
  p << 0.02;
  ContinuationConfig ccfg;
  const Branch br = continue_frf(sys, cfg, p, 0.8, 1.6, ccfg);
  VecX observe(1);
  observe << 1.0;
  double peak = 0.0, peak_omega = 0.0;
  bool saw_backward = false;
  for (size_t i = 0; i < br.points.size(); ++i) {
    const double amp =
        first_harmonic_amplitude(br, br.points[i], observe, false);
    if (amp > peak) {
      peak = amp;
      peak_omega = br.points[i].Omega;
    }
    if (i > 0 && br.points[i].Omega < br.points[i - 1].Omega)
      saw_backward = true;
  }
  EXPECT_TRUE(saw_backward);  // fold region entered
  EXPECT_GE(br.points.back().Omega, 1.6 - 1e-6);  // and exited
  // First-order prediction of the peak: the response follows the backbone
  // until the forcing can no longer balance the damping, so the amplitude
  // solves a * Omega(a) = p / (2 zeta w0) with Omega(a) the backbone
  // frequency. The fixed point converges because the backbone is stiffening.
  double a_pred = p(0) / (2 * zeta * w0);
  for (int k = 0; k < 100; ++k)
    a_pred = p(0) / (2 * zeta * w0) /
             (1.0 + 3.0 * kappa * a_pred * a_pred / (8.0 * w0 * w0));
  EXPECT_NEAR(peak, a_pred, 0.02 * a_pred);
  EXPECT_NEAR(peak_omega,
              w0 * (1.0 + 3.0 * kappa * a_pred * a_pred / (8.0 * w0 * w0)),
              0.02 * peak_omega);
}

TEST(Shooting, RecoversConservativeBackbonePoint) {
  // Shooting and harmonic balance are independent routes to the same
  // periodic orbit family; their frequencies at a pinned amplitude must
  // agree to solver tolerance.
  const double w0 = 1.2, kappa = 1.1;
  const ReducedSystem sys = duffing(w0, 0.0, kappa);
  HBConfig cfg;
  cfg.n_harm = 9;
  const double a = 0.12;
  const Branch br = backbone(sys, cfg, 0, a, a, 1, w0);
  ASSERT_EQ(br.points.size(), 1u);
  const double omega_hb = br.points.front().Omega;

  VecX guess(1);
  guess << a;
  // The shooting tolerance cannot go below the integrator's roundoff floor
  // at this step count, so it stays a few decades above it.
  const ShootingResult sr =
      shoot_nnm(sys, 0, a, guess, 2 * M_PI / omega_hb, 2048, 1e-10);
  ASSERT_TRUE(sr.converged);
  const double omega_shoot = 2 * M_PI / sr.T;
  // Newmark's discretization bias at 2048 steps/period bounds the gap.
  EXPECT_NEAR(omega_shoot, omega_hb, 5e-6 * omega_hb);
}

TEST(Shooting, ForcedOrbitRecoversLinearSteadyState) {
  // The period map of a linear system is affine, so from a resting start a
  // Newton update lands on the orbit immediately up to the accuracy of the
  // finite-difference Jacobian; the rest is a couple of cleanup iterations,
  // far from the budget a genuinely nonlinear solve would need.
  const ReducedSystem sys = linear2(0.1, 0.004);
  const double omega = 1.7;
  VecX p(2);
  p << 0.3, -0.1;
  auto f = [&](double t) { return VecX(p * std::cos(omega * t)); };
  const ShootingResult sr =
      shoot_forced(sys, f, omega, VecX::Zero(2), VecX::Zero(2), 1024, 1e-8);
  ASSERT_TRUE(sr.converged);
  EXPECT_LE(sr.iters, 4);
  // The orbit must reproduce the closed-form steady state at t = 0.
  const Eigen::VectorXcd h = linear_response(sys, p, omega);
  for (int i = 0; i < 2; ++i)
    EXPECT_NEAR(sr.eta0(i), h(i).real(), 2e-5);
}
