#include <fmt/format.h>

#include <cmath>

#include "dprom/solvers.hpp"

namespace dprom {

namespace {

// Sampling and projection matrices of the alternating time-frequency
// transform over one period of the scaled time tau.
struct HBOps {
  int H, B, Ns, m;
  MatX S;  // Ns x B
  MatX P;  // B x Ns

  HBOps(const HBConfig& cfg, int m_in) {
    H = cfg.n_harm;
    B = 2 * H + 1;
    Ns = cfg.n_samples > 0 ? cfg.n_samples : 4 * H + 1;
    m = m_in;
    if (Ns < 2 * H + 1)
      throw SolveError("harmonic balance needs at least 2H+1 samples");
    S.resize(Ns, B);
    P.resize(B, Ns);
    for (int s = 0; s < Ns; ++s) {
      const double tau = 2.0 * M_PI * s / Ns;
      S(s, 0) = 1.0;
      P(0, s) = 1.0 / Ns;
      for (int k = 1; k <= H; ++k) {
        S(s, 2 * k - 1) = std::cos(k * tau);
        S(s, 2 * k) = std::sin(k * tau);
        P(2 * k - 1, s) = 2.0 * std::cos(k * tau) / Ns;
        P(2 * k, s) = 2.0 * std::sin(k * tau) / Ns;
      }
    }
  }

  // Nonlinear force coefficients and, optionally, the force part of the
  // Jacobian via the chain rule through the samples.
  void force_coefficients(const ReducedSystem& sys,
                          Eigen::Map<const MatX> Xmat, MatX& Fc,
                          MatX* J) const {
    const MatX E = S * Xmat;  // Ns x m, row s = eta(tau_s)
    MatX Fs(Ns, m);
    for (int s = 0; s < Ns; ++s)
      Fs.row(s) = sys.force(E.row(s).transpose()).transpose();
    Fc = P * Fs;  // B x m
    if (!J) return;
    for (int s = 0; s < Ns; ++s) {
      const MatX Qt = sys.tangent(E.row(s).transpose());
      const MatX Os = P.col(s) * S.row(s);  // B x B
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
          J->block(i * B, j * B, B, B).noalias() += Qt(i, j) * Os;
    }
  }
};

VecX residual_impl(const ReducedSystem& sys, const HBOps& ops, const VecX& X,
                   double Omega, const VecX& F_coef, MatX* J, VecX* dRdW) {
  const int B = ops.B, m = ops.m;
  Eigen::Map<const MatX> Xmat(X.data(), B, m);
  if (J) J->setZero(B * m, B * m);

  MatX Fc;
  ops.force_coefficients(sys, Xmat, Fc, J);

  MatX R = Fc;
  R -= Eigen::Map<const MatX>(F_coef.data(), B, m);
  if (dRdW) dRdW->setZero(B * m);

  for (int k = 1; k <= ops.H; ++k) {
    const double w2 = (k * Omega) * (k * Omega);
    const int rc = 2 * k - 1, rs = 2 * k;
    const Eigen::RowVectorXd Ac = Xmat.row(rc), As = Xmat.row(rs);
    R.row(rc) += -w2 * Ac * sys.M.transpose() + k * Omega * As * sys.C.transpose();
    R.row(rs) += -w2 * As * sys.M.transpose() - k * Omega * Ac * sys.C.transpose();
    if (J)
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          (*J)(i * B + rc, j * B + rc) += -w2 * sys.M(i, j);
          (*J)(i * B + rc, j * B + rs) += k * Omega * sys.C(i, j);
          (*J)(i * B + rs, j * B + rs) += -w2 * sys.M(i, j);
          (*J)(i * B + rs, j * B + rc) += -k * Omega * sys.C(i, j);
        }
    if (dRdW) {
      const Eigen::RowVectorXd dc =
          -2.0 * k * k * Omega * Ac * sys.M.transpose() +
          k * As * sys.C.transpose();
      const Eigen::RowVectorXd ds =
          -2.0 * k * k * Omega * As * sys.M.transpose() -
          k * Ac * sys.C.transpose();
      for (int i = 0; i < m; ++i) {
        (*dRdW)(i * B + rc) = dc(i);
        (*dRdW)(i * B + rs) = ds(i);
      }
    }
  }
  return Eigen::Map<const VecX>(R.data(), B * m);
}

}  // namespace

int hb_block(const HBConfig& cfg) { return 2 * cfg.n_harm + 1; }
int hb_samples(const HBConfig& cfg) {
  return cfg.n_samples > 0 ? cfg.n_samples : 4 * cfg.n_harm + 1;
}

VecX hb_residual(const ReducedSystem& sys, const HBConfig& cfg, const VecX& X,
                 double Omega, const VecX& F_coef) {
  const HBOps ops(cfg, sys.size());
  if (X.size() != ops.B * ops.m)
    throw SolveError("harmonic coefficient vector has the wrong length");
  return residual_impl(sys, ops, X, Omega, F_coef, nullptr, nullptr);
}

VecX hb_force_cos1(const HBConfig& cfg, const VecX& p) {
  const int B = hb_block(cfg);
  VecX F = VecX::Zero(B * p.size());
  for (int i = 0; i < p.size(); ++i) F(i * B + 1) = p(i);
  return F;
}

NewtonResult hb_solve(const ReducedSystem& sys, const HBConfig& cfg, VecX X0,
                      double Omega, const VecX& F_coef) {
  const HBOps ops(cfg, sys.size());
  NewtonResult out;
  out.eta = std::move(X0);
  const double thresh = cfg.tol * std::max(1.0, F_coef.norm());
  MatX J;
  for (int it = 0; it <= cfg.max_iter; ++it) {
    const VecX R = residual_impl(sys, ops, out.eta, Omega, F_coef, &J, nullptr);
    out.resnorm = R.norm();
    out.iters = it;
    if (out.resnorm < thresh) {
      out.converged = true;
      return out;
    }
    if (it == cfg.max_iter) break;
    out.eta -= J.partialPivLu().solve(R);
  }
  return out;
}

namespace {

// Linear-response initialization: the complex first-harmonic solve of the
// linearized system, mapped to cosine/sine coefficients.
VecX linear_frf_guess(const ReducedSystem& sys, const HBConfig& cfg,
                      double Omega, const VecX& p) {
  const int m = sys.size();
  const MatX K = sys.Q.Q2;
  MatX A(2 * m, 2 * m);
  A << K - Omega * Omega * sys.M, -Omega * sys.C, Omega * sys.C,
      K - Omega * Omega * sys.M;
  VecX b(2 * m);
  b << p, VecX::Zero(m);
  const VecX q = A.partialPivLu().solve(b);
  const int B = hb_block(cfg);
  VecX X = VecX::Zero(B * m);
  for (int i = 0; i < m; ++i) {
    X(i * B + 1) = q(i);       // cosine
    X(i * B + 2) = -q(m + i);  // sine
  }
  return X;
}

}  // namespace

Branch continue_frf(const ReducedSystem& sys, const HBConfig& cfg,
                    const VecX& p, double omega_start, double omega_end,
                    const ContinuationConfig& ccfg) {
  const HBOps ops(cfg, sys.size());
  const int n = ops.B * ops.m;
  const VecX F_coef = hb_force_cos1(cfg, p);
  const double thresh = cfg.tol * std::max(1.0, F_coef.norm());
  const double wscale = ccfg.omega_scale > 0 ? ccfg.omega_scale : omega_start;
  const double ww = 1.0 / wscale;  // weight of the frequency coordinate
  const double dir = omega_end >= omega_start ? 1.0 : -1.0;

  Branch br;
  br.n_harm = cfg.n_harm;
  br.m = ops.m;

  // First point by Newton at fixed frequency from the linear response.
  auto first = hb_solve(sys, cfg, linear_frf_guess(sys, cfg, omega_start, p),
                        omega_start, F_coef);
  if (!first.converged)
    throw SolveError("frequency response continuation failed at the start");
  br.points.push_back({omega_start, first.eta, first.iters});

  VecX Xk = first.eta;
  double Wk = omega_start;
  VecX tX;
  double tW = 0.0;
  bool have_tangent = false;
  double ds = ccfg.ds0;

  MatX J(n, n);
  VecX dRdW(n);
  MatX Jaug(n + 1, n + 1);
  VecX Raug(n + 1), z(n + 1);

  // Folds may carry the branch a little below the sweep window; marching far
  // below it means the corrector lost the branch, so give up there.
  const double w_floor = std::min(omega_start, omega_end) -
                         0.25 * std::abs(omega_end - omega_start);

  while (static_cast<int>(br.points.size()) < ccfg.max_points) {
    if (Wk * dir >= omega_end * dir) break;
    if (Wk < w_floor) break;
    // predictor
    VecX Xp;
    double Wp;
    if (!have_tangent) {
      Xp = Xk;
      Wp = Wk + dir * ds * wscale;
    } else {
      Xp = Xk + ds * tX;
      Wp = Wk + ds * tW;
    }
    // corrector: residual plus arclength plane through the predictor
    VecX Xc = Xp;
    double Wc = Wp;
    bool ok = false;
    int used_iters = 0;
    for (int it = 0; it <= cfg.max_iter; ++it) {
      const VecX R = residual_impl(sys, ops, Xc, Wc, F_coef, &J, &dRdW);
      const double cons =
          have_tangent
              ? tX.dot(Xc - Xp) + ww * ww * tW * (Wc - Wp)
              : (Wc - Wp) * ww * ww * dir * wscale;
      used_iters = it;
      if (R.norm() < thresh && std::abs(cons) < 1e-12 * (1.0 + ds)) {
        ok = true;
        break;
      }
      if (it == cfg.max_iter) break;
      Jaug.topLeftCorner(n, n) = J;
      Jaug.topRightCorner(n, 1) = dRdW;
      if (have_tangent) {
        Jaug.bottomLeftCorner(1, n) = tX.transpose();
        Jaug(n, n) = ww * ww * tW;
      } else {
        Jaug.bottomLeftCorner(1, n).setZero();
        Jaug(n, n) = ww * ww * dir * wscale;
      }
      Raug.head(n) = R;
      Raug(n) = cons;
      z = Jaug.partialPivLu().solve(Raug);
      Xc -= z.head(n);
      Wc -= z(n);
    }
    double step_len = 0.0, turn_cos = 1.0;
    if (ok) {
      const VecX dX = Xc - Xk;
      const double dW = Wc - Wk;
      step_len = std::sqrt(dX.squaredNorm() + ww * ww * dW * dW);
      if (step_len == 0.0) ok = false;
      // Limit how sharply the branch may turn per step. This both resolves
      // folds properly and blocks the corrector from slipping onto the part
      // of the branch already traversed (the response curls fast in phase
      // space around a resonance, so a plain forward test is not enough).
      if (ok && have_tangent) {
        turn_cos =
            (tX.dot(dX) + ww * ww * tW * dW) / step_len;
        if (turn_cos < 0.5) ok = false;
      }
    }
    if (ok) {
      const VecX dX = Xc - Xk;
      const double dW = Wc - Wk;
      tX = dX / step_len;
      tW = dW / step_len;
      have_tangent = true;
      Xk = Xc;
      Wk = Wc;
      br.points.push_back({Wk, Xk, used_iters});
      if (used_iters <= 4) ds = std::min(2.0 * ds, ccfg.ds_max);
      else if (used_iters > 10) ds = std::max(0.5 * ds, ccfg.ds_min);
    } else {
      ds *= 0.5;
      if (ds < ccfg.ds_min)
        throw SolveError(fmt::format(
            "continuation stalled at frequency {:.6g} rad/s", Wk));
    }
  }
  return br;
}

Branch backbone(const ReducedSystem& sys, const HBConfig& cfg, int dom_coord,
                double a_start, double a_end, int n_points,
                double omega_guess) {
  const int m = sys.size();
  const int H = cfg.n_harm;
  const int Bc = H + 1;
  const int Ns = hb_samples(cfg);
  const int n = Bc * m;

  // Cosine-only transform: valid for the conservative symmetric orbits where
  // velocities vanish at tau = 0.
  MatX S(Ns, Bc), P(Bc, Ns);
  for (int s = 0; s < Ns; ++s) {
    const double tau = 2.0 * M_PI * s / Ns;
    S(s, 0) = 1.0;
    P(0, s) = 1.0 / Ns;
    for (int k = 1; k <= H; ++k) {
      S(s, k) = std::cos(k * tau);
      P(k, s) = 2.0 * std::cos(k * tau) / Ns;
    }
  }

  auto residual = [&](const VecX& X, double Omega, MatX* J, VecX* dRdW) {
    Eigen::Map<const MatX> Xmat(X.data(), Bc, m);
    if (J) J->setZero(n, n);
    const MatX E = S * Xmat;
    MatX Fs(Ns, m);
    for (int s = 0; s < Ns; ++s)
      Fs.row(s) = sys.force(E.row(s).transpose()).transpose();
    MatX R = P * Fs;  // Bc x m
    if (J)
      for (int s = 0; s < Ns; ++s) {
        const MatX Qt = sys.tangent(E.row(s).transpose());
        const MatX Os = P.col(s) * S.row(s);
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < m; ++j)
            J->block(i * Bc, j * Bc, Bc, Bc).noalias() += Qt(i, j) * Os;
      }
    if (dRdW) dRdW->setZero(n);
    for (int k = 1; k <= H; ++k) {
      const double w2 = (k * Omega) * (k * Omega);
      const Eigen::RowVectorXd Ac = Xmat.row(k);
      R.row(k) -= w2 * Ac * sys.M.transpose();
      if (J)
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < m; ++j)
            (*J)(i * Bc + k, j * Bc + k) -= w2 * sys.M(i, j);
      if (dRdW) {
        const Eigen::RowVectorXd d =
            -2.0 * k * k * Omega * Ac * sys.M.transpose();
        for (int i = 0; i < m; ++i) (*dRdW)(i * Bc + k) = d(i);
      }
    }
    return VecX(Eigen::Map<const VecX>(R.data(), n));
  };

  Branch br;
  br.n_harm = H;
  br.m = m;

  VecX X = VecX::Zero(n);
  double W = omega_guess;
  const int pin = dom_coord * Bc + 1;
  MatX J(n, n);
  VecX dRdW(n);
  MatX Jaug(n + 1, n + 1);
  VecX Raug(n + 1), z(n + 1);

  for (int pt = 0; pt < n_points; ++pt) {
    const double a =
        n_points == 1
            ? a_start
            : a_start + (a_end - a_start) * pt / double(n_points - 1);
    X(pin) = a;
    bool ok = false;
    for (int it = 0; it <= cfg.max_iter; ++it) {
      const VecX R = residual(X, W, &J, &dRdW);
      const double cons = X(pin) - a;
      if (R.norm() < cfg.tol * std::max(1.0, std::abs(a) * sys.M.norm() * W * W) &&
          std::abs(cons) < 1e-14) {
        ok = true;
        break;
      }
      if (it == cfg.max_iter) break;
      Jaug.topLeftCorner(n, n) = J;
      Jaug.topRightCorner(n, 1) = dRdW;
      Jaug.bottomLeftCorner(1, n).setZero();
      Jaug(n, pin) = 1.0;
      Jaug(n, n) = 0.0;
      Raug.head(n) = R;
      Raug(n) = cons;
      z = Jaug.partialPivLu().solve(Raug);
      X -= z.head(n);
      W -= z(n);
    }
    if (!ok)
      throw SolveError(
          fmt::format("backbone solve failed at amplitude {:.6g}", a));
    br.points.push_back({W, X, 0});
  }
  return br;
}

double first_harmonic_amplitude(const Branch& br, const BranchPoint& pt,
                                const VecX& observe_row, bool cosine_only) {
  const int m = br.m;
  const int B = static_cast<int>(pt.X.size()) / m;
  double qc = 0.0, qs = 0.0;
  for (int i = 0; i < m; ++i) {
    qc += observe_row(i) * pt.X(i * B + 1);
    if (!cosine_only) qs += observe_row(i) * pt.X(i * B + 2);
  }
  return std::sqrt(qc * qc + qs * qs);
}

namespace {

// Integrates the reduced system over [0, T_int] and returns the final state.
void integrate_to(const ReducedSystem& sys, const VecX& eta0, const VecX& v0,
                  double T_int, int steps,
                  const std::function<VecX(double)>& f_ext, VecX& eta_end,
                  VecX& v_end) {
  const auto res =
      newmark_transient(sys, f_ext, eta0, v0, T_int / steps, steps, 1e-11,
                        1e-14, 50);
  if (!res.converged)
    throw SolveError("time integration failed inside the shooting solve");
  eta_end = res.eta.row(res.eta.rows() - 1).transpose();
  v_end = res.etad.row(res.etad.rows() - 1).transpose();
}

}  // namespace

ShootingResult shoot_nnm(const ReducedSystem& sys, int dom_coord, double a_pin,
                         VecX eta0_guess, double T_guess,
                         int steps_per_period, double tol, int max_iter) {
  const int m = sys.size();
  const int nu = m;  // m-1 free initial values + the period
  const VecX zero_f = VecX::Zero(m);
  auto no_force = [&](double) { return zero_f; };

  // Pack unknowns: initial values of all coordinates except the pinned one,
  // then the period.
  auto unpack = [&](const VecX& pvec, VecX& eta0, double& T) {
    eta0.resize(m);
    int c = 0;
    for (int i = 0; i < m; ++i)
      eta0(i) = (i == dom_coord) ? a_pin : pvec(c++);
    T = pvec(nu - 1);
  };
  auto residual = [&](const VecX& pvec) {
    VecX eta0, ee, ve;
    double T;
    unpack(pvec, eta0, T);
    integrate_to(sys, eta0, VecX::Zero(m), 0.5 * T, steps_per_period / 2,
                 no_force, ee, ve);
    return VecX(ve);  // symmetric orbit: velocities vanish at the half period
  };

  VecX p(nu);
  {
    int c = 0;
    if (eta0_guess.size() != m) eta0_guess = VecX::Zero(m);
    for (int i = 0; i < m; ++i)
      if (i != dom_coord) p(c++) = eta0_guess(i);
    p(nu - 1) = T_guess;
  }

  ShootingResult out;
  for (int it = 0; it <= max_iter; ++it) {
    const VecX R = residual(p);
    out.iters = it;
    const double scale = std::abs(a_pin) * 2.0 * M_PI / p(nu - 1);
    if (R.norm() < tol * std::max(scale, 1e-12)) {
      out.converged = true;
      break;
    }
    if (it == max_iter) break;
    MatX J(m, nu);
    for (int c = 0; c < nu; ++c) {
      VecX pp = p;
      const double h =
          1e-6 * std::max(std::abs(p(c)), c == nu - 1 ? p(nu - 1) : std::abs(a_pin));
      pp(c) += h;
      J.col(c) = (residual(pp) - R) / h;
    }
    p -= J.partialPivLu().solve(R);
  }
  unpack(p, out.eta0, out.T);
  out.v0 = VecX::Zero(m);
  return out;
}

ShootingResult shoot_forced(const ReducedSystem& sys,
                            const std::function<VecX(double)>& f_ext,
                            double Omega, VecX eta0, VecX v0,
                            int steps_per_period, double tol, int max_iter) {
  const int m = sys.size();
  const double T = 2.0 * M_PI / Omega;
  auto residual = [&](const VecX& z) {
    VecX ee, ve;
    integrate_to(sys, z.head(m), z.tail(m), T, steps_per_period, f_ext, ee,
                 ve);
    VecX R(2 * m);
    R << ee - z.head(m), ve - z.tail(m);
    return R;
  };
  VecX z(2 * m);
  z << eta0, v0;
  ShootingResult out;
  out.T = T;
  double zscale = std::max(z.norm(), 1e-9);
  for (int it = 0; it <= max_iter; ++it) {
    const VecX R = residual(z);
    out.iters = it;
    if (R.norm() < tol * zscale) {
      out.converged = true;
      break;
    }
    if (it == max_iter) break;
    MatX J(2 * m, 2 * m);
    for (int c = 0; c < 2 * m; ++c) {
      VecX zp = z;
      const double h = 1e-6 * std::max(std::abs(z(c)), zscale);
      zp(c) += h;
      J.col(c) = (residual(zp) - R) / h;
    }
    z -= J.partialPivLu().solve(R);
    zscale = std::max(z.norm(), 1e-9);
  }
  out.eta0 = z.head(m);
  out.v0 = z.tail(m);
  return out;
}

}  // namespace dprom
