#include "dprom/solvers.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <limits>

#include "dprom/assembly.hpp"

namespace dprom {

NewtonResult newton_static(const ReducedSystem& sys, const VecX& f_ext,
                           VecX eta0, double rtol, double atol, int max_iter) {
  NewtonResult out;
  out.eta = std::move(eta0);
  const double thresh = std::max(rtol * f_ext.norm(), atol);
  for (int it = 0; it <= max_iter; ++it) {
    const VecX R = sys.force(out.eta) - f_ext;
    out.resnorm = R.norm();
    out.iters = it;
    if (out.resnorm < thresh) {
      out.converged = true;
      return out;
    }
    if (it == max_iter) break;
    const MatX Kt = sys.tangent(out.eta);
    out.eta -= Kt.fullPivLu().solve(R);
  }
  return out;
}

FullNewtonResult newton_static_full(const NominalMesh& mesh,
                                    const MeshQuadrature& quad, const MatX& U,
                                    const VecX& xi, Variant variant,
                                    QuadDomain domain, const VecX& f_ext,
                                    VecX u0, double rtol, double atol,
                                    int max_iter) {
  FullNewtonResult out;
  out.u = std::move(u0);
  if (out.u.size() == 0) out.u = VecX::Zero(mesh.n_free());
  const double thresh = std::max(rtol * f_ext.norm(), atol);
  Eigen::SparseLU<SpMat> lu;
  for (int it = 0; it <= max_iter; ++it) {
    const auto ft =
        assemble_force_tangent(mesh, quad, out.u, U, xi, variant, domain);
    const VecX R = ft.f - f_ext;
    out.resnorm = R.norm();
    out.iters = it;
    if (out.resnorm < thresh) {
      out.converged = true;
      return out;
    }
    if (it == max_iter) break;
    lu.compute(ft.K);
    if (lu.info() != Eigen::Success)
      throw SolveError("tangent factorization failed in static solve");
    out.u -= lu.solve(R);
  }
  return out;
}

TransientResult newmark_transient(const ReducedSystem& sys,
                                  const std::function<VecX(double)>& f_ext,
                                  const VecX& eta0, const VecX& v0, double dt,
                                  int n_steps, double rtol, double atol,
                                  int max_iter) {
  const int m = sys.size();
  const double beta = 0.25, gamma = 0.5;

  TransientResult out;
  out.t.resize(n_steps + 1);
  out.eta.resize(n_steps + 1, m);
  out.etad.resize(n_steps + 1, m);
  out.etadd.resize(n_steps + 1, m);

  VecX u = eta0, v = v0;
  VecX a = sys.M.ldlt().solve(f_ext(0.0) - sys.C * v0 - sys.force(eta0));
  out.t(0) = 0.0;
  out.eta.row(0) = u.transpose();
  out.etad.row(0) = v.transpose();
  out.etadd.row(0) = a.transpose();
  out.converged = true;

  for (int n = 0; n < n_steps; ++n) {
    const double tn1 = (n + 1) * dt;
    const VecX fn1 = f_ext(tn1);
    // predictor: constant displacement start
    VecX un1 = u;
    bool ok = false;
    const double c_a = 1.0 / (beta * dt * dt);
    const double c_v = gamma / (beta * dt);
    for (int it = 0; it <= max_iter; ++it) {
      const VecX an1 =
          c_a * (un1 - u - dt * v) - (0.5 - beta) / beta * a;
      const VecX vn1 = v + dt * ((1.0 - gamma) * a + gamma * an1);
      const VecX R = sys.M * an1 + sys.C * vn1 + sys.force(un1) - fn1;
      const double thresh = std::max(rtol * fn1.norm(), atol);
      // Recovering the acceleration divides displacement roundoff by
      // beta dt^2, so no iterate can land below this floor; reaching it is
      // convergence no matter how tight the requested tolerances are.
      const double floor_r = 8.0 * std::numeric_limits<double>::epsilon() *
                             c_a * sys.M.norm() *
                             (un1.norm() + u.norm() + dt * v.norm());
      if (R.norm() <
          std::max({thresh, rtol * (sys.M * an1).norm(), floor_r})) {
        u = un1;
        v = vn1;
        a = an1;
        ok = true;
        break;
      }
      if (it == max_iter) break;
      const MatX Keff = sys.tangent(un1) + c_v * sys.C + c_a * sys.M;
      un1 -= Keff.partialPivLu().solve(R);
    }
    if (!ok) {
      out.converged = false;
      out.t.conservativeResize(n + 1);
      out.eta.conservativeResize(n + 1, m);
      out.etad.conservativeResize(n + 1, m);
      out.etadd.conservativeResize(n + 1, m);
      return out;
    }
    out.t(n + 1) = tn1;
    out.eta.row(n + 1) = u.transpose();
    out.etad.row(n + 1) = v.transpose();
    out.etadd.row(n + 1) = a.transpose();
  }
  return out;
}

}  // namespace dprom
