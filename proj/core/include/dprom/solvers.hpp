#pragma once

#include <functional>
#include <vector>

#include "dprom/mesh.hpp"
#include "dprom/tensors.hpp"
#include "dprom/types.hpp"

namespace dprom {

// Reduced equations of motion at a fixed defect amplitude: M eta'' + C eta'
// + f(eta) = f_ext, with f the cubic polynomial force of the evaluated
// tensors.
struct ReducedSystem {
  EvalTensors Q;
  MatX M;
  MatX C;

  int size() const { return static_cast<int>(M.rows()); }
  VecX force(const VecX& eta) const { return reduced_force(Q, eta); }
  MatX tangent(const VecX& eta) const { return reduced_tangent(Q, eta); }
};

struct NewtonResult {
  VecX eta;
  int iters = 0;
  double resnorm = 0.0;
  bool converged = false;
};

NewtonResult newton_static(const ReducedSystem& sys, const VecX& f_ext,
                           VecX eta0, double rtol = 1e-10, double atol = 1e-12,
                           int max_iter = 50);

struct FullNewtonResult {
  VecX u;
  int iters = 0;
  double resnorm = 0.0;
  bool converged = false;
};

// Full-order static solve for any variant, defect entering through the strain
// operators (or through the mesh when it was shifted beforehand).
FullNewtonResult newton_static_full(const NominalMesh& mesh,
                                    const MeshQuadrature& quad, const MatX& U,
                                    const VecX& xi, Variant variant,
                                    QuadDomain domain, const VecX& f_ext,
                                    VecX u0, double rtol = 1e-10,
                                    double atol = 1e-12, int max_iter = 50);

struct TransientResult {
  VecX t;
  MatX eta;   // rows: steps (including t=0), cols: coordinates
  MatX etad;
  MatX etadd;
  bool converged = false;
};

// Constant-average-acceleration Newmark with a full Newton solve per step.
TransientResult newmark_transient(const ReducedSystem& sys,
                                  const std::function<VecX(double)>& f_ext,
                                  const VecX& eta0, const VecX& v0, double dt,
                                  int n_steps, double rtol = 1e-9,
                                  double atol = 1e-12, int max_iter = 30);

// ---- Harmonic balance ----
//
// Unknown layout is coordinate-major: for each reduced coordinate a block of
// 2H+1 coefficients [mean, cos1, sin1, ..., cosH, sinH] in the scaled time
// tau = Omega t. The alternating time-frequency transform samples one period
// uniformly; products up to cubic stay alias-free when n_samples >= 4H+1.
struct HBConfig {
  int n_harm = 7;
  int n_samples = 0;  // 0 picks 4*n_harm+1
  double tol = 1e-10;
  int max_iter = 25;
};

int hb_block(const HBConfig& cfg);          // 2H+1
int hb_samples(const HBConfig& cfg);        // effective sample count

// Residual of the harmonic-balance system; F_coef has the same layout as X
// and holds the external force coefficients.
VecX hb_residual(const ReducedSystem& sys, const HBConfig& cfg, const VecX& X,
                 double Omega, const VecX& F_coef);

// Newton at fixed Omega. Returns convergence through NewtonResult fields
// (eta holds X).
NewtonResult hb_solve(const ReducedSystem& sys, const HBConfig& cfg, VecX X0,
                      double Omega, const VecX& F_coef);

// Coefficient vector for a single-harmonic cosine force p cos(Omega t).
VecX hb_force_cos1(const HBConfig& cfg, const VecX& p);

struct BranchPoint {
  double Omega = 0.0;
  VecX X;
  int iters = 0;
};

struct Branch {
  std::vector<BranchPoint> points;
  int n_harm = 0;
  int m = 0;
};

struct ContinuationConfig {
  double ds0 = 0.01;
  double ds_min = 1e-6;
  double ds_max = 0.02;
  int max_points = 2000;
  double omega_scale = 0.0;  // weight 1/omega_scale on the Omega coordinate;
                             // 0 picks the start frequency
};

// Frequency response branch by pseudo-arclength continuation from
// omega_start toward omega_end under p cos(Omega t).
Branch continue_frf(const ReducedSystem& sys, const HBConfig& cfg,
                    const VecX& p, double omega_start, double omega_end,
                    const ContinuationConfig& ccfg);

// Undamped unforced backbone: cosine-only ansatz (blocks of H+1 per
// coordinate: [mean, cos1..cosH]), amplitude of the dominant coordinate's
// first cosine swept from a_start to a_end; Omega is an unknown per point.
Branch backbone(const ReducedSystem& sys, const HBConfig& cfg, int dom_coord,
                double a_start, double a_end, int n_points,
                double omega_guess);

// First-harmonic response amplitude of a linear observation row (e.g. the
// basis row of a probe dof) on a branch point; works for both layouts.
double first_harmonic_amplitude(const Branch& br, const BranchPoint& pt,
                                const VecX& observe_row, bool cosine_only);

struct ShootingResult {
  VecX eta0;
  VecX v0;
  double T = 0.0;
  int iters = 0;
  bool converged = false;
};

// Periodic orbit of the conservative system by half-period symmetric
// shooting: start at rest (eta'(0) = 0), require eta'(T/2) = 0. The dominant
// coordinate's initial value is pinned to a_pin; the rest of eta(0) and the
// period are unknowns. Jacobian by finite differences over Newmark
// integration.
ShootingResult shoot_nnm(const ReducedSystem& sys, int dom_coord, double a_pin,
                         VecX eta0_guess, double T_guess,
                         int steps_per_period = 256, double tol = 1e-9,
                         int max_iter = 30);

// Forced periodic orbit by a full-period map at fixed Omega (used as an
// independent cross-check; converges in one step for a linear system).
ShootingResult shoot_forced(const ReducedSystem& sys,
                            const std::function<VecX(double)>& f_ext,
                            double Omega, VecX eta0, VecX v0,
                            int steps_per_period = 256, double tol = 1e-9,
                            int max_iter = 30);

}  // namespace dprom
