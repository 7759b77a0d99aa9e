#include "dprom/eig.hpp"

#include <fmt/format.h>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <random>

namespace dprom {

namespace {

EigPairs dense_path(const SpMat& K, const SpMat& M, int k) {
  const MatX Kd = MatX(K);
  const MatX Md = MatX(M);
  Eigen::GeneralizedSelfAdjointEigenSolver<MatX> es(Kd, Md);
  if (es.info() != Eigen::Success)
    throw SolveError("dense generalized eigensolve failed");
  EigPairs out;
  out.omega2 = es.eigenvalues().head(k);
  out.Phi = es.eigenvectors().leftCols(k);
  return out;
}

EigPairs subspace_path(const SpMat& K, const SpMat& M, int k) {
  const int n = static_cast<int>(K.rows());
  const int p = std::min(n, std::max(2 * k + 8, k + 8));
  Eigen::SimplicialLDLT<SpMat> solver(K);
  if (solver.info() != Eigen::Success)
    throw SolveError("stiffness factorization failed in eigensolve");

  std::mt19937 rng(12345);
  std::normal_distribution<double> dist;
  MatX X(n, p);
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < n; ++i) X(i, j) = dist(rng);

  VecX prev = VecX::Constant(k, -1.0);
  EigPairs out;
  for (int it = 0; it < 200; ++it) {
    // One block inverse-power step, then a Ritz projection restores a
    // mass-orthonormal basis of the refined subspace.
    const MatX Y = solver.solve(M * X);
    const MatX Kp = Y.transpose() * (K * Y);
    const MatX Mp = Y.transpose() * (M * Y);
    Eigen::GeneralizedSelfAdjointEigenSolver<MatX> es(Kp, Mp);
    if (es.info() != Eigen::Success)
      throw SolveError("Ritz projection failed in subspace iteration");
    X = Y * es.eigenvectors();
    const VecX cur = es.eigenvalues().head(k);
    if (((cur - prev).cwiseAbs().array() <=
         1e-12 * cur.cwiseAbs().array().max(1e-30))
            .all()) {
      out.omega2 = cur;
      out.Phi = X.leftCols(k);
      return out;
    }
    prev = cur;
  }
  throw SolveError(
      fmt::format("subspace iteration did not converge for {} modes", k));
}

}  // namespace

EigPairs solve_gevp(const SpMat& K, const SpMat& M, int k,
                    int dense_threshold) {
  if (k < 1 || k > K.rows())
    throw SolveError(fmt::format("cannot extract {} modes from size {}", k,
                                 K.rows()));
  if (K.rows() < dense_threshold) return dense_path(K, M, k);
  return subspace_path(K, M, k);
}

}  // namespace dprom
