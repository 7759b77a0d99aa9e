#include "dprom/strain.hpp"

#include <Eigen/SVD>

#include "dprom/voigt.hpp"

namespace dprom {

VecX vec_gradient(const MatX& D) {
  const int dim = static_cast<int>(D.rows());
  VecX theta(dim * dim);
  for (int c = 0; c < dim; ++c)
    for (int d = 0; d < dim; ++d) theta(c * dim + d) = D(c, d);
  return theta;
}

MatX unvec_gradient(const VecX& theta, int dim) {
  MatX D(dim, dim);
  for (int c = 0; c < dim; ++c)
    for (int d = 0; d < dim; ++d) D(c, d) = theta(c * dim + d);
  return D;
}

VecX voigt_strain(const MatX& S) {
  const int dim = static_cast<int>(S.rows());
  if (dim == 2) {
    VecX e(3);
    e << S(0, 0), S(1, 1), S(0, 1) + S(1, 0);
    return e;
  }
  VecX e(6);
  e << S(0, 0), S(1, 1), S(2, 2), S(0, 1) + S(1, 0), S(0, 2) + S(2, 0),
      S(1, 2) + S(2, 1);
  return e;
}

VecX exact_strain(const MatX& D, const MatX& Dd) {
  const int dim = static_cast<int>(D.rows());
  const MatX I = MatX::Identity(dim, dim);
  const MatX F1 = I + Dd;
  const MatX F2 = I + D * F1.inverse();
  const MatX E = 0.5 * (F2.transpose() * F2 - I);
  return voigt_strain(E);
}

VecX approx_strain(const VecX& theta, const VecX& theta_d, Variant variant,
                   int dim) {
  if (variant == Variant::Exact)
    return exact_strain(unvec_gradient(theta, dim),
                        unvec_gradient(theta_d, dim));
  const MatX H = voigt_H(dim);
  const MatX A1 = build_A1(theta, dim);
  VecX E = H * theta + 0.5 * A1 * theta;
  switch (variant) {
    case Variant::N0:
      E += build_A2_N0(theta_d, dim) * theta;
      break;
    case Variant::N1t:
      E += build_A2_N1(theta_d, dim) * theta;
      break;
    case Variant::N1:
      E += build_A2_N1(theta_d, dim) * theta +
           build_A3(theta_d, dim) * (A1 * theta);
      break;
    case Variant::Exact:
      break;
  }
  return E;
}

NeumannCheck neumann_bound(const MatX& Dd, int N) {
  const int dim = static_cast<int>(Dd.rows());
  const MatX I = MatX::Identity(dim, dim);
  NeumannCheck out;
  out.eps = Dd.jacobiSvd().singularValues()(0);
  MatX partial = MatX::Zero(dim, dim);
  MatX term = I;
  for (int n = 0; n <= N; ++n) {
    partial += term;
    term = term * (-Dd);
  }
  const MatX err = (I + Dd).inverse() - partial;
  out.delta_N = err.jacobiSvd().singularValues()(0);
  out.delta_lim = std::pow(out.eps, N + 1) / (1.0 - out.eps);
  return out;
}

}  // namespace dprom
