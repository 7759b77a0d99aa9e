#pragma once

#include "dprom/types.hpp"

namespace dprom {

// Row-major flattening of a displacement gradient and its inverse.
VecX vec_gradient(const MatX& D);
MatX unvec_gradient(const VecX& theta, int dim);

// Voigt strain vector of a symmetric tensor, engineering shear convention.
VecX voigt_strain(const MatX& S);

// Green-Lagrange strain of the deformation mapping the defected configuration
// to the deformed one, with both displacement gradients taken with respect to
// nominal coordinates. D is the displacement gradient, Dd the defect gradient.
VecX exact_strain(const MatX& D, const MatX& Dd);

// Strain under the chosen polynomial approximation of the defect kinematics.
VecX approx_strain(const VecX& theta, const VecX& theta_d, Variant variant,
                   int dim);

// Error of truncating the inverse defect deformation gradient after N terms
// of its geometric series, together with the guaranteed a-priori bound
// eps^(N+1) / (1 - eps), valid for eps = ||Dd||_2 < 1.
struct NeumannCheck {
  double eps = 0.0;        // spectral norm of the defect gradient
  double delta_N = 0.0;    // actual truncation error, spectral norm
  double delta_lim = 0.0;  // a-priori bound
};
NeumannCheck neumann_bound(const MatX& Dd, int N);

}  // namespace dprom
