#pragma once

#include <vector>

#include "dprom/types.hpp"

namespace dprom {

// Voigt order: 2D {E11, E22, 2*E12}; 3D {E11, E22, E33, 2*E12, 2*E13, 2*E23}.
// Shear entries carry the engineering factor 2 so that Voigt dot products
// reproduce tensor contractions with the standard isotropic C matrix.
//
// Displacement gradients are flattened row-major: 2D {u,x u,y v,x v,y},
// 3D {u,x u,y u,z v,x v,y v,z w,x w,y w,z}.

inline int voigt_size(int dim) { return dim == 2 ? 3 : 6; }
inline int grad_size(int dim) { return dim * dim; }

// Sparse coefficient tables for the strain operators, all 0-based and with
// positive values; the sign of each operator lives in the builder functions
// below. X(theta)_{jl} = sum_a T_{jla} theta_a for the 3-index tables, and
// (A3(td) A1(t))_{jl} = -sum_{ab} T3_{jlab} t_a td_b for the 4-index table.
struct L3Entry {
  int j, l, a;
  double v;
};
struct L4Entry {
  int j, l, a, b;
  double v;
};

struct LTables {
  int dim = 0;
  std::vector<L3Entry> L1;  // linear strain operator, also A1's coefficients
  std::vector<L3Entry> L2;  // defect coupling of the first-order expansion
  std::vector<L4Entry> L3;  // mixed defect-displacement quadratic coupling
};

const LTables& l_tables(int dim);

// s x g matrix picking the symmetric part of the displacement gradient.
MatX voigt_H(int dim);

// A1(t)_{jl} = +sum_a L1_{jla} t_a; voigt(sym(D^T X)) = A1(theta(D)) theta(X).
MatX build_A1(const VecX& theta, int dim);

// First-order defect coupling, A2(td) = -L2 . td. With this operator the
// strain (H + A1/2 + A2 + A3 A1) theta matches the expansion of the two-step
// Green-Lagrange strain through first order in the defect gradient.
MatX build_A2_N1(const VecX& theta_d, int dim);

// The classical shallow-defect coupling keeps the defect term symmetric in
// displacement and defect gradients, which makes it +A1 evaluated at theta_d.
MatX build_A2_N0(const VecX& theta_d, int dim);

// Quadratic mixed coupling; applied as A3(td) * A1(t) in the strain.
MatX build_A3(const VecX& theta_d, int dim);

// Isotropic elasticity in Voigt form; 2D is plane strain.
MatX elasticity_matrix(double E, double nu, int dim);

}  // namespace dprom
