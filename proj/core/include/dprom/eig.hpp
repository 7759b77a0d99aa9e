#pragma once

#include "dprom/types.hpp"

namespace dprom {

// Lowest eigenpairs of K phi = omega^2 M phi with K, M symmetric and K
// positive definite (constrained structure). Eigenvectors come back
// mass-normalized, eigenvalues ascending. Small problems go through a dense
// solve; larger ones through shift-invert subspace iteration with a
// deterministic seeded start block.
struct EigPairs {
  VecX omega2;
  MatX Phi;
};

EigPairs solve_gevp(const SpMat& K, const SpMat& M, int k,
                    int dense_threshold = 2000);

}  // namespace dprom
