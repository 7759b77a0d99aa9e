#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dprom/defects.hpp"
#include "dprom/eig.hpp"
#include "dprom/mesh.hpp"
#include "dprom/types.hpp"

namespace dprom {

// Directional derivatives of the tangent stiffness at zero displacement and
// zero defect, assembled on free dofs. phi / ud arguments are full-dof
// vectors (mode shapes, defect shapes).
SpMat stiffness_mode_derivative(const NominalMesh& mesh,
                                const MeshQuadrature& quad,
                                const VecX& phi_full);
SpMat stiffness_defect_derivative(const NominalMesh& mesh,
                                  const MeshQuadrature& quad,
                                  const VecX& ud_full, Variant variant);
SpMat stiffness_mixed_derivative(const NominalMesh& mesh,
                                 const MeshQuadrature& quad,
                                 const VecX& phi_full, const VecX& ud_full,
                                 Variant variant);
SpMat stiffness_defect2_derivative(const NominalMesh& mesh,
                                   const MeshQuadrature& quad,
                                   const VecX& ud_full_j, const VecX& ud_full_k,
                                   Variant variant);

// Builds vibration modes and their static corrections for displacement and
// defect directions, reusing one factorization of the nominal stiffness.
class BasisBuilder {
 public:
  BasisBuilder(const NominalMesh& mesh, const MeshQuadrature& quad,
               const DefectBasis* defects = nullptr,
               Variant variant = Variant::N1);
  ~BasisBuilder();

  const EigPairs& modes(int n);

  // Static modal derivative, symmetric in the two mode indices.
  VecX modal_derivative(int i, int j);
  // First-order change of mode i under defect d.
  VecX defect_sensitivity(int i, int d);
  // Defect sensitivity of the modal derivative; not symmetric in (i, j).
  VecX modal_derivative_sensitivity(int i, int j, int d);
  // Second-order defect correction, symmetric in the two defect indices.
  VecX second_defect_sensitivity(int i, int d1, int d2);

  const NominalMesh& mesh() const { return mesh_; }

 private:
  struct Impl;
  const NominalMesh& mesh_;
  const MeshQuadrature& quad_;
  const DefectBasis* defects_;
  Variant variant_;
  std::unique_ptr<Impl> impl_;
};

struct BasisRecipe {
  int n_modes = 5;
  bool modal_derivatives = true;
  bool defect_sensitivities = true;
  bool md_sensitivities = false;
  bool second_order_defect = false;
  double dedup_tol = 1e-8;  // drop columns with |cos| > 1 - tol to kept ones
};

struct ReductionBasis {
  MatX V;  // free dofs x m, unit Euclidean columns
  std::vector<std::string> labels;
  std::vector<std::string> dropped;
};

ReductionBasis build_basis(const NominalMesh& mesh, const MeshQuadrature& quad,
                           const DefectBasis* defects,
                           const BasisRecipe& recipe,
                           Variant variant = Variant::N1);

}  // namespace dprom
