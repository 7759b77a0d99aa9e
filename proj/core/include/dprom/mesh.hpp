#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dprom/element.hpp"
#include "dprom/types.hpp"

namespace dprom {

// Single-element-kind unstructured mesh with homogeneous material and
// eliminated (not penalized) Dirichlet dofs. Dof numbering is node-major:
// dof = node * dim + component.
struct NominalMesh {
  int dim = 2;
  ElementKind kind = ElementKind::Quad8;
  MatX nodes;                // n_nodes x dim
  Eigen::MatrixXi elements;  // n_elems x nodes_per_element
  std::vector<int> fixed_dofs;
  MaterialParams material;
  double thickness = 1.0;  // out-of-plane width for 2D, both mass and stiffness

  std::vector<int> free_of_dof;  // n_dofs entries, -1 for fixed dofs
  std::vector<int> dof_of_free;

  int n_nodes() const { return static_cast<int>(nodes.rows()); }
  int n_elems() const { return static_cast<int>(elements.rows()); }
  int n_dofs() const { return n_nodes() * dim; }
  int n_free() const { return static_cast<int>(dof_of_free.size()); }

  // Sorts and deduplicates fixed dofs, builds the free-dof maps, validates
  // connectivity. Must be called after any structural edit.
  void finalize();
};

// Clamped-clamped rectangular strip meshed with nx x ny 8-node quads,
// spanning [0, lx] x [0, ty]; both end faces fully fixed.
NominalMesh build_rect_beam_mesh(double lx, double ty, int nx, int ny,
                                 const MaterialParams& mat, double thickness);

// Axis-aligned box of 20-node hexes for composition into multi-box parts.
// All boxes passed to build_hex20_boxes must share the same element size and
// have origins on the common element lattice so coincident faces merge.
struct BoxSpec {
  Vec3 origin = Vec3::Zero();
  int nx = 1, ny = 1, nz = 1;
  Vec3 h = Vec3::Ones();  // element edge lengths
};

NominalMesh build_hex20_boxes(const std::vector<BoxSpec>& boxes,
                              const MaterialParams& mat,
                              const std::function<bool(const VecX&)>& clamped);

// Square proof mass suspended by four in-plane legs, clamped at the outer leg
// faces. A compact stand-in for resonant MEMS-style devices: its two lowest
// in-plane translational modes are degenerate by symmetry, so geometric
// imperfections show up directly as drive/sense coupling.
struct GyroPlateParams {
  double plate_side = 0.010;
  double plate_thick = 0.0005;
  double leg_length = 0.005;
  double leg_width = 0.005;
  int plate_div = 4;  // elements per plate side
  int leg_div = 2;    // elements per leg length
};
NominalMesh build_gyro_plate(const GyroPlateParams& p,
                             const MaterialParams& mat);

// Shifts every node by xi-weighted defect displacements. U has one column per
// defect shape, n_dofs rows.
NominalMesh apply_defect(const NominalMesh& mesh, const MatX& U,
                         const VecX& xi);

// Per-element, per-point quadrature data in the deformed-independent nominal
// configuration. Weights include the Jacobian determinant and, in 2D, the
// out-of-plane thickness.
struct QPoint {
  VecX N;
  MatX dNdx;
  double w = 0.0;
  VecX x;  // world coordinates of the quadrature point
};

struct MeshQuadrature {
  std::vector<std::vector<QPoint>> elems;
};

MeshQuadrature build_quadrature(const NominalMesh& mesh);

// Scatter between free-dof vectors (solver space) and full nodal vectors.
VecX expand_full(const NominalMesh& mesh, const VecX& free_vec);
VecX restrict_free(const NominalMesh& mesh, const VecX& full_vec);

// Element gather of a full-dof vector (node-major component order).
VecX gather_element(const NominalMesh& mesh, const VecX& full, int e);

// Plain-text mesh container; see README for the format.
NominalMesh read_mesh(const std::string& path);
void write_mesh(const NominalMesh& mesh, const std::string& path);

// Stable content hash used to pair tensor snapshots with the mesh they were
// built from.
std::string mesh_hash(const NominalMesh& mesh);

}  // namespace dprom
