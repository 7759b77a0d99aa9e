#pragma once

#include "dprom/mesh.hpp"
#include "dprom/types.hpp"

namespace dprom {

// Consistent mass on free dofs.
SpMat assemble_mass(const NominalMesh& mesh, const MeshQuadrature& quad);

// Small-strain stiffness on free dofs (tangent at zero displacement, no
// defect).
SpMat assemble_linear_stiffness(const NominalMesh& mesh,
                                const MeshQuadrature& quad);

struct ForceTangent {
  VecX f;
  SpMat K;
};

// Internal force of the chosen strain variant, with the defect field U*xi
// entering through the strain operators while the mesh stays nominal. U has
// full-dof rows; u is on free dofs. With QuadDomain::Defected the quadrature
// weights carry the determinant of the defect deformation gradient, i.e. the
// integral runs over the defected volume.
VecX assemble_force(const NominalMesh& mesh, const MeshQuadrature& quad,
                    const VecX& u_free, const MatX& U, const VecX& xi,
                    Variant variant, QuadDomain domain);

ForceTangent assemble_force_tangent(const NominalMesh& mesh,
                                    const MeshQuadrature& quad,
                                    const VecX& u_free, const MatX& U,
                                    const VecX& xi, Variant variant,
                                    QuadDomain domain);

// Classical total-Lagrangian force/tangent on the mesh as given (use a
// node-shifted mesh for the defected reference model).
VecX fom_force(const NominalMesh& mesh, const MeshQuadrature& quad,
               const VecX& u_free);
ForceTangent fom_force_tangent(const NominalMesh& mesh,
                               const MeshQuadrature& quad, const VecX& u_free);

// Per-quadrature-point kernels, exposed for tests and benchmarks. Both
// accumulate into fe / Ke (Ke may be null).
void variant_qp_kernel(const MatX& C, const MatX& G, const VecX& theta,
                       const VecX& theta_d, double w, Variant variant,
                       QuadDomain domain, int dim, VecX& fe, MatX* Ke);
void exact_qp_kernel(const MatX& C, const MatX& dNdx, const VecX& ue,
                     const VecX& ud, double w, QuadDomain domain, int dim,
                     VecX& fe, MatX* Ke);

// Mass-proportional and stiffness-proportional damping coefficients giving
// modal damping 1/(2Q) at both circular frequencies.
std::pair<double, double> rayleigh_from_quality(double quality, double omega1,
                                                double omega2);

}  // namespace dprom
