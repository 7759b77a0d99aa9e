#include "dprom/assembly.hpp"

#include "dprom/strain.hpp"
#include "dprom/voigt.hpp"

namespace dprom {

namespace {

// Scatters the free-dof part of an element vector/matrix into the global
// accumulators, dropping rows and columns of eliminated dofs.
void scatter_element(const NominalMesh& mesh, int e, const VecX* fe,
                     const MatX* Ke, VecX* f, std::vector<Triplet>* trips) {
  const int nen = element_nodes(mesh.kind);
  const int dim = mesh.dim;
  for (int a = 0; a < nen * dim; ++a) {
    const int ga = mesh.elements(e, a / dim) * dim + a % dim;
    const int fa = mesh.free_of_dof[ga];
    if (fa < 0) continue;
    if (fe) (*f)(fa) += (*fe)(a);
    if (Ke)
      for (int b = 0; b < nen * dim; ++b) {
        const int gb = mesh.elements(e, b / dim) * dim + b % dim;
        const int fb = mesh.free_of_dof[gb];
        if (fb >= 0) trips->emplace_back(fa, fb, (*Ke)(a, b));
      }
  }
}

}  // namespace

void variant_qp_kernel(const MatX& C, const MatX& G, const VecX& theta,
                       const VecX& theta_d, double w, Variant variant,
                       QuadDomain domain, int dim, VecX& fe, MatX* Ke) {
  const MatX H = voigt_H(dim);
  const MatX A1 = build_A1(theta, dim);
  const int s = voigt_size(dim);
  MatX A2 = MatX::Zero(s, grad_size(dim));
  MatX A3 = MatX::Zero(s, s);
  switch (variant) {
    case Variant::N0:
      A2 = build_A2_N0(theta_d, dim);
      break;
    case Variant::N1t:
      A2 = build_A2_N1(theta_d, dim);
      break;
    case Variant::N1:
      A2 = build_A2_N1(theta_d, dim);
      A3 = build_A3(theta_d, dim);
      break;
    case Variant::Exact:
      throw Error("variant_qp_kernel does not handle the exact strain");
  }
  if (domain == QuadDomain::Defected)
    w *= (MatX::Identity(dim, dim) + unvec_gradient(theta_d, dim))
             .determinant();

  const MatX A3A1 = A3 * A1;
  const VecX E = H * theta + 0.5 * A1 * theta + A2 * theta + A3A1 * theta;
  const VecX S = C * E;
  const MatX Bv = H + A1 + A2 + 2.0 * A3A1;

  fe.noalias() += w * G.transpose() * (Bv.transpose() * S);
  if (Ke) {
    const MatX BvG = Bv * G;
    Ke->noalias() += w * BvG.transpose() * C * BvG;
    // Geometric part: stress contraction with the strain operator curvature.
    const VecX Nbar = S + 2.0 * A3.transpose() * S;
    const int g = grad_size(dim);
    MatX W = MatX::Zero(g, g);
    for (const auto& t : l_tables(dim).L1) W(t.l, t.a) += t.v * Nbar(t.j);
    Ke->noalias() += w * G.transpose() * W * G;
  }
}

void exact_qp_kernel(const MatX& C, const MatX& dNdx, const VecX& ue,
                     const VecX& ud, double w, QuadDomain domain, int dim,
                     VecX& fe, MatX* Ke) {
  const int nen = static_cast<int>(dNdx.rows());
  const MatX I = MatX::Identity(dim, dim);

  MatX Ue(nen, dim), Ud(nen, dim);
  for (int a = 0; a < nen; ++a)
    for (int c = 0; c < dim; ++c) {
      Ue(a, c) = ue(a * dim + c);
      Ud(a, c) = ud(a * dim + c);
    }
  const MatX Dd = Ud.transpose() * dNdx;
  const MatX F1 = I + Dd;
  const MatX dNdx1 = dNdx * F1.inverse();
  const MatX F2 = I + Ue.transpose() * dNdx1;
  if (domain == QuadDomain::Defected) w *= F1.determinant();

  const MatX Egl = 0.5 * (F2.transpose() * F2 - I);
  const VecX E = voigt_strain(Egl);
  const VecX S = C * E;

  const int ne = nen * dim;
  MatX B(voigt_size(dim), ne);
  for (int a = 0; a < nen; ++a)
    for (int c = 0; c < dim; ++c)
      B.col(a * dim + c) =
          voigt_strain(F2.row(c).transpose() * dNdx1.row(a));

  fe.noalias() += w * B.transpose() * S;
  if (Ke) {
    Ke->noalias() += w * B.transpose() * C * B;
    MatX Smat(dim, dim);
    if (dim == 2)
      Smat << S(0), S(2), S(2), S(1);
    else
      Smat << S(0), S(3), S(4), S(3), S(1), S(5), S(4), S(5), S(2);
    const MatX gSg = dNdx1 * Smat * dNdx1.transpose();
    for (int a = 0; a < nen; ++a)
      for (int b = 0; b < nen; ++b) {
        const double v = w * gSg(a, b);
        for (int c = 0; c < dim; ++c) (*Ke)(a * dim + c, b * dim + c) += v;
      }
  }
}

namespace {

ForceTangent assemble_impl(const NominalMesh& mesh, const MeshQuadrature& quad,
                           const VecX& u_free, const MatX& U, const VecX& xi,
                           Variant variant, QuadDomain domain,
                           bool want_tangent) {
  const int dim = mesh.dim;
  const int nen = element_nodes(mesh.kind);
  const int ne = nen * dim;
  const MatX C = elasticity_matrix(mesh.material.E, mesh.material.nu, dim);
  const VecX u_full = expand_full(mesh, u_free);
  const bool has_defect = U.cols() > 0 && xi.size() > 0;
  VecX ud_full;
  if (has_defect) {
    if (U.rows() != mesh.n_dofs())
      throw MeshError("defect basis row count does not match mesh dofs");
    ud_full = U * xi;
  } else {
    ud_full = VecX::Zero(mesh.n_dofs());
  }

  ForceTangent out;
  out.f = VecX::Zero(mesh.n_free());
  std::vector<Triplet> trips;
  if (want_tangent) trips.reserve(static_cast<std::size_t>(mesh.n_elems()) * ne * ne);

  VecX fe(ne);
  MatX Ke(ne, ne);
  for (int e = 0; e < mesh.n_elems(); ++e) {
    const VecX ue = gather_element(mesh, u_full, e);
    const VecX ud = gather_element(mesh, ud_full, e);
    fe.setZero();
    if (want_tangent) Ke.setZero();
    for (const auto& qp : quad.elems[e]) {
      if (variant == Variant::Exact) {
        exact_qp_kernel(C, qp.dNdx, ue, ud, qp.w, domain, dim, fe,
                        want_tangent ? &Ke : nullptr);
      } else {
        const MatX G = grad_operator(qp.dNdx, dim);
        variant_qp_kernel(C, G, G * ue, G * ud, qp.w, variant, domain, dim, fe,
                          want_tangent ? &Ke : nullptr);
      }
    }
    scatter_element(mesh, e, &fe, want_tangent ? &Ke : nullptr, &out.f,
                    &trips);
  }
  if (want_tangent) {
    out.K.resize(mesh.n_free(), mesh.n_free());
    out.K.setFromTriplets(trips.begin(), trips.end());
  }
  return out;
}

}  // namespace

VecX assemble_force(const NominalMesh& mesh, const MeshQuadrature& quad,
                    const VecX& u_free, const MatX& U, const VecX& xi,
                    Variant variant, QuadDomain domain) {
  return assemble_impl(mesh, quad, u_free, U, xi, variant, domain, false).f;
}

ForceTangent assemble_force_tangent(const NominalMesh& mesh,
                                    const MeshQuadrature& quad,
                                    const VecX& u_free, const MatX& U,
                                    const VecX& xi, Variant variant,
                                    QuadDomain domain) {
  return assemble_impl(mesh, quad, u_free, U, xi, variant, domain, true);
}

VecX fom_force(const NominalMesh& mesh, const MeshQuadrature& quad,
               const VecX& u_free) {
  return assemble_force(mesh, quad, u_free, MatX(), VecX(), Variant::Exact,
                        QuadDomain::Nominal);
}

ForceTangent fom_force_tangent(const NominalMesh& mesh,
                               const MeshQuadrature& quad,
                               const VecX& u_free) {
  return assemble_force_tangent(mesh, quad, u_free, MatX(), VecX(),
                                Variant::Exact, QuadDomain::Nominal);
}

SpMat assemble_mass(const NominalMesh& mesh, const MeshQuadrature& quad) {
  const int dim = mesh.dim;
  const int nen = element_nodes(mesh.kind);
  const double rho = mesh.material.rho;
  std::vector<Triplet> trips;
  MatX Me(nen * dim, nen * dim);
  for (int e = 0; e < mesh.n_elems(); ++e) {
    Me.setZero();
    for (const auto& qp : quad.elems[e]) {
      for (int a = 0; a < nen; ++a)
        for (int b = 0; b < nen; ++b) {
          const double v = rho * qp.w * qp.N(a) * qp.N(b);
          for (int c = 0; c < dim; ++c) Me(a * dim + c, b * dim + c) += v;
        }
    }
    VecX dummy;
    scatter_element(mesh, e, nullptr, &Me, &dummy, &trips);
  }
  SpMat M(mesh.n_free(), mesh.n_free());
  M.setFromTriplets(trips.begin(), trips.end());
  return M;
}

SpMat assemble_linear_stiffness(const NominalMesh& mesh,
                                const MeshQuadrature& quad) {
  return fom_force_tangent(mesh, quad, VecX::Zero(mesh.n_free())).K;
}

std::pair<double, double> rayleigh_from_quality(double quality, double omega1,
                                                double omega2) {
  const double zeta = 1.0 / (2.0 * quality);
  const double alpha = 2.0 * zeta * omega1 * omega2 / (omega1 + omega2);
  const double beta = 2.0 * zeta / (omega1 + omega2);
  return {alpha, beta};
}

}  // namespace dprom
