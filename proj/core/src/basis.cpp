#include "dprom/basis.hpp"

#include <fmt/format.h>

#include <Eigen/SparseCholesky>
#include <functional>

#include "dprom/assembly.hpp"
#include "dprom/element.hpp"
#include "dprom/strain.hpp"
#include "dprom/voigt.hpp"

namespace dprom {

namespace {

// Curvature coupling matrix: W(n)_{ik} = sum over linear-strain table entries
// (j,i,k,v) of v * n_j. Same object as the geometric stiffness kernel.
MatX curvature_matrix(const VecX& n, int dim) {
  const int g = grad_size(dim);
  MatX W = MatX::Zero(g, g);
  for (const auto& t : l_tables(dim).L1) W(t.l, t.a) += t.v * n(t.j);
  return W;
}

MatX variant_A2(const VecX& theta_d, Variant variant, int dim) {
  if (variant == Variant::N0) return build_A2_N0(theta_d, dim);
  return build_A2_N1(theta_d, dim);
}

using QpIntegrand =
    std::function<MatX(int e, const QPoint& qp, const MatX& G)>;

SpMat assemble_from_qp(const NominalMesh& mesh, const MeshQuadrature& quad,
                       const QpIntegrand& integrand) {
  const int dim = mesh.dim;
  const int ne = element_nodes(mesh.kind) * dim;
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(mesh.n_elems()) * ne * ne);
  MatX Ke(ne, ne);
  for (int e = 0; e < mesh.n_elems(); ++e) {
    Ke.setZero();
    for (const auto& qp : quad.elems[e]) {
      const MatX G = grad_operator(qp.dNdx, dim);
      Ke.noalias() += qp.w * integrand(e, qp, G);
    }
    for (int a = 0; a < ne; ++a) {
      const int fa =
          mesh.free_of_dof[mesh.elements(e, a / dim) * dim + a % dim];
      if (fa < 0) continue;
      for (int b = 0; b < ne; ++b) {
        const int fb =
            mesh.free_of_dof[mesh.elements(e, b / dim) * dim + b % dim];
        if (fb >= 0) trips.emplace_back(fa, fb, Ke(a, b));
      }
    }
  }
  SpMat K(mesh.n_free(), mesh.n_free());
  K.setFromTriplets(trips.begin(), trips.end());
  return K;
}

}  // namespace

SpMat stiffness_mode_derivative(const NominalMesh& mesh,
                                const MeshQuadrature& quad,
                                const VecX& phi_full) {
  const int dim = mesh.dim;
  const MatX C = elasticity_matrix(mesh.material.E, mesh.material.nu, dim);
  const MatX H = voigt_H(dim);
  return assemble_from_qp(mesh, quad, [&](int e, const QPoint& /*qp*/,
                                          const MatX& G) {
    const VecX th = G * gather_element(mesh, phi_full, e);
    const MatX A1 = build_A1(th, dim);
    const MatX W = curvature_matrix(C * (H * th), dim);
    return MatX(G.transpose() *
                (H.transpose() * C * A1 + A1.transpose() * C * H + W) * G);
  });
}

SpMat stiffness_defect_derivative(const NominalMesh& mesh,
                                  const MeshQuadrature& quad,
                                  const VecX& ud_full, Variant variant) {
  const int dim = mesh.dim;
  const MatX C = elasticity_matrix(mesh.material.E, mesh.material.nu, dim);
  const MatX H = voigt_H(dim);
  return assemble_from_qp(
      mesh, quad, [&](int e, const QPoint& /*qp*/, const MatX& G) {
        const MatX A2 = variant_A2(G * gather_element(mesh, ud_full, e),
                                   variant, dim);
        return MatX(G.transpose() *
                    (H.transpose() * C * A2 + A2.transpose() * C * H) * G);
      });
}

SpMat stiffness_mixed_derivative(const NominalMesh& mesh,
                                 const MeshQuadrature& quad,
                                 const VecX& phi_full, const VecX& ud_full,
                                 Variant variant) {
  const int dim = mesh.dim;
  const MatX C = elasticity_matrix(mesh.material.E, mesh.material.nu, dim);
  const MatX H = voigt_H(dim);
  return assemble_from_qp(mesh, quad, [&](int e, const QPoint& /*qp*/,
                                          const MatX& G) {
    const VecX th = G * gather_element(mesh, phi_full, e);
    const VecX td = G * gather_element(mesh, ud_full, e);
    const MatX A1 = build_A1(th, dim);
    const MatX A2 = variant_A2(td, variant, dim);
    MatX B = A2.transpose() * C * A1 + A1.transpose() * C * A2;
    VecX n = C * (A2 * th);
    if (variant == Variant::N1) {
      const MatX A3 = build_A3(td, dim);
      B += 2.0 * A1.transpose() * A3.transpose() * C * H +
           2.0 * H.transpose() * C * A3 * A1;
      n += 2.0 * A3.transpose() * (C * (H * th));
    }
    return MatX(G.transpose() * (B + curvature_matrix(n, dim)) * G);
  });
}

SpMat stiffness_defect2_derivative(const NominalMesh& mesh,
                                   const MeshQuadrature& quad,
                                   const VecX& ud_full_j, const VecX& ud_full_k,
                                   Variant variant) {
  const int dim = mesh.dim;
  const MatX C = elasticity_matrix(mesh.material.E, mesh.material.nu, dim);
  return assemble_from_qp(
      mesh, quad, [&](int e, const QPoint& /*qp*/, const MatX& G) {
        const MatX A2j = variant_A2(G * gather_element(mesh, ud_full_j, e),
                                    variant, dim);
        const MatX A2k = variant_A2(G * gather_element(mesh, ud_full_k, e),
                                    variant, dim);
        return MatX(G.transpose() *
                    (A2j.transpose() * C * A2k + A2k.transpose() * C * A2j) *
                    G);
      });
}

struct BasisBuilder::Impl {
  SpMat K0;
  SpMat M;
  Eigen::SimplicialLDLT<SpMat> ldlt;
  EigPairs eig;
  int n_eig = 0;
  std::map<int, SpMat> dK_eta;    // by mode index
  std::map<int, SpMat> dK_xi;     // by defect index
  std::map<std::pair<int, int>, VecX> md;  // i <= j
};

BasisBuilder::BasisBuilder(const NominalMesh& mesh, const MeshQuadrature& quad,
                           const DefectBasis* defects, Variant variant)
    : mesh_(mesh), quad_(quad), defects_(defects), variant_(variant),
      impl_(std::make_unique<Impl>()) {
  impl_->K0 = assemble_linear_stiffness(mesh, quad);
  impl_->M = assemble_mass(mesh, quad);
  impl_->ldlt.compute(impl_->K0);
  if (impl_->ldlt.info() != Eigen::Success)
    throw SolveError("nominal stiffness factorization failed");
}

BasisBuilder::~BasisBuilder() = default;

const EigPairs& BasisBuilder::modes(int n) {
  if (n > impl_->n_eig) {
    impl_->eig = solve_gevp(impl_->K0, impl_->M, n);
    impl_->n_eig = n;
  }
  return impl_->eig;
}

VecX BasisBuilder::modal_derivative(int i, int j) {
  if (i > j) std::swap(i, j);
  const auto key = std::make_pair(i, j);
  auto it = impl_->md.find(key);
  if (it != impl_->md.end()) return it->second;
  modes(std::max(i, j) + 1);
  if (!impl_->dK_eta.count(j)) {
    const VecX phi_full = expand_full(mesh_, impl_->eig.Phi.col(j));
    impl_->dK_eta.emplace(j, stiffness_mode_derivative(mesh_, quad_, phi_full));
  }
  const VecX rhs = impl_->dK_eta.at(j) * impl_->eig.Phi.col(i);
  VecX th = -impl_->ldlt.solve(rhs);
  impl_->md.emplace(key, th);
  return th;
}

VecX BasisBuilder::defect_sensitivity(int i, int d) {
  if (!defects_) throw Error("no defect basis attached to this builder");
  modes(i + 1);
  if (!impl_->dK_xi.count(d))
    impl_->dK_xi.emplace(
        d, stiffness_defect_derivative(mesh_, quad_, defects_->U.col(d),
                                       variant_));
  return -impl_->ldlt.solve(impl_->dK_xi.at(d) * impl_->eig.Phi.col(i));
}

VecX BasisBuilder::modal_derivative_sensitivity(int i, int j, int d) {
  if (!defects_) throw Error("no defect basis attached to this builder");
  modes(std::max(i, j) + 1);
  const VecX th_ij = modal_derivative(i, j);
  const VecX xi_id = defect_sensitivity(i, d);
  if (!impl_->dK_eta.count(j)) {
    const VecX phi_full = expand_full(mesh_, impl_->eig.Phi.col(j));
    impl_->dK_eta.emplace(j, stiffness_mode_derivative(mesh_, quad_, phi_full));
  }
  const SpMat mixed = stiffness_mixed_derivative(
      mesh_, quad_, expand_full(mesh_, impl_->eig.Phi.col(j)),
      defects_->U.col(d), variant_);
  const VecX rhs = impl_->dK_xi.at(d) * th_ij + mixed * impl_->eig.Phi.col(i) +
                   impl_->dK_eta.at(j) * xi_id;
  return -impl_->ldlt.solve(rhs);
}

VecX BasisBuilder::second_defect_sensitivity(int i, int d1, int d2) {
  if (!defects_) throw Error("no defect basis attached to this builder");
  modes(i + 1);
  const VecX xi_1 = defect_sensitivity(i, d1);
  const VecX xi_2 = defect_sensitivity(i, d2);
  const SpMat dd = stiffness_defect2_derivative(
      mesh_, quad_, defects_->U.col(d1), defects_->U.col(d2), variant_);
  const VecX rhs = impl_->dK_xi.at(d2) * xi_1 + dd * impl_->eig.Phi.col(i) +
                   impl_->dK_xi.at(d1) * xi_2;
  return -impl_->ldlt.solve(rhs);
}

ReductionBasis build_basis(const NominalMesh& mesh, const MeshQuadrature& quad,
                           const DefectBasis* defects,
                           const BasisRecipe& recipe, Variant variant) {
  BasisBuilder bb(mesh, quad, defects, variant);
  const int nm = recipe.n_modes;
  const int nd = defects ? defects->count() : 0;
  const auto& eig = bb.modes(nm);

  std::vector<std::pair<std::string, VecX>> cols;
  for (int i = 0; i < nm; ++i)
    cols.emplace_back(fmt::format("vm{}", i + 1), eig.Phi.col(i));
  if (recipe.modal_derivatives)
    for (int i = 0; i < nm; ++i)
      for (int j = i; j < nm; ++j)
        cols.emplace_back(fmt::format("md{}_{}", i + 1, j + 1),
                          bb.modal_derivative(i, j));
  if (recipe.defect_sensitivities && nd > 0)
    for (int d = 0; d < nd; ++d)
      for (int i = 0; i < nm; ++i)
        cols.emplace_back(fmt::format("ds{}_d{}", i + 1, d + 1),
                          bb.defect_sensitivity(i, d));
  if (recipe.md_sensitivities && nd > 0)
    for (int d = 0; d < nd; ++d)
      for (int i = 0; i < nm; ++i)
        for (int j = 0; j < nm; ++j)
          cols.emplace_back(fmt::format("mds{}_{}_d{}", i + 1, j + 1, d + 1),
                            bb.modal_derivative_sensitivity(i, j, d));
  if (recipe.second_order_defect && nd > 0)
    for (int d1 = 0; d1 < nd; ++d1)
      for (int d2 = d1; d2 < nd; ++d2)
        for (int i = 0; i < nm; ++i)
          cols.emplace_back(
              fmt::format("ds2_{}_d{}d{}", i + 1, d1 + 1, d2 + 1),
              bb.second_defect_sensitivity(i, d1, d2));

  ReductionBasis out;
  std::vector<VecX> kept;
  for (auto& [label, v] : cols) {
    const double nrm = v.norm();
    if (!(nrm > 0.0) || !std::isfinite(nrm)) {
      out.dropped.push_back(label);
      continue;
    }
    VecX u = v / nrm;
    bool dup = false;
    for (const auto& k : kept)
      if (std::abs(k.dot(u)) > 1.0 - recipe.dedup_tol) {
        dup = true;
        break;
      }
    if (dup) {
      out.dropped.push_back(label);
      fmt::print(stderr, "warning: dropping nearly dependent basis vector {}\n",
                 label);
      continue;
    }
    kept.push_back(std::move(u));
    out.labels.push_back(label);
  }
  out.V.resize(mesh.n_free(), static_cast<int>(kept.size()));
  for (std::size_t c = 0; c < kept.size(); ++c)
    out.V.col(static_cast<int>(c)) = kept[c];
  return out;
}

}  // namespace dprom
