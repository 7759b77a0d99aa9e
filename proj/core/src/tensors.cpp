#include "dprom/tensors.hpp"

#include <fmt/format.h>

#include "dprom/assembly.hpp"
#include "dprom/element.hpp"
#include "dprom/voigt.hpp"

namespace dprom {

void QSet::resize(int m, int md) {
  Q2n = MatX::Zero(m, m);
  Q3d.resize({m, m, md});
  Q4dd.resize({m, m, md, md});
  Q3n.resize({m, m, m});
  Q4d.resize({m, m, m, md});
  Q5dd.resize({m, m, m, md, md});
  Q4n.resize({m, m, m, m});
  Q5d.resize({m, m, m, m, md});
  Q6dd.resize({m, m, m, m, md, md});
}

namespace {

// Quadrature-point factors of the reduced strain operators. With basis
// gradients Gamma = G V_e and defect gradients Ups = G U_e, each factor is a
// Voigt-row by flattened-mode-column matrix so the nine tensors reduce to
// plain matrix products accumulated over quadrature points.
struct QpFactors {
  MatX HG;   // s x m
  MatX T1;   // s x m^2        columns (P,Q) -> P + m Q
  MatX S2;   // s x m*md       columns (I,K) -> I + m K
  MatX S3;   // s x m^2*md     columns (P,Q,K) -> P + m Q + m^2 K
};

using StridedMap =
    Eigen::Map<MatX, 0, Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>>;

// Views row j of a column-major (s x cols) factor matrix as a (r x c) block
// whose flattened column index is the factor's column index.
StridedMap row_as_matrix(MatX& F, int j, int r, int c) {
  const auto s = F.rows();
  return StridedMap(F.data() + j, r, c,
                    Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>(s * r, s));
}

void build_factors(const MatX& Gamma, const MatX& Ups, const MatX& H,
                   Variant variant, int dim, bool want_s3, QpFactors& f) {
  const auto& tab = l_tables(dim);
  const int s = voigt_size(dim);
  const int m = static_cast<int>(Gamma.cols());
  const int md = static_cast<int>(Ups.cols());

  f.HG.noalias() = H * Gamma;

  f.T1.setZero(s, m * m);
  for (const auto& t : tab.L1)
    row_as_matrix(f.T1, t.j, m, m).noalias() +=
        t.v * (Gamma.row(t.l).transpose() * Gamma.row(t.a));

  if (md > 0) {
    f.S2.setZero(s, m * md);
    // The shallow-defect coupling is symmetric in displacement and defect
    // gradients, so it reuses the linear-strain table with positive sign;
    // the first-order expansion couples through its own table with the
    // opposite sign.
    if (variant == Variant::N0) {
      for (const auto& t : tab.L1)
        row_as_matrix(f.S2, t.j, m, md).noalias() +=
            t.v * (Gamma.row(t.l).transpose() * Ups.row(t.a));
    } else {
      for (const auto& t : tab.L2)
        row_as_matrix(f.S2, t.j, m, md).noalias() -=
            t.v * (Gamma.row(t.l).transpose() * Ups.row(t.a));
    }
    if (want_s3) {
      f.S3.setZero(s, m * m * md);
      for (const auto& t : tab.L3) {
        const MatX outer = Gamma.row(t.l).transpose() * Gamma.row(t.a);
        for (int K = 0; K < md; ++K) {
          StridedMap blk(f.S3.data() + t.j + static_cast<long>(s) * m * m * K,
                         m, m,
                         Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>(
                             static_cast<long>(s) * m, s));
          blk.noalias() += (-t.v * Ups(t.b, K)) * outer;
        }
      }
    }
  }
}

struct AccSet {
  MatX a2;                      // HG' C HG
  MatX a3n_a, a3n_b;            // HG' C T1, T1' C HG
  MatX a4n;                     // T1' C T1
  MatX a3d_a, a3d_b;            // HG' C S2, S2' C HG
  MatX a4dd;                    // S2' C S2
  MatX a4d_a, a4d_b;            // S2' C T1, T1' C S2
  MatX a4d_c, a4d_d;            // S3' C HG, HG' C S3
  MatX a5dd_a, a5dd_b;          // S3' C S2, S2' C S3
  MatX a5d_a, a5d_b;            // T1' C S3, S3' C T1
  MatX a6;                      // S3' C S3

  void resize(int m, int md, bool defects, bool s3) {
    const int m2 = m * m, mmd = m * md, m2md = m * m * md;
    a2 = MatX::Zero(m, m);
    a3n_a = MatX::Zero(m, m2);
    a3n_b = MatX::Zero(m2, m);
    a4n = MatX::Zero(m2, m2);
    if (defects) {
      a3d_a = MatX::Zero(m, mmd);
      a3d_b = MatX::Zero(mmd, m);
      a4dd = MatX::Zero(mmd, mmd);
      a4d_a = MatX::Zero(mmd, m2);
      a4d_b = MatX::Zero(m2, mmd);
      if (s3) {
        a4d_c = MatX::Zero(m2md, m);
        a4d_d = MatX::Zero(m, m2md);
        a5dd_a = MatX::Zero(m2md, mmd);
        a5dd_b = MatX::Zero(mmd, m2md);
        a5d_a = MatX::Zero(m2, m2md);
        a5d_b = MatX::Zero(m2md, m2);
        a6 = MatX::Zero(m2md, m2md);
      }
    }
  }

  void add(double w, const QpFactors& f, const MatX& CHG, const MatX& CT1,
           const MatX& CS2, const MatX& CS3, bool defects, bool s3) {
    a2.noalias() += w * f.HG.transpose() * CHG;
    a3n_a.noalias() += w * f.HG.transpose() * CT1;
    a3n_b.noalias() += w * f.T1.transpose() * CHG;
    a4n.noalias() += w * f.T1.transpose() * CT1;
    if (!defects) return;
    a3d_a.noalias() += w * f.HG.transpose() * CS2;
    a3d_b.noalias() += w * f.S2.transpose() * CHG;
    a4dd.noalias() += w * f.S2.transpose() * CS2;
    a4d_a.noalias() += w * f.S2.transpose() * CT1;
    a4d_b.noalias() += w * f.T1.transpose() * CS2;
    if (!s3) return;
    a4d_c.noalias() += w * f.S3.transpose() * CHG;
    a4d_d.noalias() += w * f.HG.transpose() * CS3;
    a5dd_a.noalias() += w * f.S3.transpose() * CS2;
    a5dd_b.noalias() += w * f.S2.transpose() * CS3;
    a5d_a.noalias() += w * f.T1.transpose() * CS3;
    a5d_b.noalias() += w * f.S3.transpose() * CT1;
    a6.noalias() += w * f.S3.transpose() * CS3;
  }
};

void scatter(const AccSet& a, int m, int md, bool defects, bool s3, QSet& q) {
  q.resize(m, md);
  const int m2 = m * m;
  q.Q2n = a.a2;
  for (int K = 0; K < m; ++K)
    for (int J = 0; J < m; ++J)
      for (int I = 0; I < m; ++I)
        q.Q3n(I, J, K) = 0.5 * a.a3n_a(I, J + m * K) + a.a3n_b(I + m * K, J);
  for (int L = 0; L < m; ++L)
    for (int K = 0; K < m; ++K)
      for (int J = 0; J < m; ++J)
        for (int I = 0; I < m; ++I)
          q.Q4n(I, J, K, L) = 0.5 * a.a4n(I + m * K, J + m * L);
  if (!defects) return;
  for (int K = 0; K < md; ++K)
    for (int J = 0; J < m; ++J)
      for (int I = 0; I < m; ++I)
        q.Q3d(I, J, K) = a.a3d_a(I, J + m * K) + a.a3d_b(I + m * K, J);
  for (int L = 0; L < md; ++L)
    for (int K = 0; K < md; ++K)
      for (int J = 0; J < m; ++J)
        for (int I = 0; I < m; ++I)
          q.Q4dd(I, J, K, L) = a.a4dd(I + m * K, J + m * L);
  for (int L = 0; L < md; ++L)
    for (int K = 0; K < m; ++K)
      for (int J = 0; J < m; ++J)
        for (int I = 0; I < m; ++I) {
          double v = 0.5 * a.a4d_a(I + m * L, J + m * K) +
                     a.a4d_b(I + m * K, J + m * L);
          if (s3)
            v += 2.0 * a.a4d_c(I + m * K + m2 * L, J) +
                 a.a4d_d(I, J + m * K + m2 * L);
          q.Q4d(I, J, K, L) = v;
        }
  if (!s3) return;
  for (int M = 0; M < md; ++M)
    for (int L = 0; L < md; ++L)
      for (int K = 0; K < m; ++K)
        for (int J = 0; J < m; ++J)
          for (int I = 0; I < m; ++I)
            q.Q5dd(I, J, K, L, M) = 2.0 * a.a5dd_a(I + m * K + m2 * L, J + m * M) +
                                    a.a5dd_b(I + m * L, J + m * K + m2 * M);
  for (int M = 0; M < md; ++M)
    for (int L = 0; L < m; ++L)
      for (int K = 0; K < m; ++K)
        for (int J = 0; J < m; ++J)
          for (int I = 0; I < m; ++I)
            q.Q5d(I, J, K, L, M) = a.a5d_a(I + m * K, J + m * L + m2 * M) +
                                   a.a5d_b(I + m * K + m2 * M, J + m * L);
  for (int N = 0; N < md; ++N)
    for (int M = 0; M < md; ++M)
      for (int L = 0; L < m; ++L)
        for (int K = 0; K < m; ++K)
          for (int J = 0; J < m; ++J)
            for (int I = 0; I < m; ++I)
              q.Q6dd(I, J, K, L, M, N) =
                  2.0 * a.a6(I + m * L + m2 * M, J + m * K + m2 * N);
}

}  // namespace

DpROMTensors assemble_dprom(const NominalMesh& mesh, const MeshQuadrature& quad,
                            const MatX& V_free, const DefectBasis& defects,
                            const ModelSpec& spec,
                            const std::vector<std::string>& labels) {
  if (spec.variant == Variant::Exact)
    throw Error("reduced tensors exist only for the expanded variants");
  const int dim = mesh.dim;
  const int m = static_cast<int>(V_free.cols());
  const int md = defects.count();
  const bool use_defects = md > 0;
  const bool use_s3 = use_defects && spec.variant == Variant::N1;
  const MatX C = elasticity_matrix(mesh.material.E, mesh.material.nu, dim);
  const MatX H = voigt_H(dim);
  const int nen = element_nodes(mesh.kind);

  // Expand the basis to full dofs once for element gathers.
  MatX V_full = MatX::Zero(mesh.n_dofs(), m);
  for (int f = 0; f < mesh.n_free(); ++f)
    V_full.row(mesh.dof_of_free[f]) = V_free.row(f);

  AccSet acc;
  acc.resize(m, md, use_defects, use_s3);
  std::vector<AccSet> vacc;
  std::vector<bool> vskip;
  if (spec.volume_correction) {
    vacc.resize(md);
    vskip.resize(md);
    for (int i = 0; i < md; ++i) {
      vskip[i] = defects.isochoric[i];
      if (!vskip[i]) vacc[i].resize(m, md, use_defects, use_s3);
    }
  }

  MatX Ve(nen * dim, m), Ude(nen * dim, md);
  QpFactors f;
  MatX CHG, CT1, CS2, CS3;
  for (int e = 0; e < mesh.n_elems(); ++e) {
    for (int a = 0; a < nen; ++a)
      for (int c = 0; c < dim; ++c) {
        const int gd = mesh.elements(e, a) * dim + c;
        Ve.row(a * dim + c) = V_full.row(gd);
        if (use_defects) Ude.row(a * dim + c) = defects.U.row(gd);
      }
    for (const auto& qp : quad.elems[e]) {
      const MatX G = grad_operator(qp.dNdx, dim);
      const MatX Gamma = G * Ve;
      const MatX Ups = use_defects ? MatX(G * Ude) : MatX(G.rows(), 0);
      build_factors(Gamma, Ups, H, spec.variant, dim, use_s3, f);
      CHG.noalias() = C * f.HG;
      CT1.noalias() = C * f.T1;
      if (use_defects) CS2.noalias() = C * f.S2;
      if (use_s3) CS3.noalias() = C * f.S3;
      acc.add(qp.w, f, CHG, CT1, CS2, CS3, use_defects, use_s3);
      if (spec.volume_correction) {
        for (int i = 0; i < md; ++i) {
          if (vskip[i]) continue;
          double div;
          if (defects.has_analytic_div(i)) {
            div = defects.divergence[i](qp.x);
          } else {
            div = 0.0;
            for (int c = 0; c < dim; ++c) div += Ups(c * dim + c, i);
          }
          if (div != 0.0)
            vacc[i].add(qp.w * div, f, CHG, CT1, CS2, CS3, use_defects,
                        use_s3);
        }
      }
    }
  }

  DpROMTensors T;
  T.spec = spec;
  T.m = m;
  T.md = md;
  T.basis_labels = labels;
  T.mesh_tag = mesh_hash(mesh);
  scatter(acc, m, md, use_defects, use_s3, T.base);
  if (spec.volume_correction) {
    T.vol.resize(md);
    T.vol_skipped = vskip;
    for (int i = 0; i < md; ++i) {
      if (vskip[i])
        T.vol[i].resize(m, md);
      else
        scatter(vacc[i], m, md, use_defects, use_s3, T.vol[i]);
    }
  }
  return T;
}

NominalTensors element_route_nominal_tensors(const NominalMesh& mesh,
                                             const MeshQuadrature& quad,
                                             const MatX& V_free) {
  const int dim = mesh.dim;
  const int m = static_cast<int>(V_free.cols());
  const int nen = element_nodes(mesh.kind);
  const int ne = nen * dim;
  const int ne2 = ne * ne;
  const MatX C = elasticity_matrix(mesh.material.E, mesh.material.nu, dim);
  const MatX H = voigt_H(dim);

  MatX V_full = MatX::Zero(mesh.n_dofs(), m);
  for (int f = 0; f < mesh.n_free(); ++f)
    V_full.row(mesh.dof_of_free[f]) = V_free.row(f);

  NominalTensors out;
  out.Q2 = MatX::Zero(m, m);
  out.Q3.resize({m, m, m});
  out.Q4.resize({m, m, m, m});
  Eigen::Map<MatX> Q3flat(out.Q3.v.data(), m, m * m);
  Eigen::Map<MatX> Q4flat(out.Q4.v.data(), m, m * m * m);

  MatX Ve(ne, m);
  QpFactors f;
  MatX CHG, CT1, CS2, CS3;
  for (int e = 0; e < mesh.n_elems(); ++e) {
    AccSet acc;
    acc.resize(ne, 0, false, false);
    for (int a = 0; a < nen; ++a)
      for (int c = 0; c < dim; ++c)
        Ve.row(a * dim + c) = V_full.row(mesh.elements(e, a) * dim + c);
    for (const auto& qp : quad.elems[e]) {
      const MatX G = grad_operator(qp.dNdx, dim);
      // The element route treats each local dof as its own "mode": the
      // reduced-kernel machinery runs with the identity basis, so Gamma = G.
      build_factors(G, MatX(G.rows(), 0), H, Variant::N1, dim, false, f);
      CHG.noalias() = C * f.HG;
      CT1.noalias() = C * f.T1;
      acc.add(qp.w, f, CHG, CT1, CS2, CS3, false, false);
    }
    // Element tensors in local-dof index space.
    MatX Q2e = acc.a2;
    MatX Q3e(ne, ne2);
    for (int r = 0; r < ne; ++r)
      for (int qc = 0; qc < ne; ++qc)
        for (int p = 0; p < ne; ++p)
          Q3e(p, qc + ne * r) =
              0.5 * acc.a3n_a(p, qc + ne * r) + acc.a3n_b(p + ne * r, qc);
    MatX Q4e(ne, ne * ne2);
    for (int sx = 0; sx < ne; ++sx)
      for (int r = 0; r < ne; ++r)
        for (int qc = 0; qc < ne; ++qc)
          for (int p = 0; p < ne; ++p)
            Q4e(p, qc + ne * (r + ne * sx)) =
                0.5 * acc.a4n(p + ne * r, qc + ne * sx);

    out.Q2.noalias() += Ve.transpose() * Q2e * Ve;

    // Contract one index at a time through the element basis rows.
    const MatX A1 = Ve.transpose() * Q3e;  // m x ne^2
    MatX A2(m * m, ne);
    for (int r = 0; r < ne; ++r)
      Eigen::Map<MatX>(A2.col(r).data(), m, m).noalias() =
          A1.middleCols(r * ne, ne) * Ve;
    // A2 col-major over (I + m J, r); contract r
    MatX A3 = A2 * Ve;  // (m^2, m)
    Q3flat += Eigen::Map<MatX>(A3.data(), m, m * m);

    const MatX B1 = Ve.transpose() * Q4e;  // m x ne^3
    MatX B2(m * m, ne2);
    for (int c = 0; c < ne2; ++c)
      Eigen::Map<MatX>(B2.col(c).data(), m, m).noalias() =
          B1.middleCols(c * ne, ne) * Ve;
    MatX B3(m * m * m, ne);
    for (int sx = 0; sx < ne; ++sx)
      Eigen::Map<MatX>(B3.col(sx).data(), m * m, m).noalias() =
          B2.middleCols(sx * ne, ne) * Ve;
    MatX B4 = B3 * Ve;  // (m^3, m)
    Q4flat += Eigen::Map<MatX>(B4.data(), m, m * m * m);
  }
  return out;
}

EvalTensors evaluate_parametric(const DpROMTensors& T, const VecX& xi) {
  if (xi.size() != T.md)
    throw Error(fmt::format("expected {} defect amplitudes, got {}", T.md,
                            xi.size()));
  const int m = T.m, md = T.md;
  const long m2 = static_cast<long>(m) * m;
  const long m3 = m2 * m;
  const long m4 = m3 * m;

  // First-order volume corrections add to every tensor before the defect
  // indices are contracted out.
  QSet eff;
  const QSet* src = &T.base;
  if (T.spec.volume_correction && md > 0) {
    eff = T.base;
    for (int i = 0; i < md; ++i) {
      if (T.vol_skipped[i] || xi(i) == 0.0) continue;
      eff.Q2n += xi(i) * T.vol[i].Q2n;
      eff.Q3d.v += xi(i) * T.vol[i].Q3d.v;
      eff.Q4dd.v += xi(i) * T.vol[i].Q4dd.v;
      eff.Q3n.v += xi(i) * T.vol[i].Q3n.v;
      eff.Q4d.v += xi(i) * T.vol[i].Q4d.v;
      eff.Q5dd.v += xi(i) * T.vol[i].Q5dd.v;
      eff.Q4n.v += xi(i) * T.vol[i].Q4n.v;
      eff.Q5d.v += xi(i) * T.vol[i].Q5d.v;
      eff.Q6dd.v += xi(i) * T.vol[i].Q6dd.v;
    }
    src = &eff;
  }

  EvalTensors out;
  out.Q2 = src->Q2n;
  out.Q3.resize({m, m, m});
  out.Q4.resize({m, m, m, m});
  out.Q3.v = src->Q3n.v;
  out.Q4.v = src->Q4n.v;
  for (int K = 0; K < md; ++K) {
    if (xi(K) != 0.0) {
      Eigen::Map<const MatX> q3dK(src->Q3d.v.data() + m2 * K, m, m);
      out.Q2 += xi(K) * q3dK;
      out.Q3.v += xi(K) * src->Q4d.v.segment(m3 * K, m3);
      out.Q4.v += xi(K) * src->Q5d.v.segment(m4 * K, m4);
    }
    for (int L = 0; L < md; ++L) {
      const double w = xi(K) * xi(L);
      if (w == 0.0) continue;
      Eigen::Map<const MatX> q4ddKL(src->Q4dd.v.data() + m2 * (K + md * L), m,
                                    m);
      out.Q2 += w * q4ddKL;
      out.Q3.v += w * src->Q5dd.v.segment(m3 * (K + md * L), m3);
      out.Q4.v += w * src->Q6dd.v.segment(m4 * (K + md * L), m4);
    }
  }
  return out;
}

VecX reduced_force(const EvalTensors& Q, const VecX& eta) {
  const int m = static_cast<int>(eta.size());
  const long m2 = static_cast<long>(m) * m;
  VecX f = Q.Q2 * eta;
  VecX ee(m2);
  Eigen::Map<MatX>(ee.data(), m, m).noalias() = eta * eta.transpose();
  Eigen::Map<const MatX> M3(Q.Q3.v.data(), m, m2);
  f.noalias() += M3 * ee;
  Eigen::Map<const MatX> M4(Q.Q4.v.data(), m, m2 * m);
  VecX eee(m2 * m);
  for (int k = 0; k < m; ++k) eee.segment(m2 * k, m2) = eta(k) * ee;
  f.noalias() += M4 * eee;
  return f;
}

MatX reduced_tangent(const EvalTensors& Q, const VecX& eta) {
  const int m = static_cast<int>(eta.size());
  const long m2 = static_cast<long>(m) * m;
  Eigen::Map<const MatX> M3(Q.Q3.v.data(), m, m2);
  Eigen::Map<const MatX> M4(Q.Q4.v.data(), m, m2 * m);

  MatX Kt = Q.Q2;
  for (int j = 0; j < m; ++j) {
    if (eta(j) == 0.0) continue;
    Kt.noalias() += eta(j) * M3.middleCols(static_cast<long>(j) * m, m);
  }
  for (int P = 0; P < m; ++P)
    Kt.col(P).noalias() += M3.middleCols(static_cast<long>(P) * m, m) * eta;

  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      const double w = eta(i) * eta(j);
      if (w == 0.0) continue;
      Kt.noalias() += w * M4.middleCols(m2 * j + static_cast<long>(i) * m, m);
    }
  for (int j = 0; j < m; ++j) {
    if (eta(j) == 0.0) continue;
    for (int P = 0; P < m; ++P)
      Kt.col(P).noalias() +=
          eta(j) *
          (M4.middleCols(m2 * j + static_cast<long>(P) * m, m) * eta);
  }
  VecX ee(m2);
  Eigen::Map<MatX>(ee.data(), m, m).noalias() = eta * eta.transpose();
  for (int P = 0; P < m; ++P)
    Kt.col(P).noalias() += M4.middleCols(m2 * P, m2) * ee;
  return Kt;
}

MatX reduced_mass(const NominalMesh& mesh, const MeshQuadrature& quad,
                  const MatX& V_free) {
  const SpMat M = assemble_mass(mesh, quad);
  return V_free.transpose() * M * V_free;
}

}  // namespace dprom
