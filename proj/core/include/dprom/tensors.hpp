#pragma once

#include <array>
#include <string>
#include <vector>

#include "dprom/defects.hpp"
#include "dprom/mesh.hpp"
#include "dprom/types.hpp"

namespace dprom {

// Dense column-major tensors of fixed rank; first index fastest.
template <int R>
struct Tensor {
  std::array<int, R> dims{};
  VecX v;

  void resize(const std::array<int, R>& d) {
    dims = d;
    long n = 1;
    for (int x : d) n *= x;
    v = VecX::Zero(n);
  }
  template <typename... Ix>
  long flat(Ix... ix) const {
    static_assert(sizeof...(Ix) == R);
    const std::array<long, R> idx = {static_cast<long>(ix)...};
    long f = 0;
    for (int r = R - 1; r >= 0; --r) f = f * dims[r] + idx[r];
    return f;
  }
  template <typename... Ix>
  double& operator()(Ix... ix) {
    return v(flat(ix...));
  }
  template <typename... Ix>
  double operator()(Ix... ix) const {
    return v(flat(ix...));
  }
};

using Ten3 = Tensor<3>;
using Ten4 = Tensor<4>;
using Ten5 = Tensor<5>;
using Ten6 = Tensor<6>;

// The nine stiffness tensors of the parametric reduced model. Mode indices
// run over the reduction basis (m), defect indices over the defect basis
// (md). Stored unsymmetrized, exactly as assembled.
struct QSet {
  MatX Q2n;   // (m, m)
  Ten3 Q3d;   // (m, m, md)
  Ten4 Q4dd;  // (m, m, md, md)
  Ten3 Q3n;   // (m, m, m)
  Ten4 Q4d;   // (m, m, m, md)
  Ten5 Q5dd;  // (m, m, m, md, md)
  Ten4 Q4n;   // (m, m, m, m)
  Ten5 Q5d;   // (m, m, m, m, md)
  Ten6 Q6dd;  // (m, m, m, m, md, md)

  void resize(int m, int md);
};

struct DpROMTensors {
  ModelSpec spec;
  int m = 0, md = 0;
  QSet base;
  // First-order volume corrections, one set per defect; entries for exactly
  // volume-preserving defects are skipped (flag true) and left zero.
  std::vector<QSet> vol;
  std::vector<bool> vol_skipped;
  std::vector<std::string> basis_labels;
  std::string mesh_tag;
};

// Projects the variant strain energy onto the reduction basis V (free-dof
// rows) with defect shapes U sampled on the same mesh, producing every tensor
// the variant needs; unused higher couplings stay empty. With volume
// correction on, per-defect correction sets weighted by the defect divergence
// are assembled in the same sweep.
DpROMTensors assemble_dprom(const NominalMesh& mesh, const MeshQuadrature& quad,
                            const MatX& V_free, const DefectBasis& defects,
                            const ModelSpec& spec,
                            const std::vector<std::string>& labels = {});

// Defect-free cubic tensors by the memory-heavy alternative route: per-element
// tensors in local dofs first, then projection through the element rows of V.
// Used to cross-check the direct projection above.
struct NominalTensors {
  MatX Q2;
  Ten3 Q3;
  Ten4 Q4;
};
NominalTensors element_route_nominal_tensors(const NominalMesh& mesh,
                                             const MeshQuadrature& quad,
                                             const MatX& V_free);

// Collapses the defect dependence at a given amplitude vector, giving the
// cubic polynomial model in the modal coordinates.
struct EvalTensors {
  MatX Q2;
  Ten3 Q3;
  Ten4 Q4;
};
EvalTensors evaluate_parametric(const DpROMTensors& T, const VecX& xi);

VecX reduced_force(const EvalTensors& Q, const VecX& eta);
MatX reduced_tangent(const EvalTensors& Q, const VecX& eta);

MatX reduced_mass(const NominalMesh& mesh, const MeshQuadrature& quad,
                  const MatX& V_free);

// Snapshot container for assembled tensors (binary, with a human-readable
// side manifest). Loading checks the stored mesh tag and model string.
void save_tensors(const DpROMTensors& T, const std::string& path);
DpROMTensors load_tensors(const std::string& path);

}  // namespace dprom
