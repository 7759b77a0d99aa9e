#include "dprom/mesh.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace dprom {

void NominalMesh::finalize() {
  if (nodes.cols() != dim) throw MeshError("node coordinate dimension mismatch");
  if (elements.cols() != element_nodes(kind))
    throw MeshError("element connectivity width does not match element kind");
  for (int e = 0; e < n_elems(); ++e)
    for (int a = 0; a < elements.cols(); ++a) {
      const int nd = elements(e, a);
      if (nd < 0 || nd >= n_nodes())
        throw MeshError(fmt::format("element {} references node {}", e, nd));
    }
  std::sort(fixed_dofs.begin(), fixed_dofs.end());
  fixed_dofs.erase(std::unique(fixed_dofs.begin(), fixed_dofs.end()),
                   fixed_dofs.end());
  for (int d : fixed_dofs)
    if (d < 0 || d >= n_dofs())
      throw MeshError(fmt::format("fixed dof {} out of range", d));
  free_of_dof.assign(n_dofs(), -1);
  dof_of_free.clear();
  std::size_t next_fixed = 0;
  for (int d = 0; d < n_dofs(); ++d) {
    if (next_fixed < fixed_dofs.size() && fixed_dofs[next_fixed] == d) {
      ++next_fixed;
      continue;
    }
    free_of_dof[d] = static_cast<int>(dof_of_free.size());
    dof_of_free.push_back(d);
  }
}

namespace {

// Serendipity lattice index helper: nodes live on a half-element grid and a
// lattice site is a real node only when at most one of its indices is odd
// (no face or body centers).
bool serendipity_node(int i, int j, int k = 0) {
  return (i % 2 != 0) + (j % 2 != 0) + (k % 2 != 0) <= 1;
}

}  // namespace

NominalMesh build_rect_beam_mesh(double lx, double ty, int nx, int ny,
                                 const MaterialParams& mat, double thickness) {
  if (nx < 1 || ny < 1) throw MeshError("beam mesh needs at least one element");
  NominalMesh m;
  m.dim = 2;
  m.kind = ElementKind::Quad8;
  m.material = mat;
  m.thickness = thickness;

  const int li = 2 * nx, lj = 2 * ny;
  std::vector<int> id(static_cast<std::size_t>(li + 1) * (lj + 1), -1);
  auto lat = [&](int i, int j) -> int& { return id[i * (lj + 1) + j]; };
  std::vector<double> xs, ys;
  int count = 0;
  for (int i = 0; i <= li; ++i)
    for (int j = 0; j <= lj; ++j)
      if (serendipity_node(i, j)) {
        lat(i, j) = count++;
        xs.push_back(lx * i / li);
        ys.push_back(ty * j / lj);
      }
  m.nodes.resize(count, 2);
  for (int n = 0; n < count; ++n) {
    m.nodes(n, 0) = xs[n];
    m.nodes(n, 1) = ys[n];
  }

  m.elements.resize(nx * ny, 8);
  int e = 0;
  for (int ex = 0; ex < nx; ++ex)
    for (int ey = 0; ey < ny; ++ey, ++e) {
      const int i = 2 * ex, j = 2 * ey;
      m.elements.row(e) << lat(i, j), lat(i + 2, j), lat(i + 2, j + 2),
          lat(i, j + 2), lat(i + 1, j), lat(i + 2, j + 1), lat(i + 1, j + 2),
          lat(i, j + 1);
    }

  for (int n = 0; n < count; ++n)
    if (m.nodes(n, 0) == 0.0 || m.nodes(n, 0) == lx) {
      m.fixed_dofs.push_back(2 * n);
      m.fixed_dofs.push_back(2 * n + 1);
    }
  m.finalize();
  return m;
}

NominalMesh build_hex20_boxes(const std::vector<BoxSpec>& boxes,
                              const MaterialParams& mat,
                              const std::function<bool(const VecX&)>& clamped) {
  if (boxes.empty()) throw MeshError("no boxes given");
  const Vec3 h = boxes.front().h;
  const Vec3 half = 0.5 * h;
  for (const auto& b : boxes) {
    if ((b.h - h).norm() > 1e-12 * h.norm())
      throw MeshError("all boxes must share the same element size");
    for (int c = 0; c < 3; ++c) {
      const double r = (b.origin(c) - boxes.front().origin(c)) / half(c);
      if (std::abs(r - std::round(r)) > 1e-9)
        throw MeshError("box origins must lie on the common element lattice");
    }
  }
  const Vec3 base = boxes.front().origin;

  // Key nodes by global half-element lattice indices so coincident faces of
  // adjacent boxes share nodes. Parity (corner vs mid-edge) is global because
  // box origins sit on whole-element lattice positions.
  std::map<std::array<int, 3>, int> ids;
  std::vector<Vec3> coords;
  auto node_at = [&](int gi, int gj, int gk) -> int {
    const std::array<int, 3> key = {gi, gj, gk};
    auto it = ids.find(key);
    if (it != ids.end()) return it->second;
    const int id = static_cast<int>(coords.size());
    ids.emplace(key, id);
    coords.emplace_back(base(0) + half(0) * gi, base(1) + half(1) * gj,
                        base(2) + half(2) * gk);
    return id;
  };

  std::vector<std::array<int, 20>> conn;
  // Local half-lattice offsets of the 20 nodes, matching the canonical order.
  static const int off[20][3] = {
      {0, 0, 0}, {2, 0, 0}, {2, 2, 0}, {0, 2, 0}, {0, 0, 2}, {2, 0, 2},
      {2, 2, 2}, {0, 2, 2}, {1, 0, 0}, {2, 1, 0}, {1, 2, 0}, {0, 1, 0},
      {1, 0, 2}, {2, 1, 2}, {1, 2, 2}, {0, 1, 2}, {0, 0, 1}, {2, 0, 1},
      {2, 2, 1}, {0, 2, 1}};
  for (const auto& b : boxes) {
    int oi[3];
    for (int c = 0; c < 3; ++c)
      oi[c] = static_cast<int>(std::llround((b.origin(c) - base(c)) / half(c)));
    for (int ex = 0; ex < b.nx; ++ex)
      for (int ey = 0; ey < b.ny; ++ey)
        for (int ez = 0; ez < b.nz; ++ez) {
          std::array<int, 20> el;
          for (int a = 0; a < 20; ++a)
            el[a] = node_at(oi[0] + 2 * ex + off[a][0],
                            oi[1] + 2 * ey + off[a][1],
                            oi[2] + 2 * ez + off[a][2]);
          conn.push_back(el);
        }
  }

  NominalMesh m;
  m.dim = 3;
  m.kind = ElementKind::Hex20;
  m.material = mat;
  m.nodes.resize(static_cast<int>(coords.size()), 3);
  for (std::size_t n = 0; n < coords.size(); ++n)
    m.nodes.row(static_cast<int>(n)) = coords[n].transpose();
  m.elements.resize(static_cast<int>(conn.size()), 20);
  for (std::size_t e = 0; e < conn.size(); ++e)
    for (int a = 0; a < 20; ++a)
      m.elements(static_cast<int>(e), a) = conn[e][a];
  for (int n = 0; n < m.n_nodes(); ++n)
    if (clamped(m.nodes.row(n).transpose()))
      for (int c = 0; c < 3; ++c) m.fixed_dofs.push_back(3 * n + c);
  m.finalize();
  return m;
}

NominalMesh build_gyro_plate(const GyroPlateParams& p,
                             const MaterialParams& mat) {
  const double hxy = p.plate_side / p.plate_div;
  const double hleg = p.leg_length / p.leg_div;
  if (std::abs(hxy - hleg) > 1e-12 * hxy)
    throw MeshError("leg and plate element sizes must match for composition");
  const int wdiv = static_cast<int>(std::llround(p.leg_width / hxy));
  if (std::abs(wdiv * hxy - p.leg_width) > 1e-9 * p.leg_width)
    throw MeshError("leg width must be a whole number of elements");
  if ((p.plate_div - wdiv) % 2 != 0)
    throw MeshError("leg must center on the plate side");
  const double off = 0.5 * (p.plate_side - p.leg_width);
  const Vec3 h(hxy, hxy, p.plate_thick);

  std::vector<BoxSpec> boxes;
  boxes.push_back({Vec3(0, 0, 0), p.plate_div, p.plate_div, 1, h});
  boxes.push_back({Vec3(-p.leg_length, off, 0), p.leg_div, wdiv, 1, h});
  boxes.push_back({Vec3(p.plate_side, off, 0), p.leg_div, wdiv, 1, h});
  boxes.push_back({Vec3(off, -p.leg_length, 0), wdiv, p.leg_div, 1, h});
  boxes.push_back({Vec3(off, p.plate_side, 0), wdiv, p.leg_div, 1, h});

  const double lo = -p.leg_length, hi = p.plate_side + p.leg_length;
  const double tol = 1e-9 * p.plate_side;
  auto clamped = [=](const VecX& x) {
    return std::abs(x(0) - lo) < tol || std::abs(x(0) - hi) < tol ||
           std::abs(x(1) - lo) < tol || std::abs(x(1) - hi) < tol;
  };
  return build_hex20_boxes(boxes, mat, clamped);
}

NominalMesh apply_defect(const NominalMesh& mesh, const MatX& U,
                         const VecX& xi) {
  if (U.rows() != mesh.n_dofs())
    throw MeshError("defect basis row count does not match mesh dofs");
  if (U.cols() != xi.size())
    throw MeshError("defect amplitude count does not match basis columns");
  NominalMesh out = mesh;
  const VecX shift = U * xi;
  for (int n = 0; n < mesh.n_nodes(); ++n)
    for (int c = 0; c < mesh.dim; ++c)
      out.nodes(n, c) += shift(n * mesh.dim + c);
  out.finalize();
  return out;
}

MeshQuadrature build_quadrature(const NominalMesh& mesh) {
  MeshQuadrature q;
  q.elems.resize(mesh.n_elems());
  const auto& rule = gauss_rule(mesh.kind);
  const int nen = element_nodes(mesh.kind);
  const int dim = mesh.dim;
  MatX Xe(nen, dim);
  VecX N;
  MatX dN;
  for (int e = 0; e < mesh.n_elems(); ++e) {
    for (int a = 0; a < nen; ++a) Xe.row(a) = mesh.nodes.row(mesh.elements(e, a));
    auto& pts = q.elems[e];
    pts.reserve(rule.size());
    for (const auto& gp : rule) {
      shape_functions(mesh.kind, gp.xi, N, dN);
      const MatX J = Xe.transpose() * dN;
      const double detJ = J.determinant();
      if (detJ <= 0.0)
        throw MeshError(fmt::format("non-positive Jacobian in element {}", e));
      QPoint p;
      p.N = N;
      p.dNdx = dN * J.inverse();
      p.w = gp.w * detJ * (dim == 2 ? mesh.thickness : 1.0);
      p.x = Xe.transpose() * N;
      pts.push_back(std::move(p));
    }
  }
  return q;
}

VecX expand_full(const NominalMesh& mesh, const VecX& free_vec) {
  if (free_vec.size() != mesh.n_free())
    throw MeshError("free vector length mismatch");
  VecX full = VecX::Zero(mesh.n_dofs());
  for (int f = 0; f < mesh.n_free(); ++f) full(mesh.dof_of_free[f]) = free_vec(f);
  return full;
}

VecX restrict_free(const NominalMesh& mesh, const VecX& full_vec) {
  if (full_vec.size() != mesh.n_dofs())
    throw MeshError("full vector length mismatch");
  VecX out(mesh.n_free());
  for (int f = 0; f < mesh.n_free(); ++f) out(f) = full_vec(mesh.dof_of_free[f]);
  return out;
}

VecX gather_element(const NominalMesh& mesh, const VecX& full, int e) {
  const int nen = element_nodes(mesh.kind);
  VecX ue(nen * mesh.dim);
  for (int a = 0; a < nen; ++a)
    for (int c = 0; c < mesh.dim; ++c)
      ue(a * mesh.dim + c) = full(mesh.elements(e, a) * mesh.dim + c);
  return ue;
}

NominalMesh read_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open mesh file '{}'", path));
  std::string tag;
  int version = 0;
  in >> tag >> version;
  if (tag != "dprom-mesh" || version != 1)
    throw IoError(fmt::format("'{}' is not a dprom-mesh v1 file", path));
  NominalMesh m;
  std::string key;
  bool have_nodes = false, have_elems = false;
  while (in >> key) {
    if (key == "end") break;
    if (key == "dim") {
      in >> m.dim;
    } else if (key == "kind") {
      std::string k;
      in >> k;
      if (k == "quad8")
        m.kind = ElementKind::Quad8;
      else if (k == "hex20")
        m.kind = ElementKind::Hex20;
      else
        throw IoError(fmt::format("unknown element kind '{}'", k));
    } else if (key == "material") {
      in >> m.material.E >> m.material.nu >> m.material.rho;
    } else if (key == "thickness") {
      in >> m.thickness;
    } else if (key == "nodes") {
      int n = 0;
      in >> n;
      m.nodes.resize(n, m.dim);
      for (int i = 0; i < n; ++i)
        for (int c = 0; c < m.dim; ++c) in >> m.nodes(i, c);
      have_nodes = true;
    } else if (key == "elements") {
      int ne = 0;
      in >> ne;
      const int nen = element_nodes(m.kind);
      m.elements.resize(ne, nen);
      for (int e = 0; e < ne; ++e)
        for (int a = 0; a < nen; ++a) in >> m.elements(e, a);
      have_elems = true;
    } else if (key == "fixed_dofs") {
      int k = 0;
      in >> k;
      m.fixed_dofs.resize(k);
      for (int i = 0; i < k; ++i) in >> m.fixed_dofs[i];
    } else {
      throw IoError(fmt::format("unknown mesh file keyword '{}'", key));
    }
    if (!in) throw IoError(fmt::format("truncated mesh file '{}'", path));
  }
  if (!have_nodes || !have_elems)
    throw IoError(fmt::format("mesh file '{}' is missing nodes or elements", path));
  m.finalize();
  return m;
}

void write_mesh(const NominalMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot write mesh file '{}'", path));
  out << "dprom-mesh 1\n";
  out << "dim " << mesh.dim << "\n";
  out << "kind " << (mesh.kind == ElementKind::Quad8 ? "quad8" : "hex20")
      << "\n";
  out << fmt::format("material {:.17g} {:.17g} {:.17g}\n", mesh.material.E,
                     mesh.material.nu, mesh.material.rho);
  out << fmt::format("thickness {:.17g}\n", mesh.thickness);
  out << "nodes " << mesh.n_nodes() << "\n";
  for (int n = 0; n < mesh.n_nodes(); ++n) {
    for (int c = 0; c < mesh.dim; ++c)
      out << fmt::format("{}{:.17g}", c ? " " : "", mesh.nodes(n, c));
    out << "\n";
  }
  out << "elements " << mesh.n_elems() << "\n";
  for (int e = 0; e < mesh.n_elems(); ++e) {
    for (int a = 0; a < mesh.elements.cols(); ++a)
      out << (a ? " " : "") << mesh.elements(e, a);
    out << "\n";
  }
  out << "fixed_dofs " << mesh.fixed_dofs.size() << "\n";
  for (std::size_t i = 0; i < mesh.fixed_dofs.size(); ++i)
    out << (i ? " " : "") << mesh.fixed_dofs[i];
  out << "\nend\n";
}

namespace {

struct Fnv1a {
  std::uint64_t h = 1469598103934665603ull;
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  }
  void d(double v) { bytes(&v, sizeof v); }
  void i(int v) { bytes(&v, sizeof v); }
};

}  // namespace

std::string mesh_hash(const NominalMesh& mesh) {
  Fnv1a f;
  f.i(mesh.dim);
  f.i(static_cast<int>(mesh.kind));
  f.d(mesh.material.E);
  f.d(mesh.material.nu);
  f.d(mesh.material.rho);
  f.d(mesh.thickness);
  for (int n = 0; n < mesh.n_nodes(); ++n)
    for (int c = 0; c < mesh.dim; ++c) f.d(mesh.nodes(n, c));
  for (int e = 0; e < mesh.n_elems(); ++e)
    for (int a = 0; a < mesh.elements.cols(); ++a) f.i(mesh.elements(e, a));
  for (int d : mesh.fixed_dofs) f.i(d);
  return fmt::format("{:016x}", f.h);
}

}  // namespace dprom
