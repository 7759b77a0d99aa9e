#include "dprom/defects.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>

namespace dprom {

DefectBasis sample_defects(const NominalMesh& mesh,
                           const std::vector<DefectShape>& shapes) {
  DefectBasis b;
  b.U.resize(mesh.n_dofs(), static_cast<int>(shapes.size()));
  for (std::size_t s = 0; s < shapes.size(); ++s) {
    const auto& shape = shapes[s];
    for (int n = 0; n < mesh.n_nodes(); ++n) {
      const VecX u = shape.disp(mesh.nodes.row(n).transpose());
      if (u.size() != mesh.dim)
        throw MeshError(fmt::format("defect '{}' returned wrong dimension",
                                    shape.name));
      for (int c = 0; c < mesh.dim; ++c)
        b.U(n * mesh.dim + c, static_cast<int>(s)) = u(c);
    }
    b.names.push_back(shape.name);
    b.isochoric.push_back(shape.isochoric);
    b.divergence.push_back(shape.divergence);
  }
  return b;
}

DefectShape make_arch_defect(double lx, double amplitude) {
  DefectShape s;
  s.name = "arch";
  s.isochoric = true;
  s.disp = [=](const VecX& x) {
    VecX u = VecX::Zero(2);
    u(1) = amplitude * std::sin(M_PI * x(0) / lx);
    return u;
  };
  s.divergence = [](const VecX&) { return 0.0; };
  return s;
}

DefectShape make_beam_taper_defect(double x0, double length, double y_mid,
                                   double half_width, double amplitude,
                                   int axial_coord, int span_coord) {
  DefectShape s;
  s.name = "beam_taper";
  s.isochoric = false;
  s.disp = [=](const VecX& x) {
    VecX u = VecX::Zero(x.size());
    const double t = (x(axial_coord) - x0) / length;
    if (t < 0.0 || t > 1.0) return u;
    u(span_coord) = amplitude * std::sin(M_PI * t) *
                    (x(span_coord) - y_mid) / half_width;
    return u;
  };
  s.divergence = [=](const VecX& x) {
    const double t = (x(axial_coord) - x0) / length;
    if (t < 0.0 || t > 1.0) return 0.0;
    return amplitude * std::sin(M_PI * t) / half_width;
  };
  return s;
}

DefectShape make_wall_angle_defect(double angle_deg, double z_mid) {
  DefectShape s;
  s.name = "wall_angle";
  s.isochoric = true;
  const double slope = std::tan(angle_deg * M_PI / 180.0);
  s.disp = [=](const VecX& x) {
    VecX u = VecX::Zero(3);
    u(0) = slope * (x(2) - z_mid);
    return u;
  };
  s.divergence = [](const VecX&) { return 0.0; };
  return s;
}

DefectBasis read_defect_file(const NominalMesh& mesh, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open defect file '{}'", path));
  std::string tag;
  int version = 0;
  in >> tag >> version;
  if (tag != "dprom-defect" || version != 1)
    throw IoError(fmt::format("'{}' is not a dprom-defect v1 file", path));
  int dim = 0, nnodes = 0, count = 0;
  std::string key;
  DefectBasis b;
  while (in >> key) {
    if (key == "end") break;
    if (key == "dim") {
      in >> dim;
      if (dim != mesh.dim) throw IoError("defect file dimension mismatch");
    } else if (key == "fields") {
      in >> count;
    } else if (key == "names") {
      for (int i = 0; i < count; ++i) {
        std::string n;
        in >> n;
        b.names.push_back(n);
      }
    } else if (key == "nodes") {
      in >> nnodes;
      if (nnodes != mesh.n_nodes())
        throw IoError(fmt::format(
            "defect file has {} nodes, mesh has {}", nnodes, mesh.n_nodes()));
      if (count == 0) throw IoError("defect file: 'fields' must precede 'nodes'");
      b.U.resize(mesh.n_dofs(), count);
      for (int n = 0; n < nnodes; ++n)
        for (int f = 0; f < count; ++f)
          for (int c = 0; c < mesh.dim; ++c) in >> b.U(n * mesh.dim + c, f);
    } else {
      throw IoError(fmt::format("unknown defect file keyword '{}'", key));
    }
    if (!in) throw IoError(fmt::format("truncated defect file '{}'", path));
  }
  if (b.U.size() == 0) throw IoError("defect file has no nodal data");
  while (static_cast<int>(b.names.size()) < count)
    b.names.push_back(fmt::format("field{}", b.names.size()));
  b.isochoric.assign(count, false);
  b.divergence.assign(count, nullptr);
  return b;
}

}  // namespace dprom
