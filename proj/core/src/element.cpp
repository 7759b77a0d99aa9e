#include "dprom/element.hpp"

#include <array>
#include <cmath>

namespace dprom {

int element_nodes(ElementKind kind) {
  return kind == ElementKind::Quad8 ? 8 : 20;
}

int element_dim(ElementKind kind) { return kind == ElementKind::Quad8 ? 2 : 3; }

const MatX& element_local_coords(ElementKind kind) {
  static const MatX quad = [] {
    MatX c(8, 2);
    c << -1, -1, 1, -1, 1, 1, -1, 1,  // corners
        0, -1, 1, 0, 0, 1, -1, 0;     // mid-edges
    return c;
  }();
  static const MatX hex = [] {
    MatX c(20, 3);
    c << -1, -1, -1, 1, -1, -1, 1, 1, -1, -1, 1, -1,  // bottom corners
        -1, -1, 1, 1, -1, 1, 1, 1, 1, -1, 1, 1,       // top corners
        0, -1, -1, 1, 0, -1, 0, 1, -1, -1, 0, -1,     // bottom edges
        0, -1, 1, 1, 0, 1, 0, 1, 1, -1, 0, 1,         // top edges
        -1, -1, 0, 1, -1, 0, 1, 1, 0, -1, 1, 0;       // vertical edges
    return c;
  }();
  return kind == ElementKind::Quad8 ? quad : hex;
}

namespace {

void shape_quad8(const VecX& xi, VecX& N, MatX& dN) {
  const MatX& lc = element_local_coords(ElementKind::Quad8);
  const double x = xi(0), y = xi(1);
  N.resize(8);
  dN.resize(8, 2);
  for (int i = 0; i < 4; ++i) {
    const double xi_i = lc(i, 0), et_i = lc(i, 1);
    N(i) = 0.25 * (1 + x * xi_i) * (1 + y * et_i) * (x * xi_i + y * et_i - 1);
    dN(i, 0) = 0.25 * xi_i * (1 + y * et_i) * (2 * x * xi_i + y * et_i);
    dN(i, 1) = 0.25 * et_i * (1 + x * xi_i) * (x * xi_i + 2 * y * et_i);
  }
  for (int i = 4; i < 8; ++i) {
    const double xi_i = lc(i, 0), et_i = lc(i, 1);
    if (xi_i == 0.0) {
      N(i) = 0.5 * (1 - x * x) * (1 + y * et_i);
      dN(i, 0) = -x * (1 + y * et_i);
      dN(i, 1) = 0.5 * et_i * (1 - x * x);
    } else {
      N(i) = 0.5 * (1 + x * xi_i) * (1 - y * y);
      dN(i, 0) = 0.5 * xi_i * (1 - y * y);
      dN(i, 1) = -y * (1 + x * xi_i);
    }
  }
}

void shape_hex20(const VecX& xi, VecX& N, MatX& dN) {
  const MatX& lc = element_local_coords(ElementKind::Hex20);
  const double x = xi(0), y = xi(1), z = xi(2);
  N.resize(20);
  dN.resize(20, 3);
  for (int i = 0; i < 8; ++i) {
    const double a = lc(i, 0), b = lc(i, 1), c = lc(i, 2);
    const double fx = 1 + x * a, fy = 1 + y * b, fz = 1 + z * c;
    const double s = x * a + y * b + z * c - 2;
    N(i) = 0.125 * fx * fy * fz * s;
    dN(i, 0) = 0.125 * a * fy * fz * (s + fx);
    dN(i, 1) = 0.125 * b * fx * fz * (s + fy);
    dN(i, 2) = 0.125 * c * fx * fy * (s + fz);
  }
  for (int i = 8; i < 20; ++i) {
    const double a = lc(i, 0), b = lc(i, 1), c = lc(i, 2);
    if (a == 0.0) {
      const double fy = 1 + y * b, fz = 1 + z * c;
      N(i) = 0.25 * (1 - x * x) * fy * fz;
      dN(i, 0) = -0.5 * x * fy * fz;
      dN(i, 1) = 0.25 * b * (1 - x * x) * fz;
      dN(i, 2) = 0.25 * c * (1 - x * x) * fy;
    } else if (b == 0.0) {
      const double fx = 1 + x * a, fz = 1 + z * c;
      N(i) = 0.25 * fx * (1 - y * y) * fz;
      dN(i, 0) = 0.25 * a * (1 - y * y) * fz;
      dN(i, 1) = -0.5 * y * fx * fz;
      dN(i, 2) = 0.25 * c * fx * (1 - y * y);
    } else {
      const double fx = 1 + x * a, fy = 1 + y * b;
      N(i) = 0.25 * fx * fy * (1 - z * z);
      dN(i, 0) = 0.25 * a * fy * (1 - z * z);
      dN(i, 1) = 0.25 * b * fx * (1 - z * z);
      dN(i, 2) = -0.5 * z * fx * fy;
    }
  }
}

}  // namespace

void shape_functions(ElementKind kind, const VecX& xi, VecX& N, MatX& dN) {
  if (kind == ElementKind::Quad8)
    shape_quad8(xi, N, dN);
  else
    shape_hex20(xi, N, dN);
}

const std::vector<GaussPoint>& gauss_rule(ElementKind kind) {
  static const std::array<double, 3> gp = {-std::sqrt(0.6), 0.0,
                                           std::sqrt(0.6)};
  static const std::array<double, 3> gw = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  static const std::vector<GaussPoint> quad = [] {
    std::vector<GaussPoint> pts;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        GaussPoint p;
        p.xi = Vec2(gp[i], gp[j]);
        p.w = gw[i] * gw[j];
        pts.push_back(p);
      }
    return pts;
  }();
  static const std::vector<GaussPoint> hex = [] {
    std::vector<GaussPoint> pts;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
          GaussPoint p;
          p.xi = Vec3(gp[i], gp[j], gp[k]);
          p.w = gw[i] * gw[j] * gw[k];
          pts.push_back(p);
        }
    return pts;
  }();
  return kind == ElementKind::Quad8 ? quad : hex;
}

MatX grad_operator(const MatX& dNdx, int dim) {
  const int n = static_cast<int>(dNdx.rows());
  MatX G = MatX::Zero(dim * dim, n * dim);
  for (int a = 0; a < n; ++a)
    for (int c = 0; c < dim; ++c)
      for (int d = 0; d < dim; ++d) G(c * dim + d, a * dim + c) = dNdx(a, d);
  return G;
}

}  // namespace dprom
