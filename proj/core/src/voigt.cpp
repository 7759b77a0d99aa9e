#include "dprom/voigt.hpp"

#include <fmt/format.h>

namespace dprom {

namespace {

// Table literals are 1-based as is customary for Voigt bookkeeping; convert
// once at static-init time.
std::vector<L3Entry> make3(std::initializer_list<L3Entry> one_based) {
  std::vector<L3Entry> out;
  out.reserve(one_based.size());
  for (const auto& e : one_based) out.push_back({e.j - 1, e.l - 1, e.a - 1, e.v});
  return out;
}

std::vector<L4Entry> make4(std::initializer_list<L4Entry> one_based) {
  std::vector<L4Entry> out;
  out.reserve(one_based.size());
  for (const auto& e : one_based)
    out.push_back({e.j - 1, e.l - 1, e.a - 1, e.b - 1, e.v});
  return out;
}

LTables build_tables_2d() {
  LTables t;
  t.dim = 2;
  t.L1 = make3({
      {1, 1, 1, 1.0},
      {1, 3, 3, 1.0},
      {2, 2, 2, 1.0},
      {2, 4, 4, 1.0},
      {3, 1, 2, 1.0},
      {3, 2, 1, 1.0},
      {3, 3, 4, 1.0},
      {3, 4, 3, 1.0},
  });
  t.L2 = make3({
      {1, 1, 1, 1.0},
      {3, 3, 1, 1.0},
      {3, 1, 2, 1.0},
      {2, 3, 2, 1.0},
      {1, 2, 3, 1.0},
      {3, 4, 3, 1.0},
      {3, 2, 4, 1.0},
      {2, 4, 4, 1.0},
  });
  t.L3 = make4({
      {1, 1, 1, 1, 1.0},  {3, 2, 1, 1, 0.5},  {3, 1, 2, 1, 0.5},
      {1, 3, 3, 1, 1.0},  {3, 4, 3, 1, 0.5},  {3, 3, 4, 1, 0.5},
      {3, 1, 1, 2, 1.0},  {2, 2, 1, 2, 0.5},  {2, 1, 2, 2, 0.5},
      {3, 3, 3, 2, 1.0},  {2, 4, 3, 2, 0.5},  {2, 3, 4, 2, 0.5},
      {1, 2, 1, 3, 0.5},  {1, 1, 2, 3, 0.5},  {3, 2, 2, 3, 1.0},
      {1, 4, 3, 3, 0.5},  {1, 3, 4, 3, 0.5},  {3, 4, 4, 3, 1.0},
      {3, 2, 1, 4, 0.5},  {3, 1, 2, 4, 0.5},  {2, 2, 2, 4, 1.0},
      {3, 4, 3, 4, 0.5},  {3, 3, 4, 4, 0.5},  {2, 4, 4, 4, 1.0},
  });
  return t;
}

LTables build_tables_3d() {
  LTables t;
  t.dim = 3;
  t.L1 = make3({
      {1, 1, 1, 1.0}, {4, 2, 1, 1.0}, {5, 3, 1, 1.0},
      {4, 1, 2, 1.0}, {2, 2, 2, 1.0}, {6, 3, 2, 1.0},
      {5, 1, 3, 1.0}, {6, 2, 3, 1.0}, {3, 3, 3, 1.0},
      {1, 4, 4, 1.0}, {4, 5, 4, 1.0}, {5, 6, 4, 1.0},
      {4, 4, 5, 1.0}, {2, 5, 5, 1.0}, {6, 6, 5, 1.0},
      {5, 4, 6, 1.0}, {6, 5, 6, 1.0}, {3, 6, 6, 1.0},
      {1, 7, 7, 1.0}, {4, 8, 7, 1.0}, {5, 9, 7, 1.0},
      {4, 7, 8, 1.0}, {2, 8, 8, 1.0}, {6, 9, 8, 1.0},
      {5, 7, 9, 1.0}, {6, 8, 9, 1.0}, {3, 9, 9, 1.0},
  });
  t.L2 = make3({
      {1, 1, 1, 1.0}, {4, 4, 1, 1.0}, {5, 7, 1, 1.0},
      {4, 1, 2, 1.0}, {2, 4, 2, 1.0}, {6, 7, 2, 1.0},
      {5, 1, 3, 1.0}, {6, 4, 3, 1.0}, {3, 7, 3, 1.0},
      {1, 2, 4, 1.0}, {4, 5, 4, 1.0}, {5, 8, 4, 1.0},
      {4, 2, 5, 1.0}, {2, 5, 5, 1.0}, {6, 8, 5, 1.0},
      {5, 2, 6, 1.0}, {6, 5, 6, 1.0}, {3, 8, 6, 1.0},
      {1, 3, 7, 1.0}, {4, 6, 7, 1.0}, {5, 9, 7, 1.0},
      {4, 3, 8, 1.0}, {2, 6, 8, 1.0}, {6, 9, 8, 1.0},
      {5, 3, 9, 1.0}, {6, 6, 9, 1.0}, {3, 9, 9, 1.0},
  });
  t.L3 = make4({
      {1, 1, 1, 1, 1.0}, {4, 2, 1, 1, 0.5}, {5, 3, 1, 1, 0.5},
      {4, 1, 2, 1, 0.5}, {5, 1, 3, 1, 0.5}, {1, 4, 4, 1, 1.0},
      {4, 5, 4, 1, 0.5}, {5, 6, 4, 1, 0.5}, {4, 4, 5, 1, 0.5},
      {5, 4, 6, 1, 0.5}, {1, 7, 7, 1, 1.0}, {4, 8, 7, 1, 0.5},
      {5, 9, 7, 1, 0.5}, {4, 7, 8, 1, 0.5}, {5, 7, 9, 1, 0.5},
      {4, 1, 1, 2, 1.0}, {2, 2, 1, 2, 0.5}, {6, 3, 1, 2, 0.5},
      {2, 1, 2, 2, 0.5}, {6, 1, 3, 2, 0.5}, {4, 4, 4, 2, 1.0},
      {2, 5, 4, 2, 0.5}, {6, 6, 4, 2, 0.5}, {2, 4, 5, 2, 0.5},
      {6, 4, 6, 2, 0.5}, {4, 7, 7, 2, 1.0}, {2, 8, 7, 2, 0.5},
      {6, 9, 7, 2, 0.5}, {2, 7, 8, 2, 0.5}, {6, 7, 9, 2, 0.5},
      {5, 1, 1, 3, 1.0}, {6, 2, 1, 3, 0.5}, {3, 3, 1, 3, 0.5},
      {6, 1, 2, 3, 0.5}, {3, 1, 3, 3, 0.5}, {5, 4, 4, 3, 1.0},
      {6, 5, 4, 3, 0.5}, {3, 6, 4, 3, 0.5}, {6, 4, 5, 3, 0.5},
      {3, 4, 6, 3, 0.5}, {5, 7, 7, 3, 1.0}, {6, 8, 7, 3, 0.5},
      {3, 9, 7, 3, 0.5}, {6, 7, 8, 3, 0.5}, {3, 7, 9, 3, 0.5},
      {1, 2, 1, 4, 0.5}, {1, 1, 2, 4, 0.5}, {4, 2, 2, 4, 1.0},
      {5, 3, 2, 4, 0.5}, {5, 2, 3, 4, 0.5}, {1, 5, 4, 4, 0.5},
      {1, 4, 5, 4, 0.5}, {4, 5, 5, 4, 1.0}, {5, 6, 5, 4, 0.5},
      {5, 5, 6, 4, 0.5}, {1, 8, 7, 4, 0.5}, {1, 7, 8, 4, 0.5},
      {4, 8, 8, 4, 1.0}, {5, 9, 8, 4, 0.5}, {5, 8, 9, 4, 0.5},
      {4, 2, 1, 5, 0.5}, {4, 1, 2, 5, 0.5}, {2, 2, 2, 5, 1.0},
      {6, 3, 2, 5, 0.5}, {6, 2, 3, 5, 0.5}, {4, 5, 4, 5, 0.5},
      {4, 4, 5, 5, 0.5}, {2, 5, 5, 5, 1.0}, {6, 6, 5, 5, 0.5},
      {6, 5, 6, 5, 0.5}, {4, 8, 7, 5, 0.5}, {4, 7, 8, 5, 0.5},
      {2, 8, 8, 5, 1.0}, {6, 9, 8, 5, 0.5}, {6, 8, 9, 5, 0.5},
      {5, 2, 1, 6, 0.5}, {5, 1, 2, 6, 0.5}, {6, 2, 2, 6, 1.0},
      {3, 3, 2, 6, 0.5}, {3, 2, 3, 6, 0.5}, {5, 5, 4, 6, 0.5},
      {5, 4, 5, 6, 0.5}, {6, 5, 5, 6, 1.0}, {3, 6, 5, 6, 0.5},
      {3, 5, 6, 6, 0.5}, {5, 8, 7, 6, 0.5}, {5, 7, 8, 6, 0.5},
      {6, 8, 8, 6, 1.0}, {3, 9, 8, 6, 0.5}, {3, 8, 9, 6, 0.5},
      {1, 3, 1, 7, 0.5}, {4, 3, 2, 7, 0.5}, {1, 1, 3, 7, 0.5},
      {4, 2, 3, 7, 0.5}, {5, 3, 3, 7, 1.0}, {1, 6, 4, 7, 0.5},
      {4, 6, 5, 7, 0.5}, {1, 4, 6, 7, 0.5}, {4, 5, 6, 7, 0.5},
      {5, 6, 6, 7, 1.0}, {1, 9, 7, 7, 0.5}, {4, 9, 8, 7, 0.5},
      {1, 7, 9, 7, 0.5}, {4, 8, 9, 7, 0.5}, {5, 9, 9, 7, 1.0},
      {4, 3, 1, 8, 0.5}, {2, 3, 2, 8, 0.5}, {4, 1, 3, 8, 0.5},
      {2, 2, 3, 8, 0.5}, {6, 3, 3, 8, 1.0}, {4, 6, 4, 8, 0.5},
      {2, 6, 5, 8, 0.5}, {4, 4, 6, 8, 0.5}, {2, 5, 6, 8, 0.5},
      {6, 6, 6, 8, 1.0}, {4, 9, 7, 8, 0.5}, {2, 9, 8, 8, 0.5},
      {4, 7, 9, 8, 0.5}, {2, 8, 9, 8, 0.5}, {6, 9, 9, 8, 1.0},
      {5, 3, 1, 9, 0.5}, {6, 3, 2, 9, 0.5}, {5, 1, 3, 9, 0.5},
      {6, 2, 3, 9, 0.5}, {3, 3, 3, 9, 1.0}, {5, 6, 4, 9, 0.5},
      {6, 6, 5, 9, 0.5}, {5, 4, 6, 9, 0.5}, {6, 5, 6, 9, 0.5},
      {3, 6, 6, 9, 1.0}, {5, 9, 7, 9, 0.5}, {6, 9, 8, 9, 0.5},
      {5, 7, 9, 9, 0.5}, {6, 8, 9, 9, 0.5}, {3, 9, 9, 9, 1.0},
  });
  return t;
}

MatX apply_table(const std::vector<L3Entry>& tab, const VecX& v, int s, int g,
                 double sign) {
  MatX out = MatX::Zero(s, g);
  for (const auto& e : tab) out(e.j, e.l) += sign * e.v * v(e.a);
  return out;
}

}  // namespace

const LTables& l_tables(int dim) {
  static const LTables t2 = build_tables_2d();
  static const LTables t3 = build_tables_3d();
  if (dim == 2) return t2;
  if (dim == 3) return t3;
  throw Error(fmt::format("l_tables: unsupported dimension {}", dim));
}

MatX voigt_H(int dim) {
  if (dim == 2) {
    MatX H = MatX::Zero(3, 4);
    H(0, 0) = 1.0;
    H(1, 3) = 1.0;
    H(2, 1) = 1.0;
    H(2, 2) = 1.0;
    return H;
  }
  MatX H = MatX::Zero(6, 9);
  H(0, 0) = 1.0;
  H(1, 4) = 1.0;
  H(2, 8) = 1.0;
  H(3, 1) = 1.0;
  H(3, 3) = 1.0;
  H(4, 2) = 1.0;
  H(4, 6) = 1.0;
  H(5, 5) = 1.0;
  H(5, 7) = 1.0;
  return H;
}

MatX build_A1(const VecX& theta, int dim) {
  return apply_table(l_tables(dim).L1, theta, voigt_size(dim), grad_size(dim),
                     1.0);
}

MatX build_A2_N1(const VecX& theta_d, int dim) {
  return apply_table(l_tables(dim).L2, theta_d, voigt_size(dim),
                     grad_size(dim), -1.0);
}

MatX build_A2_N0(const VecX& theta_d, int dim) {
  return build_A1(theta_d, dim);
}

MatX build_A3(const VecX& d, int dim) {
  const int s = voigt_size(dim);
  MatX A = MatX::Zero(s, s);
  if (dim == 2) {
    const double ux = d(0), uy = d(1), vx = d(2), vy = d(3);
    A(0, 0) = ux;
    A(0, 2) = 0.5 * vx;
    A(1, 1) = vy;
    A(1, 2) = 0.5 * uy;
    A(2, 0) = uy;
    A(2, 1) = vx;
    A(2, 2) = 0.5 * (ux + vy);
    return -A;
  }
  const double ux = d(0), uy = d(1), uz = d(2);
  const double vx = d(3), vy = d(4), vz = d(5);
  const double wx = d(6), wy = d(7), wz = d(8);
  A(0, 0) = 2 * ux;
  A(0, 3) = vx;
  A(0, 4) = wx;
  A(1, 1) = 2 * vy;
  A(1, 3) = uy;
  A(1, 5) = wy;
  A(2, 2) = 2 * wz;
  A(2, 4) = uz;
  A(2, 5) = vz;
  A(3, 0) = 2 * uy;
  A(3, 1) = 2 * vx;
  A(3, 3) = ux + vy;
  A(3, 4) = wy;
  A(3, 5) = wx;
  A(4, 0) = 2 * uz;
  A(4, 2) = 2 * wx;
  A(4, 3) = vz;
  A(4, 4) = ux + wz;
  A(4, 5) = vx;
  A(5, 1) = 2 * vz;
  A(5, 2) = 2 * wy;
  A(5, 3) = uz;
  A(5, 4) = uy;
  A(5, 5) = vy + wz;
  return -0.5 * A;
}

MatX elasticity_matrix(double E, double nu, int dim) {
  const double c = E / ((1.0 + nu) * (1.0 - 2.0 * nu));
  if (dim == 2) {
    MatX C = MatX::Zero(3, 3);
    C(0, 0) = C(1, 1) = c * (1.0 - nu);
    C(0, 1) = C(1, 0) = c * nu;
    C(2, 2) = c * (1.0 - 2.0 * nu) / 2.0;
    return C;
  }
  MatX C = MatX::Zero(6, 6);
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) C(i, k) = (i == k) ? c * (1.0 - nu) : c * nu;
  for (int i = 3; i < 6; ++i) C(i, i) = c * (1.0 - 2.0 * nu) / 2.0;
  return C;
}

ModelSpec parse_model_spec(const std::string& name) {
  ModelSpec spec;
  std::string base = name;
  if (base.size() > 2 && base.substr(base.size() - 2) == "-v") {
    spec.volume_correction = true;
    base = base.substr(0, base.size() - 2);
  }
  if (base == "Exact" || base == "exact")
    spec.variant = Variant::Exact;
  else if (base == "N0")
    spec.variant = Variant::N0;
  else if (base == "N1")
    spec.variant = Variant::N1;
  else if (base == "N1t")
    spec.variant = Variant::N1t;
  else
    throw ConfigError(fmt::format("unknown model variant '{}'", name));
  if (spec.variant == Variant::Exact && spec.volume_correction)
    throw ConfigError("volume correction is only defined for expanded variants");
  return spec;
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Exact:
      return "Exact";
    case Variant::N0:
      return "N0";
    case Variant::N1:
      return "N1";
    case Variant::N1t:
      return "N1t";
  }
  return "?";
}

std::string to_string(const ModelSpec& spec) {
  return to_string(spec.variant) + (spec.volume_correction ? "-v" : "");
}

}  // namespace dprom
