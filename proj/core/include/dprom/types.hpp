#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <stdexcept>
#include <string>

namespace dprom {

using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Strain approximation used for the internal force law. Exact keeps the full
// Green-Lagrange strain of the two-step (defect, then deformation) map and is
// not polynomial in the defect amplitude; the others expand the inverse defect
// gradient to fixed order so that stiffness becomes polynomial and reducible
// to precomputed tensors.
enum class Variant { Exact, N0, N1, N1t };

// Where variant integrals are evaluated: over the nominal volume, or over the
// defected volume by carrying the defect Jacobian determinant into the
// quadrature weights.
enum class QuadDomain { Nominal, Defected };

struct ModelSpec {
  Variant variant = Variant::N1;
  bool volume_correction = false;
};

ModelSpec parse_model_spec(const std::string& name);
std::string to_string(const ModelSpec& spec);
std::string to_string(Variant v);

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct MeshError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};
struct SolveError : Error {
  using Error::Error;
};

struct MaterialParams {
  double E = 0.0;
  double nu = 0.0;
  double rho = 0.0;
};

}  // namespace dprom
