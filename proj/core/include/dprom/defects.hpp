#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dprom/mesh.hpp"
#include "dprom/types.hpp"

namespace dprom {

// A unit-amplitude defect displacement field. Amplitudes scale these shapes
// linearly; the shape itself fixes what "amplitude one" means physically
// (e.g. one beam thickness of midspan rise).
struct DefectShape {
  std::string name;
  std::function<VecX(const VecX& x)> disp;
  // Analytic divergence, used by the first-order volume correction. Leave
  // empty to fall back on the interpolated finite element gradient.
  std::function<double(const VecX& x)> divergence;
  bool isochoric = false;
};

// Nodal samples of a set of defect shapes on a given mesh.
struct DefectBasis {
  MatX U;  // n_dofs x count, node-major component order, includes fixed dofs
  std::vector<std::string> names;
  std::vector<bool> isochoric;
  std::vector<std::function<double(const VecX&)>> divergence;

  int count() const { return static_cast<int>(U.cols()); }
  bool has_analytic_div(int i) const { return bool(divergence[i]); }
};

DefectBasis sample_defects(const NominalMesh& mesh,
                           const std::vector<DefectShape>& shapes);

// Curved-axis imperfection of a straight strip: a transverse sine bow with
// zero axial and thickness stretch, exactly volume preserving.
DefectShape make_arch_defect(double lx, double amplitude);

// Linear thickness taper of a strip segment: transverse displacement odd in
// the thickness coordinate, modulated along the axis. Changes local volume;
// divergence is analytic.
DefectShape make_beam_taper_defect(double x0, double length, double y_mid,
                                   double half_width, double amplitude,
                                   int axial_coord = 0, int span_coord = 1);

// Tilt of nominally vertical side walls: in-plane shift proportional to the
// distance from the mid-plane. Volume preserving.
DefectShape make_wall_angle_defect(double angle_deg, double z_mid);

// Nodal defect columns from a file (see README for the format); divergence
// falls back to the interpolated gradient.
DefectBasis read_defect_file(const NominalMesh& mesh, const std::string& path);

}  // namespace dprom
