#pragma once

#include <string>
#include <vector>

#include "dprom/basis.hpp"
#include "dprom/config.hpp"
#include "dprom/defects.hpp"
#include "dprom/mesh.hpp"
#include "dprom/solvers.hpp"
#include "dprom/tensors.hpp"

namespace dprom {

// Physical observation point: a mesh node plus a coordinate direction. The
// node must exist (probes sit on nodes) and must not be constrained.
struct ProbeDef {
  std::string name;
  int node = -1;
  int dir = 0;
  int free_dof = -1;
};

// A fully validated scenario: mesh, defect shapes, model list, analysis type
// and its settings. Produced from a config file by load_scenario.
struct ScenarioDef {
  std::string name;
  std::string analysis;             // static | frf | backbone | transient
  std::vector<std::string> models;  // "ROM-d" or a variant spec like "N1-v"

  NominalMesh mesh;
  DefectBasis defects;
  MatX xi_grid;  // one row per grid point, one column per defect shape

  BasisRecipe recipe;       // parametric models
  BasisRecipe romd_recipe;  // per-defect rebuilt models (no defect columns)

  // Rayleigh damping: either backed out of a quality factor at the first two
  // nominal eigenfrequencies, or given directly.
  double quality = 0.0;
  double alpha = 0.0, beta = 0.0;

  // Point force (empty when the analysis does not force the structure).
  VecX force_free;

  std::vector<ProbeDef> probes;
  double amp_ref = 1.0;  // divisor for the normalized amplitude columns

  HBConfig hb;
  ContinuationConfig cont;
  double omega_lo = 0.9, omega_hi = 1.1;  // sweep range, x reference resonance

  int bb_coord = 0;  // dominant reduced coordinate of the backbone
  double bb_amp_lo = 0.0, bb_amp_hi = 0.0;  // physical probe amplitudes
  int bb_points = 15;

  int static_steps = 10;

  int tr_periods = 10;
  int tr_steps_per_period = 100;
  double tr_omega = 1.0;  // x reference resonance

  std::string config_hash;
  std::string build_hash;  // hash of the construction-relevant sections only
};

// Parses and validates; consumes every key and rejects unknown ones.
ScenarioDef load_scenario(ConfigFile& cfg);

struct RunOptions {
  std::string out_dir;
  std::string snapshot_dir;  // empty picks out_dir
  int jobs = 1;
  unsigned long long seed = 0;
  bool build_only = false;  // stop after bases and tensors are ready
};

struct ModelTiming {
  std::string model;
  double t_construction = 0.0;  // basis and tensor assembly, seconds
  double t_simulation = 0.0;    // accumulated solve time over the grid
  int tensor_builds = 0;
  bool snapshot_hit = false;
};

struct RunReport {
  std::string out_dir;
  std::vector<std::string> files;
  std::vector<ModelTiming> timing;
  std::vector<double> omega_ref;  // defected full-model first resonance
};

RunReport run_scenario(const ScenarioDef& sc, const RunOptions& opt);

std::string fnv1a_hex(const std::string& text);

}  // namespace dprom
