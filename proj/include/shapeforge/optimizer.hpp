#pragma once

#include "shapeforge/descent.hpp"
#include "shapeforge/fem.hpp"
#include "shapeforge/geometry.hpp"
#include "shapeforge/physics.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace shapeforge {

/// Everything that stays fixed while the rotor is reshaped.
struct Problem {
  Mesh initial;
  RegionMap regions;
  Reluctivity material = Reluctivity::brauer_default();
  CurrentExcitation excitation;
  TorqueFunctional torque;
  double axial_length = 0.05;
  /// Fixed air regions next to the design region whose interior nodes follow
  /// the boundary motion (mesh motion only, see extend_mesh_motion).
  std::set<int> motion_regions;

  static Problem from_model(const MachineModel& model, const Reluctivity& material);
};

struct Evaluation {
  ScalarField u;
  double torque = 0.0;      ///< N m
  double volume_m3 = 0.0;   ///< rotor iron volume
  int newton_iterations = 0;
};

/// Solves the state on `mesh` starting from `warm` (zero if sizes differ).
Evaluation evaluate(const Problem& problem, const Mesh& mesh, const ScalarField& warm, const NewtonOptions& newton);

struct GradientCheckRow {
  int trial = 0;
  std::uint64_t seed = 0;
  double torque_assembled = 0.0;  ///< d(-T)(V), N m
  double torque_fd = 0.0;
  double torque_error = 0.0;      ///< relative to the difference quotient
  double volume_assembled = 0.0;  ///< d(area)(V) of the rotor iron, m^2
  double volume_fd = 0.0;
  double volume_error = 0.0;
};

/// Compares assembled torque and volume derivatives with central differences
/// along `trials` random design fields; trial i uses seed + i.
std::vector<GradientCheckRow> check_gradients(const Problem& problem, int trials, std::uint64_t seed,
                                              const NewtonOptions& newton);

enum class RunStatus { Converged, MaxIter, StepFloor, MeshDegenerate, ParetoCritical, StationaryAtStart };

std::string to_string(RunStatus status);

/// Row k describes design k: objective values there, the direction computed
/// there and the step accepted from it (0 on the last row).
struct IterationRecord {
  int iter = 0;
  double j1 = 0.0;         ///< -torque, N m
  double j2 = 0.0;         ///< rotor iron volume, m^3
  double t = 0.0;
  double norm_w = 0.0;
  double min_quality = 0.0;
  double seconds = 0.0;
  double rho = 0.0;        ///< QP value (bi-objective runs only)
  double slope1 = 0.0;     ///< dJ1(W) for the direction computed at this design
  double slope2 = 0.0;
};

struct RunHistory {
  std::vector<IterationRecord> records;
  RunStatus status = RunStatus::MaxIter;

  void write_csv(const std::filesystem::path& path) const;
};

struct OptimizerOptions {
  int max_iter = 70;
  double tol = 1e-8;              ///< stop when the direction norm falls below
  int step_floor_exponent = 30;   ///< smallest step is 2^-exponent
  double quality_fraction = 0.2;  ///< reject trial meshes below this fraction of the initial min quality
  double bi_quality_fraction = 0.0;  ///< same for bi-objective runs; 0 only rejects inverted meshes
  bool snap_circles = true;       ///< project sliding circle nodes back onto their radius
  bool mesh_motion = true;        ///< extend steps into Problem::motion_regions
  bool slide_extension = true;    ///< bi-objective extension lets boundary nodes without data slide
  DescentMetric metric;
  NewtonOptions newton;
  double volume_scale = 1e6;      ///< volume unit in the bi-objective functional (1e6: cm^3)
  /// Called once per record with the design it describes; the flag marks the last one.
  std::function<void(const IterationRecord&, const Mesh&, const ScalarField&, bool)> observer;
};

struct RunResult {
  Mesh mesh;
  ScalarField u;
  RunHistory history;
};

/// Steepest descent on -torque with the metric descent direction.
RunResult optimize_single(const Problem& problem, const OptimizerOptions& options);

/// Multiple-gradient descent on (-torque, w * volume) over interface nodes,
/// extended harmonically into the design region.
RunResult optimize_bi(const Problem& problem, double weight, const OptimizerOptions& options);

struct ParetoPoint {
  double weight = 0.0;
  double torque = 0.0;
  double volume_m3 = 0.0;
  int iterations = 0;
  RunStatus status = RunStatus::MaxIter;
  std::filesystem::path snapshot;
  bool dominated = false;
  std::string error;  ///< non-empty if the run failed; the other fields are then unset

  bool failed() const { return !error.empty(); }
};

/// One bi-objective run per weight from the same initial design, sorted by
/// weight with duplicates dropped. Writes pareto.csv, one mesh snapshot and
/// one history per weight into `out_dir`. A failing run is recorded in its
/// point and does not stop the others.
std::vector<ParetoPoint> pareto_sweep(const Problem& problem, std::vector<double> weights,
                                      const OptimizerOptions& options, const std::filesystem::path& out_dir,
                                      int jobs = 1);

/// Marks points dominated by another point (torque no lower and volume no
/// higher, one of them strictly). Failed points take no part.
void mark_dominated(std::vector<ParetoPoint>& points);

}  // namespace shapeforge
