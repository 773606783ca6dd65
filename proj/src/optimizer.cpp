#include "shapeforge/optimizer.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace shapeforge {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct Trial {
  Mesh mesh;
  Evaluation eval;
  double t = 0.0;
};

enum class SearchOutcome { Accepted, NoDecrease, NoValidMesh };

// Halves t from 1 until `accept` holds on a valid trial design. Trial meshes
// must keep their orientation and stay above the quality floor; trials where
// Newton fails count as invalid.
template <typename Accept>
SearchOutcome line_search(const Problem& problem, const Mesh& mesh, const DeformationField& w,
                          const Evaluation& current, const OptimizerOptions& options,
                          const DesignConstraints& reference, double quality_floor, Accept accept, Trial& out) {
  const DeformationField moved =
      options.mesh_motion ? extend_mesh_motion(w, mesh, problem.motion_regions, options.metric.quality_stiffening) : w;
  bool any_valid = false;
  for (int e = 0; e <= options.step_floor_exponent; ++e) {
    const double t = std::ldexp(1.0, -e);
    auto trial = try_deform(mesh, moved, t);
    if (trial && options.snap_circles) trial = snap_to_circles(*trial, reference);
    if (!trial || min_quality(*trial) < quality_floor) continue;
    Evaluation ev;
    try {
      ev = evaluate(problem, *trial, current.u, options.newton);
    } catch (const SolverError& err) {
      spdlog::debug("line search: state solve failed at t = 2^-{}: {}", e, err.what());
      continue;
    }
    any_valid = true;
    if (accept(ev)) {
      out = Trial{std::move(*trial), std::move(ev), t};
      return SearchOutcome::Accepted;
    }
  }
  return any_valid ? SearchOutcome::NoDecrease : SearchOutcome::NoValidMesh;
}

IterationRecord start_record(int k, const Mesh& mesh, const Evaluation& ev, const Stopwatch& clock) {
  IterationRecord rec;
  rec.iter = k;
  rec.j1 = -ev.torque;
  rec.j2 = ev.volume_m3;
  rec.min_quality = min_quality(mesh);
  rec.seconds = clock.seconds();
  rec.rho = kNaN;
  rec.slope2 = kNaN;
  return rec;
}

void log_record(const char* mode, const IterationRecord& r) {
  spdlog::info("{} iter {:3d}  torque {:.6f} N m  volume {:.6e} m^3  |W| {:.3e}  t {:.3e}  q {:.3f}", mode, r.iter,
               -r.j1, r.j2, r.norm_w, r.t, r.min_quality);
}

std::string weight_label(double w) {
  std::ostringstream os;
  os << w;
  return os.str();
}

}  // namespace

Problem Problem::from_model(const MachineModel& model, const Reluctivity& material) {
  Problem p;
  p.initial = model.mesh;
  p.regions = model.regions;
  p.material = material;
  p.excitation = model.excitation;
  p.torque = model.torque;
  p.axial_length = model.spec.axial_length;
  p.motion_regions = {region_id::kAirgapInner, region_id::kShaft};
  return p;
}

Evaluation evaluate(const Problem& problem, const Mesh& mesh, const ScalarField& warm, const NewtonOptions& newton) {
  const ScalarField start = warm.size() == mesh.num_nodes() ? warm : ScalarField::zero(mesh);
  auto res = newton_solve(mesh, problem.regions, problem.material, problem.excitation, start, newton);
  Evaluation ev;
  ev.torque = torque_fem(mesh, res.u, problem.torque);
  ev.volume_m3 = volume(mesh, problem.regions) * problem.axial_length;
  ev.newton_iterations = res.iterations;
  ev.u = std::move(res.u);
  return ev;
}

std::vector<GradientCheckRow> check_gradients(const Problem& problem, int trials, std::uint64_t seed,
                                              const NewtonOptions& newton) {
  std::vector<GradientCheckRow> rows;
  if (trials <= 0) return rows;
  NewtonOptions tight = newton;
  tight.tol = std::min(tight.tol, 1e-12);
  const Mesh& mesh = problem.initial;
  const Evaluation base = evaluate(problem, mesh, ScalarField{}, tight);
  const auto p = solve_adjoint(mesh, problem.regions, problem.material, base.u, problem.torque, tight.linear);
  const auto g_torque = shape_derivative_torque(mesh, problem.regions, problem.material, base.u, p);
  const auto g_volume = shape_derivative_volume(mesh, problem.regions);
  const DesignObjective neg_torque = [&](const Mesh& m) { return -evaluate(problem, m, base.u, tight).torque; };
  const DesignObjective area = [&](const Mesh& m) { return volume(m, problem.regions); };
  const auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); };

  for (int i = 0; i < trials; ++i) {
    GradientCheckRow row;
    row.trial = i;
    row.seed = seed + static_cast<std::uint64_t>(i);
    const auto v = random_design_field(mesh, problem.regions, row.seed);
    row.torque_assembled = g_torque.pair(v);
    row.torque_fd = fd_shape_derivative(neg_torque, mesh, v).value;
    row.torque_error = rel(row.torque_assembled, row.torque_fd);
    row.volume_assembled = g_volume.pair(v);
    row.volume_fd = fd_shape_derivative(area, mesh, v).value;
    row.volume_error = rel(row.volume_assembled, row.volume_fd);
    spdlog::debug("gradient trial {}: torque {:.3e} volume {:.3e}", i, row.torque_error, row.volume_error);
    rows.push_back(row);
  }
  return rows;
}

std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::Converged: return "converged";
    case RunStatus::MaxIter: return "max_iter";
    case RunStatus::StepFloor: return "step_floor";
    case RunStatus::MeshDegenerate: return "mesh_degenerate";
    case RunStatus::ParetoCritical: return "pareto_critical";
    case RunStatus::StationaryAtStart: return "stationary_at_start";
  }
  return "unknown";
}

void RunHistory::write_csv(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << std::setprecision(12);
  os << "iter,J1,J2,t,normW,min_quality,seconds,rho,slope1,slope2\n";
  for (const auto& r : records) {
    os << r.iter << ',' << r.j1 << ',' << r.j2 << ',' << r.t << ',' << r.norm_w << ',' << r.min_quality << ','
       << r.seconds << ',' << r.rho << ',' << r.slope1 << ',' << r.slope2 << '\n';
  }
}

RunResult optimize_single(const Problem& problem, const OptimizerOptions& options) {
  const Stopwatch clock;
  Mesh mesh = problem.initial;
  const auto reference = design_constraints(mesh, problem.regions, options.metric.clamped_markers);
  const double quality_floor = options.quality_fraction * min_quality(mesh);
  Evaluation cur = evaluate(problem, mesh, ScalarField{}, options.newton);
  RunHistory history;

  for (int k = 0;; ++k) {
    IterationRecord rec = start_record(k, mesh, cur, clock);
    const auto p = solve_adjoint(mesh, problem.regions, problem.material, cur.u, problem.torque, options.newton.linear);
    const auto g = shape_derivative_torque(mesh, problem.regions, problem.material, cur.u, p);
    auto dir = descent_bvp(g, options.metric, mesh, problem.regions);
    rec.norm_w = dir.metric_norm;
    rec.slope1 = dir.slope;

    if (dir.metric_norm < options.tol) {
      history.status = RunStatus::Converged;
    } else if (k == options.max_iter) {
      history.status = RunStatus::MaxIter;
    } else {
      Trial trial;
      const auto outcome =
          line_search(problem, mesh, dir.field, cur, options, reference, quality_floor,
                      [&](const Evaluation& ev) { return -ev.torque < -cur.torque; }, trial);
      if (outcome == SearchOutcome::Accepted) {
        rec.t = trial.t;
        history.records.push_back(rec);
        log_record("single", rec);
        if (options.observer) options.observer(rec, mesh, cur.u, false);
        mesh = std::move(trial.mesh);
        cur = std::move(trial.eval);
        continue;
      }
      history.status = outcome == SearchOutcome::NoDecrease ? RunStatus::StepFloor : RunStatus::MeshDegenerate;
    }
    history.records.push_back(rec);
    log_record("single", rec);
    if (options.observer) options.observer(rec, mesh, cur.u, true);
    break;
  }
  spdlog::info("single-objective run finished: {}", to_string(history.status));
  return {std::move(mesh), std::move(cur.u), std::move(history)};
}

RunResult optimize_bi(const Problem& problem, double weight, const OptimizerOptions& options) {
  if (!(weight >= 0.0) || !std::isfinite(weight)) throw std::invalid_argument("weight must be finite and >= 0");
  const Stopwatch clock;
  Mesh mesh = problem.initial;
  const auto& clamped = options.metric.clamped_markers;
  const auto reference = design_constraints(mesh, problem.regions, clamped);
  const double quality_floor = options.bi_quality_fraction * min_quality(mesh);
  const double j2_scale = weight * options.volume_scale;
  // A zero weight makes the second objective constant; it then places no
  // constraint on the direction and cannot decrease strictly.
  const bool second_active = weight > 0.0;
  Evaluation cur = evaluate(problem, mesh, ScalarField{}, options.newton);
  RunHistory history;

  for (int k = 0;; ++k) {
    IterationRecord rec = start_record(k, mesh, cur, clock);
    const auto p = solve_adjoint(mesh, problem.regions, problem.material, cur.u, problem.torque, options.newton.linear);
    const auto g1 = shape_derivative_torque(mesh, problem.regions, problem.material, cur.u, p);
    const auto g2 = shape_derivative_volume(mesh, problem.regions).scaled(j2_scale * problem.axial_length);
    std::vector<ShapeGradient> grads{g1};
    if (second_active) grads.push_back(g2);
    const auto qp = build_interface_qp(grads, mesh, problem.regions, clamped);
    const auto sol = solve_bi_descent_qp(qp.problem);
    const auto w_interface = interface_field(qp, sol.w, mesh.num_nodes());
    rec.norm_w = sol.w.norm();
    rec.rho = sol.rho;
    rec.slope1 = g1.pair(w_interface);
    rec.slope2 = g2.pair(w_interface);
    spdlog::debug("bi iter {}: rho {:.3e}  dJ1 {:.3e}  dJ2 {:.3e}  lambda {}", k, sol.rho, rec.slope1, rec.slope2,
                  sol.lambda[0]);

    if (rec.norm_w < options.tol) {
      history.status = k == 0 ? RunStatus::StationaryAtStart : RunStatus::Converged;
    } else if (k == options.max_iter) {
      history.status = RunStatus::MaxIter;
    } else {
      const ExtensionOptions ext{options.slide_extension, options.metric.quality_stiffening, clamped};
      const auto field = harmonic_extension(w_interface, qp.nodes, mesh, problem.regions, ext);
      Trial trial;
      const auto accept = [&](const Evaluation& ev) {
        return -ev.torque < -cur.torque && (!second_active || ev.volume_m3 < cur.volume_m3);
      };
      const auto outcome = line_search(problem, mesh, field, cur, options, reference, quality_floor, accept, trial);
      if (outcome == SearchOutcome::Accepted) {
        rec.t = trial.t;
        history.records.push_back(rec);
        log_record("bi", rec);
        if (options.observer) options.observer(rec, mesh, cur.u, false);
        mesh = std::move(trial.mesh);
        cur = std::move(trial.eval);
        continue;
      }
      history.status = outcome == SearchOutcome::NoDecrease ? RunStatus::ParetoCritical : RunStatus::MeshDegenerate;
    }
    history.records.push_back(rec);
    log_record("bi", rec);
    if (options.observer) options.observer(rec, mesh, cur.u, true);
    break;
  }
  spdlog::info("bi-objective run (w = {}) finished: {}", weight, to_string(history.status));
  return {std::move(mesh), std::move(cur.u), std::move(history)};
}

void mark_dominated(std::vector<ParetoPoint>& points) {
  for (auto& a : points) {
    a.dominated = false;
    if (a.failed()) continue;
    for (const auto& b : points) {
      if (b.failed()) continue;
      const bool no_worse = b.torque >= a.torque && b.volume_m3 <= a.volume_m3;
      const bool better = b.torque > a.torque || b.volume_m3 < a.volume_m3;
      if (no_worse && better) a.dominated = true;
    }
  }
}

std::vector<ParetoPoint> pareto_sweep(const Problem& problem, std::vector<double> weights,
                                      const OptimizerOptions& options, const std::filesystem::path& out_dir,
                                      int jobs) {
  if (weights.empty()) throw std::invalid_argument("pareto sweep needs at least one weight");
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("weights must be finite and >= 0");
  }
  std::sort(weights.begin(), weights.end());
  const auto last = std::unique(weights.begin(), weights.end());
  if (last != weights.end()) spdlog::warn("dropping {} duplicate weight(s)", weights.end() - last);
  weights.erase(last, weights.end());
  std::filesystem::create_directories(out_dir);

  std::vector<ParetoPoint> points(weights.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i; (i = next++) < weights.size();) {
      try {
        const double w = weights[i];
        auto run = optimize_bi(problem, w, options);
        const std::string label = weight_label(w);
        auto& pt = points[i];
        pt.weight = w;
        pt.torque = -run.history.records.back().j1;
        pt.volume_m3 = run.history.records.back().j2;
        pt.iterations = static_cast<int>(run.history.records.size()) - 1;
        pt.status = run.history.status;
        pt.snapshot = out_dir / ("design_w" + label + ".mesh");
        write_mesh(run.mesh, pt.snapshot);
        write_vtk(run.mesh, {{"u", run.u}}, out_dir / ("design_w" + label + ".vtk"));
        run.history.write_csv(out_dir / ("history_w" + label + ".csv"));
      } catch (const std::exception& e) {
        points[i].weight = weights[i];
        points[i].error = e.what();
        spdlog::error("run for w = {} failed: {}", weights[i], e.what());
      }
    }
  };
  const int threads = std::clamp(jobs, 1, static_cast<int>(weights.size()));
  std::vector<std::thread> pool;
  for (int j = 1; j < threads; ++j) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  mark_dominated(points);
  std::ofstream os(out_dir / "pareto.csv");
  if (!os) throw std::runtime_error("cannot write pareto.csv in " + out_dir.string());
  os << std::setprecision(12) << "w,torque_Nm,volume_m3,iters,status,snapshot,dominated\n";
  for (const auto& p : points) {
    if (p.failed()) {
      os << p.weight << ",,,,failed,,\n";
      continue;
    }
    os << p.weight << ',' << p.torque << ',' << p.volume_m3 << ',' << p.iterations << ',' << to_string(p.status)
       << ',' << p.snapshot.filename().string() << ',' << (p.dominated ? 1 : 0) << '\n';
  }
  return points;
}

}  // namespace shapeforge
