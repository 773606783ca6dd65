// shapeforge: mesh generation, shape optimization runs and gradient checks
// for the layered reluctance rotor.

#include "shapeforge/config.hpp"
#include "shapeforge/geometry.hpp"
#include "shapeforge/log.hpp"
#include "shapeforge/optimizer.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <filesystem>
#include <optional>

namespace fs = std::filesystem;
using namespace shapeforge;

namespace {

// Stable exit codes.
constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;
constexpr int kSolverFailure = 3;
constexpr int kMeshDegenerate = 4;

struct Common {
  std::string config_path;
  std::string out;
};

Config load(const Common& c) { return c.config_path.empty() ? Config{} : load_config(c.config_path); }

fs::path out_dir(const Common& c, const Config& config) {
  return c.out.empty() ? fs::path(config.output.directory) : fs::path(c.out);
}

Problem build_problem(const Config& config) {
  const MachineModel model = generate(config.machine);
  spdlog::info("mesh: {} nodes, {} triangles", model.mesh.num_nodes(), model.mesh.num_triangles());
  return Problem::from_model(model, config.material.reluctivity());
}

int cmd_generate_mesh(const Common& c) {
  const Config config = load(c);
  const MachineModel model = generate(config.machine);
  const fs::path dir = out_dir(c, config);
  fs::create_directories(dir);
  write_mesh(model.mesh, dir / "machine.mesh");
  write_vtk(model.mesh, {}, dir / "machine.vtk");
  spdlog::info("wrote {} ({} nodes, {} triangles)", (dir / "machine.mesh").string(), model.mesh.num_nodes(),
               model.mesh.num_triangles());
  return kOk;
}

int run_exit_code(RunStatus s) { return s == RunStatus::MeshDegenerate ? kMeshDegenerate : kOk; }

int cmd_optimize(const Common& c, const std::string& mode, std::optional<double> weight) {
  if (mode != "single" && mode != "bi") {
    spdlog::error("--mode must be single or bi");
    return kUsage;
  }
  if (mode == "bi" && !weight) {
    spdlog::error("bi mode needs --weight");
    return kUsage;
  }
  if (weight && !(*weight > 0.0)) {
    spdlog::error("--weight must be positive");
    return kUsage;
  }
  const Config config = load(c);
  const Problem problem = build_problem(config);
  const fs::path dir = out_dir(c, config);
  fs::create_directories(dir);

  OptimizerOptions options = config.optimizer_options();
  const int every = config.output.snapshot_every;
  options.observer = [&](const IterationRecord& r, const Mesh& mesh, const ScalarField& u, bool last) {
    if (last) {
      write_vtk(mesh, {{"u", u}}, dir / "design_final.vtk");
      write_mesh(mesh, dir / "design_final.mesh");
    } else if (every > 0 && r.iter % every == 0) {
      write_vtk(mesh, {{"u", u}}, dir / fmt::format("design_{:04d}.vtk", r.iter));
    }
  };
  const RunResult run = mode == "single" ? optimize_single(problem, options) : optimize_bi(problem, *weight, options);
  run.history.write_csv(dir / "history.csv");

  const auto& recs = run.history.records;
  const double t0 = -recs.front().j1;
  const double t1 = -recs.back().j1;
  fmt::print("{:.6f} {:.6f} {:.2f}% {} {}\n", t0, t1, 100.0 * (t1 - t0) / std::abs(t0),
             static_cast<int>(recs.size()) - 1, to_string(run.history.status));
  return run_exit_code(run.history.status);
}

int cmd_pareto(const Common& c, int jobs) {
  if (jobs < 1) {
    spdlog::error("--jobs must be at least 1");
    return kUsage;
  }
  const Config config = load(c);
  const Problem problem = build_problem(config);
  const fs::path dir = out_dir(c, config);
  const auto points = pareto_sweep(problem, config.pareto.weights, config.optimizer_options(), dir, jobs);

  std::vector<ParetoPoint> front;
  for (const auto& p : points) {
    if (p.failed()) {
      spdlog::error("w = {}: {}", p.weight, p.error);
    } else if (!p.dominated) {
      front.push_back(p);
    }
  }
  // The filtered set has to be an antichain; anything else is a bug.
  for (const auto& a : front) {
    for (const auto& b : front) {
      const bool dominates = b.torque >= a.torque && b.volume_m3 <= a.volume_m3 &&
                             (b.torque > a.torque || b.volume_m3 < a.volume_m3);
      if (dominates) throw std::logic_error("filtered Pareto front is not an antichain");
    }
  }
  fmt::print("{:>10} {:>12} {:>14} {:>6}  {}\n", "w", "torque_Nm", "volume_m3", "iters", "status");
  for (const auto& p : front) {
    fmt::print("{:>10g} {:>12.6f} {:>14.6e} {:>6}  {}\n", p.weight, p.torque, p.volume_m3, p.iterations,
               to_string(p.status));
  }
  const auto dropped = std::count_if(points.begin(), points.end(), [](const auto& p) { return p.dominated; });
  if (dropped > 0) spdlog::info("{} dominated record(s) not shown; see pareto.csv", dropped);
  const bool any_ok = std::any_of(points.begin(), points.end(), [](const auto& p) { return !p.failed(); });
  return any_ok ? kOk : kSolverFailure;
}

int cmd_validate_gradient(const Common& c, std::optional<int> trials_flag, std::optional<std::uint64_t> seed_flag) {
  const Config config = load(c);
  const int trials = trials_flag.value_or(config.check.trials);
  const std::uint64_t seed = seed_flag.value_or(config.check.seed);
  if (trials < 0) {
    spdlog::error("--trials must be non-negative");
    return kUsage;
  }
  if (trials == 0) {
    spdlog::warn("no trials requested; nothing was checked");
    return kOk;
  }
  const Problem problem = build_problem(config);
  const auto rows = check_gradients(problem, trials, seed, config.newton_options());

  fmt::print("{:>5} {:>20} {:>10} {:>20} {:>10}\n", "trial", "dJ(V) torque", "rel err", "dVol(V)", "rel err");
  for (const auto& r : rows) {
    fmt::print("{:>5} {:>20.12e} {:>10.2e} {:>20.12e} {:>10.2e}\n", r.trial, r.torque_assembled, r.torque_error,
               r.volume_assembled, r.volume_error);
  }
  const auto worst_t = std::max_element(rows.begin(), rows.end(),
                                        [](const auto& a, const auto& b) { return a.torque_error < b.torque_error; });
  const auto worst_v = std::max_element(rows.begin(), rows.end(),
                                        [](const auto& a, const auto& b) { return a.volume_error < b.volume_error; });
  const bool ok = worst_t->torque_error <= config.check.torque_tolerance &&
                  worst_v->volume_error <= config.check.volume_tolerance;
  fmt::print("worst torque error {:.3e} (trial {}, limit {:g}); worst volume error {:.3e} (trial {}, limit {:g})\n",
             worst_t->torque_error, worst_t->trial, config.check.torque_tolerance, worst_v->volume_error,
             worst_v->trial, config.check.volume_tolerance);
  return ok ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  init_logging();
  CLI::App app{"Free-form shape optimization of a synchronous reluctance rotor"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "Config file (section.key = value)")->check(CLI::ExistingFile);
    sub->add_option("--out", common.out, "Output directory (default: output.directory)");
  };

  auto* gen = app.add_subcommand("generate-mesh", "Mesh the machine and write mesh + VTK preview");
  add_common(gen);

  std::string mode = "single";
  std::optional<double> weight;
  auto* opt = app.add_subcommand("optimize", "Run one single- or bi-objective optimization");
  add_common(opt);
  opt->add_option("--mode", mode, "single or bi")->check(CLI::IsMember({"single", "bi"}));
  opt->add_option("--weight", weight, "Volume weight w (bi mode)");

  int jobs = 1;
  auto* par = app.add_subcommand("pareto", "Bi-objective runs over pareto.weights");
  add_common(par);
  par->add_option("--jobs", jobs, "Concurrent runs");

  std::optional<int> trials;
  std::optional<std::uint64_t> seed;
  auto* val = app.add_subcommand("validate-gradient", "Check shape derivatives against finite differences");
  add_common(val);
  val->add_option("--trials", trials, "Number of random fields (default: check.trials)");
  val->add_option("--seed", seed, "Seed of the first field (default: check.seed)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (gen->parsed()) return cmd_generate_mesh(common);
    if (opt->parsed()) return cmd_optimize(common, mode, weight);
    if (par->parsed()) return cmd_pareto(common, jobs);
    return cmd_validate_gradient(common, trials, seed);
  } catch (const ConfigError& e) {
    spdlog::error("config: {}", e.what());
    return kUsage;
  } catch (const std::invalid_argument& e) {
    spdlog::error("{}", e.what());
    return kUsage;
  } catch (const SolverError& e) {
    spdlog::error("solver failure: {}", e.what());
    return kSolverFailure;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kSolverFailure;
  }
}
