#include "shapeforge/config.hpp"

#include <doctest.h>

#include <fstream>

using namespace shapeforge;

namespace {

int error_line(std::string_view text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

std::string error_key(std::string_view text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<none>";
}

}  // namespace

TEST_CASE("an empty file gives the desk defaults") {
  const auto c = parse_config("");
  CHECK(c == Config{});
  CHECK(c.machine == desk_preset());
  CHECK(c.pareto.weights == std::vector<double>{0.065, 0.035, 0.005});
}

TEST_CASE("serialized configs parse back to the same value") {
  Config c;
  c.machine.mesh_size = 0.0013;
  c.machine.phase_currents = {10.0, -5.0, -5.0};
  c.material.kind = MaterialKind::Linear;
  c.material.nu_iron = kNu0 / 3000.0;
  c.solver.linear = LinearSolverKind::Cg;
  c.descent.metric = MetricKind::Elasticity;
  c.descent.mass_coefficient = 0.1 / 3.0;
  c.pareto.weights = {0.1, 1.0 / 7.0};
  c.output.directory = "runs/a";
  c.check.seed = 123456789012345ULL;
  const auto text = serialize(c);
  CHECK(parse_config(text) == c);
  CHECK(serialize(parse_config(text)) == text);
}

TEST_CASE("comments and blank lines are ignored") {
  const auto c = parse_config("# header\n\n  descent.max_iter = 12   # fewer\n\t\noutput.directory = x # y\n");
  CHECK(c.descent.max_iter == 12);
  CHECK(c.output.directory == "x");
}

TEST_CASE("parse errors name the offending line") {
  CHECK(error_line("descent.max_iter = 3\nbogus.key = 1\n") == 2);
  CHECK(error_key("bogus.key = 1") == "bogus.key");
  CHECK(error_line("descent.tol = 1\n\ndescent.tol = 2\n") == 3);
  CHECK(error_line("# c\nmachine.mesh_size = fast\n") == 2);
  CHECK(error_line("descent.max_iter = 2.5") == 1);
  CHECK(error_line("just words") == 1);
  CHECK(error_line("excitation.phase_currents = 1, 2") == 1);
  CHECK(error_line("material.kind = steel") == 1);
  CHECK(error_line("pareto.weights = 0.1,,0.2") == 1);
}

TEST_CASE("invalid values are rejected after parsing") {
  CHECK(error_line("machine.rotor_outer_radius = 0.03") == 0);
  CHECK(error_key("machine.rotor_outer_radius = 0.03") == "machine");
  CHECK(error_key("pareto.weights = 0.1, -1") == "pareto.weights");
  CHECK(error_key("solver.newton_tol = 0") == "solver.newton_tol");
  CHECK(error_key("descent.quality_fraction = 1") == "descent.quality_fraction");
  CHECK(error_key("check.trials = -1") == "check.trials");
  CHECK(error_key("material.kind = linear\nmaterial.nu_iron = 1e9") == "material.nu_iron");
}

TEST_CASE("config feeds the solver and optimizer options") {
  const auto c = parse_config("solver.newton_tol = 1e-9\ndescent.max_iter = 7\ndescent.quality_stiffening = 2\n");
  CHECK(c.newton_options().tol == 1e-9);
  const auto o = c.optimizer_options();
  CHECK(o.max_iter == 7);
  CHECK(o.metric.quality_stiffening == 2.0);
  CHECK(o.newton.tol == 1e-9);
}

TEST_CASE("loading a missing file fails") {
  CHECK_THROWS_AS(load_config("/nonexistent/shapeforge.cfg"), ConfigError);
  const auto path = std::filesystem::temp_directory_path() / "shapeforge_test.cfg";
  std::ofstream(path) << "output.snapshot_every = 0\n";
  CHECK(load_config(path).output.snapshot_every == 0);
}
