#pragma once

#include "shapeforge/geometry.hpp"
#include "shapeforge/optimizer.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace shapeforge {

/// Parse or validation failure; `line` is 0 when the problem is not tied to a
/// line of the input.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line, std::string key)
      : std::runtime_error(what), line_(line), key_(std::move(key)) {}
  int line() const { return line_; }
  const std::string& key() const { return key_; }

 private:
  int line_;
  std::string key_;
};

enum class MaterialKind { Linear, Brauer };

struct MaterialConfig {
  MaterialKind kind = MaterialKind::Brauer;
  double k1 = 49.4;
  double k2 = 1.46;
  double k3 = 520.6;
  double nu_iron = kNu0 / 1000.0;  ///< linear law only

  Reluctivity reluctivity() const;
  bool operator==(const MaterialConfig&) const = default;
};

struct SolverConfig {
  double newton_tol = 1e-10;
  int newton_max_iter = 30;
  LinearSolverKind linear = LinearSolverKind::Direct;
  double linear_rtol = 1e-10;
  bool operator==(const SolverConfig&) const = default;
};

struct DescentConfig {
  MetricKind metric = MetricKind::H1;
  double mass_coefficient = 0.01;
  double quality_stiffening = 4.0;
  double tol = 1e-8;
  int max_iter = 70;
  int step_floor_exponent = 30;
  double quality_fraction = 0.2;
  double bi_quality_fraction = 0.0;
  double volume_scale = 1e6;
  bool operator==(const DescentConfig&) const = default;
};

struct ParetoConfig {
  std::vector<double> weights = {0.065, 0.035, 0.005};
  bool operator==(const ParetoConfig&) const = default;
};

struct OutputConfig {
  std::string directory = "out";
  int snapshot_every = 10;  ///< 0 writes only the final design
  bool operator==(const OutputConfig&) const = default;
};

struct GradientCheckConfig {
  int trials = 10;
  std::uint64_t seed = 1;
  double torque_tolerance = 1e-3;
  double volume_tolerance = 1e-6;
  bool operator==(const GradientCheckConfig&) const = default;
};

/// Everything a CLI run needs. Defaults describe the desk machine.
struct Config {
  MachineSpec machine = desk_preset();
  MaterialConfig material;
  SolverConfig solver;
  DescentConfig descent;
  ParetoConfig pareto;
  OutputConfig output;
  GradientCheckConfig check;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
  NewtonOptions newton_options() const;
  OptimizerOptions optimizer_options() const;

  bool operator==(const Config&) const = default;
};

/// Reads `section.key = value` lines on top of the defaults. Blank lines and
/// text after '#' are ignored; unknown keys, repeated keys and malformed
/// values are rejected with the offending line. The result is validated.
Config parse_config(std::string_view text);
Config load_config(const std::filesystem::path& path);

/// Writes every key, so the output reparses to an equal Config.
std::string serialize(const Config& config);

}  // namespace shapeforge
