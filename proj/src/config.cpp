#include "shapeforge/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace shapeforge {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view v, const char* expected) {
  throw std::invalid_argument("expected " + std::string(expected) + ", got '" + std::string(v) + "'");
}

template <typename T>
T parse_number(std::string_view v, const char* expected) {
  T out{};
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size()) bad_value(v, expected);
  return out;
}

void read(std::string_view v, double& out) { out = parse_number<double>(v, "a number"); }
void read(std::string_view v, int& out) { out = parse_number<int>(v, "an integer"); }
void read(std::string_view v, std::uint64_t& out) { out = parse_number<std::uint64_t>(v, "a non-negative integer"); }
void read(std::string_view v, std::string& out) {
  if (v.empty()) bad_value(v, "a non-empty string");
  out = std::string(v);
}

void read(std::string_view v, std::vector<double>& out) {
  out.clear();
  while (true) {
    const auto comma = v.find(',');
    out.push_back(parse_number<double>(trim(v.substr(0, comma)), "a comma-separated list of numbers"));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
}

void read(std::string_view v, std::array<double, 3>& out) {
  std::vector<double> list;
  read(v, list);
  if (list.size() != 3) bad_value(v, "three comma-separated numbers");
  std::copy(list.begin(), list.end(), out.begin());
}

template <typename E>
void read_enum(std::string_view v, E& out, const std::map<std::string, E, std::less<>>& names, const char* expected) {
  const auto it = names.find(v);
  if (it == names.end()) bad_value(v, expected);
  out = it->second;
}

const std::map<std::string, MaterialKind, std::less<>> kMaterialNames{{"linear", MaterialKind::Linear},
                                                                      {"brauer", MaterialKind::Brauer}};
const std::map<std::string, LinearSolverKind, std::less<>> kLinearNames{{"direct", LinearSolverKind::Direct},
                                                                        {"cg", LinearSolverKind::Cg}};
const std::map<std::string, MetricKind, std::less<>> kMetricNames{{"h1", MetricKind::H1},
                                                                  {"elasticity", MetricKind::Elasticity}};

void read(std::string_view v, MaterialKind& out) { read_enum(v, out, kMaterialNames, "linear or brauer"); }
void read(std::string_view v, LinearSolverKind& out) { read_enum(v, out, kLinearNames, "direct or cg"); }
void read(std::string_view v, MetricKind& out) { read_enum(v, out, kMetricNames, "h1 or elasticity"); }

template <typename E>
std::string name_of(E value, const std::map<std::string, E, std::less<>>& names) {
  for (const auto& [name, e] : names) {
    if (e == value) return name;
  }
  return "?";
}

// Shortest text that reads back to the same double.
std::string write(double x) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}
std::string write(int x) { return std::to_string(x); }
std::string write(std::uint64_t x) { return std::to_string(x); }
std::string write(const std::string& s) { return s; }
template <typename Range>
std::string write_list(const Range& values) {
  std::string out;
  for (double x : values) out += (out.empty() ? "" : ", ") + write(x);
  return out;
}
std::string write(const std::vector<double>& v) { return write_list(v); }
std::string write(const std::array<double, 3>& v) { return write_list(v); }
std::string write(MaterialKind k) { return name_of(k, kMaterialNames); }
std::string write(LinearSolverKind k) { return name_of(k, kLinearNames); }
std::string write(MetricKind k) { return name_of(k, kMetricNames); }

struct Field {
  std::string key;
  std::function<void(Config&, std::string_view)> read;
  std::function<std::string(const Config&)> write;
};

// `ref` is a generic lambda returning a reference into the config, so one
// accessor serves both directions.
template <typename Ref>
Field field(std::string key, Ref ref) {
  return {std::move(key), [ref](Config& c, std::string_view v) { read(v, ref(c)); },
          [ref](const Config& c) { return write(ref(c)); }};
}

#define SF_FIELD(key, member) field(key, [](auto& c) -> auto& { return c.member; })

const std::vector<Field>& fields() {
  static const std::vector<Field> table{
      SF_FIELD("machine.stator_inner_radius", machine.stator_inner_radius),
      SF_FIELD("machine.stator_outer_radius", machine.stator_outer_radius),
      SF_FIELD("machine.rotor_outer_radius", machine.rotor_outer_radius),
      SF_FIELD("machine.shaft_radius", machine.shaft_radius),
      SF_FIELD("machine.domain_radius", machine.domain_radius),
      SF_FIELD("machine.slot_count", machine.slot_count),
      SF_FIELD("machine.pole_pairs", machine.pole_pairs),
      SF_FIELD("machine.slot_depth", machine.slot_depth),
      SF_FIELD("machine.slot_width_fraction", machine.slot_width_fraction),
      SF_FIELD("machine.layer_thicknesses", machine.layer_thicknesses),
      SF_FIELD("machine.axial_length", machine.axial_length),
      SF_FIELD("machine.torque_r_in", machine.torque_r_in),
      SF_FIELD("machine.torque_r_out", machine.torque_r_out),
      SF_FIELD("machine.mesh_size", machine.mesh_size),
      SF_FIELD("excitation.phase_currents", machine.phase_currents),
      SF_FIELD("excitation.turns_per_slot", machine.turns_per_slot),
      SF_FIELD("excitation.current_angle", machine.current_angle),
      SF_FIELD("material.kind", material.kind),
      SF_FIELD("material.k1", material.k1),
      SF_FIELD("material.k2", material.k2),
      SF_FIELD("material.k3", material.k3),
      SF_FIELD("material.nu_iron", material.nu_iron),
      SF_FIELD("solver.newton_tol", solver.newton_tol),
      SF_FIELD("solver.newton_max_iter", solver.newton_max_iter),
      SF_FIELD("solver.linear", solver.linear),
      SF_FIELD("solver.linear_rtol", solver.linear_rtol),
      SF_FIELD("descent.metric", descent.metric),
      SF_FIELD("descent.mass_coefficient", descent.mass_coefficient),
      SF_FIELD("descent.quality_stiffening", descent.quality_stiffening),
      SF_FIELD("descent.tol", descent.tol),
      SF_FIELD("descent.max_iter", descent.max_iter),
      SF_FIELD("descent.step_floor_exponent", descent.step_floor_exponent),
      SF_FIELD("descent.quality_fraction", descent.quality_fraction),
      SF_FIELD("descent.bi_quality_fraction", descent.bi_quality_fraction),
      SF_FIELD("descent.volume_scale", descent.volume_scale),
      SF_FIELD("pareto.weights", pareto.weights),
      SF_FIELD("output.directory", output.directory),
      SF_FIELD("output.snapshot_every", output.snapshot_every),
      SF_FIELD("check.trials", check.trials),
      SF_FIELD("check.seed", check.seed),
      SF_FIELD("check.torque_tolerance", check.torque_tolerance),
      SF_FIELD("check.volume_tolerance", check.volume_tolerance),
  };
  return table;
}

#undef SF_FIELD

void require(bool ok, const std::string& key, const std::string& msg) {
  if (!ok) throw ConfigError(key + ": " + msg, 0, key);
}

}  // namespace

Reluctivity MaterialConfig::reluctivity() const {
  return kind == MaterialKind::Linear ? Reluctivity::linear(nu_iron) : Reluctivity::brauer(k1, k2, k3);
}

void Config::validate() const {
  try {
    machine.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what(), 0, "machine");
  }
  if (material.kind == MaterialKind::Linear) {
    require(material.nu_iron > 0.0 && material.nu_iron <= kNu0, "material.nu_iron", "must lie in (0, nu0]");
  } else {
    require(material.k1 > 0.0 && material.k2 > 0.0 && material.k3 > 0.0, "material", "Brauer coefficients must be positive");
  }
  try {
    material.reluctivity().check_admissible(2.5);
  } catch (const std::domain_error& e) {
    throw ConfigError(std::string("material: ") + e.what(), 0, "material");
  }
  require(solver.newton_tol > 0.0, "solver.newton_tol", "must be positive");
  require(solver.newton_max_iter >= 1, "solver.newton_max_iter", "must be at least 1");
  require(solver.linear_rtol > 0.0 && solver.linear_rtol < 1.0, "solver.linear_rtol", "must lie in (0, 1)");
  require(descent.mass_coefficient >= 0.0, "descent.mass_coefficient", "must be non-negative");
  require(descent.quality_stiffening >= 0.0, "descent.quality_stiffening", "must be non-negative");
  require(descent.tol >= 0.0, "descent.tol", "must be non-negative");
  require(descent.max_iter >= 0, "descent.max_iter", "must be non-negative");
  require(descent.step_floor_exponent >= 0 && descent.step_floor_exponent <= 60, "descent.step_floor_exponent",
          "must lie in [0, 60]");
  require(descent.quality_fraction >= 0.0 && descent.quality_fraction < 1.0, "descent.quality_fraction",
          "must lie in [0, 1)");
  require(descent.bi_quality_fraction >= 0.0 && descent.bi_quality_fraction < 1.0, "descent.bi_quality_fraction",
          "must lie in [0, 1)");
  require(descent.volume_scale > 0.0, "descent.volume_scale", "must be positive");
  require(!pareto.weights.empty(), "pareto.weights", "needs at least one weight");
  for (double w : pareto.weights) require(w >= 0.0 && std::isfinite(w), "pareto.weights", "weights must be >= 0");
  require(output.snapshot_every >= 0, "output.snapshot_every", "must be non-negative");
  require(check.trials >= 0, "check.trials", "must be non-negative");
  require(check.torque_tolerance > 0.0, "check.torque_tolerance", "must be positive");
  require(check.volume_tolerance > 0.0, "check.volume_tolerance", "must be positive");
}

NewtonOptions Config::newton_options() const {
  NewtonOptions o;
  o.tol = solver.newton_tol;
  o.max_iterations = solver.newton_max_iter;
  o.linear.kind = solver.linear;
  o.linear.rtol = solver.linear_rtol;
  return o;
}

OptimizerOptions Config::optimizer_options() const {
  OptimizerOptions o;
  o.max_iter = descent.max_iter;
  o.tol = descent.tol;
  o.step_floor_exponent = descent.step_floor_exponent;
  o.quality_fraction = descent.quality_fraction;
  o.bi_quality_fraction = descent.bi_quality_fraction;
  o.volume_scale = descent.volume_scale;
  o.metric.kind = descent.metric;
  o.metric.mass_coefficient = descent.mass_coefficient;
  o.metric.quality_stiffening = descent.quality_stiffening;
  o.newton = newton_options();
  return o;
}

Config parse_config(std::string_view text) {
  std::map<std::string_view, const Field*, std::less<>> by_key;
  for (const auto& f : fields()) by_key[f.key] = &f;

  Config config;
  std::set<std::string, std::less<>> seen;
  int line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'section.key = value'", line_no, "");
    }
    const std::string key(trim(line.substr(0, eq)));
    const auto value = trim(line.substr(eq + 1));
    const auto it = by_key.find(key);
    if (it == by_key.end()) {
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'", line_no, key);
    }
    if (!seen.insert(key).second) {
      throw ConfigError("line " + std::to_string(line_no) + ": repeated key '" + key + "'", line_no, key);
    }
    try {
      it->second->read(config, value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + key + ": " + e.what(), line_no, key);
    }
  }
  config.validate();
  return config;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file " + path.string(), 0, "");
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string serialize(const Config& config) {
  std::string out;
  std::string_view section;
  for (const auto& f : fields()) {
    const std::string_view key = f.key;
    const auto current = key.substr(0, key.find('.'));
    if (current != section) {
      if (!section.empty()) out += '\n';
      section = current;
    }
    out += f.key + " = " + f.write(config) + '\n';
  }
  return out;
}

}  // namespace shapeforge
