#include "shapeforge/geometry.hpp"

#include <doctest.h>

#include <numbers>
#include <numeric>

using namespace shapeforge;
using std::numbers::pi;

namespace {

double region_area(const Mesh& m, const std::function<bool(int)>& pick) {
  double a = 0.0;
  for (int t = 0; t < m.num_triangles(); ++t) {
    if (pick(m.region(t))) a += m.area(t);
  }
  return a;
}

struct Areas {
  double rotor, slots, band;
};

Areas measured(const MachineModel& model) {
  using namespace region_id;
  return {region_area(model.mesh, [](int id) { return id >= kLayerBase; }),
          region_area(model.mesh, [](int id) { return id >= kSlotBase && id < kLayerBase; }),
          region_area(model.mesh, [](int id) { return id == kTorqueBand; })};
}

Areas analytic(const MachineSpec& s) {
  const double slot_angle = s.slot_width_fraction * 2 * pi / s.slot_count;
  const double ro = s.stator_inner_radius + s.slot_depth;
  return {pi * (s.rotor_outer_radius * s.rotor_outer_radius - s.shaft_radius * s.shaft_radius),
          s.slot_count * 0.5 * slot_angle * (ro * ro - s.stator_inner_radius * s.stator_inner_radius),
          pi * (s.torque_r_out * s.torque_r_out - s.torque_r_in * s.torque_r_in)};
}

const MachineModel& desk() {
  static const MachineModel model = generate(desk_preset());
  return model;
}

}  // namespace

TEST_CASE("desk preset uses the reference machine radii") {
  const auto s = desk_preset();
  CHECK_NOTHROW(s.validate());
  CHECK(s.stator_inner_radius == 0.0265);
  CHECK(s.stator_outer_radius == 0.0475);
  CHECK(s.rotor_outer_radius == 0.0185);
  CHECK(s.slot_count == 24);
  CHECK(s.layer_thicknesses.size() == 9);
  CHECK(s.phase_currents == std::array<double, 3>{12.0, -6.0, -6.0});
}

TEST_CASE("invalid specs are rejected") {
  auto s = desk_preset();
  s.rotor_outer_radius = s.stator_inner_radius;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  CHECK_THROWS_AS(generate(s), std::invalid_argument);

  s = desk_preset();
  s.layer_thicknesses.assign(9, 0.005);  // 45 mm stack in a 37 mm rotor
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);

  s = desk_preset();
  s.slot_count = 20;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);

  s = desk_preset();
  s.layer_thicknesses.pop_back();
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("desk mesh has the expected layout") {
  const auto& model = desk();
  CHECK(model.mesh.num_nodes() >= 5000);
  CHECK(model.mesh.num_nodes() <= 20000);

  int iron_layers = 0, air_layers = 0, slots = 0;
  for (int id : model.mesh.region_ids()) {
    if (id >= region_id::kLayerBase) {
      CHECK(model.regions.is_rotor(id));
      (model.regions.is_iron(id) ? iron_layers : air_layers)++;
    } else if (id >= region_id::kSlotBase) {
      CHECK(model.regions.is_coil(id));
      ++slots;
    } else {
      CHECK(model.regions.is_fixed(id));
    }
  }
  CHECK(iron_layers == 5);
  CHECK(air_layers == 4);
  CHECK(slots == 24);
  // Every pair of neighbouring layers shares a marked interface chord.
  for (int k = 0; k < 8; ++k) CHECK(model.chord_point_counts.at(k) >= 2);
  CHECK_FALSE(model.torque.triangles.empty());
}

TEST_CASE("region areas match the analytic shapes and improve with refinement") {
  const auto spec = desk_preset();
  const Areas exact = analytic(spec);
  const Areas fine = measured(desk());
  CHECK(fine.rotor == doctest::Approx(exact.rotor).epsilon(0.01));
  CHECK(fine.slots == doctest::Approx(exact.slots).epsilon(0.01));
  CHECK(fine.band == doctest::Approx(exact.band).epsilon(0.01));

  auto coarse_spec = spec;
  coarse_spec.mesh_size = 2.0 * spec.mesh_size;
  const Areas coarse = measured(generate(coarse_spec));
  // Polygonal circles lose area like h^2; allow some slack on the factor.
  CHECK(std::abs(fine.rotor - exact.rotor) < 0.6 * std::abs(coarse.rotor - exact.rotor));
  CHECK(std::abs(fine.band - exact.band) < 0.6 * std::abs(coarse.band - exact.band));
}

TEST_CASE("winding pattern is balanced and half-turn antisymmetric") {
  const auto& model = desk();
  double ampere_turns = 0.0;
  for (const auto& [id, j] : model.excitation.density) {
    ampere_turns += j * region_area(model.mesh, [id = id](int r) { return r == id; });
  }
  double scale = 0.0;
  for (const auto& [id, j] : model.excitation.density) scale += std::abs(j);
  CHECK(std::abs(ampere_turns) <= 1e-12 * scale);

  const int half = desk_preset().slot_count / 2;
  for (int k = 0; k < half; ++k) {
    const int a = region_id::kSlotBase + k, b = a + half;
    CHECK(model.phase_of.at(a) == model.phase_of.at(b));
    CHECK(model.regions.coil.at(a) == -model.regions.coil.at(b));
  }
  // Each slot carries turns * current of its phase.
  const auto& s = desk_preset();
  for (const auto& [id, j] : model.excitation.density) {
    const double area = region_area(model.mesh, [id = id](int r) { return r == id; });
    CHECK(std::abs(j * area) == doctest::Approx(s.turns_per_slot * std::abs(s.phase_currents[model.phase_of.at(id)])));
  }
}

TEST_CASE("generation is deterministic") {
  auto spec = desk_preset();
  spec.mesh_size = 0.002;
  const auto a = generate(spec);
  const auto b = generate(spec);
  CHECK(a.mesh.nodes() == b.mesh.nodes());
  CHECK(a.mesh.triangles() == b.mesh.triangles());
}
