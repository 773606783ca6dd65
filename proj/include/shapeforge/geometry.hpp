#pragma once

#include "shapeforge/material.hpp"
#include "shapeforge/mesh.hpp"
#include "shapeforge/physics.hpp"

#include <array>
#include <map>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace shapeforge {

/// Parametric synchronous reluctance machine cross-section. Lengths in meters.
struct MachineSpec {
  double stator_inner_radius = 0.0265;
  double stator_outer_radius = 0.0475;
  double rotor_outer_radius = 0.0185;
  double shaft_radius = 0.0015;
  double domain_radius = 0.0520;  ///< outer boundary of the surrounding air ring
  int slot_count = 24;
  int pole_pairs = 1;
  double slot_depth = 0.010;
  double slot_width_fraction = 0.5;  ///< slot opening as a fraction of the slot pitch
  /// Rotor layers along the q-axis, alternating iron/air starting with iron.
  std::vector<double> layer_thicknesses = std::vector<double>(9, 2.0 * 0.0185 / 9.0);
  double axial_length = 0.050;
  double torque_r_in = 0.0205;
  double torque_r_out = 0.0245;
  double mesh_size = 0.001;
  std::array<double, 3> phase_currents = {12.0, -6.0, -6.0};
  double turns_per_slot = 64.0;
  double current_angle = std::numbers::pi / 4;  ///< beta, electrical

  /// Throws std::invalid_argument describing the first violated invariant.
  void validate() const;
  bool operator==(const MachineSpec&) const = default;
};

MachineSpec desk_preset();

namespace region_id {
inline constexpr int kOuterAir = 1;
inline constexpr int kStatorIron = 2;
inline constexpr int kAirgapInner = 3;
inline constexpr int kTorqueBand = 4;
inline constexpr int kAirgapOuter = 5;
inline constexpr int kShaft = 6;
inline constexpr int kSlotBase = 100;
inline constexpr int kLayerBase = 200;
}  // namespace region_id

namespace edge_marker {
inline constexpr int kOuterBoundary = 1;
inline constexpr int kRotorOuter = 2;
inline constexpr int kShaft = 3;
inline constexpr int kOther = 4;
inline constexpr int kLayerBase = 10;  ///< + chord index between layer k and k + 1
}  // namespace edge_marker

struct MachineModel {
  MachineSpec spec;
  Mesh mesh;
  RegionMap regions;
  std::map<int, int> phase_of;  ///< coil region -> phase 0/1/2
  CurrentExcitation excitation;
  TorqueFunctional torque;
  double d_axis_angle = 0.0;  ///< mechanical angle of the rotor d-axis
  std::vector<int> chord_point_counts;  ///< mesh nodes on each layer interface chord
};

/// Meshes the full machine with a constrained Delaunay triangulation at the
/// spec's mesh size and assigns regions, winding and torque annulus.
MachineModel generate(const MachineSpec& spec);

/// Stator magnetic axis (mechanical angle) of the configured phase currents.
double stator_field_axis(const MachineSpec& spec);

/// Offsets of the layer boundaries along the q-axis, from -R to R.
std::vector<double> layer_boundaries(const MachineSpec& spec);

}  // namespace shapeforge
