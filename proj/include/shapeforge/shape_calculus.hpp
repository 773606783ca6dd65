#pragma once

#include "shapeforge/material.hpp"
#include "shapeforge/mesh.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace shapeforge {

/// Discrete shape derivative as a nodal covector: dJ(V_h) = sum_i G_i . V_i.
struct ShapeGradient {
  NodeArray covector;
  std::string objective;

  double pair(const DeformationField& v) const { return covector.cwiseProduct(v.values).sum(); }
  ShapeGradient scaled(double factor) const { return {factor * covector, objective}; }
};

/// Gradient of J = -T from the state u and the torque adjoint p:
///   int nu ((div V) I - dV^T - dV) grad u . grad p
///   - int (nu'(|grad u|) / |grad u|) (dV^T grad u . grad u)(grad u . grad p).
/// With `restrict_to_rotor` entries outside the closure of the design region
/// are zeroed, which is where the volumetric form holds without extra terms.
ShapeGradient shape_derivative_torque(const Mesh& mesh, const RegionMap& regions, const Reluctivity& material,
                                      const ScalarField& u, const ScalarField& p, bool restrict_to_rotor = true);

/// dVol(V) = integral of div V over iron in the design region.
ShapeGradient shape_derivative_volume(const Mesh& mesh, const RegionMap& regions);

using DesignObjective = std::function<double(const Mesh&)>;

struct FdEstimate {
  double value = 0.0;                  ///< Richardson-extrapolated derivative
  double observed_order = 0.0;         ///< from the last three quotients; NaN with fewer steps
  std::vector<double> steps;           ///< steps actually used
  std::vector<double> quotients;       ///< central differences per step
};

/// Central-difference estimate of dJ(Omega; V) over the given step sizes,
/// re-evaluating the objective on deformed meshes. Steps whose deformation
/// is invalid are divided by 10 down to 1e-12 before giving up.
FdEstimate fd_shape_derivative(const DesignObjective& objective, const Mesh& mesh, const DeformationField& v,
                               std::vector<double> steps = {1e-2, 1e-3, 1e-4});

/// Smooth pseudo-random field supported on the closure of the design region:
/// a sum of a few plane waves with seeded wave vectors and phases, scaled so
/// the largest nodal displacement is `amplitude`.
DeformationField random_design_field(const Mesh& mesh, const RegionMap& regions, std::uint64_t seed,
                                     double amplitude = 1e-3);

}  // namespace shapeforge
