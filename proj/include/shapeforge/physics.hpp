#pragma once

#include "shapeforge/fem.hpp"
#include "shapeforge/material.hpp"
#include "shapeforge/mesh.hpp"

#include <cmath>
#include <vector>

namespace shapeforge {

// dq-frame reluctance machine relations.

/// T = (3 Np / 2)(lambda_d I_q - lambda_q I_d).
template <typename Scalar>
Scalar torque_dq_flux(int pole_pairs, Scalar lambda_d, Scalar lambda_q, Scalar i_d, Scalar i_q) {
  return Scalar(3) * Scalar(pole_pairs) / Scalar(2) * (lambda_d * i_q - lambda_q * i_d);
}

/// T = (3 Np / 4)(L_d - L_q) I_s^2 sin(2 beta).
template <typename Scalar>
Scalar torque_dq_inductance(int pole_pairs, Scalar l_d, Scalar l_q, Scalar i_s, Scalar beta) {
  using std::sin;
  return Scalar(3) * Scalar(pole_pairs) / Scalar(4) * (l_d - l_q) * i_s * i_s * sin(Scalar(2) * beta);
}

struct DqParameters {
  int pole_pairs = 1;
  double l_d = 0.0;
  double l_q = 0.0;
  double i_s = 0.0;
  double beta = 0.0;

  double i_d() const { return i_s * std::cos(beta); }
  double i_q() const { return i_s * std::sin(beta); }
  double lambda_d() const { return l_d * i_d(); }
  double lambda_q() const { return l_q * i_q(); }
};

/// Airgap annulus used for Arkkio's torque integral.
struct TorqueFunctional {
  double r_in = 0.0;
  double r_out = 0.0;
  double axial_length = 0.0;
  std::vector<int> triangles;

  /// Selects triangles whose centroid lies in (r_in, r_out) around the
  /// origin. Throws std::invalid_argument if the annulus is empty, touches a
  /// non-air region, or touches the design region.
  static TorqueFunctional over_annulus(const Mesh& mesh, const RegionMap& regions, double r_in, double r_out,
                                       double axial_length);
};

/// Arkkio torque L / (mu0 (r_out - r_in)) * integral of r B_r B_phi over the
/// annulus, with B = (du/dx2, -du/dx1). Counterclockwise torque is positive.
double torque_fem(const Mesh& mesh, const ScalarField& u, const TorqueFunctional& tf);

/// Gradient of torque_fem with respect to the nodal values of u.
Eigen::VectorXd torque_du(const Mesh& mesh, const ScalarField& u, const TorqueFunctional& tf);

/// Area of iron inside the design region (m^2, i.e. volume per meter of stack).
double volume(const Mesh& mesh, const RegionMap& regions);

/// Solves A_Omega(u) p = dT/du with p = 0 on the outer boundary.
ScalarField solve_adjoint(const Mesh& mesh, const RegionMap& regions, const Reluctivity& material,
                          const ScalarField& u, const TorqueFunctional& tf, const LinearSolverOptions& linear = {});

}  // namespace shapeforge
