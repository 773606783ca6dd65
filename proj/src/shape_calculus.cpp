#include "shapeforge/shape_calculus.hpp"

#include "shapeforge/fem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace shapeforge {

ShapeGradient shape_derivative_torque(const Mesh& mesh, const RegionMap& regions, const Reluctivity& material,
                                      const ScalarField& u, const ScalarField& p, bool restrict_to_rotor) {
  if (u.size() != mesh.num_nodes() || p.size() != mesh.num_nodes()) {
    throw std::invalid_argument("state/adjoint size differs from node count");
  }
  const auto support = nodes_in_regions(mesh, regions.rotor);
  ShapeGradient g{NodeArray::Zero(mesh.num_nodes(), 2), "-torque"};
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto v = mesh.triangle(t);
    if (restrict_to_rotor && !support[v[0]] && !support[v[1]] && !support[v[2]]) continue;
    const auto grads = p1_gradients<double>(mesh.node(v[0]), mesh.node(v[1]), mesh.node(v[2]));
    const Vec2 gu = grads * Eigen::Vector3d(u.values[v[0]], u.values[v[1]], u.values[v[2]]);
    const Vec2 gp = grads * Eigen::Vector3d(p.values[v[0]], p.values[v[1]], p.values[v[2]]);
    const bool iron = regions.is_iron(mesh.region(t));
    const double s = gu.norm();
    const double nu = material.value(iron, s);
    const double dnu_s = material.derivative_over_s(iron, s);
    const double up = gu.dot(gp);
    const double area = mesh.area(t);
    for (int a = 0; a < 3; ++a) {
      const Vec2 gphi = grads.col(a);
      // Basis field e_k phi_a: dV = e_k gphi^T, div V = gphi_k.
      const Vec2 c = nu * (gphi * up - gu * gphi.dot(gp) - gp * gphi.dot(gu)) - dnu_s * gu * gphi.dot(gu) * up;
      g.covector.row(v[a]) += area * c.transpose();
    }
  }
  if (restrict_to_rotor) {
    for (int i = 0; i < mesh.num_nodes(); ++i) {
      if (!support[i]) g.covector.row(i).setZero();
    }
  }
  return g;
}

ShapeGradient shape_derivative_volume(const Mesh& mesh, const RegionMap& regions) {
  ShapeGradient g{NodeArray::Zero(mesh.num_nodes(), 2), "volume"};
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const int id = mesh.region(t);
    if (!regions.is_iron(id) || !regions.is_rotor(id)) continue;
    const auto v = mesh.triangle(t);
    const auto grads = p1_gradients<double>(mesh.node(v[0]), mesh.node(v[1]), mesh.node(v[2]));
    const double area = mesh.area(t);
    for (int a = 0; a < 3; ++a) g.covector.row(v[a]) += area * grads.col(a).transpose();
  }
  const auto support = nodes_in_regions(mesh, regions.rotor);
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    if (!support[i]) g.covector.row(i).setZero();
  }
  return g;
}

FdEstimate fd_shape_derivative(const DesignObjective& objective, const Mesh& mesh, const DeformationField& v,
                               std::vector<double> steps) {
  if (steps.empty()) throw std::invalid_argument("fd_shape_derivative needs at least one step");
  const DeformationField minus(-v.values);
  FdEstimate est;
  constexpr double kFloor = 1e-12;
  for (double t : steps) {
    for (;;) {
      auto plus_mesh = try_deform(mesh, v, t);
      auto minus_mesh = try_deform(mesh, minus, t);
      if (plus_mesh && minus_mesh) {
        est.steps.push_back(t);
        est.quotients.push_back((objective(*plus_mesh) - objective(*minus_mesh)) / (2.0 * t));
        break;
      }
      t /= 10.0;
      if (t < kFloor) throw std::runtime_error("fd_shape_derivative: deformation invalid down to the step floor");
    }
  }
  const auto& q = est.quotients;
  const auto& h = est.steps;
  est.value = q.back();
  if (q.size() >= 2) {
    const std::size_t n = q.size();
    const double r2 = std::pow(h[n - 2] / h[n - 1], 2);
    est.value = (r2 * q[n - 1] - q[n - 2]) / (r2 - 1.0);
  }
  est.observed_order = std::numeric_limits<double>::quiet_NaN();
  if (q.size() >= 3) {
    const std::size_t n = q.size();
    const double d1 = std::abs(q[n - 3] - q[n - 2]);
    const double d2 = std::abs(q[n - 2] - q[n - 1]);
    const double r = h[n - 3] / h[n - 2];
    if (d1 > 0.0 && d2 > 0.0) est.observed_order = std::log(d1 / d2) / std::log(r);
  }
  return est;
}

DeformationField random_design_field(const Mesh& mesh, const RegionMap& regions, std::uint64_t seed,
                                     double amplitude) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> wave(-4.0, 4.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> weight(-1.0, 1.0);
  constexpr int kWaves = 4;
  Eigen::Matrix<double, kWaves, 2> k;
  Eigen::Matrix<double, kWaves, 2> c;
  Eigen::Matrix<double, kWaves, 1> phi;
  for (int j = 0; j < kWaves; ++j) {
    k.row(j) << wave(rng), wave(rng);
    c.row(j) << weight(rng), weight(rng);
    phi[j] = phase(rng);
  }
  // Wave vectors are per unit of the design-region size.
  const auto in = nodes_in_regions(mesh, regions.rotor);
  double extent = 0.0;
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    if (in[i]) extent = std::max(extent, mesh.node(i).norm());
  }
  NodeArray v = NodeArray::Zero(mesh.num_nodes(), 2);
  if (extent == 0.0) return DeformationField(v);
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    if (!in[i]) continue;
    const Vec2 x = mesh.node(i) / extent;
    for (int j = 0; j < kWaves; ++j) v.row(i) += std::sin(k.row(j).dot(x) + phi[j]) * c.row(j);
  }
  const double peak = v.cwiseAbs().maxCoeff();
  if (peak > 0.0) v *= amplitude / peak;
  return DeformationField(v);
}

}  // namespace shapeforge
