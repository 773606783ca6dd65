#include "shapeforge/physics.hpp"

#include <stdexcept>

namespace shapeforge {

namespace {

// Integral over triangle t of the symmetric matrix S with r B_r B_phi = B^T S B.
Mat2 arkkio_weight(const Mesh& mesh, int t) {
  const auto& rule = QuadratureRule::degree4();
  const auto v = mesh.triangle(t);
  const Vec2 a = mesh.node(v[0]), b = mesh.node(v[1]), c = mesh.node(v[2]);
  const double area = mesh.area(t);
  Mat2 m = Mat2::Zero();
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const Vec2 x = rule.points[q][0] * a + rule.points[q][1] * b + rule.points[q][2] * c;
    const double r = x.norm();
    Mat2 s;
    s << -x.x() * x.y(), 0.5 * (x.x() * x.x() - x.y() * x.y()),  //
        0.5 * (x.x() * x.x() - x.y() * x.y()), x.x() * x.y();
    m += 2.0 * rule.weights[q] * area * s / r;
  }
  return m;
}

// B = R grad u.
const Mat2& curl_rotation() {
  static const Mat2 r = (Mat2() << 0.0, 1.0, -1.0, 0.0).finished();
  return r;
}

double arkkio_factor(const TorqueFunctional& tf) { return tf.axial_length / (kMu0 * (tf.r_out - tf.r_in)); }

}  // namespace

TorqueFunctional TorqueFunctional::over_annulus(const Mesh& mesh, const RegionMap& regions, double r_in, double r_out,
                                                double axial_length) {
  if (!(r_in < r_out)) throw std::invalid_argument("torque annulus needs r_in < r_out");
  TorqueFunctional tf{r_in, r_out, axial_length, {}};
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double r = mesh.centroid(t).norm();
    if (r <= r_in || r >= r_out) continue;
    const int id = mesh.region(t);
    if (!regions.is_air(id) || regions.is_rotor(id)) {
      throw std::invalid_argument("torque annulus overlaps region " + std::to_string(id) +
                                  ", which is not fixed air");
    }
    tf.triangles.push_back(t);
  }
  if (tf.triangles.empty()) throw std::invalid_argument("torque annulus contains no triangles");
  return tf;
}

double torque_fem(const Mesh& mesh, const ScalarField& u, const TorqueFunctional& tf) {
  if (tf.triangles.empty()) throw std::invalid_argument("torque annulus contains no triangles");
  const Mat2& rot = curl_rotation();
  double sum = 0.0;
  for (int t : tf.triangles) {
    const Vec2 b = rot * gradient(mesh, u, t);
    sum += b.dot(arkkio_weight(mesh, t) * b);
  }
  return arkkio_factor(tf) * sum;
}

Eigen::VectorXd torque_du(const Mesh& mesh, const ScalarField& u, const TorqueFunctional& tf) {
  if (tf.triangles.empty()) throw std::invalid_argument("torque annulus contains no triangles");
  const Mat2& rot = curl_rotation();
  const double c = arkkio_factor(tf);
  Eigen::VectorXd d = Eigen::VectorXd::Zero(mesh.num_nodes());
  for (int t : tf.triangles) {
    const auto v = mesh.triangle(t);
    const auto grads = p1_gradients<double>(mesh.node(v[0]), mesh.node(v[1]), mesh.node(v[2]));
    const Vec2 g = grads * Eigen::Vector3d(u.values[v[0]], u.values[v[1]], u.values[v[2]]);
    const Mat2 n = rot.transpose() * arkkio_weight(mesh, t) * rot;
    const Eigen::Vector3d de = 2.0 * c * grads.transpose() * (n * g);
    for (int i = 0; i < 3; ++i) d[v[i]] += de[i];
  }
  return d;
}

double volume(const Mesh& mesh, const RegionMap& regions) {
  double v = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const int id = mesh.region(t);
    if (regions.is_iron(id) && regions.is_rotor(id)) v += mesh.area(t);
  }
  return v;
}

ScalarField solve_adjoint(const Mesh& mesh, const RegionMap& regions, const Reluctivity& material,
                          const ScalarField& u, const TorqueFunctional& tf, const LinearSolverOptions& linear) {
  SparseMatrix k = jacobian_matrix(mesh, regions, material, u);
  Eigen::VectorXd rhs = torque_du(mesh, u, tf);
  SparseSystem sys;
  apply_dirichlet(k, rhs, Dirichlet::homogeneous(boundary_nodes(mesh)), sys);
  return solve_spd(sys, linear);
}

}  // namespace shapeforge
