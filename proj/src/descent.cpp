#include "shapeforge/descent.hpp"

#include "shapeforge/fem.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <unordered_set>

namespace shapeforge {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

int dof(int node, int component) { return 2 * node + component; }

Eigen::Matrix3d p1_mass(double area) {
  return area / 12.0 * (Eigen::Matrix3d() << 2, 1, 1, 1, 2, 1, 1, 1, 2).finished();
}

// Element matrix in the local ordering (node a, component k) -> 2a + k.
Eigen::Matrix<double, 6, 6> metric_element(const Mesh& mesh, int t, const DescentMetric& metric) {
  const auto v = mesh.triangle(t);
  const auto g = p1_gradients<double>(mesh.node(v[0]), mesh.node(v[1]), mesh.node(v[2]));
  const double area = mesh.area(t);
  const Eigen::Matrix3d mass = metric.mass_coefficient * p1_mass(area);
  double stiff = 1.0;
  if (metric.quality_stiffening != 0.0) {
    stiff = std::pow(radius_ratio<double>(mesh.node(v[0]), mesh.node(v[1]), mesh.node(v[2])),
                     -metric.quality_stiffening);
  }
  Eigen::Matrix<double, 6, 6> k = Eigen::Matrix<double, 6, 6>::Zero();
  if (metric.kind == MetricKind::H1) {
    const Eigen::Matrix3d lap = stiff * area * g.transpose() * g;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 2; ++c) k(2 * a + c, 2 * b + c) = lap(a, b);
  } else {
    Eigen::Matrix<double, 3, 6> strain = Eigen::Matrix<double, 3, 6>::Zero();
    for (int a = 0; a < 3; ++a) {
      strain(0, 2 * a) = g(0, a);
      strain(1, 2 * a + 1) = g(1, a);
      strain(2, 2 * a) = g(1, a);
      strain(2, 2 * a + 1) = g(0, a);
    }
    const double l = metric.lame_lambda;
    const double mu = metric.lame_mu;
    Eigen::Matrix3d d;
    d << l + 2 * mu, l, 0, l, l + 2 * mu, 0, 0, 0, mu;
    k = stiff * area * strain.transpose() * d * strain;
  }
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 2; ++c) k(2 * a + c, 2 * b + c) += mass(a, b);
  return k;
}

SparseMatrix assemble_metric(const Mesh& mesh, const std::set<int>& inside, const DescentMetric& metric) {
  Triplets trip;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    if (!inside.count(mesh.region(t))) continue;
    const auto v = mesh.triangle(t);
    const auto k = metric_element(mesh, t, metric);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 2; ++c)
          for (int e = 0; e < 2; ++e) trip.emplace_back(dof(v[a], c), dof(v[b], e), k(2 * a + c, 2 * b + e));
  }
  SparseMatrix m(2 * mesh.num_nodes(), 2 * mesh.num_nodes());
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

// Columns span the admissible deformations in the interleaved nodal layout.
SparseMatrix admissible_basis(const DesignConstraints& c) {
  const int n = static_cast<int>(c.in_design.size());
  Triplets trip;
  int col = 0;
  for (int i = 0; i < n; ++i) {
    if (!c.in_design[i] || c.clamped[i]) continue;
    if (c.sliding[i]) {
      trip.emplace_back(dof(i, 0), col, -c.normals(i, 1));
      trip.emplace_back(dof(i, 1), col, c.normals(i, 0));
      ++col;
    } else {
      trip.emplace_back(dof(i, 0), col++, 1.0);
      trip.emplace_back(dof(i, 1), col++, 1.0);
    }
  }
  SparseMatrix p(2 * n, col);
  p.setFromTriplets(trip.begin(), trip.end());
  return p;
}

Eigen::Map<const Eigen::VectorXd> flat(const NodeArray& a) { return {a.data(), a.size()}; }

NodeArray unflat(const Eigen::VectorXd& v) { return Eigen::Map<const NodeArray>(v.data(), v.size() / 2, 2); }

}  // namespace

int DesignConstraints::free_dofs() const {
  int n = 0;
  for (std::size_t i = 0; i < in_design.size(); ++i) {
    if (!in_design[i] || clamped[i]) continue;
    n += sliding[i] ? 1 : 2;
  }
  return n;
}

DesignConstraints design_constraints(const Mesh& mesh, const RegionMap& regions, const std::set<int>& clamped_markers) {
  const int n = mesh.num_nodes();
  DesignConstraints c;
  c.in_design = nodes_in_regions(mesh, regions.rotor);
  c.clamped.assign(n, 0);
  c.sliding.assign(n, 0);
  c.normals = NodeArray::Zero(n, 2);
  c.radius.assign(n, 0.0);

  std::unordered_set<std::uint64_t> clamped_edges;
  for (const auto* list : {&mesh.boundary_edges(), &mesh.interface_edges()}) {
    for (const auto& e : *list) {
      if (clamped_markers.count(e.marker)) clamped_edges.insert(edge_key(e.a, e.b));
    }
  }

  NodeArray normal_sum = NodeArray::Zero(n, 2);
  std::vector<std::vector<int>> neighbours(n);
  for (const auto& [key, et] : mesh.edges()) {
    const bool in1 = regions.is_rotor(mesh.region(et.first));
    const bool in2 = et.second >= 0 && regions.is_rotor(mesh.region(et.second));
    if (in1 == in2) continue;
    const int a = static_cast<int>(key >> 32);
    const int b = static_cast<int>(key & 0xffffffffu);
    const int inner = in1 ? et.first : et.second;
    int third = -1;
    for (int v : mesh.triangle(inner)) {
      if (v != a && v != b) third = v;
    }
    const Vec2 d = mesh.node(b) - mesh.node(a);
    Vec2 nrm(d.y(), -d.x());
    nrm.normalize();
    if (nrm.dot(mesh.node(third) - mesh.node(a)) > 0.0) nrm = -nrm;
    for (int v : {a, b}) normal_sum.row(v) += nrm.transpose();
    neighbours[a].push_back(b);
    neighbours[b].push_back(a);
    if (clamped_edges.count(key)) c.clamped[a] = c.clamped[b] = 1;
  }

  for (int i = 0; i < n; ++i) {
    if (neighbours[i].empty() || c.clamped[i]) continue;
    Vec2 avg = normal_sum.row(i).transpose();
    if (avg.norm() < 1e-8) {
      c.clamped[i] = 1;  // cusp: no well-defined tangent
      continue;
    }
    avg.normalize();
    const double r = mesh.node(i).norm();
    bool on_circle = neighbours[i].size() == 2 && r > 0.0;
    for (int j : neighbours[i]) on_circle = on_circle && std::abs(mesh.node(j).norm() - r) <= 1e-9 * r;
    if (on_circle) {
      Vec2 radial = mesh.node(i) / r;
      if (radial.dot(avg) < 0.0) radial = -radial;
      avg = radial;
      c.radius[i] = r;
    }
    c.sliding[i] = 1;
    c.normals.row(i) = avg.transpose();
  }
  return c;
}

std::optional<Mesh> snap_to_circles(const Mesh& mesh, const DesignConstraints& reference) {
  NodeArray nodes = mesh.nodes();
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    const double r0 = reference.radius[i];
    if (r0 <= 0.0) continue;
    const double r = nodes.row(i).norm();
    if (r > 0.0) nodes.row(i) *= r0 / r;
  }
  return Mesh::with_nodes(mesh, std::move(nodes));
}

DescentDirection descent_bvp(const ShapeGradient& gradient, const DescentMetric& metric, const Mesh& mesh,
                             const RegionMap& regions) {
  if (gradient.covector.rows() != mesh.num_nodes()) throw std::invalid_argument("gradient size differs from mesh");
  const auto constraints = design_constraints(mesh, regions, metric.clamped_markers);
  const SparseMatrix p = admissible_basis(constraints);
  const SparseMatrix b = assemble_metric(mesh, regions.rotor, metric);
  const SparseMatrix reduced = p.transpose() * b * p;
  const Eigen::VectorXd rhs = -(p.transpose() * flat(gradient.covector));

  DescentDirection out;
  Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(p.cols());
  if (rhs.norm() > 0.0) {
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(reduced);
    if (ldlt.info() != Eigen::Success) throw SolverError("descent metric factorization failed", {});
    coeffs = ldlt.solve(rhs);
  }
  out.field = DeformationField(unflat(p * coeffs));
  out.metric_norm = std::sqrt(std::max(0.0, coeffs.dot(reduced * coeffs)));
  out.slope = gradient.pair(out.field);
  return out;
}

double metric_norm(const DeformationField& v, const DescentMetric& metric, const Mesh& mesh, const RegionMap& regions) {
  const SparseMatrix b = assemble_metric(mesh, regions.rotor, metric);
  const auto x = flat(v.values);
  return std::sqrt(std::max(0.0, x.dot(b * x)));
}

InterfaceQp build_interface_qp(const std::vector<ShapeGradient>& gradients, const Mesh& mesh,
                               const RegionMap& regions, const std::set<int>& clamped_markers) {
  InterfaceQp qp;
  qp.nodes = interface_nodes(mesh, regions);
  const int d = 2 * static_cast<int>(qp.nodes.size());
  const int count = static_cast<int>(gradients.size());
  qp.problem.gradients.resize(count, d);
  for (int i = 0; i < count; ++i) {
    for (std::size_t a = 0; a < qp.nodes.size(); ++a) {
      qp.problem.gradients(i, 2 * a) = gradients[i].covector(qp.nodes[a], 0);
      qp.problem.gradients(i, 2 * a + 1) = gradients[i].covector(qp.nodes[a], 1);
    }
  }
  const auto c = design_constraints(mesh, regions, clamped_markers);
  std::vector<Eigen::RowVectorXd> rows;
  for (std::size_t a = 0; a < qp.nodes.size(); ++a) {
    const int i = qp.nodes[a];
    if (c.clamped[i]) {
      for (int k = 0; k < 2; ++k) {
        Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(d);
        r[2 * a + k] = 1.0;
        rows.push_back(r);
      }
    } else if (c.sliding[i]) {
      Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(d);
      r[2 * a] = c.normals(i, 0);
      r[2 * a + 1] = c.normals(i, 1);
      rows.push_back(r);
    }
  }
  qp.problem.equalities.resize(static_cast<Eigen::Index>(rows.size()), d);
  for (std::size_t r = 0; r < rows.size(); ++r) qp.problem.equalities.row(r) = rows[r];
  return qp;
}

DeformationField interface_field(const InterfaceQp& qp, const Eigen::VectorXd& w, int num_nodes) {
  NodeArray v = NodeArray::Zero(num_nodes, 2);
  for (std::size_t a = 0; a < qp.nodes.size(); ++a) {
    v(qp.nodes[a], 0) = w[2 * a];
    v(qp.nodes[a], 1) = w[2 * a + 1];
  }
  return DeformationField(std::move(v));
}

namespace {

// Componentwise Laplace solve over `inside` triangles; nodes flagged in
// `prescribed` keep the value from `data`.
NodeArray laplace_fill(const NodeArray& data, const std::vector<char>& prescribed, const Mesh& mesh,
                       const std::set<int>& inside, double quality_stiffening = 0.0) {
  const int n = mesh.num_nodes();
  Triplets trip;
  for (int i = 0; i < n; ++i) trip.emplace_back(i, i, 0.0);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    if (!inside.count(mesh.region(t))) continue;
    const auto v = mesh.triangle(t);
    const auto g = p1_gradients<double>(mesh.node(v[0]), mesh.node(v[1]), mesh.node(v[2]));
    double stiff = 1.0;
    if (quality_stiffening != 0.0) {
      stiff = std::pow(radius_ratio<double>(mesh.node(v[0]), mesh.node(v[1]), mesh.node(v[2])), -quality_stiffening);
    }
    const Eigen::Matrix3d k = stiff * mesh.area(t) * g.transpose() * g;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) trip.emplace_back(v[a], v[b], k(a, b));
  }
  SparseMatrix lap(n, n);
  lap.setFromTriplets(trip.begin(), trip.end());

  Dirichlet dir;
  for (int i = 0; i < n; ++i) {
    if (prescribed[i]) dir.nodes.push_back(i);
  }
  NodeArray out(n, 2);
  for (int k = 0; k < 2; ++k) {
    dir.values.resize(static_cast<Eigen::Index>(dir.nodes.size()));
    for (std::size_t a = 0; a < dir.nodes.size(); ++a) dir.values[a] = data(dir.nodes[a], k);
    SparseMatrix m = lap;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    SparseSystem sys;
    apply_dirichlet(m, rhs, dir, sys);
    out.col(k) = solve_spd(sys).values;
  }
  return out;
}

}  // namespace

DeformationField harmonic_extension(const DeformationField& data, const std::vector<int>& nodes, const Mesh& mesh,
                                    const RegionMap& regions, const ExtensionOptions& options) {
  const int n = mesh.num_nodes();
  NodeArray values = NodeArray::Zero(n, 2);
  for (int i : nodes) values.row(i) = data.values.row(i);
  if (!options.slide_boundary) {
    const auto inside = nodes_in_regions(mesh, regions.rotor);
    std::vector<char> prescribed(n, 0);
    for (int i = 0; i < n; ++i) prescribed[i] = !inside[i];
    for (int i : region_boundary_nodes(mesh, regions.rotor)) prescribed[i] = 1;
    for (int i : nodes) prescribed[i] = 1;
    return DeformationField(laplace_fill(values, prescribed, mesh, regions.rotor, options.quality_stiffening));
  }

  // Data nodes become clamped in the admissible space; their values enter as
  // a lifting and the remaining coefficients minimize the Dirichlet energy.
  auto c = design_constraints(mesh, regions, options.clamped_markers);
  for (int i : nodes) c.clamped[i] = 1;
  const SparseMatrix p = admissible_basis(c);
  DescentMetric laplace;
  laplace.mass_coefficient = 0.0;
  laplace.quality_stiffening = options.quality_stiffening;
  const SparseMatrix k = assemble_metric(mesh, regions.rotor, laplace);
  const Eigen::VectorXd lift = flat(values);
  const Eigen::VectorXd rhs = -(p.transpose() * (k * lift));
  Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(p.cols());
  if (rhs.norm() > 0.0) {
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(SparseMatrix(p.transpose() * k * p));
    if (ldlt.info() != Eigen::Success) throw SolverError("harmonic extension factorization failed", {});
    coeffs = ldlt.solve(rhs);
  }
  return DeformationField(unflat(lift + p * coeffs));
}

DeformationField extend_mesh_motion(const DeformationField& field, const Mesh& mesh,
                                    const std::set<int>& motion_regions, double quality_stiffening) {
  if (motion_regions.empty()) return field;
  const int n = mesh.num_nodes();
  const auto inside = nodes_in_regions(mesh, motion_regions);
  std::vector<char> prescribed(n, 0);
  for (int i = 0; i < n; ++i) prescribed[i] = !inside[i];
  for (int i : region_boundary_nodes(mesh, motion_regions)) prescribed[i] = 1;
  return DeformationField(laplace_fill(field.values, prescribed, mesh, motion_regions, quality_stiffening));
}

}  // namespace shapeforge
