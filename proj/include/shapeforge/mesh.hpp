#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace shapeforge {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
/// Row i holds the (x, y) coordinates of node i, in meters.
using NodeArray = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;
using TriangleArray = Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor>;

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MarkedEdge {
  int a = 0;
  int b = 0;
  int marker = 0;
  friend bool operator==(const MarkedEdge&, const MarkedEdge&) = default;
};

inline std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

/// Triangles sharing an undirected edge; `second` is -1 on the outer boundary.
struct EdgeTriangles {
  int first = -1;
  int second = -1;
};

/// Signed area of the triangle (a, b, c); positive for counterclockwise order.
template <typename Scalar>
Scalar signed_area(const Eigen::Matrix<Scalar, 2, 1>& a, const Eigen::Matrix<Scalar, 2, 1>& b,
                   const Eigen::Matrix<Scalar, 2, 1>& c) {
  return Scalar(0.5) * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

/// Radius ratio 2r/R, equal to 1 for the equilateral triangle and 0 for degenerate ones.
template <typename Scalar>
Scalar radius_ratio(const Eigen::Matrix<Scalar, 2, 1>& a, const Eigen::Matrix<Scalar, 2, 1>& b,
                    const Eigen::Matrix<Scalar, 2, 1>& c) {
  using std::abs;
  const Scalar la = (b - c).norm();
  const Scalar lb = (c - a).norm();
  const Scalar lc = (a - b).norm();
  const Scalar area = abs(signed_area(a, b, c));
  const Scalar denom = la * lb * lc * (la + lb + lc);
  if (denom <= Scalar(0)) return Scalar(0);
  return Scalar(16) * area * area / denom;
}

/// Connectivity shared between a mesh and all of its deformed copies.
struct MeshTopology {
  TriangleArray triangles;
  std::vector<int> region;
  std::vector<MarkedEdge> boundary_edges;
  std::vector<MarkedEdge> interface_edges;
  std::unordered_map<std::uint64_t, EdgeTriangles> edges;
};

/// Conforming triangular mesh with region labels and marked edges.
///
/// Meshes are immutable; deformation produces a new mesh sharing the topology.
class Mesh {
 public:
  Mesh() = default;
  /// Validates all mesh invariants and throws MeshError on violation.
  Mesh(NodeArray nodes, TriangleArray triangles, std::vector<int> region,
       std::vector<MarkedEdge> boundary_edges, std::vector<MarkedEdge> interface_edges);

  int num_nodes() const { return static_cast<int>(nodes_.rows()); }
  int num_triangles() const { return static_cast<int>(topo_->triangles.rows()); }

  const NodeArray& nodes() const { return nodes_; }
  Vec2 node(int i) const { return nodes_.row(i).transpose(); }
  std::array<int, 3> triangle(int t) const {
    const auto& tri = topo_->triangles;
    return {tri(t, 0), tri(t, 1), tri(t, 2)};
  }
  const TriangleArray& triangles() const { return topo_->triangles; }
  int region(int t) const { return topo_->region[t]; }
  const std::vector<int>& regions() const { return topo_->region; }
  const std::vector<MarkedEdge>& boundary_edges() const { return topo_->boundary_edges; }
  const std::vector<MarkedEdge>& interface_edges() const { return topo_->interface_edges; }
  const std::unordered_map<std::uint64_t, EdgeTriangles>& edges() const { return topo_->edges; }
  const std::shared_ptr<const MeshTopology>& topology() const { return topo_; }

  double area(int t) const;
  Vec2 centroid(int t) const;
  std::set<int> region_ids() const;

  /// Same topology, new coordinates. Returns nullopt if any triangle is not
  /// strictly positively oriented.
  static std::optional<Mesh> with_nodes(const Mesh& base, NodeArray nodes);

 private:
  NodeArray nodes_;
  std::shared_ptr<const MeshTopology> topo_ = std::make_shared<MeshTopology>();
};

/// Material and design classification of region ids.
///
/// Every region id is exactly one of iron, air or coil. Rotor ids are the
/// design region and must be iron or air; every other id is fixed.
struct RegionMap {
  std::set<int> iron;
  std::set<int> air;
  std::map<int, double> coil;  ///< region id -> signed current density (A/m^2)
  std::set<int> rotor;

  bool is_iron(int id) const { return iron.count(id) > 0; }
  bool is_air(int id) const { return air.count(id) > 0; }
  bool is_coil(int id) const { return coil.count(id) > 0; }
  bool is_rotor(int id) const { return rotor.count(id) > 0; }
  bool is_fixed(int id) const { return !is_rotor(id); }

  /// Throws MeshError if a mesh region is unclassified or classified twice,
  /// or if a rotor region is not iron or air.
  void validate(const Mesh& mesh) const;
};

/// Per-node displacement, meters.
struct DeformationField {
  NodeArray values;

  DeformationField() = default;
  explicit DeformationField(NodeArray v) : values(std::move(v)) {}
  static DeformationField zero(const Mesh& mesh) {
    return DeformationField(NodeArray::Zero(mesh.num_nodes(), 2));
  }
  int size() const { return static_cast<int>(values.rows()); }
};

/// Per-node scalar (vector potential u or adjoint p, Wb/m).
struct ScalarField {
  Eigen::VectorXd values;

  ScalarField() = default;
  explicit ScalarField(Eigen::VectorXd v) : values(std::move(v)) {}
  static ScalarField zero(const Mesh& mesh) { return ScalarField(Eigen::VectorXd::Zero(mesh.num_nodes())); }
  int size() const { return static_cast<int>(values.size()); }
};

/// Moves every node x to x + t V(x). Throws MeshError when a triangle would
/// collapse or invert.
Mesh deform(const Mesh& mesh, const DeformationField& field, double t);
/// Non-throwing variant used by line searches.
std::optional<Mesh> try_deform(const Mesh& mesh, const DeformationField& field, double t);

double min_quality(const Mesh& mesh);

/// Nodes on interface edges separating an iron rotor region from an air rotor
/// region, sorted ascending.
std::vector<int> interface_nodes(const Mesh& mesh, const RegionMap& regions);

/// Nodes on edges with a triangle of `inside` on exactly one side (or on the
/// outer boundary with an `inside` triangle), sorted ascending.
std::vector<int> region_boundary_nodes(const Mesh& mesh, const std::set<int>& inside);

/// Per-node flag: node belongs to the closure of a triangle in `inside`.
std::vector<char> nodes_in_regions(const Mesh& mesh, const std::set<int>& inside);

struct NamedField {
  std::string name;
  std::variant<ScalarField, DeformationField> field;
};

void write_vtk(const Mesh& mesh, const std::vector<NamedField>& fields, const std::filesystem::path& path);

/// Plain text mesh format:
///   nodes N triangles M boundary_edges B interface_edges I
///   N lines "x y", M lines "i j k region", B lines "i j marker", I lines "i j marker".
void write_mesh(const Mesh& mesh, const std::filesystem::path& path);
Mesh read_mesh(const std::filesystem::path& path);

}  // namespace shapeforge
