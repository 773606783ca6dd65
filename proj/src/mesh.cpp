#include "shapeforge/mesh.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace shapeforge {

namespace {

std::string describe_edge(const MarkedEdge& e) {
  std::ostringstream os;
  os << "(" << e.a << ", " << e.b << ")";
  return os.str();
}

}  // namespace

Mesh::Mesh(NodeArray nodes, TriangleArray triangles, std::vector<int> region,
           std::vector<MarkedEdge> boundary_edges, std::vector<MarkedEdge> interface_edges)
    : nodes_(std::move(nodes)) {
  auto topo = std::make_shared<MeshTopology>();
  topo->triangles = std::move(triangles);
  topo->region = std::move(region);
  topo->boundary_edges = std::move(boundary_edges);
  topo->interface_edges = std::move(interface_edges);

  const int n = static_cast<int>(nodes_.rows());
  const int m = static_cast<int>(topo->triangles.rows());
  if (static_cast<int>(topo->region.size()) != m) throw MeshError("region list length differs from triangle count");
  if (!nodes_.allFinite()) throw MeshError("non-finite node coordinate");

  auto in_range = [n](int i) { return i >= 0 && i < n; };
  for (int t = 0; t < m; ++t) {
    for (int k = 0; k < 3; ++k) {
      if (!in_range(topo->triangles(t, k))) throw MeshError("triangle " + std::to_string(t) + " has node index out of range");
    }
    const auto a = nodes_.row(topo->triangles(t, 0)).transpose().eval();
    const auto b = nodes_.row(topo->triangles(t, 1)).transpose().eval();
    const auto c = nodes_.row(topo->triangles(t, 2)).transpose().eval();
    if (!(signed_area<double>(a, b, c) > 0.0)) {
      throw MeshError("triangle " + std::to_string(t) + " has non-positive signed area");
    }
    for (int k = 0; k < 3; ++k) {
      auto& et = topo->edges[edge_key(topo->triangles(t, k), topo->triangles(t, (k + 1) % 3))];
      if (et.first < 0) {
        et.first = t;
      } else if (et.second < 0) {
        et.second = t;
      } else {
        throw MeshError("edge shared by more than two triangles at triangle " + std::to_string(t));
      }
    }
  }

  for (const auto& e : topo->boundary_edges) {
    if (!in_range(e.a) || !in_range(e.b)) throw MeshError("boundary edge index out of range");
    auto it = topo->edges.find(edge_key(e.a, e.b));
    if (it == topo->edges.end() || it->second.second >= 0) {
      throw MeshError("boundary edge " + describe_edge(e) + " is not shared by exactly one triangle");
    }
  }
  for (const auto& e : topo->interface_edges) {
    if (!in_range(e.a) || !in_range(e.b)) throw MeshError("interface edge index out of range");
    auto it = topo->edges.find(edge_key(e.a, e.b));
    if (it == topo->edges.end() || it->second.second < 0) {
      throw MeshError("interface edge " + describe_edge(e) + " is not shared by two triangles");
    }
    if (topo->region[it->second.first] == topo->region[it->second.second]) {
      throw MeshError("interface edge " + describe_edge(e) + " does not separate distinct regions");
    }
  }
  topo_ = std::move(topo);
}

double Mesh::area(int t) const {
  const auto [a, b, c] = triangle(t);
  return signed_area<double>(node(a), node(b), node(c));
}

Vec2 Mesh::centroid(int t) const {
  const auto [a, b, c] = triangle(t);
  return (node(a) + node(b) + node(c)) / 3.0;
}

std::set<int> Mesh::region_ids() const { return {topo_->region.begin(), topo_->region.end()}; }

std::optional<Mesh> Mesh::with_nodes(const Mesh& base, NodeArray nodes) {
  if (nodes.rows() != base.nodes_.rows()) throw MeshError("node count mismatch");
  if (!nodes.allFinite()) return std::nullopt;
  const auto& tri = base.topo_->triangles;
  for (int t = 0; t < tri.rows(); ++t) {
    const Vec2 a = nodes.row(tri(t, 0)).transpose();
    const Vec2 b = nodes.row(tri(t, 1)).transpose();
    const Vec2 c = nodes.row(tri(t, 2)).transpose();
    if (!(signed_area<double>(a, b, c) > 0.0)) return std::nullopt;
  }
  Mesh out;
  out.nodes_ = std::move(nodes);
  out.topo_ = base.topo_;
  return out;
}

void RegionMap::validate(const Mesh& mesh) const {
  for (int id : mesh.region_ids()) {
    const int classes = int(is_iron(id)) + int(is_air(id)) + int(is_coil(id));
    if (classes != 1) {
      throw MeshError("region " + std::to_string(id) + " must be exactly one of iron, air, coil");
    }
    if (is_rotor(id) && is_coil(id)) throw MeshError("rotor region " + std::to_string(id) + " carries current");
  }
}

std::optional<Mesh> try_deform(const Mesh& mesh, const DeformationField& field, double t) {
  if (field.size() != mesh.num_nodes()) throw MeshError("deformation field size differs from node count");
  if (t < 0.0) throw MeshError("negative deformation step");
  if (t == 0.0) return mesh;
  return Mesh::with_nodes(mesh, mesh.nodes() + t * field.values);
}

Mesh deform(const Mesh& mesh, const DeformationField& field, double t) {
  auto out = try_deform(mesh, field, t);
  if (!out) throw MeshError("deformation produces a degenerate or inverted triangle");
  return *std::move(out);
}

double min_quality(const Mesh& mesh) {
  double q = std::numeric_limits<double>::infinity();
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto [a, b, c] = mesh.triangle(t);
    q = std::min(q, radius_ratio<double>(mesh.node(a), mesh.node(b), mesh.node(c)));
  }
  return q;
}

std::vector<int> interface_nodes(const Mesh& mesh, const RegionMap& regions) {
  std::set<int> out;
  for (const auto& e : mesh.interface_edges()) {
    const auto& et = mesh.edges().at(edge_key(e.a, e.b));
    const int r1 = mesh.region(et.first);
    const int r2 = mesh.region(et.second);
    if (!regions.is_rotor(r1) || !regions.is_rotor(r2)) continue;
    const bool iron_air = (regions.is_iron(r1) && regions.is_air(r2)) || (regions.is_air(r1) && regions.is_iron(r2));
    if (iron_air) {
      out.insert(e.a);
      out.insert(e.b);
    }
  }
  return {out.begin(), out.end()};
}

std::vector<int> region_boundary_nodes(const Mesh& mesh, const std::set<int>& inside) {
  std::set<int> out;
  for (const auto& [key, et] : mesh.edges()) {
    const bool in1 = inside.count(mesh.region(et.first)) > 0;
    const bool in2 = et.second >= 0 && inside.count(mesh.region(et.second)) > 0;
    if (in1 != in2) {
      out.insert(static_cast<int>(key >> 32));
      out.insert(static_cast<int>(key & 0xffffffffu));
    }
  }
  return {out.begin(), out.end()};
}

std::vector<char> nodes_in_regions(const Mesh& mesh, const std::set<int>& inside) {
  std::vector<char> flag(mesh.num_nodes(), 0);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    if (!inside.count(mesh.region(t))) continue;
    for (int v : mesh.triangle(t)) flag[v] = 1;
  }
  return flag;
}

void write_vtk(const Mesh& mesh, const std::vector<NamedField>& fields, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << std::setprecision(12);
  os << "# vtk DataFile Version 2.0\nshapeforge mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << mesh.num_nodes() << " double\n";
  for (int i = 0; i < mesh.num_nodes(); ++i) os << mesh.nodes()(i, 0) << ' ' << mesh.nodes()(i, 1) << " 0\n";
  os << "CELLS " << mesh.num_triangles() << ' ' << 4 * mesh.num_triangles() << '\n';
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto [a, b, c] = mesh.triangle(t);
    os << "3 " << a << ' ' << b << ' ' << c << '\n';
  }
  os << "CELL_TYPES " << mesh.num_triangles() << '\n';
  for (int t = 0; t < mesh.num_triangles(); ++t) os << "5\n";
  os << "CELL_DATA " << mesh.num_triangles() << "\nSCALARS region int 1\nLOOKUP_TABLE default\n";
  for (int t = 0; t < mesh.num_triangles(); ++t) os << mesh.region(t) << '\n';
  if (fields.empty()) return;
  os << "POINT_DATA " << mesh.num_nodes() << '\n';
  for (const auto& nf : fields) {
    if (const auto* s = std::get_if<ScalarField>(&nf.field)) {
      if (s->size() != mesh.num_nodes()) throw MeshError("field '" + nf.name + "' has wrong size");
      os << "SCALARS " << nf.name << " double 1\nLOOKUP_TABLE default\n";
      for (int i = 0; i < s->size(); ++i) os << s->values[i] << '\n';
    } else {
      const auto& v = std::get<DeformationField>(nf.field);
      if (v.size() != mesh.num_nodes()) throw MeshError("field '" + nf.name + "' has wrong size");
      os << "VECTORS " << nf.name << " double\n";
      for (int i = 0; i < v.size(); ++i) os << v.values(i, 0) << ' ' << v.values(i, 1) << " 0\n";
    }
  }
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

void write_mesh(const Mesh& mesh, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << std::setprecision(17);
  os << "nodes " << mesh.num_nodes() << " triangles " << mesh.num_triangles() << " boundary_edges "
     << mesh.boundary_edges().size() << " interface_edges " << mesh.interface_edges().size() << '\n';
  for (int i = 0; i < mesh.num_nodes(); ++i) os << mesh.nodes()(i, 0) << ' ' << mesh.nodes()(i, 1) << '\n';
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto [a, b, c] = mesh.triangle(t);
    os << a << ' ' << b << ' ' << c << ' ' << mesh.region(t) << '\n';
  }
  for (const auto& e : mesh.boundary_edges()) os << e.a << ' ' << e.b << ' ' << e.marker << '\n';
  for (const auto& e : mesh.interface_edges()) os << e.a << ' ' << e.b << ' ' << e.marker << '\n';
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

Mesh read_mesh(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::string w1, w2, w3, w4;
  long n = 0, m = 0, nb = 0, ni = 0;
  if (!(is >> w1 >> n >> w2 >> m >> w3 >> nb >> w4 >> ni) || w1 != "nodes" || w2 != "triangles" ||
      w3 != "boundary_edges" || w4 != "interface_edges" || n < 0 || m < 0 || nb < 0 || ni < 0) {
    throw MeshError("malformed mesh header in " + path.string());
  }
  NodeArray nodes(n, 2);
  for (long i = 0; i < n; ++i) {
    if (!(is >> nodes(i, 0) >> nodes(i, 1))) throw MeshError("truncated node list");
  }
  TriangleArray tris(m, 3);
  std::vector<int> region(m);
  for (long t = 0; t < m; ++t) {
    if (!(is >> tris(t, 0) >> tris(t, 1) >> tris(t, 2) >> region[t])) throw MeshError("truncated triangle list");
  }
  auto read_edges = [&is](long count) {
    std::vector<MarkedEdge> out(count);
    for (auto& e : out) {
      if (!(is >> e.a >> e.b >> e.marker)) throw MeshError("truncated edge list");
    }
    return out;
  };
  auto boundary = read_edges(nb);
  auto interface = read_edges(ni);
  return Mesh(std::move(nodes), std::move(tris), std::move(region), std::move(boundary), std::move(interface));
}

}  // namespace shapeforge
