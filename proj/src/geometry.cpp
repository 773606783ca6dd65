#include "shapeforge/geometry.hpp"

#include "shapeforge/delaunay.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <deque>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

namespace shapeforge {

namespace {

constexpr double kPi = std::numbers::pi;

Vec2 polar(double r, double theta) { return {r * std::cos(theta), r * std::sin(theta)}; }

double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  return a < 0 ? a + 2.0 * kPi : a;
}

// Planar straight-line graph with exact-coordinate deduplication.
class Pslg {
 public:
  int add_point(const Vec2& p) {
    const auto key = std::make_pair(std::llround(p.x() * 1e10), std::llround(p.y() * 1e10));
    auto it = index_.find(key);
    if (it != index_.end()) return it->second;
    const int id = static_cast<int>(points_.size());
    points_.push_back(p);
    index_.emplace(key, id);
    return id;
  }
  void add_segment(int a, int b) {
    if (a != b) segments_.emplace_back(a, b);
  }
  /// Adds a polyline; returns its point ids.
  std::vector<int> add_polyline(const std::vector<Vec2>& pts, bool closed) {
    std::vector<int> ids;
    for (const auto& p : pts) ids.push_back(add_point(p));
    for (std::size_t i = 0; i + 1 < ids.size(); ++i) add_segment(ids[i], ids[i + 1]);
    if (closed && ids.size() > 2) add_segment(ids.back(), ids.front());
    return ids;
  }
  const std::vector<Vec2>& points() const { return points_; }
  std::vector<Vec2>& points() { return points_; }
  const std::vector<std::pair<int, int>>& segments() const { return segments_; }

 private:
  struct PairHash {
    std::size_t operator()(const std::pair<long long, long long>& k) const {
      return std::hash<long long>()(k.first) * 1000003u ^ std::hash<long long>()(k.second);
    }
  };
  std::vector<Vec2> points_;
  std::vector<std::pair<int, int>> segments_;
  std::unordered_map<std::pair<long long, long long>, int, PairHash> index_;
};

int pieces(double length, double h, int minimum = 1) {
  return std::max(minimum, static_cast<int>(std::ceil(length / h - 1e-9)));
}

// Circle of radius r through the given points (which must lie on it).
std::vector<Vec2> circle_polyline(double r, double h, std::vector<Vec2> anchors) {
  std::vector<Vec2> out;
  if (anchors.empty()) {
    const int n = pieces(2.0 * kPi * r, h, 8);
    for (int i = 0; i < n; ++i) out.push_back(polar(r, 2.0 * kPi * i / n));
    return out;
  }
  std::sort(anchors.begin(), anchors.end(), [](const Vec2& a, const Vec2& b) {
    return wrap_angle(std::atan2(a.y(), a.x())) < wrap_angle(std::atan2(b.y(), b.x()));
  });
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const Vec2& a = anchors[i];
    const Vec2& b = anchors[(i + 1) % anchors.size()];
    const double ta = wrap_angle(std::atan2(a.y(), a.x()));
    double span = wrap_angle(std::atan2(b.y(), b.x())) - ta;
    if (span <= 0.0) span += 2.0 * kPi;
    const int n = pieces(r * span, h, anchors.size() == 1 ? 8 : 1);
    out.push_back(a);
    for (int k = 1; k < n; ++k) out.push_back(polar(r, ta + span * k / n));
  }
  return out;
}

std::vector<Vec2> arc_polyline(double r, double t0, double t1, double h) {
  const int n = pieces(r * std::abs(t1 - t0), h);
  std::vector<Vec2> out;
  for (int k = 0; k <= n; ++k) out.push_back(polar(r, t0 + (t1 - t0) * k / n));
  return out;
}

std::vector<Vec2> segment_polyline(const Vec2& a, const Vec2& b, double h) {
  const int n = pieces((b - a).norm(), h);
  std::vector<Vec2> out;
  for (int k = 0; k <= n; ++k) out.push_back(a + (b - a) * (static_cast<double>(k) / n));
  return out;
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

// Uniform bucket grid over segment midpoints, for clearance queries.
class SegmentGrid {
 public:
  SegmentGrid(const std::vector<Vec2>& pts, const std::vector<std::pair<int, int>>& segs, double cell)
      : pts_(pts), segs_(segs), cell_(cell) {
    for (int s = 0; s < static_cast<int>(segs.size()); ++s) {
      const Vec2 mid = 0.5 * (pts[segs[s].first] + pts[segs[s].second]);
      buckets_[key(cell_index(mid.x()), cell_index(mid.y()))].push_back(s);
    }
  }
  double distance(const Vec2& p) const {
    double best = std::numeric_limits<double>::infinity();
    const long cx = cell_index(p.x()), cy = cell_index(p.y());
    for (long dx = -1; dx <= 1; ++dx) {
      for (long dy = -1; dy <= 1; ++dy) {
        auto it = buckets_.find(key(cx + dx, cy + dy));
        if (it == buckets_.end()) continue;
        for (int s : it->second) {
          best = std::min(best, point_segment_distance(p, pts_[segs_[s].first], pts_[segs_[s].second]));
        }
      }
    }
    return best;
  }

 private:
  long cell_index(double x) const { return static_cast<long>(std::floor(x / cell_)); }
  static std::uint64_t key(long x, long y) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(x)) << 32) | static_cast<std::uint32_t>(y);
  }
  const std::vector<Vec2>& pts_;
  const std::vector<std::pair<int, int>>& segs_;
  double cell_;
  std::unordered_map<std::uint64_t, std::vector<int>> buckets_;
};

struct Layout {
  double slot_pitch;
  double slot_half_width;
  Vec2 e_d;
  Vec2 e_q;
  std::vector<double> boundaries;
};

int classify(const MachineSpec& s, const Layout& lay, const Vec2& x) {
  using namespace region_id;
  const double r = x.norm();
  if (r > s.stator_outer_radius) return kOuterAir;
  if (r > s.stator_inner_radius) {
    if (r < s.stator_inner_radius + s.slot_depth) {
      const double theta = wrap_angle(std::atan2(x.y(), x.x()));
      const int k = static_cast<int>(std::floor(theta / lay.slot_pitch)) % s.slot_count;
      const double center = (k + 0.5) * lay.slot_pitch;
      if (std::abs(theta - center) < lay.slot_half_width) return kSlotBase + k;
    }
    return kStatorIron;
  }
  if (r > s.torque_r_out) return kAirgapOuter;
  if (r > s.torque_r_in) return kTorqueBand;
  if (r > s.rotor_outer_radius) return kAirgapInner;
  if (r < s.shaft_radius) return kShaft;
  const double q = x.dot(lay.e_q);
  const auto layer = std::upper_bound(lay.boundaries.begin(), lay.boundaries.end(), q) - lay.boundaries.begin();
  return kLayerBase + static_cast<int>(layer);
}

}  // namespace

void MachineSpec::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("machine spec: " + msg); };
  if (!(shaft_radius >= 0.0)) fail("shaft radius must be non-negative");
  if (!(shaft_radius < rotor_outer_radius)) fail("shaft radius must be below the rotor outer radius");
  if (!(rotor_outer_radius < stator_inner_radius)) fail("rotor outer radius must be below the stator inner radius");
  if (!(stator_inner_radius < stator_outer_radius)) fail("stator inner radius must be below the stator outer radius");
  if (!(stator_outer_radius < domain_radius)) fail("domain radius must exceed the stator outer radius");
  if (!(rotor_outer_radius < torque_r_in && torque_r_in < torque_r_out && torque_r_out < stator_inner_radius)) {
    fail("torque annulus must lie strictly inside the airgap");
  }
  if (!(slot_depth > 0.0 && stator_inner_radius + slot_depth < stator_outer_radius)) fail("slot depth out of range");
  if (!(slot_width_fraction > 0.0 && slot_width_fraction < 1.0)) fail("slot width fraction must lie in (0, 1)");
  if (pole_pairs < 1) fail("pole pairs must be at least 1");
  if (pole_pairs != 1) fail("the layered rotor generator supports one pole pair only");
  if (slot_count < 6 || slot_count % (6 * pole_pairs) != 0) fail("slot count must be divisible by 6 * pole pairs");
  if (layer_thicknesses.empty() || layer_thicknesses.size() % 2 == 0) fail("layer count must be odd");
  for (double t : layer_thicknesses) {
    if (!(t > 0.0)) fail("layer thicknesses must be positive");
  }
  const double stack = std::accumulate(layer_thicknesses.begin(), layer_thicknesses.end(), 0.0);
  if (stack > 2.0 * rotor_outer_radius * (1.0 + 1e-12)) fail("layer stack exceeds the rotor diameter");
  for (double b : layer_boundaries(*this)) {
    if (std::abs(b) >= rotor_outer_radius) fail("layer boundary outside the rotor");
    if (std::abs(b) <= shaft_radius) fail("layer boundary intersects the shaft");
  }
  if (!(axial_length > 0.0)) fail("axial length must be positive");
  if (!(mesh_size > 0.0 && mesh_size < rotor_outer_radius)) fail("mesh size out of range");
  if (!(turns_per_slot > 0.0)) fail("turns per slot must be positive");
  for (double i : phase_currents) {
    if (!std::isfinite(i)) fail("phase currents must be finite");
  }
}

MachineSpec desk_preset() { return MachineSpec{}; }

std::vector<double> layer_boundaries(const MachineSpec& spec) {
  const double stack = std::accumulate(spec.layer_thicknesses.begin(), spec.layer_thicknesses.end(), 0.0);
  std::vector<double> out;
  double q = -0.5 * stack;
  for (std::size_t i = 0; i + 1 < spec.layer_thicknesses.size(); ++i) {
    q += spec.layer_thicknesses[i];
    out.push_back(q);
  }
  return out;
}

namespace {

// Phase belts of a single-layer 60-degree spread winding: U+ W- V+ U- W+ V-.
constexpr std::array<int, 6> kBeltPhase = {0, 2, 1, 0, 2, 1};
constexpr std::array<double, 6> kBeltSign = {1.0, -1.0, 1.0, -1.0, 1.0, -1.0};

int belt_of_slot(const MachineSpec& spec, int k) {
  const int per_belt = spec.slot_count / (6 * spec.pole_pairs);
  return (k / per_belt) % 6;
}

}  // namespace

double stator_field_axis(const MachineSpec& spec) {
  // For u ~ cos(theta - theta0) driven by currents peaking at theta0, the flux
  // density in the bore points along theta0 - pi/2.
  std::complex<double> sum = 0.0;
  const double pitch = 2.0 * kPi / spec.slot_count;
  for (int k = 0; k < spec.slot_count; ++k) {
    const int belt = belt_of_slot(spec, k);
    const double current = kBeltSign[belt] * spec.phase_currents[kBeltPhase[belt]];
    sum += current * std::polar(1.0, spec.pole_pairs * (k + 0.5) * pitch);
  }
  return (std::arg(sum) - kPi / 2) / spec.pole_pairs;
}

MachineModel generate(const MachineSpec& spec) {
  spec.validate();
  const double h = spec.mesh_size;

  Layout lay;
  lay.slot_pitch = 2.0 * kPi / spec.slot_count;
  lay.slot_half_width = 0.5 * spec.slot_width_fraction * lay.slot_pitch;
  // The d-axis lags the stator field by the current angle, which yields
  // positive (counterclockwise) reluctance torque.
  const double d_angle = stator_field_axis(spec) - spec.current_angle / spec.pole_pairs;
  lay.e_d = polar(1.0, d_angle);
  lay.e_q = polar(1.0, d_angle + kPi / 2);
  lay.boundaries = layer_boundaries(spec);

  Pslg g;
  // Rotor layer chords; their endpoints anchor the rotor circle.
  const double rr = spec.rotor_outer_radius;
  std::vector<Vec2> rotor_anchors;
  std::vector<int> chord_counts;
  for (double b : lay.boundaries) {
    const double half = std::sqrt(rr * rr - b * b);
    const Vec2 p0 = b * lay.e_q - half * lay.e_d;
    const Vec2 p1 = b * lay.e_q + half * lay.e_d;
    rotor_anchors.push_back(p0);
    rotor_anchors.push_back(p1);
    chord_counts.push_back(static_cast<int>(g.add_polyline(segment_polyline(p0, p1, h), false).size()));
  }
  g.add_polyline(circle_polyline(rr, h, rotor_anchors), true);
  if (spec.shaft_radius > 0.0) g.add_polyline(circle_polyline(spec.shaft_radius, h, {}), true);
  g.add_polyline(circle_polyline(spec.torque_r_in, h, {}), true);
  g.add_polyline(circle_polyline(spec.torque_r_out, h, {}), true);

  // Open slots: radial sides from the bore to the slot bottom.
  std::vector<Vec2> bore_anchors;
  const double ri = spec.stator_inner_radius, rb = ri + spec.slot_depth;
  for (int k = 0; k < spec.slot_count; ++k) {
    const double c = (k + 0.5) * lay.slot_pitch;
    const double t0 = c - lay.slot_half_width, t1 = c + lay.slot_half_width;
    bore_anchors.push_back(polar(ri, t0));
    bore_anchors.push_back(polar(ri, t1));
    g.add_polyline(segment_polyline(polar(ri, t0), polar(rb, t0), h), false);
    g.add_polyline(segment_polyline(polar(ri, t1), polar(rb, t1), h), false);
    g.add_polyline(arc_polyline(rb, t0, t1, h), false);
  }
  g.add_polyline(circle_polyline(ri, h, bore_anchors), true);
  g.add_polyline(circle_polyline(spec.stator_outer_radius, h, {}), true);
  g.add_polyline(circle_polyline(spec.domain_radius, h, {}), true);

  // Fill with a hexagonal lattice, keeping clear of every constraint.
  const std::size_t n_constrained = g.points().size();
  {
    const SegmentGrid grid(g.points(), g.segments(), 2.0 * h);
    const double dy = h * std::sqrt(3.0) / 2.0;
    const double limit = spec.domain_radius;
    const int rows = static_cast<int>(std::ceil(limit / dy));
    std::vector<Vec2> fill;
    for (int j = -rows; j <= rows; ++j) {
      const double y = j * dy;
      const double shift = (j % 2 == 0) ? 0.0 : 0.5 * h;
      const int cols = static_cast<int>(std::ceil(limit / h)) + 1;
      for (int i = -cols; i <= cols; ++i) {
        const Vec2 p(i * h + shift, y);
        if (p.norm() >= limit - 0.5 * h) continue;
        if (grid.distance(p) < 0.6 * h) continue;
        fill.push_back(p);
      }
    }
    for (const auto& p : fill) g.add_point(p);
  }
  spdlog::debug("geometry: {} constrained points, {} fill points, {} segments", n_constrained,
                g.points().size() - n_constrained, g.segments().size());

  std::vector<std::array<int, 3>> tris;
  try {
    tris = constrained_delaunay(g.points(), g.segments());
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("meshing failed: ") + e.what());
  }

  // Flood-fill triangles between constraint edges and label each component.
  std::unordered_set<std::uint64_t> constrained;
  for (const auto& [a, b] : g.segments()) constrained.insert(edge_key(a, b));
  std::unordered_map<std::uint64_t, std::vector<int>> edge_tris;
  for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
    for (int k = 0; k < 3; ++k) edge_tris[edge_key(tris[t][k], tris[t][(k + 1) % 3])].push_back(t);
  }
  std::vector<int> component(tris.size(), -1);
  std::vector<int> region(tris.size(), -1);
  int n_components = 0;
  for (int seed = 0; seed < static_cast<int>(tris.size()); ++seed) {
    if (component[seed] >= 0) continue;
    std::vector<int> members;
    std::deque<int> queue{seed};
    component[seed] = n_components;
    while (!queue.empty()) {
      const int t = queue.front();
      queue.pop_front();
      members.push_back(t);
      for (int k = 0; k < 3; ++k) {
        const auto key = edge_key(tris[t][k], tris[t][(k + 1) % 3]);
        if (constrained.count(key)) continue;
        for (int u : edge_tris[key]) {
          if (component[u] < 0) {
            component[u] = n_components;
            queue.push_back(u);
          }
        }
      }
    }
    std::map<int, int> votes;
    for (int t : members) {
      const Vec2 c = (g.points()[tris[t][0]] + g.points()[tris[t][1]] + g.points()[tris[t][2]]) / 3.0;
      ++votes[classify(spec, lay, c)];
    }
    const auto best = std::max_element(votes.begin(), votes.end(),
                                       [](const auto& a, const auto& b) { return a.second < b.second; });
    if (votes.size() > 1) spdlog::warn("geometry: mesh component with mixed region votes");
    for (int t : members) region[t] = best->first;
    ++n_components;
  }

  const int n = static_cast<int>(g.points().size());
  NodeArray nodes(n, 2);
  for (int i = 0; i < n; ++i) nodes.row(i) = g.points()[i].transpose();
  TriangleArray tri_array(static_cast<Eigen::Index>(tris.size()), 3);
  for (std::size_t t = 0; t < tris.size(); ++t) {
    for (int k = 0; k < 3; ++k) tri_array(static_cast<Eigen::Index>(t), k) = tris[t][k];
  }

  MachineModel model;
  model.spec = spec;
  model.d_axis_angle = d_angle;
  model.chord_point_counts = chord_counts;

  using namespace region_id;
  auto& regions = model.regions;
  regions.iron = {kStatorIron};
  regions.air = {kOuterAir, kAirgapInner, kTorqueBand, kAirgapOuter};
  if (spec.shaft_radius > 0.0) regions.air.insert(kShaft);
  for (int k = 0; k < spec.slot_count; ++k) {
    const int belt = belt_of_slot(spec, k);
    regions.coil[kSlotBase + k] = kBeltSign[belt];
    model.phase_of[kSlotBase + k] = kBeltPhase[belt];
  }
  for (int layer = 0; layer < static_cast<int>(spec.layer_thicknesses.size()); ++layer) {
    (layer % 2 == 0 ? regions.iron : regions.air).insert(kLayerBase + layer);
    regions.rotor.insert(kLayerBase + layer);
  }

  auto is_layer = [](int id) { return id >= kLayerBase; };
  std::vector<MarkedEdge> boundary, interface;
  for (const auto& [key, ts] : edge_tris) {
    const int a = static_cast<int>(key >> 32), b = static_cast<int>(key & 0xffffffffu);
    if (ts.size() == 1) {
      boundary.push_back({a, b, edge_marker::kOuterBoundary});
      continue;
    }
    const int r1 = region[ts[0]], r2 = region[ts[1]];
    if (r1 == r2) continue;
    int marker = edge_marker::kOther;
    if (is_layer(r1) && is_layer(r2)) {
      marker = edge_marker::kLayerBase + std::min(r1, r2) - kLayerBase;
    } else if ((is_layer(r1) && r2 == kAirgapInner) || (is_layer(r2) && r1 == kAirgapInner)) {
      marker = edge_marker::kRotorOuter;
    } else if ((is_layer(r1) && r2 == kShaft) || (is_layer(r2) && r1 == kShaft)) {
      marker = edge_marker::kShaft;
    }
    interface.push_back({a, b, marker});
  }
  auto by_nodes = [](const MarkedEdge& x, const MarkedEdge& y) {
    return std::tie(x.a, x.b) < std::tie(y.a, y.b);
  };
  std::sort(boundary.begin(), boundary.end(), by_nodes);
  std::sort(interface.begin(), interface.end(), by_nodes);

  model.mesh = Mesh(std::move(nodes), std::move(tri_array), std::move(region), std::move(boundary),
                    std::move(interface));
  regions.validate(model.mesh);
  const auto present = model.mesh.region_ids();
  for (int layer = 0; layer < static_cast<int>(spec.layer_thicknesses.size()); ++layer) {
    if (!present.count(kLayerBase + layer)) {
      throw std::runtime_error("meshing failed: rotor layer " + std::to_string(layer) + " received no triangles");
    }
  }
  model.excitation =
      excitation_from_phases(model.mesh, regions, model.phase_of, spec.phase_currents, spec.turns_per_slot);
  model.torque =
      TorqueFunctional::over_annulus(model.mesh, regions, spec.torque_r_in, spec.torque_r_out, spec.axial_length);
  spdlog::info("geometry: {} nodes, {} triangles, min quality {:.3f}", model.mesh.num_nodes(),
               model.mesh.num_triangles(), min_quality(model.mesh));
  return model;
}

}  // namespace shapeforge
