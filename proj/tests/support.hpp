#pragma once

#include "shapeforge/mesh.hpp"

#include <functional>
#include <map>

namespace shapeforge::testing {

/// Structured triangulation of [x0, x1] x [y0, y1] with nx x ny cells, each
/// split along its diagonal. `region_of` picks the region from the centroid.
/// Outer edges get marker 1; edges between different regions are marked 10.
inline Mesh grid_mesh(int nx, int ny, double x0, double x1, double y0, double y1,
                      const std::function<int(const Vec2&)>& region_of = [](const Vec2&) { return 1; }) {
  NodeArray nodes((nx + 1) * (ny + 1), 2);
  auto id = [&](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      nodes.row(id(i, j)) << x0 + (x1 - x0) * i / nx, y0 + (y1 - y0) * j / ny;
  TriangleArray tris(2 * nx * ny, 3);
  int t = 0;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      tris.row(t++) << id(i, j), id(i + 1, j), id(i + 1, j + 1);
      tris.row(t++) << id(i, j), id(i + 1, j + 1), id(i, j + 1);
    }
  std::vector<int> region(tris.rows());
  for (int k = 0; k < tris.rows(); ++k) {
    const Vec2 c = (nodes.row(tris(k, 0)) + nodes.row(tris(k, 1)) + nodes.row(tris(k, 2))).transpose() / 3.0;
    region[k] = region_of(c);
  }
  std::map<std::uint64_t, std::vector<int>> owners;
  for (int k = 0; k < tris.rows(); ++k)
    for (int e = 0; e < 3; ++e) owners[edge_key(tris(k, e), tris(k, (e + 1) % 3))].push_back(k);
  std::vector<MarkedEdge> boundary;
  std::vector<MarkedEdge> interface;
  for (const auto& [key, tl] : owners) {
    const int a = static_cast<int>(key >> 32);
    const int b = static_cast<int>(key & 0xffffffffu);
    if (tl.size() == 1) {
      boundary.push_back({a, b, 1});
    } else if (region[tl[0]] != region[tl[1]]) {
      interface.push_back({a, b, 10});
    }
  }
  return Mesh(std::move(nodes), std::move(tris), std::move(region), std::move(boundary), std::move(interface));
}

}  // namespace shapeforge::testing
