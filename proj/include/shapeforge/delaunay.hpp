#pragma once

#include "shapeforge/mesh.hpp"

#include <array>
#include <utility>
#include <vector>

namespace shapeforge {

/// Constrained Delaunay triangulation of the convex hull of `points`.
///
/// Every segment becomes a mesh edge; segments must not cross each other or
/// pass through other points. Triangles are returned counterclockwise. The
/// insertion order is deterministic.
std::vector<std::array<int, 3>> constrained_delaunay(const std::vector<Vec2>& points,
                                                     const std::vector<std::pair<int, int>>& segments);

}  // namespace shapeforge
