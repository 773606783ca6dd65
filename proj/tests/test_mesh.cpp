#include "shapeforge/mesh.hpp"
#include "support.hpp"

#include <doctest.h>

#include <filesystem>

using namespace shapeforge;

TEST_CASE("signed area and orientation") {
  const Vec2 a(0, 0), b(2, 0), c(0, 1);
  CHECK(signed_area(a, b, c) == doctest::Approx(1.0));
  CHECK(signed_area(a, c, b) == doctest::Approx(-1.0));
}

TEST_CASE("radius ratio is 1 for equilateral triangles and falls with distortion") {
  const Vec2 a(0, 0), b(1, 0), c(0.5, std::sqrt(3.0) / 2);
  CHECK(radius_ratio(a, b, c) == doctest::Approx(1.0).epsilon(1e-14));
  // Right isosceles: 2 r / R = 2 (2 - sqrt 2) / 2 / (sqrt 2 / 2) = 2 (sqrt 2 - 1).
  CHECK(radius_ratio(Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)) == doctest::Approx(2.0 * (std::sqrt(2.0) - 1.0)));
  CHECK(radius_ratio(Vec2(0, 0), Vec2(1, 0), Vec2(0.5, 1e-3)) < 0.01);
  CHECK(radius_ratio(Vec2(0, 0), Vec2(1, 0), Vec2(2, 0)) == 0.0);
}

TEST_CASE("constructor rejects broken meshes") {
  NodeArray nodes(3, 2);
  nodes << 0, 0, 1, 0, 0, 1;
  TriangleArray cw(1, 3);
  cw << 0, 2, 1;
  CHECK_THROWS_AS(Mesh(nodes, cw, {1}, {}, {}), MeshError);
  TriangleArray ccw(1, 3);
  ccw << 0, 1, 2;
  CHECK_THROWS_AS(Mesh(nodes, ccw, {1, 2}, {}, {}), MeshError);
  TriangleArray out_of_range(1, 3);
  out_of_range << 0, 1, 7;
  CHECK_THROWS_AS(Mesh(nodes, out_of_range, {1}, {}, {}), MeshError);
  CHECK_NOTHROW(Mesh(nodes, ccw, {1}, {{0, 1, 1}}, {}));
}

TEST_CASE("deformation keeps topology and rejects inversion") {
  const Mesh m = testing::grid_mesh(4, 4, 0, 1, 0, 1);
  DeformationField shift = DeformationField::zero(m);
  shift.values.col(0).setConstant(0.25);
  const Mesh moved = deform(m, shift, 2.0);
  CHECK(moved.topology() == m.topology());
  CHECK(moved.node(0).x() == doctest::Approx(0.5));
  CHECK(min_quality(moved) == doctest::Approx(min_quality(m)));

  // Pull one interior node across its neighbours.
  DeformationField fold = DeformationField::zero(m);
  fold.values(6, 0) = 1.0;
  CHECK_FALSE(try_deform(m, fold, 1.0).has_value());
  CHECK_THROWS_AS(deform(m, fold, 1.0), MeshError);
  CHECK(try_deform(m, fold, 0.01).has_value());
}

TEST_CASE("interface and region boundary nodes") {
  const Mesh m = testing::grid_mesh(4, 2, 0, 2, 0, 1, [](const Vec2& c) { return c.x() < 1.0 ? 1 : 2; });
  RegionMap regions;
  regions.iron = {1};
  regions.air = {2};
  regions.rotor = {1, 2};
  regions.validate(m);
  // The vertical line x = 1 carries three nodes.
  CHECK(interface_nodes(m, regions) == std::vector<int>{2, 7, 12});
  const auto in = nodes_in_regions(m, {1});
  CHECK(std::count(in.begin(), in.end(), 1) == 9);
  CHECK(region_boundary_nodes(m, {1}).size() == 8);
}

TEST_CASE("region map classification is checked") {
  const Mesh m = testing::grid_mesh(2, 2, 0, 1, 0, 1);
  RegionMap bad;
  CHECK_THROWS_AS(bad.validate(m), MeshError);
  RegionMap twice;
  twice.iron = {1};
  twice.air = {1};
  CHECK_THROWS_AS(twice.validate(m), MeshError);
}

TEST_CASE("mesh text format round-trips") {
  const Mesh m = testing::grid_mesh(3, 2, 0, 1, 0, 1, [](const Vec2& c) { return c.y() < 0.5 ? 4 : 5; });
  const auto path = std::filesystem::temp_directory_path() / "shapeforge_roundtrip.mesh";
  write_mesh(m, path);
  const Mesh back = read_mesh(path);
  CHECK(back.nodes() == m.nodes());
  CHECK(back.triangles() == m.triangles());
  CHECK(back.regions() == m.regions());
  CHECK(back.boundary_edges() == m.boundary_edges());
  CHECK(back.interface_edges() == m.interface_edges());
  std::filesystem::remove(path);
}
