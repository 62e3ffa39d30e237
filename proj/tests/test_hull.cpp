#include <algorithm>
#include <set>
#include <vector>

#include "asmsim/errors.hpp"
#include "asmsim/mesh.hpp"
#include "asmsim/rng.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace asmsim;

namespace {

// Plane-side containment check: every point must lie behind (or on, within
// tol) every outward face plane.
bool hullContains(const TriMesh& hull, const std::vector<Vec3>& pts,
                  double tol = 1e-9) {
  for (size_t f = 0; f < hull.triangles.size(); ++f) {
    Vec3 n = hull.triangleNormal(int(f));
    Vec3 a = hull.vertices[hull.triangles[f][0]];
    for (const Vec3& p : pts)
      if (n.dot(p - a) > tol) return false;
  }
  return true;
}

std::set<std::array<double, 3>> vertexSet(const TriMesh& mesh) {
  std::set<std::array<double, 3>> out;
  for (const Vec3& v : mesh.vertices) out.insert({v.x(), v.y(), v.z()});
  return out;
}

std::vector<Vec3> cubeCorners(double half) {
  std::vector<Vec3> pts;
  for (int sx : {-1, 1})
    for (int sy : {-1, 1})
      for (int sz : {-1, 1}) pts.emplace_back(sx * half, sy * half, sz * half);
  return pts;
}

}  // namespace

TEST_CASE("convexHull of cube corners") {
  auto pts = cubeCorners(0.5);
  TriMesh hull = convexHull(pts);
  CHECK(hull.vertices.size() == 8);
  CHECK(hull.triangles.size() == 12);
  CHECK(hull.watertight);
  CHECK(meshVolume(hull) == doctest::Approx(1.0));
  CHECK(hullContains(hull, pts));

  // Outward orientation: every face normal points away from the centroid.
  for (size_t f = 0; f < hull.triangles.size(); ++f) {
    Vec3 a = hull.vertices[hull.triangles[f][0]];
    CHECK(hull.triangleNormal(int(f)).dot(a) > 0.0);
  }
}

TEST_CASE("convexHull absorbs interior points") {
  auto pts = cubeCorners(0.5);
  pts.emplace_back(0, 0, 0);
  pts.emplace_back(0.1, -0.2, 0.3);
  TriMesh hull = convexHull(pts);
  CHECK(hull.vertices.size() == 8);
  CHECK(hull.triangles.size() == 12);
  CHECK(vertexSet(hull) == vertexSet(convexHull(cubeCorners(0.5))));
}

TEST_CASE("convexHull contains random ball points, vertices subset of input") {
  Rng rng(51);
  std::vector<Vec3> pts;
  for (int i = 0; i < 100; ++i)
    pts.push_back(rng.unitVector() * rng.uniform(0.0, 1.0));
  TriMesh hull = convexHull(pts);
  CHECK(hull.watertight);
  CHECK(hullContains(hull, pts));

  auto inputs = vertexSet(TriMesh{pts, {}, false, 0});
  for (const Vec3& v : hull.vertices)
    CHECK(inputs.count({v.x(), v.y(), v.z()}) == 1);
}

TEST_CASE("convexHull is idempotent on its own vertices") {
  Rng rng(52);
  std::vector<Vec3> pts;
  for (int i = 0; i < 150; ++i)
    pts.push_back(rng.unitVector() * rng.uniform(0.0, 1.0));
  TriMesh hull = convexHull(pts);
  TriMesh again = convexHull(hull.vertices);
  CHECK(vertexSet(again) == vertexSet(hull));
  CHECK(again.triangles.size() == hull.triangles.size());
}

TEST_CASE("convexHull keeps all points of a sphere sample") {
  // Points in convex position: everyone is a hull vertex.
  Rng rng(53);
  std::vector<Vec3> pts;
  for (int i = 0; i < 60; ++i) pts.push_back(rng.unitVector());
  TriMesh hull = convexHull(pts);
  CHECK(hull.vertices.size() == pts.size());
  CHECK(hull.watertight);
  // Euler characteristic of a closed genus-0 surface: F = 2V - 4.
  CHECK(hull.triangles.size() == 2 * pts.size() - 4);
}

TEST_CASE("convexHull rejects degenerate inputs") {
  CHECK_THROWS_AS(convexHull({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}), Error);

  std::vector<Vec3> collinear;
  for (int i = 0; i < 10; ++i) collinear.emplace_back(i * 0.1, 0, 0);
  CHECK_THROWS_AS(convexHull(collinear), Error);

  std::vector<Vec3> coplanar;
  Rng rng(54);
  for (int i = 0; i < 30; ++i)
    coplanar.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1), 0.25);
  CHECK_THROWS_AS(convexHull(coplanar), Error);

  try {
    convexHull(coplanar);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Geometry);
  }
}

TEST_CASE("convexHull is deterministic") {
  Rng rng(55);
  std::vector<Vec3> pts;
  for (int i = 0; i < 120; ++i) pts.push_back(rng.unitVector() * 0.3);
  TriMesh a = convexHull(pts);
  TriMesh b = convexHull(pts);
  REQUIRE(a.vertices.size() == b.vertices.size());
  for (size_t i = 0; i < a.vertices.size(); ++i)
    CHECK(a.vertices[i] == b.vertices[i]);
  CHECK(a.triangles == b.triangles);
}

TEST_CASE("convexHull handles structured grids with many coplanar points") {
  // 5x5x5 lattice: faces hold 25 coplanar points each; hull is the cube.
  std::vector<Vec3> pts;
  for (int x = 0; x < 5; ++x)
    for (int y = 0; y < 5; ++y)
      for (int z = 0; z < 5; ++z) pts.emplace_back(x * 0.25, y * 0.25, z * 0.25);
  TriMesh hull = convexHull(pts);
  CHECK(hull.watertight);
  CHECK(hullContains(hull, pts));
  CHECK(meshVolume(hull) == doctest::Approx(1.0));
}

TEST_CASE("convexHull of random box point sets") {
  Rng rng(56);
  for (int trial = 0; trial < 10; ++trial) {
    Pose pose{rng.unitVector() * 0.4, rng.randomRotation()};
    std::vector<Vec3> pts;
    // The 8 corners plus interior fill.
    for (const Vec3& c : cubeCorners(0.03)) pts.push_back(pose.apply(c));
    for (int i = 0; i < 50; ++i)
      pts.push_back(pose.apply({rng.uniform(-0.029, 0.029),
                                rng.uniform(-0.029, 0.029),
                                rng.uniform(-0.029, 0.029)}));
    TriMesh hull = convexHull(pts);
    CHECK(hull.vertices.size() == 8);
    CHECK(hull.triangles.size() == 12);
    CHECK(hullContains(hull, pts));
    CHECK(meshVolume(hull) == doctest::Approx(0.06 * 0.06 * 0.06));
  }
}
