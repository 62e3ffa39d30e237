#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "asmsim/geometry.hpp"
#include "asmsim/se3.hpp"

namespace asmsim {

using Triangle = std::array<int, 3>;

struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  bool watertight = false;      // closed 2-manifold with consistent winding
  int dropped_degenerate = 0;   // zero-area faces discarded on load

  Vec3 triangleNormal(int t) const;  // unit, by winding
  double triangleArea(int t) const;
  double surfaceArea() const;
  std::pair<Vec3, Vec3> bounds() const;
  Vec3 boundsCenter() const;
  double boundingRadius() const;  // around boundsCenter()
  TriMesh transformed(const Pose& pose) const;
};

/// OBJ subset: `v x y z` and `f i j k ...` (1-based, fan-triangulated,
/// `i/t/n` index forms accepted). Anything else is ignored.
TriMesh loadObj(const std::string& path);
void saveObj(const TriMesh& mesh, const std::string& path);

/// ASCII PLY dump for external viewers.
void savePlyMesh(const TriMesh& mesh, const std::string& path);

/// Closed 2-manifold test: every directed edge paired with its reverse and
/// Euler characteristic V - E + F == 2.
bool checkWatertight(const TriMesh& mesh);

double meshVolume(const TriMesh& mesh);

/// Volume centroid by the divergence theorem; requires a watertight mesh.
Vec3 centerOfMass(const TriMesh& mesh);

/// True if p is strictly inside the (watertight) mesh. Ray-parity test.
bool meshContains(const TriMesh& mesh, const Vec3& p);

/// Watertight, outward-oriented convex hull of a 3D point set.
TriMesh convexHull(const std::vector<Vec3>& points);

struct FaceCluster {
  std::vector<int> triangles;   // member triangle indices, ascending
  Vec3 normal = Vec3::UnitZ();  // outward unit normal of the cluster
  double area = 0.0;
  std::vector<Vec3> boundary;   // planar convex boundary polygon, CCW
};

/// Region-grown partition of hull faces by normal deviation <= angle_tol.
std::vector<FaceCluster> clusterFaces(const TriMesh& hull, double angle_tol);

/// Single mesh holding all inputs' triangles (indices re-based). Watertight
/// only if every part is.
TriMesh mergeMeshes(const std::vector<TriMesh>& parts);

// --- parametric solids used by tests and the demo scenes ---

TriMesh makeBox(double sx, double sy, double sz);   // centered at the origin
TriMesh makeTetrahedron(double edge);               // regular, centroid origin
/// L-shaped cross-section (arms along +x / +y, corner at the origin)
/// extruded along +z.
TriMesh makeLPrism(double arm_x, double arm_y, double thickness, double height);

}  // namespace asmsim
