#pragma once

#include <string>
#include <vector>

#include "asmsim/mesh.hpp"
#include "asmsim/se3.hpp"

namespace asmsim {

struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;  // empty, or exactly one unit normal per point

  bool hasNormals() const { return !normals.empty(); }
  size_t size() const { return points.size(); }
  Vec3 centroid() const;
  PointCloud transformed(const Pose& pose) const;  // rotates normals too
};

/// ASCII PLY with properties x y z [nx ny nz]; full double round-trip.
void savePlyCloud(const PointCloud& cloud, const std::string& path);
PointCloud loadPlyCloud(const std::string& path);

/// Deterministic area-weighted surface sampling, about `count` points with
/// triangle-normal normals. Used as the registration model for a mesh.
PointCloud sampleMeshSurface(const TriMesh& mesh, int count);

/// Static 3-d k-d tree over a point array (median splits, deterministic).
class KdTree3 {
 public:
  KdTree3() = default;
  explicit KdTree3(std::vector<Vec3> points);

  bool empty() const { return points_.empty(); }
  size_t size() const { return points_.size(); }
  const Vec3& point(int i) const { return points_[i]; }

  /// Index of the nearest point (lowest index on exact ties); -1 if empty.
  /// `exclude` skips one point index (for nearest-other-point queries).
  int nearest(const Vec3& query, double* dist_out = nullptr,
              int exclude = -1) const;

  /// Ascending indices of all points within `radius` of query.
  std::vector<int> radiusSearch(const Vec3& query, double radius) const;

 private:
  struct Node {
    int point = -1;
    int axis = 0;
    int left = -1;
    int right = -1;
  };

  int build(std::vector<int>& order, int lo, int hi, int depth);
  void nearestRec(int node, const Vec3& q, int exclude, int& best,
                  double& best_sq) const;
  void radiusRec(int node, const Vec3& q, double r_sq,
                 std::vector<int>& out) const;

  std::vector<Vec3> points_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

/// Median distance from each point to its nearest other point; 0 for
/// clouds smaller than two points.
double medianNeighborSpacing(const PointCloud& cloud);

}  // namespace asmsim
