#include "asmsim/placement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "asmsim/errors.hpp"

namespace asmsim {

namespace {

// Minimal rotation taking unit vector `from` to unit vector `to`.
Mat3 alignVectors(const Vec3& from, const Vec3& to) {
  double c = std::clamp(from.dot(to), -1.0, 1.0);
  Vec3 axis = from.cross(to);
  double s = axis.norm();
  if (s < 1e-12) {
    if (c > 0.0) return Mat3::Identity();
    // Antiparallel: rotate pi about any axis orthogonal to `from`.
    Vec3 ortho = std::abs(from.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    ortho = (ortho - from.dot(ortho) * from).normalized();
    return axisAngleRotation(ortho, M_PI);
  }
  return axisAngleRotation(axis / s, std::atan2(s, c));
}

}  // namespace

std::vector<StablePlacement> stablePlacements(const TriMesh& mesh,
                                              double margin_fraction,
                                              double angle_tol) {
  if (!mesh.watertight && !checkWatertight(mesh))
    throw Error(ErrorKind::Geometry,
                "stable placements require a watertight mesh");
  Vec3 com = centerOfMass(mesh);
  TriMesh hull = convexHull(mesh.vertices);
  std::vector<FaceCluster> clusters = clusterFaces(hull, angle_tol);

  std::vector<StablePlacement> out;
  for (int ci = 0; ci < static_cast<int>(clusters.size()); ++ci) {
    const FaceCluster& cluster = clusters[ci];

    // Tip the object so this face points down, then cancel the yaw the
    // alignment introduced (Rz leaves the support direction unchanged).
    Mat3 align = alignVectors(cluster.normal, -Vec3::UnitZ());
    Rpy rpy = rpyFromRot(align);
    rpy.yaw = 0.0;
    Mat3 rest = rotFromRpy(rpy);

    StablePlacement p;
    p.rest_rotation = rest;
    p.cluster_index = ci;

    double min_z = std::numeric_limits<double>::infinity();
    for (const Vec3& v : hull.vertices) min_z = std::min(min_z, (rest * v).z());
    p.support_height = -min_z;

    std::vector<Vec2> flat;
    flat.reserve(cluster.boundary.size());
    for (const Vec3& b : cluster.boundary) {
      Vec3 r = rest * b;
      flat.emplace_back(r.x(), r.y());
    }
    p.support_polygon = convexHull2D(flat);
    if (p.support_polygon.size() < 3) continue;

    Vec3 com_rot = rest * com;
    p.stability_margin =
        signedBoundaryDistance(p.support_polygon, Vec2(com_rot.x(), com_rot.y()));

    double inradius = polygonInradius(p.support_polygon);
    if (p.stability_margin <= 0.0) continue;
    if (p.stability_margin < margin_fraction * inradius) continue;
    out.push_back(std::move(p));
  }

  std::stable_sort(out.begin(), out.end(),
                   [](const StablePlacement& a, const StablePlacement& b) {
                     return a.stability_margin > b.stability_margin;
                   });
  return out;
}

int nearestPlacement(const Mat3& raw_rotation,
                     const std::vector<StablePlacement>& placements,
                     CorrectionMode mode) {
  if (placements.empty())
    throw Error(ErrorKind::Geometry, "no stable placements to correct against");
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < static_cast<int>(placements.size()); ++i) {
    double d = mode == CorrectionMode::Literal
                   ? rotationDistance(placements[i].rest_rotation, raw_rotation)
                   : tiltDistance(placements[i].rest_rotation, raw_rotation);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

Pose correctPose(const Pose& raw, const std::vector<StablePlacement>& placements,
                 const TableModel& table, CorrectionMode mode) {
  const StablePlacement& near =
      placements[nearestPlacement(raw.R, placements, mode)];
  Mat3 r_yaw = rotZ(rpyFromRot(raw.R).yaw);
  Pose out;
  out.R = r_yaw * near.rest_rotation;
  out.p.x() = raw.p.x();
  out.p.y() = raw.p.y();
  out.p.z() = mode == CorrectionMode::Literal
                  ? table.height
                  : table.height + near.support_height;
  return out;
}

}  // namespace asmsim
