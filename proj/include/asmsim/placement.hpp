#pragma once

#include <vector>

#include "asmsim/geometry.hpp"
#include "asmsim/mesh.hpp"
#include "asmsim/se3.hpp"

namespace asmsim {

struct TableModel {
  double height = 0.0;      // z of the support surface
  Vec2 lo = Vec2(-0.5, -0.5);  // workspace rectangle on the surface
  Vec2 hi = Vec2(0.5, 0.5);
};

struct StablePlacement {
  // Object rotation when resting on this face, canonicalized to zero yaw;
  // maps the support-face outward normal to (0, 0, -1).
  Mat3 rest_rotation = Mat3::Identity();
  // Distance from the object origin to the support plane under rest_rotation:
  // resting on a table of height h puts the origin at z = h + support_height.
  double support_height = 0.0;
  // Convex support polygon in table coordinates (x, y after rest_rotation),
  // counter-clockwise.
  std::vector<Vec2> support_polygon;
  // Distance from the projected center of mass to the polygon boundary.
  double stability_margin = 0.0;
  int cluster_index = -1;  // hull face cluster this placement came from
};

/// All resting poses of a watertight mesh: one candidate per hull face
/// cluster, kept when the center of mass projects inside the support polygon
/// with margin >= margin_fraction * polygon inradius. Sorted by descending
/// stability margin.
std::vector<StablePlacement> stablePlacements(const TriMesh& mesh,
                                              double margin_fraction = 0.1,
                                              double angle_tol = 0.05);

enum class CorrectionMode {
  Literal,       // nearest placement by full rotation distance, z = table height
  YawInvariant,  // nearest by tilt distance, z = table height + support height
};

/// Index of the placement nearest to raw_rotation under the mode's metric;
/// ties break toward the lower index.
int nearestPlacement(const Mat3& raw_rotation,
                     const std::vector<StablePlacement>& placements,
                     CorrectionMode mode = CorrectionMode::YawInvariant);

/// Snaps a raw detected pose onto the nearest stable placement: keeps the raw
/// x, y and yaw, replaces tilt with the placement's rest rotation and z with
/// the resting height.
Pose correctPose(const Pose& raw, const std::vector<StablePlacement>& placements,
                 const TableModel& table,
                 CorrectionMode mode = CorrectionMode::YawInvariant);

}  // namespace asmsim
