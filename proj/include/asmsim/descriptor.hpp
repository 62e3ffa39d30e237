#pragma once

#include <array>
#include <vector>

#include "asmsim/cloud.hpp"
#include "asmsim/se3.hpp"

namespace asmsim {

/// Global shape signature of a camera-frame cloud: view-angle and radial
/// histograms discriminate views; the roll histogram recovers the in-image
/// rotation by circular correlation.
struct Descriptor {
  static constexpr int kNormalBins = 45;
  static constexpr int kDistBins = 64;
  static constexpr int kRollBins = 90;

  std::array<double, kNormalBins> normal_angle;  // angle(normal, view ray)
  std::array<double, kDistBins> centroid_dist;   // |p - centroid| / max
  std::array<double, kRollBins> roll;            // atan2 of image-plane normal

  Descriptor();
};

/// Builds the descriptor of a cloud expressed in camera coordinates
/// (optical axis +z); `viewpoint` is the camera position in that frame,
/// normally the origin. The cloud must be non-empty with normals.
/// Samples are soft-binned and the histograms lightly blurred so the
/// descriptor varies continuously with small viewpoint changes.
Descriptor computeDescriptor(const PointCloud& cloud,
                             const Vec3& viewpoint = Vec3::Zero());

/// L1 distance over the view-discriminating histograms (roll excluded).
double descriptorDistance(const Descriptor& a, const Descriptor& b);

/// Roll angle (radians, (-pi, pi]) maximizing the circular correlation of
/// query.roll against reference.roll: the query looks like the reference
/// rotated by this angle about the optical axis. Ties pick the smaller shift.
double estimateRoll(const Descriptor& query, const Descriptor& reference);

}  // namespace asmsim
