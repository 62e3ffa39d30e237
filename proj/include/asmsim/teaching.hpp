#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "asmsim/camera.hpp"
#include "asmsim/se3.hpp"

namespace asmsim {

/// Square fiducial marker rigidly mounted on an assembly part.
struct MarkerModel {
  int id = 0;
  double side_length = 0.05;  // meters; must be > 0
  Pose marker_in_object;      // marker frame expressed in the object frame
};

/// Marker-frame corner positions in the canonical observation order:
/// (-s/2,-s/2), (+s/2,-s/2), (+s/2,+s/2), (-s/2,+s/2), all at z = 0.
std::array<Vec3, 4> markerCorners(const MarkerModel& marker);

/// Continuous-pixel pinhole projection u = fx*x/z + cx, v = fy*y/z + cy.
Vec2 projectPoint(const Vec3& point_in_camera,
                  const CameraIntrinsics& intrinsics);

struct MarkerPoseEstimate {
  Pose pose;          // marker frame expressed in the camera frame
  double rmse = 0.0;  // per-corner reprojection RMS error, pixels
};

/// Planar pose from four corner observations in canonical order: DLT
/// homography, decomposition to a rigid pose, then ten Gauss-Newton
/// reprojection refinement steps. Throws on collinear/duplicate corners and
/// when the best-fit pose puts a corner at non-positive depth.
MarkerPoseEstimate estimateMarkerPose(const std::array<Vec2, 4>& corners,
                                      const MarkerModel& marker,
                                      const CameraIntrinsics& intrinsics);

/// objectInCam = markerPoseInCam * inverse(markerInObject).
Pose objectPoseFromMarker(const Pose& marker_in_camera,
                          const MarkerModel& marker);

/// Pose of B expressed in A's frame; invariant to any common rigid motion
/// of both inputs.
Pose relativeAssemblyPose(const Pose& pose_a, const Pose& pose_b);

/// Robust aggregate of repeated measurements of one pose: component-wise
/// median position, chordal-mean rotation re-orthonormalized.
Pose aggregatePoses(const std::vector<Pose>& poses);

/// One synchronized observation of both parts' markers in a single image.
struct TeachingSample {
  std::array<Vec2, 4> corners_a;
  std::array<Vec2, 4> corners_b;
  CameraIntrinsics intrinsics;
};

/// Outcome of a teaching session: where B sits relative to A, the direction
/// it approaches along, and the raw observations it was computed from.
struct TeachingRecord {
  std::string object_a;
  std::string object_b;
  std::vector<TeachingSample> samples;
  Pose relative_pose;              // B expressed in A's frame
  Vec3 approach = -Vec3::UnitZ();  // unit insertion direction, A's frame
};

/// Raw per-sample relative poses (B in A's frame), one per observation.
std::vector<Pose> sampleRelativePoses(
    const std::vector<TeachingSample>& samples, const MarkerModel& marker_a,
    const MarkerModel& marker_b);

/// Aggregates the samples into a record. When `approach` is absent it
/// defaults to the -z axis of B's taught frame expressed in A's frame.
TeachingRecord buildTeachingRecord(const std::string& object_a,
                                   const std::string& object_b,
                                   const std::vector<TeachingSample>& samples,
                                   const MarkerModel& marker_a,
                                   const MarkerModel& marker_b,
                                   const std::optional<Vec3>& approach = {});

/// Versioned JSON; rejects records whose approach direction is not unit
/// length or whose relative rotation is invalid.
void saveTeachingRecord(const TeachingRecord& record, const std::string& path);
TeachingRecord loadTeachingRecord(const std::string& path);

}  // namespace asmsim
