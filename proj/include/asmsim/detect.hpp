#pragma once

#include <optional>
#include <string>
#include <vector>

#include "asmsim/camera.hpp"
#include "asmsim/cloud.hpp"
#include "asmsim/descriptor.hpp"
#include "asmsim/mesh.hpp"
#include "asmsim/se3.hpp"

namespace asmsim {

/// One precomputed view of the object: camera pose in the object frame,
/// the camera-frame partial cloud it sees, and that cloud's descriptor.
struct ViewTemplate {
  Pose viewpoint;    // camera in object frame
  PointCloud cloud;  // camera frame
  Descriptor descriptor;
};

struct TemplateLibraryConfig {
  CameraIntrinsics intrinsics{150.0, 150.0, 80.0, 60.0, 160, 120};
  double distance_factor = 4.0;  // camera distance / bounding radius
};

/// Renders the 42 sphere viewpoints of the mesh. Deterministic: two builds
/// from the same mesh are identical.
std::vector<ViewTemplate> buildTemplateLibrary(
    const TriMesh& mesh, const TemplateLibraryConfig& config = {});

/// JSON index + one ASCII PLY per view, written into `dir`.
void saveTemplateLibrary(const std::vector<ViewTemplate>& library,
                         const std::string& dir);
std::vector<ViewTemplate> loadTemplateLibrary(const std::string& dir);

struct TemplateMatch {
  int index = -1;
  double distance = 0.0;  // descriptor distance
  double roll = 0.0;      // query roll relative to the template view
};

/// Top-k templates by descriptor distance (ties toward the lower index),
/// each with its estimated roll.
std::vector<TemplateMatch> matchTemplates(
    const Descriptor& query, const std::vector<ViewTemplate>& library, int k);

struct PlaneModel {
  Vec3 normal = Vec3::UnitZ();  // unit length, canonical orientation
  double offset = 0.0;          // plane: normal . p + offset = 0
  double distance(const Vec3& p) const { return std::abs(normal.dot(p) + offset); }
};

struct PlaneExtraction {
  PlaneModel plane;
  std::vector<int> inliers;  // ascending point indices
};

/// RANSAC plane fit with a least-squares refit over the final inliers.
PlaneExtraction extractPlane(const PointCloud& cloud, double dist_tol,
                             int iterations, uint64_t seed,
                             double min_inlier_ratio = 0.2);

/// Connected components of the <= link_distance neighbor graph, ordered by
/// descending size (ties toward the smaller first point index); components
/// smaller than min_size are dropped.
std::vector<PointCloud> segmentClusters(const PointCloud& cloud,
                                        double link_distance, int min_size);

struct IcpResult {
  Pose pose;               // model-to-scene transform
  double rmse = 0.0;       // over accepted correspondences
  int outlier_count = 0;   // scene points beyond the correspondence cap
  bool diverged = false;   // rmse grew 5 iterations in a row
  std::vector<double> rmse_history;
};

struct IcpConfig {
  int max_iterations = 50;
  double convergence_tol = 1e-10;  // stop when rmse improves less than this
  double cap_factor = 5.0;         // cap = factor * scene median NN spacing
  double cap_floor = 1e-4;         // lower bound on the cap (meters)
};

/// Point-to-point ICP aligning `model` onto `scene` from the initial guess.
IcpResult icpRefine(const PointCloud& model, const PointCloud& scene,
                    const Pose& init, const IcpConfig& config = {});

struct DetectionResult {
  Pose raw_pose;  // object pose in the scene cloud's (camera) frame
  double icp_rmse = 0.0;
  int outlier_count = 0;
  int matched_template = -1;
  int segment_index = -1;
};

struct DetectConfig {
  double plane_tol = 0.003;
  int plane_iterations = 500;
  double plane_min_inlier_ratio = 0.2;
  double link_distance = 0.005;
  int min_cluster_size = 50;
  // Candidate views tried per segment. Descriptor ranking blurs between
  // neighboring views of a 42-view library, so keep the fan-out generous;
  // ICP outlier counts pick the right one cheaply.
  int top_k = 12;
  int model_samples = 1500;
  IcpConfig icp;
  uint64_t seed = 1;
};

/// Full rough-detection pipeline on a camera-frame scene cloud: drop the
/// support plane, segment, match each segment against the library, refine
/// with ICP, and keep the candidate with the fewest outliers (rmse breaks
/// ties).
DetectionResult detectObject(const PointCloud& scene, const TriMesh& mesh,
                             const std::vector<ViewTemplate>& library,
                             const DetectConfig& config = {});

}  // namespace asmsim
