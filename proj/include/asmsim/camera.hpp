#pragma once

#include <vector>

#include "asmsim/cloud.hpp"
#include "asmsim/mesh.hpp"
#include "asmsim/rng.hpp"
#include "asmsim/se3.hpp"

namespace asmsim {

/// Pinhole model. Camera frame convention: +z forward (optical axis),
/// +x right, +y down; pixel (u, v) maps to ray ((u+0.5-cx)/fx,
/// (v+0.5-cy)/fy, 1) through the pixel center.
struct CameraIntrinsics {
  double fx = 525.0;
  double fy = 525.0;
  double cx = 320.0;
  double cy = 240.0;
  int width = 640;
  int height = 480;
};

/// Camera-in-world pose at `eye` with the optical axis through `target`.
/// `world_up` fixes the image orientation (image "up" is -y); when the view
/// direction is parallel to it, +x is used as the fallback hint.
Pose lookAt(const Vec3& eye, const Vec3& target,
            const Vec3& world_up = Vec3(0, 0, 1));

/// 42 unit-sphere poses looking at the origin: the 12 icosahedron vertices
/// plus its 30 normalized edge midpoints, in a fixed deterministic order.
std::vector<Pose> sphereViewpoints();

struct RenderResult {
  PointCloud cloud;        // camera-frame points, normals facing the camera
  bool out_of_view = false;  // nothing of the mesh hit the image
};

/// Z-buffer raycast of a world-frame mesh: one point per pixel from the
/// nearest triangle intersection, depth-tie broken toward the lower triangle
/// index. Output order is row-major over pixels regardless of thread count.
RenderResult renderCloud(const TriMesh& mesh, const Pose& camera,
                         const CameraIntrinsics& intrinsics);

/// Single-threaded reference implementation with identical output.
RenderResult renderCloudSerial(const TriMesh& mesh, const Pose& camera,
                               const CameraIntrinsics& intrinsics);

/// Gaussian depth error: each camera-frame point slides along its own view
/// ray by N(0, sigma). Normals are left untouched.
void addDepthNoise(PointCloud& camera_frame_cloud, double sigma, Rng& rng);

}  // namespace asmsim
