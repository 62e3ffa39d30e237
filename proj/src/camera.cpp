#include "asmsim/camera.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "asmsim/errors.hpp"
#include "asmsim/geometry.hpp"

namespace asmsim {

Pose lookAt(const Vec3& eye, const Vec3& target, const Vec3& world_up) {
  Vec3 z = target - eye;
  if (z.norm() < 1e-12)
    throw Error(ErrorKind::InvalidInput, "lookAt: eye equals target");
  z.normalize();
  Vec3 x = z.cross(world_up);
  if (x.norm() < 1e-9) x = z.cross(Vec3(1, 0, 0));
  x.normalize();
  Vec3 y = z.cross(x);
  Mat3 r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return {eye, r};
}

std::vector<Pose> sphereViewpoints() {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> verts = {
      {-1, phi, 0}, {1, phi, 0},   {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi},   {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1},   {-phi, 0, -1}, {-phi, 0, 1},
  };
  for (Vec3& v : verts) v.normalize();

  // Icosahedron edges connect vertex pairs at the minimum pairwise distance.
  double min_sq = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < verts.size(); ++i)
    for (size_t j = i + 1; j < verts.size(); ++j)
      min_sq = std::min(min_sq, (verts[i] - verts[j]).squaredNorm());

  std::vector<Vec3> positions = verts;
  for (size_t i = 0; i < verts.size(); ++i)
    for (size_t j = i + 1; j < verts.size(); ++j)
      if ((verts[i] - verts[j]).squaredNorm() < min_sq * 1.01)
        positions.push_back((verts[i] + verts[j]).normalized());

  std::vector<Pose> out;
  out.reserve(positions.size());
  for (const Vec3& p : positions) out.push_back(lookAt(p, Vec3::Zero()));
  return out;
}

namespace {

struct PixelHit {
  double t = std::numeric_limits<double>::infinity();
  int triangle = -1;
};

// Camera-frame copy of the mesh with per-triangle pixel bounding boxes so
// each image row only tests the triangles that can cover it.
struct RenderSetup {
  std::vector<Vec3> verts_cam;              // per triangle, 3 consecutive
  std::vector<std::array<int, 4>> bbox;     // u0, u1, v0, v1 inclusive
};

RenderSetup prepare(const TriMesh& mesh, const Pose& camera,
                    const CameraIntrinsics& in) {
  RenderSetup s;
  Pose world_to_cam = camera.inverse();
  s.verts_cam.resize(mesh.triangles.size() * 3);
  s.bbox.resize(mesh.triangles.size());
  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    bool behind = false;
    double u_min = 1e30, u_max = -1e30, v_min = 1e30, v_max = -1e30;
    for (int k = 0; k < 3; ++k) {
      Vec3 p = world_to_cam.apply(mesh.vertices[mesh.triangles[t][k]]);
      s.verts_cam[3 * t + k] = p;
      if (p.z() < 1e-9) {
        behind = true;
        continue;
      }
      double u = in.fx * p.x() / p.z() + in.cx;
      double v = in.fy * p.y() / p.z() + in.cy;
      u_min = std::min(u_min, u);
      u_max = std::max(u_max, u);
      v_min = std::min(v_min, v);
      v_max = std::max(v_max, v);
    }
    std::array<int, 4>& box = s.bbox[t];
    if (behind) {
      // Partially/fully behind the image plane: conservatively test the
      // whole image (fully-behind triangles never produce a positive hit).
      box = {0, in.width - 1, 0, in.height - 1};
    } else {
      // Pixel u sees the ray through u+0.5; pad one pixel for roundoff.
      box[0] = std::max(0, int(std::floor(u_min - 0.5)) - 1);
      box[1] = std::min(in.width - 1, int(std::ceil(u_max - 0.5)) + 1);
      box[2] = std::max(0, int(std::floor(v_min - 0.5)) - 1);
      box[3] = std::min(in.height - 1, int(std::ceil(v_max - 0.5)) + 1);
    }
  }
  return s;
}

void renderRow(const RenderSetup& s, const CameraIntrinsics& in, int v,
               const std::vector<int>& row_triangles, PixelHit* row) {
  for (int tri : row_triangles) {
    const auto& box = s.bbox[tri];
    const Vec3& a = s.verts_cam[3 * tri + 0];
    const Vec3& b = s.verts_cam[3 * tri + 1];
    const Vec3& c = s.verts_cam[3 * tri + 2];
    for (int u = box[0]; u <= box[1]; ++u) {
      Ray ray;
      ray.origin = Vec3::Zero();
      ray.dir = Vec3((u + 0.5 - in.cx) / in.fx, (v + 0.5 - in.cy) / in.fy, 1.0)
                    .normalized();
      auto t = rayTriangle(ray, a, b, c);
      if (t && *t < row[u].t) {
        row[u].t = *t;
        row[u].triangle = tri;
      }
    }
  }
}

RenderResult collectHits(const TriMesh& mesh, const CameraIntrinsics& in,
                         const std::vector<PixelHit>& hits) {
  RenderResult out;
  for (int v = 0; v < in.height; ++v) {
    for (int u = 0; u < in.width; ++u) {
      const PixelHit& h = hits[size_t(v) * in.width + u];
      if (h.triangle < 0) continue;
      Vec3 dir =
          Vec3((u + 0.5 - in.cx) / in.fx, (v + 0.5 - in.cy) / in.fy, 1.0)
              .normalized();
      out.cloud.points.push_back(dir * h.t);
      // World-frame normal here; renderImpl rotates and flips it afterwards.
      out.cloud.normals.push_back(mesh.triangleNormal(h.triangle));
    }
  }
  out.out_of_view = out.cloud.points.empty();
  return out;
}

RenderResult renderImpl(const TriMesh& mesh, const Pose& camera,
                        const CameraIntrinsics& in, bool parallel) {
  if (mesh.triangles.empty())
    throw Error(ErrorKind::Geometry, "render: empty mesh");
  if (in.width <= 0 || in.height <= 0 || in.fx <= 0 || in.fy <= 0)
    throw Error(ErrorKind::InvalidInput, "render: bad intrinsics");

  RenderSetup setup = prepare(mesh, camera, in);

  // Row -> triangles whose bbox covers it, in ascending triangle order.
  std::vector<std::vector<int>> rows(in.height);
  for (size_t t = 0; t < setup.bbox.size(); ++t)
    for (int v = setup.bbox[t][2]; v <= setup.bbox[t][3]; ++v)
      if (v >= 0 && v < in.height) rows[v].push_back(int(t));

  std::vector<PixelHit> hits(size_t(in.width) * in.height);
#ifdef ASMSIM_HAVE_OPENMP
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 8)
    for (int v = 0; v < in.height; ++v)
      renderRow(setup, in, v, rows[v], hits.data() + size_t(v) * in.width);
  } else {
    for (int v = 0; v < in.height; ++v)
      renderRow(setup, in, v, rows[v], hits.data() + size_t(v) * in.width);
  }
#else
  (void)parallel;
  for (int v = 0; v < in.height; ++v)
    renderRow(setup, in, v, rows[v], hits.data() + size_t(v) * in.width);
#endif

  RenderResult out = collectHits(mesh, in, hits);
  // Convert normals to the camera frame and flip them toward the camera.
  Mat3 world_to_cam = camera.R.transpose();
  for (size_t i = 0; i < out.cloud.normals.size(); ++i) {
    Vec3 n = world_to_cam * out.cloud.normals[i];
    if (n.dot(out.cloud.points[i]) > 0) n = -n;
    out.cloud.normals[i] = n;
  }
  return out;
}

}  // namespace

RenderResult renderCloud(const TriMesh& mesh, const Pose& camera,
                         const CameraIntrinsics& intrinsics) {
  return renderImpl(mesh, camera, intrinsics, true);
}

RenderResult renderCloudSerial(const TriMesh& mesh, const Pose& camera,
                               const CameraIntrinsics& intrinsics) {
  return renderImpl(mesh, camera, intrinsics, false);
}

void addDepthNoise(PointCloud& camera_frame_cloud, double sigma, Rng& rng) {
  if (sigma <= 0) return;
  for (Vec3& p : camera_frame_cloud.points) {
    double range = p.norm();
    if (range < 1e-12) continue;
    p += (p / range) * rng.normal(0.0, sigma);
  }
}

}  // namespace asmsim
