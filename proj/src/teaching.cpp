#include "asmsim/teaching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "asmsim/errors.hpp"
#include "asmsim/jsonio.hpp"

namespace asmsim {

namespace {

constexpr int kRefineSteps = 10;

Mat3 expRotation(const Vec3& w) {
  double angle = w.norm();
  if (angle == 0.0) return Mat3::Identity();
  return axisAngleRotation(w / angle, angle);
}

void checkIntrinsics(const CameraIntrinsics& intrinsics) {
  if (!(intrinsics.fx > 0.0) || !(intrinsics.fy > 0.0))
    throw Error(ErrorKind::InvalidInput, "camera focal lengths must be > 0");
}

bool allDepthsPositive(const Pose& pose, const std::array<Vec3, 4>& corners) {
  for (const Vec3& c : corners)
    if (pose.apply(c).z() <= 0.0) return false;
  return true;
}

double reprojectionRmse(const Pose& pose, const std::array<Vec3, 4>& corners,
                        const std::array<Vec2, 4>& observed,
                        const CameraIntrinsics& intrinsics) {
  double sum = 0.0;
  for (int i = 0; i < 4; ++i)
    sum += (projectPoint(pose.apply(corners[i]), intrinsics) - observed[i])
               .squaredNorm();
  return std::sqrt(sum / 4.0);
}

struct FitResult {
  Pose pose;
  double rmse = 0.0;
};

// Gauss-Newton on the pixel residuals over (rotation, translation), with
// backtracking so every accepted step lowers the rmse and keeps all corners
// in front of the camera. An init with no all-in-front interpretation is
// returned unchanged.
FitResult refinePose(Pose pose, const std::array<Vec3, 4>& model,
                     const std::array<Vec2, 4>& observed,
                     const CameraIntrinsics& intrinsics) {
  double rmse = reprojectionRmse(pose, model, observed, intrinsics);
  for (int step = 0; step < kRefineSteps; ++step) {
    if (!allDepthsPositive(pose, model)) break;
    Eigen::Matrix<double, 8, 6> jac;
    Eigen::Matrix<double, 8, 1> res;
    for (int i = 0; i < 4; ++i) {
      Vec3 q = pose.R * model[i];
      Vec3 p = q + pose.p;
      double iz = 1.0 / p.z();
      Eigen::Matrix<double, 2, 3> dpix;
      dpix << intrinsics.fx * iz, 0, -intrinsics.fx * p.x() * iz * iz,
          0, intrinsics.fy * iz, -intrinsics.fy * p.y() * iz * iz;
      Mat3 dq;  // d(exp(w) q)/dw at w=0 is -[q]x
      dq << 0, q.z(), -q.y(), -q.z(), 0, q.x(), q.y(), -q.x(), 0;
      jac.block<2, 3>(2 * i, 0) = dpix * dq;
      jac.block<2, 3>(2 * i, 3) = dpix;
      res.segment<2>(2 * i) = projectPoint(p, intrinsics) - observed[i];
    }
    Eigen::Matrix<double, 6, 6> normal = jac.transpose() * jac;
    normal.diagonal().array() += 1e-12;
    Eigen::Matrix<double, 6, 1> delta =
        normal.ldlt().solve(-jac.transpose() * res);
    double w = delta.head<3>().norm();
    if (w > 1.0) delta *= 1.0 / w;  // cap the rotation step at one radian
    bool accepted = false;
    double factor = 1.0;
    for (int cut = 0; cut < 8 && !accepted; ++cut, factor *= 0.5) {
      Pose trial;
      trial.R = expRotation(factor * delta.head<3>()) * pose.R;
      trial.p = pose.p + factor * delta.tail<3>();
      if (!allDepthsPositive(trial, model)) continue;
      double trial_rmse = reprojectionRmse(trial, model, observed, intrinsics);
      if (trial_rmse < rmse) {
        pose = trial;
        rmse = trial_rmse;
        accepted = true;
      }
    }
    if (!accepted) break;
  }
  return {pose, rmse};
}

Json cornersToJson(const std::array<Vec2, 4>& corners) {
  Json out = Json::array();
  for (const Vec2& c : corners) out.push_back(Json::array({c.x(), c.y()}));
  return out;
}

std::array<Vec2, 4> cornersFromJson(const Json& j, const std::string& context) {
  if (!j.is_array() || j.size() != 4)
    throw Error(ErrorKind::InvalidInput,
                context + ": expected 4 pixel points");
  std::array<Vec2, 4> out;
  for (size_t i = 0; i < 4; ++i) {
    const Json& c = j[i];
    if (!c.is_array() || c.size() != 2 || !c[0].is_number() ||
        !c[1].is_number())
      throw Error(ErrorKind::InvalidInput,
                  context + ": each corner must be [u, v]");
    out[i] = Vec2(c[0].get<double>(), c[1].get<double>());
  }
  return out;
}

double getNumber(const Json& j, const std::string& key,
                 const std::string& context) {
  const Json& v = requireKey(j, key, context);
  if (!v.is_number())
    throw Error(ErrorKind::InvalidInput,
                context + "." + key + ": expected a number");
  return v.get<double>();
}

std::string getString(const Json& j, const std::string& key,
                      const std::string& context) {
  const Json& v = requireKey(j, key, context);
  if (!v.is_string())
    throw Error(ErrorKind::InvalidInput,
                context + "." + key + ": expected a string");
  return v.get<std::string>();
}

Json intrinsicsToJson(const CameraIntrinsics& k) {
  return Json{{"fx", k.fx},       {"fy", k.fy},
              {"cx", k.cx},       {"cy", k.cy},
              {"width", k.width}, {"height", k.height}};
}

CameraIntrinsics intrinsicsFromJson(const Json& j, const std::string& context) {
  CameraIntrinsics k;
  k.fx = getNumber(j, "fx", context);
  k.fy = getNumber(j, "fy", context);
  k.cx = getNumber(j, "cx", context);
  k.cy = getNumber(j, "cy", context);
  k.width = static_cast<int>(getNumber(j, "width", context));
  k.height = static_cast<int>(getNumber(j, "height", context));
  checkIntrinsics(k);
  return k;
}

void checkApproach(const Vec3& v) {
  if (std::abs(v.norm() - 1.0) > 1e-9)
    throw Error(ErrorKind::InvalidInput,
                "approach direction must be a unit vector");
}

}  // namespace

std::array<Vec3, 4> markerCorners(const MarkerModel& marker) {
  if (!(marker.side_length > 0.0))
    throw Error(ErrorKind::InvalidInput, "marker side length must be > 0");
  double h = marker.side_length / 2.0;
  return {Vec3(-h, -h, 0), Vec3(h, -h, 0), Vec3(h, h, 0), Vec3(-h, h, 0)};
}

Vec2 projectPoint(const Vec3& point_in_camera,
                  const CameraIntrinsics& intrinsics) {
  return Vec2(intrinsics.fx * point_in_camera.x() / point_in_camera.z() +
                  intrinsics.cx,
              intrinsics.fy * point_in_camera.y() / point_in_camera.z() +
                  intrinsics.cy);
}

MarkerPoseEstimate estimateMarkerPose(const std::array<Vec2, 4>& corners,
                                      const MarkerModel& marker,
                                      const CameraIntrinsics& intrinsics) {
  checkIntrinsics(intrinsics);
  std::array<Vec3, 4> model = markerCorners(marker);

  double spread = 0.0, min_dist = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      double d = (corners[i] - corners[j]).norm();
      spread = std::max(spread, d);
      min_dist = std::min(min_dist, d);
    }
  if (min_dist <= 1e-9)
    throw Error(ErrorKind::Geometry,
                "degenerate marker observation: duplicate corners");
  double max_area = 0.0;
  for (int k = 0; k < 4; ++k) {
    Vec2 a = corners[(k + 1) % 4] - corners[k];
    Vec2 b = corners[(k + 2) % 4] - corners[k];
    max_area = std::max(max_area, std::abs(a.x() * b.y() - a.y() * b.x()));
  }
  if (max_area <= 1e-10 * spread * spread)
    throw Error(ErrorKind::Geometry,
                "degenerate marker observation: collinear corners");

  // DLT for the homography taking marker-plane points to normalized image
  // coordinates; with a unit camera matrix, H ~ [r1 r2 t].
  Eigen::Matrix<double, 8, 9> a = Eigen::Matrix<double, 8, 9>::Zero();
  for (int i = 0; i < 4; ++i) {
    double x = model[i].x(), y = model[i].y();
    double u = (corners[i].x() - intrinsics.cx) / intrinsics.fx;
    double v = (corners[i].y() - intrinsics.cy) / intrinsics.fy;
    a.row(2 * i) << x, y, 1, 0, 0, 0, -u * x, -u * y, -u;
    a.row(2 * i + 1) << 0, 0, 0, x, y, 1, -v * x, -v * y, -v;
  }
  Eigen::JacobiSVD<Eigen::Matrix<double, 8, 9>> svd(a, Eigen::ComputeFullV);
  Eigen::Matrix<double, 9, 1> h = svd.matrixV().col(8);
  Mat3 hom;
  hom << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);

  double scale = 2.0 / (hom.col(0).norm() + hom.col(1).norm());
  if (!std::isfinite(scale))
    throw Error(ErrorKind::Geometry,
                "degenerate marker observation: homography has no scale");
  if (hom.col(2).z() * scale < 0.0) scale = -scale;

  Pose init;
  init.p = scale * hom.col(2);
  Mat3 frame;
  frame.col(0) = scale * hom.col(0);
  frame.col(1) = scale * hom.col(1);
  frame.col(2) = frame.col(0).cross(frame.col(1));
  init.R = nearestRotation(frame);

  // A noisy planar view admits two locally optimal poses whose plane normals
  // are reflections of each other across the line of sight; refine from both
  // and keep the better fit.
  FitResult best = refinePose(init, model, corners, intrinsics);
  Vec3 sight = init.p.norm() > 0.0 ? Vec3(init.p.normalized()) : Vec3::UnitZ();
  Vec3 n = init.R.col(2);
  Vec3 mirrored = 2.0 * n.dot(sight) * sight - n;
  Vec3 axis = n.cross(mirrored);
  if (axis.norm() > 1e-12) {
    double angle =
        std::acos(std::clamp(n.dot(mirrored), -1.0, 1.0));
    Pose alt{init.p, axisAngleRotation(axis.normalized(), angle) * init.R};
    FitResult other = refinePose(alt, model, corners, intrinsics);
    if (other.rmse < best.rmse) best = other;
  }

  if (!allDepthsPositive(best.pose, model))
    throw Error(ErrorKind::Geometry,
                "marker pose places a corner behind the camera");
  return {best.pose, best.rmse};
}

Pose objectPoseFromMarker(const Pose& marker_in_camera,
                          const MarkerModel& marker) {
  return marker_in_camera * marker.marker_in_object.inverse();
}

Pose relativeAssemblyPose(const Pose& pose_a, const Pose& pose_b) {
  return pose_a.inverse() * pose_b;
}

Pose aggregatePoses(const std::vector<Pose>& poses) {
  if (poses.empty())
    throw Error(ErrorKind::InvalidInput, "cannot aggregate zero poses");
  auto median = [&](auto&& get) {
    std::vector<double> vals;
    vals.reserve(poses.size());
    for (const Pose& pose : poses) vals.push_back(get(pose));
    std::sort(vals.begin(), vals.end());
    size_t n = vals.size();
    return n % 2 == 1 ? vals[n / 2]
                      : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
  };
  // Entry-wise medians; the median of the stacked rotation entries leaves
  // SO(3), so project it back. Medians keep the occasional mirror-ambiguity
  // flip of a planar marker fit from dragging the aggregate.
  Pose out;
  for (int c = 0; c < 3; ++c)
    out.p[c] = median([&](const Pose& pose) { return pose.p[c]; });
  Mat3 m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      m(i, j) = median([&](const Pose& pose) { return pose.R(i, j); });
  out.R = nearestRotation(m);
  return out;
}

std::vector<Pose> sampleRelativePoses(
    const std::vector<TeachingSample>& samples, const MarkerModel& marker_a,
    const MarkerModel& marker_b) {
  std::vector<Pose> out;
  out.reserve(samples.size());
  for (const TeachingSample& s : samples) {
    Pose object_a = objectPoseFromMarker(
        estimateMarkerPose(s.corners_a, marker_a, s.intrinsics).pose,
        marker_a);
    Pose object_b = objectPoseFromMarker(
        estimateMarkerPose(s.corners_b, marker_b, s.intrinsics).pose,
        marker_b);
    out.push_back(relativeAssemblyPose(object_a, object_b));
  }
  return out;
}

TeachingRecord buildTeachingRecord(const std::string& object_a,
                                   const std::string& object_b,
                                   const std::vector<TeachingSample>& samples,
                                   const MarkerModel& marker_a,
                                   const MarkerModel& marker_b,
                                   const std::optional<Vec3>& approach) {
  if (samples.empty())
    throw Error(ErrorKind::InvalidInput,
                "teaching needs at least one observation");
  TeachingRecord record;
  record.object_a = object_a;
  record.object_b = object_b;
  record.samples = samples;
  record.relative_pose =
      aggregatePoses(sampleRelativePoses(samples, marker_a, marker_b));
  if (approach) {
    checkApproach(*approach);
    record.approach = *approach;
  } else {
    record.approach = -record.relative_pose.R.col(2);
  }
  return record;
}

void saveTeachingRecord(const TeachingRecord& record,
                        const std::string& path) {
  checkApproach(record.approach);
  if (!isRotation(record.relative_pose.R))
    throw Error(ErrorKind::InvalidInput,
                "relative pose rotation is not orthonormal");
  Json samples = Json::array();
  for (const TeachingSample& s : record.samples) {
    checkIntrinsics(s.intrinsics);
    samples.push_back(Json{{"cornersA", cornersToJson(s.corners_a)},
                           {"cornersB", cornersToJson(s.corners_b)},
                           {"intrinsics", intrinsicsToJson(s.intrinsics)}});
  }
  Json j{{"version", 1},
         {"objectA", record.object_a},
         {"objectB", record.object_b},
         {"samples", std::move(samples)},
         {"relativePose", toJson(record.relative_pose)},
         {"approach", toJson(record.approach)}};
  writeJsonFile(j, path);
}

TeachingRecord loadTeachingRecord(const std::string& path) {
  Json j = readJsonFile(path);
  const std::string ctx = "teaching record";
  const Json& version = requireKey(j, "version", ctx);
  if (!version.is_number_integer() || version.get<int>() != 1)
    throw Error(ErrorKind::InvalidInput,
                ctx + ": unsupported schema version " + version.dump());
  TeachingRecord record;
  record.object_a = getString(j, "objectA", ctx);
  record.object_b = getString(j, "objectB", ctx);
  const Json& samples = requireKey(j, "samples", ctx);
  if (!samples.is_array())
    throw Error(ErrorKind::InvalidInput, ctx + ".samples: expected an array");
  for (size_t i = 0; i < samples.size(); ++i) {
    std::string sctx = ctx + ".samples[" + std::to_string(i) + "]";
    TeachingSample s;
    s.corners_a =
        cornersFromJson(requireKey(samples[i], "cornersA", sctx), sctx + ".cornersA");
    s.corners_b =
        cornersFromJson(requireKey(samples[i], "cornersB", sctx), sctx + ".cornersB");
    s.intrinsics = intrinsicsFromJson(
        requireKey(samples[i], "intrinsics", sctx), sctx + ".intrinsics");
    record.samples.push_back(s);
  }
  record.relative_pose =
      poseFromJson(requireKey(j, "relativePose", ctx), ctx + ".relativePose");
  record.approach =
      vec3FromJson(requireKey(j, "approach", ctx), ctx + ".approach");
  checkApproach(record.approach);
  return record;
}

}  // namespace asmsim
