#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace asmsim {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Wraps an angle to (-pi, pi].
double normalizeAngle(double a);

/// Roll/pitch/yaw in radians. Convention: R = Rz(yaw) * Ry(pitch) * Rx(roll),
/// pitch in [-pi/2, pi/2], roll and yaw in (-pi, pi]. At |pitch| = pi/2 the
/// roll is fixed to zero and the remaining spin is absorbed into yaw.
struct Rpy {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
};

Mat3 rotX(double angle);
Mat3 rotY(double angle);
Mat3 rotZ(double angle);
Mat3 axisAngleRotation(const Vec3& axis, double angle);

Mat3 rotFromRpy(const Rpy& rpy);
Rpy rpyFromRot(const Mat3& r);

/// Geodesic angle between two rotations, in [0, pi].
double rotationDistance(const Mat3& a, const Mat3& b);

/// min over phi of rotationDistance(Rz(phi) * a, b), in closed form; equals
/// the angle between the body-frame up axes of the two rotations.
double tiltDistance(const Mat3& a, const Mat3& b);

/// Axis-angle vector w with rotation exp([w]x) == r; |w| in [0, pi].
Vec3 rotationLog(const Mat3& r);

bool isRotation(const Mat3& r, double tol = 1e-9);

/// Nearest orthonormal matrix with det +1 (SVD projection).
Mat3 nearestRotation(const Mat3& m);

/// Rigid transform x -> R*x + p.
struct Pose {
  Vec3 p = Vec3::Zero();
  Mat3 R = Mat3::Identity();

  static Pose identity() { return {}; }
  static Pose translation(const Vec3& t) { return {t, Mat3::Identity()}; }

  Pose operator*(const Pose& o) const { return {p + R * o.p, R * o.R}; }
  Pose inverse() const { return {-(R.transpose() * p), R.transpose()}; }
  Vec3 apply(const Vec3& v) const { return R * v + p; }
  Vec3 rotate(const Vec3& v) const { return R * v; }
};

bool approxEqual(const Pose& a, const Pose& b, double pos_tol = 1e-9,
                 double rot_tol = 1e-9);

}  // namespace asmsim
