#include "asmsim/se3.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

namespace asmsim {

double normalizeAngle(double a) {
  a = std::remainder(a, 2.0 * M_PI);
  if (a <= -M_PI) a = M_PI;  // remainder returns [-pi, pi]; fold -pi to +pi
  return a;
}

Mat3 rotX(double angle) {
  return Eigen::AngleAxisd(angle, Vec3::UnitX()).toRotationMatrix();
}

Mat3 rotY(double angle) {
  return Eigen::AngleAxisd(angle, Vec3::UnitY()).toRotationMatrix();
}

Mat3 rotZ(double angle) {
  return Eigen::AngleAxisd(angle, Vec3::UnitZ()).toRotationMatrix();
}

Mat3 axisAngleRotation(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

Mat3 rotFromRpy(const Rpy& rpy) {
  return rotZ(rpy.yaw) * rotY(rpy.pitch) * rotX(rpy.roll);
}

Rpy rpyFromRot(const Mat3& r) {
  Rpy out;
  out.pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  if (std::abs(std::cos(out.pitch)) > 1e-7) {
    out.roll = normalizeAngle(std::atan2(r(2, 1), r(2, 2)));
    out.yaw = normalizeAngle(std::atan2(r(1, 0), r(0, 0)));
  } else {
    // Gimbal lock: only roll +/- yaw is observable; report it as yaw.
    out.roll = 0.0;
    out.yaw = normalizeAngle(std::atan2(-r(0, 1), r(1, 1)));
  }
  return out;
}

double rotationDistance(const Mat3& a, const Mat3& b) {
  // Geodesic angle acos((trace(a*b^T)-1)/2), evaluated through
  // ||a-b||_F^2 = 8*sin^2(theta/2) so small distances stay accurate
  // (acos loses ~8 digits near identical rotations).
  double s = (a - b).norm() / (2.0 * std::sqrt(2.0));
  return 2.0 * std::asin(std::clamp(s, 0.0, 1.0));
}

double tiltDistance(const Mat3& a, const Mat3& b) {
  // Body up axis of R is R^T * z, i.e. the third row of R. Minimizing the
  // geodesic distance over a world-frame yaw reduces to comparing those
  // axes; the angle between unit vectors u, v equals 2*asin(||u-v||/2).
  double s = (a.row(2) - b.row(2)).norm() / 2.0;
  return 2.0 * std::asin(std::clamp(s, 0.0, 1.0));
}

Vec3 rotationLog(const Mat3& r) {
  Eigen::AngleAxisd aa(r);
  return aa.axis() * aa.angle();
}

bool isRotation(const Mat3& r, double tol) {
  if ((r * r.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() > tol)
    return false;
  return std::abs(r.determinant() - 1.0) <= tol;
}

Mat3 nearestRotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  Mat3 v = svd.matrixV();
  Mat3 d = Mat3::Identity();
  d(2, 2) = (u * v.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return u * d * v.transpose();
}

bool approxEqual(const Pose& a, const Pose& b, double pos_tol, double rot_tol) {
  return (a.p - b.p).norm() <= pos_tol && rotationDistance(a.R, b.R) <= rot_tol;
}

}  // namespace asmsim
