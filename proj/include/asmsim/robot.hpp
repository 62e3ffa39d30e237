#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "asmsim/mesh.hpp"
#include "asmsim/se3.hpp"

namespace asmsim {

using JointConfig = Eigen::Matrix<double, 6, 1>;

/// Segment with a radius; the workhorse collision primitive.
struct Capsule {
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::Zero();
  double radius = 0.01;
};

struct JointSpec {
  Vec3 axis = Vec3::UnitZ();   // unit rotation axis in the parent frame
  Vec3 offset = Vec3::Zero();  // translation from the parent joint frame
  double lower = -3.14;        // joint limits, radians
  double upper = 3.14;
};

/// Parallel-jaw gripper: two finger capsules bridged by a palm bar. The palm
/// frame sits at the midpoint between fingertip contacts with +z the approach
/// direction and +x the closing direction; the body extends along -z.
struct GripperModel {
  double max_opening = 0.08;    // jaw span, meters
  double finger_length = 0.06;  // fingertip to palm plate
  double finger_radius = 0.008;
  double palm_radius = 0.012;
};

/// Six-revolute arm: joint i rotates about `axis` after translating by
/// `offset` from its parent, the tool (palm) frame hangs `tool_offset` past
/// the last joint. Collision capsules are expressed in the frame after the
/// joint `joint` rotation (-1 for the base frame).
struct RobotModel {
  Pose base;
  std::array<JointSpec, 6> joints;
  Vec3 tool_offset = Vec3(0, 0, 0.08);
  struct LinkCapsule {
    int joint = -1;
    Capsule capsule;
  };
  std::vector<LinkCapsule> links;
  GripperModel gripper;
};

/// Tabletop arm with ~0.9 m reach used by the demo scene and tests.
RobotModel defaultRobot();

/// Pose of the palm frame for joint configuration q.
Pose forwardKinematics(const RobotModel& robot, const JointConfig& q);

/// World-frame poses of every joint frame (after rotation), then the palm.
std::array<Pose, 7> jointFrames(const RobotModel& robot, const JointConfig& q);

/// Arm link capsules in world coordinates at configuration q.
std::vector<Capsule> armCapsules(const RobotModel& robot, const JointConfig& q);

/// Gripper body capsules (two fingers + palm bar) for a palm pose and jaw
/// opening: finger axes run along -z ending at the contact plane z = 0.
std::vector<Capsule> gripperCapsules(const GripperModel& gripper,
                                     const Pose& palm, double opening);

struct IkConfig {
  double position_tol = 1e-4;     // meters
  double orientation_tol = 1e-3;  // radians
  int max_iterations = 200;       // per seed
  double damping = 0.1;           // least-squares lambda
};

/// Deterministic spread of in-limit start configurations.
std::vector<JointConfig> ikDefaultSeeds(const RobotModel& robot);

/// Damped-least-squares IK to a palm target; tries each seed in order and
/// returns the first in-limit solution, or nothing if every seed stalls.
std::optional<JointConfig> solveIK(const RobotModel& robot, const Pose& target,
                                   const std::vector<JointConfig>& seeds = {},
                                   const IkConfig& config = {});

void saveRobotModel(const RobotModel& robot, const std::string& path);
RobotModel loadRobotModel(const std::string& path);

/// Smallest gap between the capsule surface and the mesh surface (negative
/// when they interpenetrate up to the capsule radius).
double capsuleMeshDistance(const Capsule& capsule, const TriMesh& mesh,
                           const Pose& mesh_pose);

double capsuleCapsuleDistance(const Capsule& a, const Capsule& b);

}  // namespace asmsim
