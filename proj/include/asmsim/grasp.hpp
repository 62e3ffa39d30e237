#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "asmsim/mesh.hpp"
#include "asmsim/placement.hpp"
#include "asmsim/robot.hpp"
#include "asmsim/se3.hpp"

namespace asmsim {

/// Pipeline stage a grasp set is expressed in: sampled on the free object,
/// transformed to the object's surface / assembly / pre-assembly pose
/// (primed = candidate awaiting feasibility filters), or fully world-anchored.
enum class GraspFrame {
  Free,
  SurfaceCandidate,
  Surface,
  AssemblyCandidate,
  Assembly,
  PreassemblyCandidate,
  Preassembly,
  World,
};

/// Short tag used in logs and JSON: f, s', s, a', a, p', p, g.
const char* graspFrameName(GraspFrame frame);
GraspFrame graspFrameFromName(const std::string& name);

/// Parallel-jaw grasp: fingertip contacts p0/p1 and palm orientation R whose
/// x-axis is the closing direction and z-axis the approach. The id survives
/// transforms and filters, keying every variant back to the free-space set.
struct Grasp {
  Vec3 p0 = Vec3::Zero();
  Vec3 p1 = Vec3::Zero();
  Mat3 R = Mat3::Identity();
  int id = 0;
};

struct GraspSet {
  std::vector<Grasp> grasps;
  GraspFrame frame = GraspFrame::Free;
};

double graspOpening(const Grasp& g);
/// Palm frame: origin at the contact midpoint, orientation R.
Pose graspPalmPose(const Grasp& g);

/// Throws InvalidInput unless ids are unique, rotations proper, openings
/// positive, and each approach axis is perpendicular to its contact axis.
void checkGraspSet(const GraspSet& set, const std::string& context);

struct GraspSampleConfig {
  int pairs_per_face = 50;        // contact-pair samples per face cluster
  double friction_angle = 0.175;  // antipodal cone half-angle, radians
  int approach_samples = 12;      // palm rolls about the contact axis
  double cluster_angle_tol = 0.05;
  uint64_t seed = 1;
};

/// Antipodal contact pairs on the mesh surface with the gripper body clear of
/// the mesh; deterministic for a fixed seed. Result is tagged Free.
GraspSet sampleAntipodalGrasps(const TriMesh& mesh, const GripperModel& gripper,
                               const GraspSampleConfig& config = {});
/// Single-threaded reference; bitwise-identical to the parallel kernel.
GraspSet sampleAntipodalGraspsSerial(const TriMesh& mesh,
                                     const GripperModel& gripper,
                                     const GraspSampleConfig& config = {});

/// Rigidly map every grasp by `pose`, advancing the frame tag one pipeline
/// stage (Free->SurfaceCandidate, Surface->AssemblyCandidate,
/// Assembly->PreassemblyCandidate, Preassembly->World; candidate and World
/// tags re-express in place). Ids are preserved.
GraspSet transformGrasps(const GraspSet& set, const Pose& pose);
/// Same, with an explicit target stage; the pipeline only moves forward.
GraspSet transformGrasps(const GraspSet& set, const Pose& pose,
                         GraspFrame target);

/// IK for the palm pose of one grasp (default seeds).
std::optional<JointConfig> graspIK(const RobotModel& robot, const Grasp& g);

struct Obstacle {
  TriMesh mesh;
  Pose pose;
};

/// Keeps grasps whose palm pose the arm can reach; candidate tags resolve
/// (s'->s, a'->a, p'->p), other tags pass through unchanged.
GraspSet ikFilter(const GraspSet& set, const RobotModel& robot);

/// Keeps grasps whose gripper body clears the table half-space and the convex
/// hull of every obstacle; tag handling as in ikFilter.
GraspSet collisionFilter(const GraspSet& set, const GripperModel& gripper,
                         const std::vector<Obstacle>& obstacles,
                         const TableModel& table);

/// Feasibility partition of a grasp set by id: green = reachable and
/// collision-free, blue = collision-free but unreachable, red = in collision.
struct GraspLabels {
  std::vector<int> green;
  std::vector<int> blue;
  std::vector<int> red;
};

GraspLabels labelGrasps(const GraspSet& set, const RobotModel& robot,
                        const std::vector<Obstacle>& obstacles,
                        const TableModel& table);

/// Smallest clearance between the gripper body at a grasp and the scene
/// (table half-space plus obstacle hulls); positive when collision-free.
double graspClearance(const Grasp& g, const GripperModel& gripper,
                      const std::vector<Obstacle>& obstacles,
                      const TableModel& table);

void saveGraspSet(const GraspSet& set, const std::string& path);
GraspSet loadGraspSet(const std::string& path);

}  // namespace asmsim
