#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "asmsim/grasp.hpp"
#include "asmsim/jsonio.hpp"
#include "asmsim/placement.hpp"
#include "asmsim/robot.hpp"
#include "asmsim/se3.hpp"

namespace asmsim {

/// How the two parts mate: B's pose in A's local frame, the unit approach
/// direction B travels along (in A's frame) for the final insertion, and how
/// far both parts back off for the pre-assembly standoff
/// (retraction_scale * approach_length). world_goal_a anchors A's local frame
/// in the world once A has been placed.
struct AssemblySpec {
  Pose relative_pose;
  Vec3 approach = -Vec3::UnitZ();  // unit length
  double retraction_scale = 0.5;
  double approach_length = 0.1;  // meters travelled along -approach on insert
  Pose world_goal_a;
};

void checkAssemblySpec(const AssemblySpec& spec);

/// Standoff distance: retraction_scale * approach_length.
double retractionDistance(const AssemblySpec& spec);

/// Pre-assembly poses of A and B in A's local frame: A backs off along
/// +approach, B along -approach, rotations unchanged.
std::pair<Pose, Pose> preAssemblyPoses(const AssemblySpec& spec);

/// Translates A's assembly grasps by +standoff and B's by -standoff (tags
/// advance a -> p' -> p), keeping only grasps the arm can reach once A's
/// local frame is anchored at world_goal_a. Ids are subsets of the inputs.
std::pair<GraspSet, GraspSet> retractGrasps(const GraspSet& grasps_a,
                                            const GraspSet& grasps_b,
                                            const AssemblySpec& spec,
                                            const RobotModel& robot);

/// A-local grasp sets mapped into the world by world_goal_a. A's assembly and
/// pre-assembly world sets are one and the same: A stays put in the world and
/// only B travels during the insertion.
struct WorldGraspSets {
  GraspSet a_assembly;
  GraspSet a_preassembly;
  GraspSet b_assembly;
  GraspSet b_preassembly;
};

WorldGraspSets worldGrasps(const GraspSet& grasps_a_pre,
                           const GraspSet& grasps_b_assembly,
                           const GraspSet& grasps_b_pre,
                           const AssemblySpec& spec);

// --- collision environment for arm-level planning ---

/// Touch tolerance: contacts (fingertips on the part, parts resting on the
/// table) sit at zero clearance, so only deeper penetration counts as a
/// collision anywhere in the planner.
inline constexpr double kContactSlack = 5e-4;

/// The table as a bounded slab mesh (top face at table.height) so the arm may
/// reach around it, unlike the infinite half-space used for gripper filters.
TriMesh tableSlab(const TableModel& table, double thickness = 0.05);

/// Everything the arm must avoid during one motion: static part hulls, the
/// table slab, and optionally a mesh rigidly attached to the palm.
struct PlanningScene {
  std::vector<Obstacle> obstacles;
  TableModel table;
  std::optional<TriMesh> attached_mesh;  // grasped part, its own local frame
  Pose attached_in_palm;                 // part pose in the palm frame
  double gripper_opening = 0.05;
};

/// Smallest gap between the robot (links, gripper, attached part) and the
/// scene (table slab, obstacle hulls) at configuration q.
double configClearance(const RobotModel& robot, const JointConfig& q,
                       const PlanningScene& scene);

/// True when penetration exceeds the contact slack.
bool configCollides(const RobotModel& robot, const JointConfig& q,
                    const PlanningScene& scene);

// --- three-layer grasp graph ---

struct GraspGraphConfig {
  int yaw_samples = 36;       // middle-layer orientation circles per placement
  double transfer_cost = 1.0;  // carry the part to another circle
  double transit_cost = 1.0;   // release, move the arm alone, regrasp
  // Largest allowed angle between a grasp's world approach axis and straight
  // down; pi disables the constraint. Models descend-only grippers.
  double max_approach_tilt = M_PI;
};

enum class CircleKind { Top, Middle, Bottom };

/// One object pose under which grasps are collected: the initial pose (top),
/// a stable placement at one sampled yaw (middle), or the goal pose (bottom).
struct GraspCircle {
  CircleKind kind = CircleKind::Middle;
  Pose object_pose;
  int placement = -1;  // middle circles: index into the placement list
  int yaw_index = -1;
  std::vector<int> nodes;  // indices into GraspGraph::nodes, ascending
};

struct GraspNode {
  int circle = 0;
  int grasp_id = 0;  // id in the free-space grasp set
  JointConfig config = JointConfig::Zero();
};

struct GraspEdge {
  int a = 0;
  int b = 0;
  bool transfer = false;  // same grasp id across circles; else transit
  double cost = 1.0;
};

struct GraspGraph {
  std::vector<GraspCircle> circles;
  std::vector<GraspNode> nodes;
  std::vector<GraspEdge> edges;  // undirected
};

/// Builds the three layers: a top circle from `init` grasps at initial_pose,
/// one middle circle per (placement x yaw sample) at the initial x/y
/// position populated by filtering `free_grasps`, and a bottom circle from
/// `goal` grasps at goal_pose. Every node carries an IK solution and passes
/// the full arm+gripper collision check against `obstacles` and the table.
/// Transfer edges join equal grasp ids across circles; transit edges form a
/// clique inside each table-resting circle (top and middle only).
GraspGraph buildGraspGraph(const GraspSet& init, const Pose& initial_pose,
                           const std::vector<StablePlacement>& placements,
                           const GraspSet& goal, const Pose& goal_pose,
                           const GraspSet& free_grasps, const TableModel& table,
                           const RobotModel& robot,
                           const std::vector<Obstacle>& obstacles,
                           const GraspGraphConfig& config = {});

Json graspGraphToJson(const GraspGraph& graph);

// --- keyframes ---

enum class SegmentType { Transit, Transfer, Insert };

const char* segmentTypeName(SegmentType type);
SegmentType segmentTypeFromName(const std::string& name);

struct Keyframe {
  Pose object_pose;
  int grasp_id = -1;
  JointConfig config = JointConfig::Zero();
};

/// Object-level plan: consecutive keyframes share the grasp id (transfer) or
/// the object pose (transit); an insert segment descends along -approach.
struct KeyframePlan {
  std::vector<Keyframe> keyframes;
  std::vector<SegmentType> segments;  // one per consecutive keyframe pair
  double cost = 0.0;
};

/// Cheapest top-to-bottom path through the graph (Dijkstra over edge costs,
/// ties broken toward lower circle id then grasp id). Throws a Planning error
/// with per-layer connectivity diagnostics when no path exists.
KeyframePlan searchKeyframes(const GraspGraph& graph);

void checkKeyframePlan(const KeyframePlan& plan);

Json keyframePlanToJson(const KeyframePlan& plan);
KeyframePlan keyframePlanFromJson(const Json& j);

// --- motion planning ---

struct MotionConfig {
  double cost_weight = 1.0;  // Metropolis temperature scale on cost jumps
  int max_iter = 20000;      // tree extensions before giving up
  uint64_t seed = 1;
  double max_joint_step = 0.02;  // rad, per joint, between waypoints
  double goal_bias = 0.1;
  double extension_step = 0.1;      // rad, per extension attempt
  double initial_temperature = 1e-3;
  double temperature_alpha = 2.0;
  int n_fail_max = 20;
  int smoothing_passes = 200;
};

/// Transition-RRT in joint space: extensions are gated by a Metropolis test
/// on the inverse-clearance cost, the tree path is shortcut-smoothed, and the
/// result is resampled so consecutive waypoints differ by at most
/// max_joint_step per joint, every waypoint collision-free.
std::vector<JointConfig> planMotion(const RobotModel& robot,
                                    const JointConfig& start,
                                    const JointConfig& goal,
                                    const PlanningScene& scene,
                                    const MotionConfig& config = {});

struct TrajectorySegment {
  SegmentType type = SegmentType::Transit;
  int grasp_id = -1;  // -1 while the arm moves empty-handed
  std::vector<JointConfig> waypoints;
  std::vector<Pose> object_poses;  // carried-part pose per waypoint
};

struct Trajectory {
  std::vector<TrajectorySegment> segments;
};

Json trajectoryToJson(const Trajectory& trajectory);
Trajectory trajectoryFromJson(const Json& j);

/// Straight Cartesian descent of the held part from object_start by
/// `distance` along `direction` (world, unit), tracked with warm-started IK
/// and subdivided until joint steps obey max_joint_step. The returned
/// object_poses lie exactly on the commanded line.
TrajectorySegment planInsertion(const RobotModel& robot,
                                const JointConfig& start,
                                const Pose& object_start, const Vec3& direction,
                                double distance, const Pose& attached_in_palm,
                                const PlanningScene& scene,
                                const MotionConfig& config = {},
                                double cartesian_step = 0.004);

}  // namespace asmsim
