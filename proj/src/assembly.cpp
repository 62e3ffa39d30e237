#include "asmsim/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <tuple>

#include "asmsim/errors.hpp"
#include "asmsim/rng.hpp"

#ifdef ASMSIM_HAVE_OPENMP
#include <omp.h>
#endif

namespace asmsim {

namespace {

constexpr double kUnitTol = 1e-9;

}  // namespace

void checkAssemblySpec(const AssemblySpec& spec) {
  if (std::abs(spec.approach.norm() - 1.0) > kUnitTol) {
    throw Error(ErrorKind::InvalidInput,
                "assembly spec: approach direction must be unit length");
  }
  if (!(spec.retraction_scale >= 0.0)) {
    throw Error(ErrorKind::InvalidInput,
                "assembly spec: retraction scale must be non-negative");
  }
  if (!(spec.approach_length > 0.0)) {
    throw Error(ErrorKind::InvalidInput,
                "assembly spec: approach length must be positive");
  }
  if (!isRotation(spec.relative_pose.R) || !isRotation(spec.world_goal_a.R)) {
    throw Error(ErrorKind::InvalidInput,
                "assembly spec: poses must carry proper rotations");
  }
}

double retractionDistance(const AssemblySpec& spec) {
  return spec.retraction_scale * spec.approach_length;
}

std::pair<Pose, Pose> preAssemblyPoses(const AssemblySpec& spec) {
  checkAssemblySpec(spec);
  const double d = retractionDistance(spec);
  Pose pre_a = Pose::translation(d * spec.approach);
  Pose pre_b = spec.relative_pose;
  pre_b.p -= d * spec.approach;
  return {pre_a, pre_b};
}

std::pair<GraspSet, GraspSet> retractGrasps(const GraspSet& grasps_a,
                                            const GraspSet& grasps_b,
                                            const AssemblySpec& spec,
                                            const RobotModel& robot) {
  checkAssemblySpec(spec);
  if (grasps_a.frame != GraspFrame::Assembly ||
      grasps_b.frame != GraspFrame::Assembly) {
    throw Error(ErrorKind::InvalidInput,
                "retractGrasps expects assembly-stage grasp sets");
  }
  const double d = retractionDistance(spec);
  auto retractOne = [&](const GraspSet& in, double sign) {
    GraspSet candidates =
        transformGrasps(in, Pose::translation(sign * d * spec.approach));
    // Reachability is judged with A's local frame anchored at its world goal;
    // the surviving grasps stay expressed in A's local frame.
    GraspSet anchored = transformGrasps(candidates, spec.world_goal_a);
    GraspSet reachable = ikFilter(anchored, robot);
    std::set<int> keep;
    for (const Grasp& g : reachable.grasps) keep.insert(g.id);
    GraspSet out;
    out.frame = GraspFrame::Preassembly;
    for (const Grasp& g : candidates.grasps) {
      if (keep.count(g.id)) out.grasps.push_back(g);
    }
    return out;
  };
  return {retractOne(grasps_a, 1.0), retractOne(grasps_b, -1.0)};
}

WorldGraspSets worldGrasps(const GraspSet& grasps_a_pre,
                           const GraspSet& grasps_b_assembly,
                           const GraspSet& grasps_b_pre,
                           const AssemblySpec& spec) {
  checkAssemblySpec(spec);
  if (grasps_a_pre.frame != GraspFrame::Preassembly ||
      grasps_b_pre.frame != GraspFrame::Preassembly) {
    throw Error(ErrorKind::InvalidInput,
                "worldGrasps expects pre-assembly grasp sets for a/b");
  }
  if (grasps_b_assembly.frame != GraspFrame::Assembly) {
    throw Error(ErrorKind::InvalidInput,
                "worldGrasps expects an assembly-stage grasp set for b");
  }
  WorldGraspSets out;
  out.a_assembly =
      transformGrasps(grasps_a_pre, spec.world_goal_a, GraspFrame::World);
  out.a_preassembly = out.a_assembly;  // A never moves during the insertion
  out.b_assembly =
      transformGrasps(grasps_b_assembly, spec.world_goal_a, GraspFrame::World);
  out.b_preassembly =
      transformGrasps(grasps_b_pre, spec.world_goal_a, GraspFrame::World);
  return out;
}

// --- collision environment ---

TriMesh tableSlab(const TableModel& table, double thickness) {
  if (!(thickness > 0.0)) {
    throw Error(ErrorKind::InvalidInput, "table slab thickness must be positive");
  }
  const double sx = table.hi.x() - table.lo.x();
  const double sy = table.hi.y() - table.lo.y();
  if (!(sx > 0.0) || !(sy > 0.0)) {
    throw Error(ErrorKind::InvalidInput, "table bounds must be non-empty");
  }
  Vec3 center(0.5 * (table.lo.x() + table.hi.x()),
              0.5 * (table.lo.y() + table.hi.y()),
              table.height - 0.5 * thickness);
  return makeBox(sx, sy, thickness).transformed(Pose::translation(center));
}

namespace {

// Scene with obstacle hulls baked into world coordinates so the planner's
// inner loop avoids repeated hull construction.
struct PreparedScene {
  std::vector<TriMesh> hulls;  // obstacle hulls + table slab, world frame
  std::optional<TriMesh> attached_hull;  // part local frame
  Pose attached_in_palm;
};

PreparedScene prepareScene(const PlanningScene& scene) {
  PreparedScene out;
  for (const Obstacle& obstacle : scene.obstacles) {
    std::vector<Vec3> pts;
    pts.reserve(obstacle.mesh.vertices.size());
    for (const Vec3& v : obstacle.mesh.vertices) {
      pts.push_back(obstacle.pose.apply(v));
    }
    out.hulls.push_back(convexHull(pts));
  }
  out.hulls.push_back(tableSlab(scene.table));
  if (scene.attached_mesh) {
    out.attached_hull = convexHull(scene.attached_mesh->vertices);
    out.attached_in_palm = scene.attached_in_palm;
  }
  return out;
}

double capsuleHullDist(const Capsule& capsule, const TriMesh& hull) {
  double d = capsuleMeshDistance(capsule, hull, Pose::identity());
  // Surface distance misses full containment; one parity test covers it.
  if (d > 0.0 && meshContains(hull, 0.5 * (capsule.a + capsule.b))) {
    return -(d + 2.0 * capsule.radius);
  }
  return d;
}

double hullHullDist(const TriMesh& a, const TriMesh& b) {
  double best = std::numeric_limits<double>::infinity();
  for (const Triangle& ta : a.triangles) {
    for (const Triangle& tb : b.triangles) {
      best = std::min(
          best, triTriDist(a.vertices[ta[0]], a.vertices[ta[1]],
                           a.vertices[ta[2]], b.vertices[tb[0]],
                           b.vertices[tb[1]], b.vertices[tb[2]]));
    }
  }
  if (best > 0.0 &&
      (meshContains(b, a.vertices[0]) || meshContains(a, b.vertices[0]))) {
    return -best;
  }
  return best;
}

double clearancePrepared(const RobotModel& robot, const JointConfig& q,
                         const PreparedScene& scene, double opening) {
  std::array<Pose, 7> frames = jointFrames(robot, q);
  std::vector<Capsule> capsules = armCapsules(robot, q);
  std::vector<Capsule> body =
      gripperCapsules(robot.gripper, frames[6], opening);
  capsules.insert(capsules.end(), body.begin(), body.end());
  double best = std::numeric_limits<double>::infinity();
  for (const Capsule& capsule : capsules) {
    for (const TriMesh& hull : scene.hulls) {
      best = std::min(best, capsuleHullDist(capsule, hull));
    }
  }
  if (scene.attached_hull) {
    // The carried part rides rigidly on the palm. The gripper touches it by
    // definition and the wrist capsule envelope overlaps deep grasps, so only
    // part-versus-scene gaps are measured here.
    TriMesh part =
        scene.attached_hull->transformed(frames[6] * scene.attached_in_palm);
    for (const TriMesh& hull : scene.hulls) {
      best = std::min(best, hullHullDist(part, hull));
    }
  }
  return best;
}

}  // namespace

double configClearance(const RobotModel& robot, const JointConfig& q,
                       const PlanningScene& scene) {
  return clearancePrepared(robot, q, prepareScene(scene),
                           scene.gripper_opening);
}

bool configCollides(const RobotModel& robot, const JointConfig& q,
                    const PlanningScene& scene) {
  return configClearance(robot, q, scene) < -kContactSlack;
}

// --- grasp graph ---

namespace {

void checkGraphConfig(const GraspGraphConfig& config) {
  if (config.yaw_samples < 1) {
    throw Error(ErrorKind::InvalidInput, "graph: yaw_samples must be >= 1");
  }
  if (!(config.transfer_cost > 0.0) || !(config.transit_cost > 0.0)) {
    throw Error(ErrorKind::InvalidInput, "graph: edge costs must be positive");
  }
  if (!(config.max_approach_tilt > 0.0)) {
    throw Error(ErrorKind::InvalidInput,
                "graph: max_approach_tilt must be positive");
  }
}

}  // namespace

GraspGraph buildGraspGraph(const GraspSet& init, const Pose& initial_pose,
                           const std::vector<StablePlacement>& placements,
                           const GraspSet& goal, const Pose& goal_pose,
                           const GraspSet& free_grasps, const TableModel& table,
                           const RobotModel& robot,
                           const std::vector<Obstacle>& obstacles,
                           const GraspGraphConfig& config) {
  checkGraphConfig(config);
  if (free_grasps.frame != GraspFrame::Free) {
    throw Error(ErrorKind::InvalidInput,
                "graph: the free grasp set must carry the free tag");
  }
  if (init.frame == GraspFrame::Free || goal.frame == GraspFrame::Free) {
    throw Error(ErrorKind::InvalidInput,
                "graph: init and goal grasp sets must be object-anchored");
  }
  checkGraspSet(init, "graph init grasps");
  checkGraspSet(goal, "graph goal grasps");
  checkGraspSet(free_grasps, "graph free grasps");

  GraspGraph graph;
  GraspCircle top;
  top.kind = CircleKind::Top;
  top.object_pose = initial_pose;
  graph.circles.push_back(top);
  for (int p = 0; p < static_cast<int>(placements.size()); ++p) {
    for (int k = 0; k < config.yaw_samples; ++k) {
      GraspCircle circle;
      circle.kind = CircleKind::Middle;
      circle.placement = p;
      circle.yaw_index = k;
      double yaw = 2.0 * M_PI * k / config.yaw_samples;
      circle.object_pose.R = rotZ(yaw) * placements[p].rest_rotation;
      circle.object_pose.p =
          Vec3(initial_pose.p.x(), initial_pose.p.y(),
               table.height + placements[p].support_height);
      graph.circles.push_back(circle);
    }
  }
  GraspCircle bottom;
  bottom.kind = CircleKind::Bottom;
  bottom.object_pose = goal_pose;
  graph.circles.push_back(bottom);

  const int n_circles = static_cast<int>(graph.circles.size());
  PlanningScene node_scene;
  node_scene.obstacles = obstacles;
  node_scene.table = table;
  PreparedScene prepared = prepareScene(node_scene);
  const double cos_tilt = std::cos(std::min(config.max_approach_tilt, M_PI));
  const std::vector<JointConfig> seeds = ikDefaultSeeds(robot);

  std::vector<std::vector<GraspNode>> slots(n_circles);
  auto populate = [&](int c) {
    const GraspCircle& circle = graph.circles[c];
    GraspSet candidates;
    switch (circle.kind) {
      case CircleKind::Top:
        candidates = init;
        break;
      case CircleKind::Bottom:
        candidates = goal;
        break;
      case CircleKind::Middle:
        candidates = transformGrasps(free_grasps, circle.object_pose);
        break;
    }
    for (const Grasp& g : candidates.grasps) {
      Vec3 approach = g.R.col(2);
      if (approach.dot(-Vec3::UnitZ()) < cos_tilt - 1e-12) continue;
      if (!(graspClearance(g, robot.gripper, obstacles, table) > 0.0)) continue;
      // Different IK seeds land on different arm branches; keep the first
      // branch whose whole arm clears the scene.
      Pose palm = graspPalmPose(g);
      std::optional<JointConfig> q;
      for (const JointConfig& seed : seeds) {
        std::optional<JointConfig> branch = solveIK(robot, palm, {seed});
        if (!branch) continue;
        if (clearancePrepared(robot, *branch, prepared, graspOpening(g)) <
            -kContactSlack) {
          continue;
        }
        q = branch;
        break;
      }
      if (!q) continue;
      GraspNode node;
      node.circle = c;
      node.grasp_id = g.id;
      node.config = *q;
      slots[c].push_back(node);
    }
  };

#ifdef ASMSIM_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic, 1)
  for (int c = 0; c < n_circles; ++c) populate(c);
#else
  for (int c = 0; c < n_circles; ++c) populate(c);
#endif

  for (int c = 0; c < n_circles; ++c) {
    for (const GraspNode& node : slots[c]) {
      graph.circles[c].nodes.push_back(static_cast<int>(graph.nodes.size()));
      graph.nodes.push_back(node);
    }
  }

  // Transfer edges: the same grasp carries the part between circles.
  std::map<int, std::vector<int>> by_id;
  for (int n = 0; n < static_cast<int>(graph.nodes.size()); ++n) {
    by_id[graph.nodes[n].grasp_id].push_back(n);
  }
  for (const auto& [id, nodes] : by_id) {
    (void)id;
    for (size_t i = 0; i < nodes.size(); ++i) {
      for (size_t j = i + 1; j < nodes.size(); ++j) {
        if (graph.nodes[nodes[i]].circle == graph.nodes[nodes[j]].circle) {
          continue;
        }
        graph.edges.push_back(
            {nodes[i], nodes[j], true, config.transfer_cost});
      }
    }
  }
  // Transit edges: regrasps happen only while the part rests on the table.
  for (int c = 0; c < n_circles; ++c) {
    if (graph.circles[c].kind == CircleKind::Bottom) continue;
    const std::vector<int>& members = graph.circles[c].nodes;
    for (size_t i = 0; i < members.size(); ++i) {
      for (size_t j = i + 1; j < members.size(); ++j) {
        graph.edges.push_back(
            {members[i], members[j], false, config.transit_cost});
      }
    }
  }
  return graph;
}

namespace {

const char* circleKindName(CircleKind kind) {
  switch (kind) {
    case CircleKind::Top:
      return "top";
    case CircleKind::Middle:
      return "middle";
    case CircleKind::Bottom:
      return "bottom";
  }
  return "middle";
}

}  // namespace

Json graspGraphToJson(const GraspGraph& graph) {
  Json j;
  j["version"] = 1;
  j["circles"] = Json::array();
  for (const GraspCircle& circle : graph.circles) {
    Json jc;
    jc["kind"] = circleKindName(circle.kind);
    jc["objectPose"] = toJson(circle.object_pose);
    jc["placement"] = circle.placement;
    jc["yawIndex"] = circle.yaw_index;
    jc["nodes"] = circle.nodes;
    j["circles"].push_back(jc);
  }
  j["nodes"] = Json::array();
  for (const GraspNode& node : graph.nodes) {
    Json jn;
    jn["circle"] = node.circle;
    jn["graspId"] = node.grasp_id;
    jn["config"] = std::vector<double>(node.config.data(),
                                       node.config.data() + 6);
    j["nodes"].push_back(jn);
  }
  j["edges"] = Json::array();
  for (const GraspEdge& edge : graph.edges) {
    Json je;
    je["a"] = edge.a;
    je["b"] = edge.b;
    je["type"] = edge.transfer ? "transfer" : "transit";
    je["cost"] = edge.cost;
    j["edges"].push_back(je);
  }
  return j;
}

// --- keyframe search ---

const char* segmentTypeName(SegmentType type) {
  switch (type) {
    case SegmentType::Transit:
      return "transit";
    case SegmentType::Transfer:
      return "transfer";
    case SegmentType::Insert:
      return "insert";
  }
  return "transit";
}

SegmentType segmentTypeFromName(const std::string& name) {
  if (name == "transit") return SegmentType::Transit;
  if (name == "transfer") return SegmentType::Transfer;
  if (name == "insert") return SegmentType::Insert;
  throw Error(ErrorKind::InvalidInput, "unknown segment type '" + name + "'");
}

KeyframePlan searchKeyframes(const GraspGraph& graph) {
  const int n = static_cast<int>(graph.nodes.size());
  for (const GraspEdge& edge : graph.edges) {
    if (edge.a < 0 || edge.a >= n || edge.b < 0 || edge.b >= n ||
        edge.a == edge.b || !(edge.cost > 0.0)) {
      throw Error(ErrorKind::InvalidInput, "graph: malformed edge");
    }
  }
  std::vector<std::vector<std::pair<int, const GraspEdge*>>> adjacency(n);
  for (const GraspEdge& edge : graph.edges) {
    adjacency[edge.a].push_back({edge.b, &edge});
    adjacency[edge.b].push_back({edge.a, &edge});
  }

  auto nodeKey = [&](int v) {
    return std::make_tuple(graph.nodes[v].circle, graph.nodes[v].grasp_id, v);
  };

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n, kInf);
  std::vector<const GraspEdge*> pred_edge(n, nullptr);
  std::vector<int> pred(n, -1);
  using QueueItem = std::tuple<double, int, int, int>;  // cost, circle, id, node
  std::priority_queue<QueueItem, std::vector<QueueItem>, std::greater<>> queue;

  int top_nodes = 0;
  int bottom_nodes = 0;
  int middle_nodes = 0;
  for (int v = 0; v < n; ++v) {
    const GraspNode& node = graph.nodes[v];
    if (node.circle < 0 || node.circle >= static_cast<int>(graph.circles.size())) {
      throw Error(ErrorKind::InvalidInput, "graph: node references no circle");
    }
    switch (graph.circles[node.circle].kind) {
      case CircleKind::Top:
        ++top_nodes;
        dist[v] = 0.0;
        queue.push({0.0, node.circle, node.grasp_id, v});
        break;
      case CircleKind::Middle:
        ++middle_nodes;
        break;
      case CircleKind::Bottom:
        ++bottom_nodes;
        break;
    }
  }

  auto noPath = [&]() -> Error {
    std::set<int> top_ids, middle_ids, bottom_ids;
    for (int v = 0; v < n; ++v) {
      switch (graph.circles[graph.nodes[v].circle].kind) {
        case CircleKind::Top:
          top_ids.insert(graph.nodes[v].grasp_id);
          break;
        case CircleKind::Middle:
          middle_ids.insert(graph.nodes[v].grasp_id);
          break;
        case CircleKind::Bottom:
          bottom_ids.insert(graph.nodes[v].grasp_id);
          break;
      }
    }
    auto shared = [](const std::set<int>& a, const std::set<int>& b) {
      int count = 0;
      for (int id : a) count += b.count(id) ? 1 : 0;
      return count;
    };
    std::ostringstream msg;
    msg << "keyframe search: no route from the initial pose to the goal pose"
        << " (nodes: top " << top_nodes << ", middle " << middle_nodes
        << ", bottom " << bottom_nodes << "; shared grasp ids: top-middle "
        << shared(top_ids, middle_ids) << ", middle-bottom "
        << shared(middle_ids, bottom_ids) << ", top-bottom "
        << shared(top_ids, bottom_ids) << ")";
    return Error(ErrorKind::Planning, msg.str());
  };

  if (top_nodes == 0 || bottom_nodes == 0) throw noPath();

  std::vector<bool> done(n, false);
  while (!queue.empty()) {
    auto [d, circle, id, v] = queue.top();
    queue.pop();
    (void)circle;
    (void)id;
    if (done[v] || d > dist[v]) continue;
    done[v] = true;
    for (const auto& [w, edge] : adjacency[v]) {
      if (done[w]) continue;
      double nd = dist[v] + edge->cost;
      bool better = nd < dist[w];
      // Equal-cost routes resolve toward the lower (circle, grasp id) parent.
      if (!better && nd == dist[w] && pred[w] >= 0 &&
          nodeKey(v) < nodeKey(pred[w])) {
        better = true;
      }
      if (better) {
        dist[w] = nd;
        pred[w] = v;
        pred_edge[w] = edge;
        queue.push({nd, graph.nodes[w].circle, graph.nodes[w].grasp_id, w});
      }
    }
  }

  int best = -1;
  for (int v = 0; v < n; ++v) {
    if (graph.circles[graph.nodes[v].circle].kind != CircleKind::Bottom) {
      continue;
    }
    if (dist[v] == kInf) continue;
    if (best < 0 || dist[v] < dist[best] ||
        (dist[v] == dist[best] && nodeKey(v) < nodeKey(best))) {
      best = v;
    }
  }
  if (best < 0) throw noPath();

  std::vector<int> path;
  for (int v = best; v >= 0; v = pred[v]) path.push_back(v);
  std::reverse(path.begin(), path.end());

  KeyframePlan plan;
  plan.cost = dist[best];
  for (size_t i = 0; i < path.size(); ++i) {
    const GraspNode& node = graph.nodes[path[i]];
    plan.keyframes.push_back(
        {graph.circles[node.circle].object_pose, node.grasp_id, node.config});
    if (i > 0) {
      plan.segments.push_back(pred_edge[path[i]]->transfer
                                  ? SegmentType::Transfer
                                  : SegmentType::Transit);
    }
  }
  checkKeyframePlan(plan);
  return plan;
}

void checkKeyframePlan(const KeyframePlan& plan) {
  if (plan.keyframes.empty()) {
    throw Error(ErrorKind::InvalidInput, "keyframe plan: no keyframes");
  }
  if (plan.segments.size() + 1 != plan.keyframes.size()) {
    throw Error(ErrorKind::InvalidInput,
                "keyframe plan: need one segment per keyframe pair");
  }
  for (size_t i = 0; i < plan.segments.size(); ++i) {
    const Keyframe& a = plan.keyframes[i];
    const Keyframe& b = plan.keyframes[i + 1];
    switch (plan.segments[i]) {
      case SegmentType::Transfer:
      case SegmentType::Insert:
        if (a.grasp_id != b.grasp_id) {
          throw Error(ErrorKind::InvalidInput,
                      "keyframe plan: carried segments must hold one grasp");
        }
        break;
      case SegmentType::Transit:
        if (!approxEqual(a.object_pose, b.object_pose, 1e-9, 1e-9)) {
          throw Error(ErrorKind::InvalidInput,
                      "keyframe plan: transit must hold the object pose");
        }
        break;
    }
  }
}

Json keyframePlanToJson(const KeyframePlan& plan) {
  Json j;
  j["version"] = 1;
  j["cost"] = plan.cost;
  j["keyframes"] = Json::array();
  for (const Keyframe& kf : plan.keyframes) {
    Json jk;
    jk["objectPose"] = toJson(kf.object_pose);
    jk["graspId"] = kf.grasp_id;
    jk["config"] = std::vector<double>(kf.config.data(), kf.config.data() + 6);
    j["keyframes"].push_back(jk);
  }
  j["segments"] = Json::array();
  for (SegmentType type : plan.segments) {
    j["segments"].push_back(segmentTypeName(type));
  }
  return j;
}

namespace {

JointConfig configFromJson(const Json& j, const std::string& context) {
  if (!j.is_array() || j.size() != 6) {
    throw Error(ErrorKind::InvalidInput, context + " must be 6 numbers");
  }
  JointConfig q;
  for (int i = 0; i < 6; ++i) q[i] = j[i].get<double>();
  return q;
}

}  // namespace

KeyframePlan keyframePlanFromJson(const Json& j) {
  requireKey(j, "version", "keyframe plan");
  if (j["version"].get<int>() != 1) {
    throw Error(ErrorKind::InvalidInput, "keyframe plan: unsupported version");
  }
  requireKey(j, "keyframes", "keyframe plan");
  requireKey(j, "segments", "keyframe plan");
  requireKey(j, "cost", "keyframe plan");
  KeyframePlan plan;
  plan.cost = j["cost"].get<double>();
  for (const Json& jk : j["keyframes"]) {
    requireKey(jk, "objectPose", "keyframe");
    requireKey(jk, "graspId", "keyframe");
    requireKey(jk, "config", "keyframe");
    Keyframe kf;
    kf.object_pose = poseFromJson(jk["objectPose"], "keyframe pose");
    kf.grasp_id = jk["graspId"].get<int>();
    kf.config = configFromJson(jk["config"], "keyframe config");
    plan.keyframes.push_back(kf);
  }
  for (const Json& js : j["segments"]) {
    plan.segments.push_back(segmentTypeFromName(js.get<std::string>()));
  }
  checkKeyframePlan(plan);
  return plan;
}

// --- motion planning ---

namespace {

void checkMotionConfig(const MotionConfig& config) {
  if (!(config.max_joint_step > 0.0) || !(config.extension_step > 0.0)) {
    throw Error(ErrorKind::InvalidInput, "motion: step sizes must be positive");
  }
  if (config.max_iter < 1 || config.smoothing_passes < 0) {
    throw Error(ErrorKind::InvalidInput, "motion: iteration budget must be positive");
  }
  if (!(config.cost_weight > 0.0) || !(config.initial_temperature > 0.0) ||
      !(config.temperature_alpha > 1.0)) {
    throw Error(ErrorKind::InvalidInput,
                "motion: temperature parameters must be positive (alpha > 1)");
  }
  if (config.goal_bias < 0.0 || config.goal_bias >= 1.0) {
    throw Error(ErrorKind::InvalidInput, "motion: goal bias must be in [0, 1)");
  }
}

void checkWithinLimits(const RobotModel& robot, const JointConfig& q,
                       const char* what) {
  for (int i = 0; i < 6; ++i) {
    if (q[i] < robot.joints[i].lower - 1e-12 ||
        q[i] > robot.joints[i].upper + 1e-12) {
      throw Error(ErrorKind::InvalidInput,
                  std::string("motion: ") + what + " violates joint limits");
    }
  }
}

}  // namespace

std::vector<JointConfig> planMotion(const RobotModel& robot,
                                    const JointConfig& start,
                                    const JointConfig& goal,
                                    const PlanningScene& scene,
                                    const MotionConfig& config) {
  checkMotionConfig(config);
  checkWithinLimits(robot, start, "start configuration");
  checkWithinLimits(robot, goal, "goal configuration");
  PreparedScene prepared = prepareScene(scene);
  auto clearanceAt = [&](const JointConfig& q) {
    return clearancePrepared(robot, q, prepared, scene.gripper_opening);
  };
  auto costOf = [](double clearance) {
    return 1.0 / std::max(clearance, 1e-3);
  };
  if (clearanceAt(start) < -kContactSlack) {
    throw Error(ErrorKind::Planning,
                "motion: start configuration is in collision");
  }
  if (clearanceAt(goal) < -kContactSlack) {
    throw Error(ErrorKind::Planning,
                "motion: goal configuration is in collision");
  }
  if ((start - goal).cwiseAbs().maxCoeff() < 1e-12) {
    return {start};
  }

  // Walks the straight joint segment at max_joint_step resolution; returns
  // the endpoint clearance when every interior sample stays collision-free.
  auto edgeClearance = [&](const JointConfig& a,
                           const JointConfig& b) -> std::optional<double> {
    double span = (b - a).cwiseAbs().maxCoeff();
    int steps = std::max(1, static_cast<int>(std::ceil(span / config.max_joint_step)));
    double end_clearance = 0.0;
    for (int i = 1; i <= steps; ++i) {
      JointConfig qi = a + (b - a) * (static_cast<double>(i) / steps);
      double c = clearanceAt(qi);
      if (c < -kContactSlack) return std::nullopt;
      if (i == steps) end_clearance = c;
    }
    return end_clearance;
  };

  // Two trees meet in the middle: the goal-side tree climbs out of tight
  // contact corridors (a part resting on the table) on its own, which a
  // single goal-directed tree cannot thread.
  struct Tree {
    std::vector<JointConfig> nodes;
    std::vector<int> parents;
    std::vector<double> costs;
  };
  Tree trees[2];
  trees[0].nodes.push_back(start);
  trees[1].nodes.push_back(goal);
  for (Tree& tree : trees) {
    tree.parents.push_back(-1);
    tree.costs.push_back(costOf(clearanceAt(tree.nodes[0])));
  }

  Rng rng(config.seed);
  double temperature = config.initial_temperature;
  int fails = 0;

  auto nearestIn = [](const Tree& tree, const JointConfig& q) {
    int best = 0;
    double best_d = (tree.nodes[0] - q).squaredNorm();
    for (int i = 1; i < static_cast<int>(tree.nodes.size()); ++i) {
      double d = (tree.nodes[i] - q).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return best;
  };
  // One tempered extension of `tree` from node `from` toward `target`;
  // returns the index of the new node, or -1 when blocked or rejected.
  auto extend = [&](Tree& tree, int from, const JointConfig& target) {
    double dist = (target - tree.nodes[from]).norm();
    if (dist < 1e-12) return -1;
    JointConfig fresh =
        tree.nodes[from] +
        (target - tree.nodes[from]) * std::min(1.0, config.extension_step / dist);
    std::optional<double> clearance = edgeClearance(tree.nodes[from], fresh);
    if (!clearance) return -1;
    double cost = costOf(*clearance);
    double rise = cost - tree.costs[from];
    if (rise > 0.0) {
      double acceptance = std::exp(-rise / (config.cost_weight * temperature));
      if (rng.uniform() >= acceptance) {
        if (++fails > config.n_fail_max) {
          temperature = std::min(temperature * config.temperature_alpha, 1e6);
          fails = 0;
        }
        return -1;
      }
      temperature = std::max(temperature / config.temperature_alpha, 1e-10);
      fails = 0;
    }
    tree.nodes.push_back(fresh);
    tree.parents.push_back(from);
    tree.costs.push_back(cost);
    return static_cast<int>(tree.nodes.size()) - 1;
  };

  int bridge[2] = {-1, -1};  // connecting node index in each tree
  for (int iter = 0; iter < config.max_iter && bridge[0] < 0; ++iter) {
    Tree& grower = trees[iter % 2];
    Tree& chaser = trees[1 - iter % 2];
    JointConfig target;
    if (rng.uniform() < config.goal_bias) {
      target = chaser.nodes[rng.uniformInt(
          0, static_cast<int>(chaser.nodes.size()) - 1)];
    } else {
      for (int i = 0; i < 6; ++i) {
        target[i] = rng.uniform(robot.joints[i].lower, robot.joints[i].upper);
      }
    }
    int added = extend(grower, nearestIn(grower, target), target);
    if (added < 0) continue;
    const JointConfig waypoint = grower.nodes[added];
    int chase = nearestIn(chaser, waypoint);
    for (int step = 0; step < 64; ++step) {
      if ((chaser.nodes[chase] - waypoint).norm() <= config.extension_step &&
          edgeClearance(chaser.nodes[chase], waypoint)) {
        bridge[iter % 2] = added;
        bridge[1 - iter % 2] = chase;
        break;
      }
      int next = extend(chaser, chase, waypoint);
      if (next < 0) break;
      chase = next;
    }
  }
  if (bridge[0] < 0) {
    std::ostringstream msg;
    msg << "motion: no collision-free path found after " << config.max_iter
        << " extensions (tree sizes " << trees[0].nodes.size() << " and "
        << trees[1].nodes.size() << ")";
    throw Error(ErrorKind::Planning, msg.str());
  }

  std::vector<JointConfig> path;
  for (int v = bridge[0]; v >= 0; v = trees[0].parents[v]) {
    path.push_back(trees[0].nodes[v]);
  }
  std::reverse(path.begin(), path.end());
  for (int v = bridge[1]; v >= 0; v = trees[1].parents[v]) {
    path.push_back(trees[1].nodes[v]);
  }

  // In open space the straight segment wins outright; try it before the
  // randomized shortcuts.
  if (path.size() > 2 && edgeClearance(path.front(), path.back())) {
    path = {path.front(), path.back()};
  }

  for (int pass = 0; pass < config.smoothing_passes && path.size() > 2; ++pass) {
    int i = rng.uniformInt(0, static_cast<int>(path.size()) - 3);
    int j = rng.uniformInt(i + 2, static_cast<int>(path.size()) - 1);
    if (edgeClearance(path[i], path[j])) {
      path.erase(path.begin() + i + 1, path.begin() + j);
    }
  }

  std::vector<JointConfig> waypoints{path.front()};
  for (size_t s = 1; s < path.size(); ++s) {
    double span = (path[s] - path[s - 1]).cwiseAbs().maxCoeff();
    int steps =
        std::max(1, static_cast<int>(std::ceil(span / config.max_joint_step)));
    for (int i = 1; i <= steps; ++i) {
      waypoints.push_back(path[s - 1] +
                          (path[s] - path[s - 1]) *
                              (static_cast<double>(i) / steps));
    }
  }
  return waypoints;
}

// --- insertion ---

TrajectorySegment planInsertion(const RobotModel& robot,
                                const JointConfig& start,
                                const Pose& object_start, const Vec3& direction,
                                double distance, const Pose& attached_in_palm,
                                const PlanningScene& scene,
                                const MotionConfig& config,
                                double cartesian_step) {
  if (std::abs(direction.norm() - 1.0) > kUnitTol) {
    throw Error(ErrorKind::InvalidInput,
                "insertion: direction must be unit length");
  }
  if (!(distance >= 0.0) || !(cartesian_step > 0.0)) {
    throw Error(ErrorKind::InvalidInput,
                "insertion: distance and step must be non-negative");
  }
  PreparedScene prepared = prepareScene(scene);
  const Pose palm_from_object = attached_in_palm.inverse();
  auto objectAt = [&](double t) {
    Pose pose = object_start;
    pose.p += t * distance * direction;
    return pose;
  };
  Pose palm0 = forwardKinematics(robot, start);
  if (!approxEqual(palm0 * attached_in_palm, object_start, 1e-3, 1e-2)) {
    throw Error(ErrorKind::InvalidInput,
                "insertion: start configuration does not hold the part at its"
                " starting pose");
  }
  const double opening = scene.gripper_opening;
  if (clearancePrepared(robot, start, prepared, opening) < -kContactSlack) {
    throw Error(ErrorKind::Planning,
                "insertion: start configuration is in collision");
  }

  TrajectorySegment segment;
  segment.type = SegmentType::Insert;
  segment.waypoints.push_back(start);
  segment.object_poses.push_back(object_start);
  if (distance < 1e-12) return segment;

  IkConfig tracking;
  tracking.position_tol = 1e-6;
  tracking.orientation_tol = 1e-5;
  tracking.max_iterations = 150;

  // Advance the commanded part pose along the line, bisecting any interval
  // whose IK solution would hop more than max_joint_step per joint.
  std::vector<std::pair<double, int>> pending;  // (target t, depth)
  int steps = std::max(1, static_cast<int>(std::ceil(distance / cartesian_step)));
  for (int k = steps; k >= 1; --k) {
    pending.push_back({static_cast<double>(k) / steps, 0});
  }
  double t_now = 0.0;
  while (!pending.empty()) {
    auto [t_next, depth] = pending.back();
    pending.pop_back();
    Pose object_pose = objectAt(t_next);
    Pose palm = object_pose * palm_from_object;
    std::optional<JointConfig> q =
        solveIK(robot, palm, {segment.waypoints.back()}, tracking);
    bool hop = q && (*q - segment.waypoints.back()).cwiseAbs().maxCoeff() >
                        config.max_joint_step;
    if (!q || hop) {
      if (depth >= 12) {
        std::ostringstream msg;
        msg << "insertion: IK tracking " << (q ? "jumped" : "failed")
            << " at t=" << t_next << " of the descent";
        throw Error(ErrorKind::Planning, msg.str());
      }
      pending.push_back({t_next, depth + 1});
      pending.push_back({0.5 * (t_now + t_next), depth + 1});
      continue;
    }
    if (clearancePrepared(robot, *q, prepared, opening) < -kContactSlack) {
      std::ostringstream msg;
      msg << "insertion: collision at t=" << t_next << " of the descent";
      throw Error(ErrorKind::Planning, msg.str());
    }
    segment.waypoints.push_back(*q);
    segment.object_poses.push_back(object_pose);
    t_now = t_next;
  }
  return segment;
}

// --- trajectory JSON ---

Json trajectoryToJson(const Trajectory& trajectory) {
  Json j;
  j["version"] = 1;
  j["segments"] = Json::array();
  for (const TrajectorySegment& segment : trajectory.segments) {
    Json js;
    js["type"] = segmentTypeName(segment.type);
    js["graspId"] = segment.grasp_id;
    js["waypoints"] = Json::array();
    for (const JointConfig& q : segment.waypoints) {
      js["waypoints"].push_back(std::vector<double>(q.data(), q.data() + 6));
    }
    js["objectPoses"] = Json::array();
    for (const Pose& pose : segment.object_poses) {
      js["objectPoses"].push_back(toJson(pose));
    }
    j["segments"].push_back(js);
  }
  return j;
}

Trajectory trajectoryFromJson(const Json& j) {
  requireKey(j, "version", "trajectory");
  if (j["version"].get<int>() != 1) {
    throw Error(ErrorKind::InvalidInput, "trajectory: unsupported version");
  }
  requireKey(j, "segments", "trajectory");
  Trajectory out;
  for (const Json& js : j["segments"]) {
    requireKey(js, "type", "trajectory segment");
    requireKey(js, "graspId", "trajectory segment");
    requireKey(js, "waypoints", "trajectory segment");
    requireKey(js, "objectPoses", "trajectory segment");
    TrajectorySegment segment;
    segment.type = segmentTypeFromName(js["type"].get<std::string>());
    segment.grasp_id = js["graspId"].get<int>();
    for (const Json& jw : js["waypoints"]) {
      segment.waypoints.push_back(configFromJson(jw, "trajectory waypoint"));
    }
    for (const Json& jp : js["objectPoses"]) {
      segment.object_poses.push_back(
          poseFromJson(jp, "trajectory object pose"));
    }
    if (segment.object_poses.size() != segment.waypoints.size()) {
      throw Error(ErrorKind::InvalidInput,
                  "trajectory segment: one object pose per waypoint required");
    }
    out.segments.push_back(segment);
  }
  return out;
}

}  // namespace asmsim
