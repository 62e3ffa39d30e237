#include "asmsim/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <vector>

#include "asmsim/errors.hpp"
#include "asmsim/grasp.hpp"
#include "asmsim/mesh.hpp"
#include "asmsim/placement.hpp"
#include "asmsim/rng.hpp"
#include "asmsim/robot.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace asmsim;
using namespace asmsim::testutil;

namespace {

TableModel benchTable() {
  TableModel table;
  table.height = 0.0;
  table.lo = Eigen::Vector2d(0.25, -0.30);
  table.hi = Eigen::Vector2d(0.85, 0.30);
  return table;
}

Grasp makeGrasp(const Vec3& p0, const Vec3& p1, const Mat3& r, int id) {
  Grasp g;
  g.p0 = p0;
  g.p1 = p1;
  g.R = r;
  g.id = id;
  return g;
}

/// Two-finger grasps around small contact pairs, palm yawed off the wrist
/// singularity, world-reachable once anchored near the table center.
GraspSet handmadeAssemblySet(std::vector<int> ids, double z) {
  GraspSet set;
  set.frame = GraspFrame::Assembly;
  Mat3 r = rotZ(0.3) * rotX(M_PI);
  double spread = 0.0;
  for (int id : ids) {
    set.grasps.push_back(makeGrasp(Vec3(-0.02, spread, z),
                                   Vec3(0.02, spread, z), r, id));
    spread += 0.01;
  }
  return set;
}

std::set<int> idsOf(const GraspSet& set) {
  std::set<int> ids;
  for (const Grasp& g : set.grasps) ids.insert(g.id);
  return ids;
}

CircleKind kindOf(const GraspGraph& graph, int node) {
  return graph.circles[graph.nodes[node].circle].kind;
}

int countNodes(const GraspGraph& graph, CircleKind kind) {
  int count = 0;
  for (const GraspNode& n : graph.nodes) {
    if (graph.circles[n.circle].kind == kind) ++count;
  }
  return count;
}

/// Independent reachability/shortest-path check: relax every edge until no
/// distance improves (Bellman-Ford), seeding all top nodes at cost zero.
std::optional<double> bellmanFordTopToBottom(const GraspGraph& graph) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(graph.nodes.size(), inf);
  for (size_t v = 0; v < graph.nodes.size(); ++v) {
    if (kindOf(graph, static_cast<int>(v)) == CircleKind::Top) dist[v] = 0.0;
  }
  bool improved = true;
  while (improved) {
    improved = false;
    for (const GraspEdge& e : graph.edges) {
      if (dist[e.a] + e.cost < dist[e.b]) {
        dist[e.b] = dist[e.a] + e.cost;
        improved = true;
      }
      if (dist[e.b] + e.cost < dist[e.a]) {
        dist[e.a] = dist[e.b] + e.cost;
        improved = true;
      }
    }
  }
  std::optional<double> best;
  for (size_t v = 0; v < graph.nodes.size(); ++v) {
    if (kindOf(graph, static_cast<int>(v)) != CircleKind::Bottom) continue;
    if (dist[v] == inf) continue;
    if (!best || dist[v] < *best) best = dist[v];
  }
  return best;
}

/// True when some bottom node is reachable from a top node while never
/// stepping on a middle-layer node (breadth-first walk on the cut graph).
bool bottomReachableWithoutMiddle(const GraspGraph& graph) {
  std::vector<std::vector<int>> adj(graph.nodes.size());
  for (const GraspEdge& e : graph.edges) {
    adj[e.a].push_back(e.b);
    adj[e.b].push_back(e.a);
  }
  std::vector<char> seen(graph.nodes.size(), 0);
  std::queue<int> frontier;
  for (size_t v = 0; v < graph.nodes.size(); ++v) {
    if (kindOf(graph, static_cast<int>(v)) == CircleKind::Top) {
      seen[v] = 1;
      frontier.push(static_cast<int>(v));
    }
  }
  while (!frontier.empty()) {
    int v = frontier.front();
    frontier.pop();
    if (kindOf(graph, v) == CircleKind::Bottom) return true;
    if (kindOf(graph, v) == CircleKind::Middle) continue;
    for (int w : adj[v]) {
      if (!seen[w]) {
        seen[w] = 1;
        frontier.push(w);
      }
    }
  }
  return false;
}

/// Random layered graph with consistent edge semantics (transit inside a
/// circle, transfer between equal grasp ids across circles) and small integer
/// costs so shortest-path sums compare exactly.
GraspGraph randomLayeredGraph(Rng& rng) {
  GraspGraph graph;
  int middles = static_cast<int>(rng.uniformInt(0, 5));
  int n_circles = 2 + middles;
  for (int c = 0; c < n_circles; ++c) {
    GraspCircle circle;
    circle.kind = c == 0 ? CircleKind::Top
                  : c == n_circles - 1 ? CircleKind::Bottom
                                       : CircleKind::Middle;
    circle.object_pose = Pose::translation(Vec3(0.1 * c, 0.0, 0.02));
    graph.circles.push_back(circle);
  }
  bool isolate_bottom = rng.uniform() < 0.25;
  for (int c = 0; c < n_circles; ++c) {
    int members = static_cast<int>(rng.uniformInt(0, 40));
    for (int i = 0; i < members; ++i) {
      GraspNode node;
      node.circle = c;
      bool bottom = graph.circles[c].kind == CircleKind::Bottom;
      node.grasp_id = static_cast<int>(
          bottom && isolate_bottom ? rng.uniformInt(100, 110)
                                   : rng.uniformInt(0, 15));
      graph.circles[c].nodes.push_back(static_cast<int>(graph.nodes.size()));
      graph.nodes.push_back(node);
    }
  }
  const int n = static_cast<int>(graph.nodes.size());
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      bool same_circle = graph.nodes[a].circle == graph.nodes[b].circle;
      bool same_id = graph.nodes[a].grasp_id == graph.nodes[b].grasp_id;
      double cost = static_cast<double>(rng.uniformInt(1, 3));
      if (same_circle && rng.uniform() < 0.3) {
        graph.edges.push_back({a, b, false, cost});
      } else if (!same_circle && same_id && rng.uniform() < 0.6) {
        graph.edges.push_back({a, b, true, cost});
      }
    }
  }
  return graph;
}

struct DirectScene {
  TableModel table = benchTable();
  TriMesh cube = makeBox(0.04, 0.04, 0.04);
  GraspSet free_set;
  Pose init_pose = Pose::translation(Vec3(0.45, -0.10, 0.02));
  Pose goal_pose = Pose::translation(Vec3(0.60, 0.10, 0.02));
  GraspSet init;
  GraspSet goal;
  std::vector<StablePlacement> placements;

  explicit DirectScene(const RobotModel& robot) {
    GraspSampleConfig gsc;
    gsc.pairs_per_face = 6;
    gsc.approach_samples = 4;
    gsc.seed = 7;
    free_set = sampleAntipodalGrasps(cube, robot.gripper, gsc);
    init = collisionFilter(transformGrasps(free_set, init_pose), robot.gripper,
                           {}, table);
    goal = collisionFilter(transformGrasps(free_set, goal_pose, GraspFrame::World),
                           robot.gripper, {}, table);
    placements = stablePlacements(cube);
  }
};

}  // namespace

TEST_CASE("assembly spec validation and standoff distance") {
  AssemblySpec spec;
  spec.approach = Vec3(0, 0, 1);
  spec.retraction_scale = 0.5;
  spec.approach_length = 1.0;
  CHECK(retractionDistance(spec) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_NOTHROW(checkAssemblySpec(spec));

  spec.retraction_scale = 0.0;  // degenerate standoff is allowed
  CHECK_NOTHROW(checkAssemblySpec(spec));

  AssemblySpec bad = spec;
  bad.approach = Vec3(0, 0, 2);
  CHECK_THROWS_WITH_AS(checkAssemblySpec(bad), doctest::Contains("unit length"),
                       Error);
  bad = spec;
  bad.retraction_scale = -0.1;
  CHECK_THROWS_WITH_AS(checkAssemblySpec(bad),
                       doctest::Contains("non-negative"), Error);
  bad = spec;
  bad.approach_length = 0.0;
  CHECK_THROWS_WITH_AS(checkAssemblySpec(bad), doctest::Contains("positive"),
                       Error);
  bad = spec;
  bad.relative_pose.R.col(0) *= 2.0;
  CHECK_THROWS_WITH_AS(checkAssemblySpec(bad),
                       doctest::Contains("proper rotations"), Error);
}

TEST_CASE("pre-assembly poses back both parts off along the approach") {
  AssemblySpec spec;
  spec.relative_pose = Pose{Vec3(0.0, 0.01, 0.002), rotZ(0.4)};
  spec.approach = Vec3(0, 0, 1);
  spec.retraction_scale = 0.5;
  spec.approach_length = 1.0;

  auto [pre_a, pre_b] = preAssemblyPoses(spec);
  CHECK(maxAbsDiff(pre_a.p, Vec3(0, 0, 0.5)) <= 1e-15);
  CHECK(maxAbsDiff(pre_a.R, Mat3::Identity()) == 0.0);
  CHECK(maxAbsDiff(pre_b.p, spec.relative_pose.p - Vec3(0, 0, 0.5)) <= 1e-15);
  CHECK(maxAbsDiff(pre_b.R, spec.relative_pose.R) == 0.0);

  // Zero standoff keeps both parts at their assembly poses.
  spec.retraction_scale = 0.0;
  auto [tight_a, tight_b] = preAssemblyPoses(spec);
  CHECK(maxAbsDiff(tight_a.p, Vec3::Zero()) == 0.0);
  CHECK(maxAbsDiff(tight_b.p, spec.relative_pose.p) == 0.0);
}

TEST_CASE("grasp retraction translates contacts exactly and keeps id subsets") {
  RobotModel robot = defaultRobot();
  AssemblySpec spec;
  spec.approach = Vec3(0, 0, 1);
  spec.retraction_scale = 0.5;
  spec.approach_length = 0.1;  // standoff 0.05
  spec.world_goal_a = Pose::translation(Vec3(0.48, 0.02, 0.02));

  GraspSet grasps_a = handmadeAssemblySet({0, 3, 7}, 0.03);
  GraspSet grasps_b = handmadeAssemblySet({1, 4}, 0.10);

  auto [ra, rb] = retractGrasps(grasps_a, grasps_b, spec, robot);
  CHECK(ra.frame == GraspFrame::Preassembly);
  CHECK(rb.frame == GraspFrame::Preassembly);
  CHECK(!ra.grasps.empty());
  CHECK(!rb.grasps.empty());

  std::set<int> ids_a = idsOf(grasps_a);
  std::set<int> ids_b = idsOf(grasps_b);
  for (const Grasp& g : ra.grasps) CHECK(ids_a.count(g.id) == 1);
  for (const Grasp& g : rb.grasps) CHECK(ids_b.count(g.id) == 1);

  // A backs off along +approach by the standoff, B along -approach; the
  // contact geometry is otherwise untouched.
  std::map<int, Grasp> by_id;
  for (const Grasp& g : grasps_a.grasps) by_id[g.id] = g;
  for (const Grasp& g : ra.grasps) {
    const Grasp& in = by_id[g.id];
    CHECK(maxAbsDiff(g.p0, in.p0 + Vec3(0, 0, 0.05)) <= 1e-15);
    CHECK(maxAbsDiff(g.p1, in.p1 + Vec3(0, 0, 0.05)) <= 1e-15);
    CHECK(maxAbsDiff(g.R, in.R) == 0.0);
  }
  by_id.clear();
  for (const Grasp& g : grasps_b.grasps) by_id[g.id] = g;
  for (const Grasp& g : rb.grasps) {
    const Grasp& in = by_id[g.id];
    CHECK(maxAbsDiff(g.p0, in.p0 - Vec3(0, 0, 0.05)) <= 1e-15);
  }

  // Anchoring the pair out of the arm's reach empties both sets.
  spec.world_goal_a = Pose::translation(Vec3(5.0, 0.0, 0.0));
  auto [fa, fb] = retractGrasps(grasps_a, grasps_b, spec, robot);
  CHECK(fa.grasps.empty());
  CHECK(fb.grasps.empty());

  GraspSet wrong = grasps_a;
  wrong.frame = GraspFrame::Preassembly;
  CHECK_THROWS_WITH_AS(retractGrasps(wrong, grasps_b, spec, robot),
                       doctest::Contains("assembly-stage"), Error);
}

TEST_CASE("world grasp mapping anchors the pair and keeps part A in place") {
  AssemblySpec spec;
  spec.approach = Vec3(0, 0, 1);
  spec.retraction_scale = 0.4;
  spec.approach_length = 0.1;

  GraspSet a_pre = handmadeAssemblySet({0, 2}, 0.08);
  a_pre.frame = GraspFrame::Preassembly;
  GraspSet b_assembly = handmadeAssemblySet({1, 5}, 0.12);
  GraspSet b_pre = handmadeAssemblySet({1, 5}, 0.04);
  b_pre.frame = GraspFrame::Preassembly;

  SUBCASE("identity anchor changes nothing but the tag") {
    spec.world_goal_a = Pose::identity();
    WorldGraspSets world = worldGrasps(a_pre, b_assembly, b_pre, spec);
    CHECK(world.a_assembly.frame == GraspFrame::World);
    CHECK(world.b_preassembly.frame == GraspFrame::World);
    REQUIRE(world.a_assembly.grasps.size() == a_pre.grasps.size());
    for (size_t i = 0; i < a_pre.grasps.size(); ++i) {
      CHECK(maxAbsDiff(world.a_assembly.grasps[i].p0, a_pre.grasps[i].p0) ==
            0.0);
      CHECK(maxAbsDiff(world.a_assembly.grasps[i].R, a_pre.grasps[i].R) == 0.0);
      CHECK(world.a_assembly.grasps[i].id == a_pre.grasps[i].id);
    }
    REQUIRE(world.b_assembly.grasps.size() == b_assembly.grasps.size());
    for (size_t i = 0; i < b_assembly.grasps.size(); ++i) {
      CHECK(maxAbsDiff(world.b_assembly.grasps[i].p0,
                       b_assembly.grasps[i].p0) == 0.0);
    }
  }

  SUBCASE("part A's assembly and pre-assembly world sets coincide") {
    spec.world_goal_a = Pose{Vec3(0.5, -0.1, 0.3), rotZ(0.7)};
    WorldGraspSets world = worldGrasps(a_pre, b_assembly, b_pre, spec);
    REQUIRE(world.a_assembly.grasps.size() ==
            world.a_preassembly.grasps.size());
    for (size_t i = 0; i < world.a_assembly.grasps.size(); ++i) {
      CHECK(maxAbsDiff(world.a_assembly.grasps[i].p0,
                       world.a_preassembly.grasps[i].p0) == 0.0);
      CHECK(maxAbsDiff(world.a_assembly.grasps[i].R,
                       world.a_preassembly.grasps[i].R) == 0.0);
    }
  }

  SUBCASE("a pure rotation preserves contact spacing and round-trips") {
    spec.world_goal_a = Pose{Vec3::Zero(), rotZ(0.7)};
    WorldGraspSets world = worldGrasps(a_pre, b_assembly, b_pre, spec);
    for (size_t i = 0; i < b_pre.grasps.size(); ++i) {
      for (size_t j = i + 1; j < b_pre.grasps.size(); ++j) {
        double local = (b_pre.grasps[i].p0 - b_pre.grasps[j].p0).norm();
        double mapped = (world.b_preassembly.grasps[i].p0 -
                         world.b_preassembly.grasps[j].p0)
                            .norm();
        CHECK(std::abs(local - mapped) <= 1e-12);
      }
      double opening_local = graspOpening(b_pre.grasps[i]);
      double opening_world = graspOpening(world.b_preassembly.grasps[i]);
      CHECK(std::abs(opening_local - opening_world) <= 1e-12);
    }
    // Undoing the anchor by hand restores the local sets.
    Pose inv = spec.world_goal_a.inverse();
    for (size_t i = 0; i < b_pre.grasps.size(); ++i) {
      const Grasp& w = world.b_preassembly.grasps[i];
      CHECK(maxAbsDiff(inv.apply(w.p0), b_pre.grasps[i].p0) <= 1e-12);
      CHECK(maxAbsDiff(inv.apply(w.p1), b_pre.grasps[i].p1) <= 1e-12);
      CHECK(maxAbsDiff(inv.R * w.R, b_pre.grasps[i].R) <= 1e-12);
    }
  }

  SUBCASE("frame tags are validated") {
    CHECK_THROWS_WITH_AS(worldGrasps(b_assembly, b_assembly, b_pre, spec),
                         doctest::Contains("pre-assembly"), Error);
    CHECK_THROWS_WITH_AS(worldGrasps(a_pre, b_pre, b_pre, spec),
                         doctest::Contains("assembly-stage"), Error);
  }
}

TEST_CASE("table slab is a bounded box under the tabletop") {
  TableModel table = benchTable();
  table.height = 0.1;
  TriMesh slab = tableSlab(table, 0.05);
  CHECK(slab.vertices.size() == 8);
  auto [lo, hi] = slab.bounds();
  CHECK(lo.x() == doctest::Approx(0.25));
  CHECK(hi.x() == doctest::Approx(0.85));
  CHECK(lo.y() == doctest::Approx(-0.30));
  CHECK(hi.y() == doctest::Approx(0.30));
  CHECK(hi.z() == doctest::Approx(0.1));
  CHECK(lo.z() == doctest::Approx(0.05));

  CHECK_THROWS_WITH_AS(tableSlab(table, 0.0), doctest::Contains("positive"),
                       Error);
  table.hi = table.lo;
  CHECK_THROWS_WITH_AS(tableSlab(table, 0.05), doctest::Contains("non-empty"),
                       Error);
}

TEST_CASE("configuration clearance matches capsule geometry and honors the "
          "contact slack") {
  RobotModel robot = defaultRobot();
  JointConfig q;
  q << 0.3, 0.6, 0.8, 0.2, 0.5, 0.1;

  // Lowest point of the whole body (links + open gripper), by direct
  // capsule arithmetic.
  std::vector<Capsule> capsules = armCapsules(robot, q);
  Pose palm = forwardKinematics(robot, q);
  for (const Capsule& c : gripperCapsules(robot.gripper, palm, 0.05)) {
    capsules.push_back(c);
  }
  double lowest = std::numeric_limits<double>::infinity();
  for (const Capsule& c : capsules) {
    lowest = std::min(lowest, std::min(c.a.z(), c.b.z()) - c.radius);
  }

  PlanningScene scene;
  scene.table.lo = Eigen::Vector2d(-2.0, -2.0);
  scene.table.hi = Eigen::Vector2d(2.0, 2.0);

  scene.table.height = lowest - 0.01;
  CHECK(configClearance(robot, q, scene) == doctest::Approx(0.01).epsilon(1e-3));
  CHECK(!configCollides(robot, q, scene));

  // Shallow interference within the contact slack still counts as touching.
  scene.table.height = lowest + 1e-4;
  CHECK(configClearance(robot, q, scene) ==
        doctest::Approx(-1e-4).epsilon(1e-2));
  CHECK(!configCollides(robot, q, scene));

  scene.table.height = lowest + 5e-3;
  CHECK(configCollides(robot, q, scene));

  // A box swallowing the arm is a containment, not a surface graze.
  scene.table.height = lowest - 1.0;
  scene.obstacles.push_back(
      {makeBox(3.0, 3.0, 3.0), Pose::translation(Vec3(0, 0, 0.5))});
  CHECK(configClearance(robot, q, scene) < -0.05);
  CHECK(configCollides(robot, q, scene));
}

TEST_CASE("grasp graph wires three layers with transfer and transit edges") {
  RobotModel robot = defaultRobot();
  DirectScene scene(robot);
  REQUIRE(!scene.init.grasps.empty());
  REQUIRE(!scene.goal.grasps.empty());

  GraspGraphConfig config;
  config.yaw_samples = 4;
  config.transfer_cost = 1.0;
  config.transit_cost = 1.0;
  GraspGraph graph =
      buildGraspGraph(scene.init, scene.init_pose, scene.placements, scene.goal,
                      scene.goal_pose, scene.free_set, scene.table, robot, {},
                      config);

  // One top and one bottom circle bracket the placement-by-yaw middle band.
  REQUIRE(graph.circles.size() == 2 + scene.placements.size() * 4);
  CHECK(graph.circles.front().kind == CircleKind::Top);
  CHECK(graph.circles.back().kind == CircleKind::Bottom);
  CHECK(maxAbsDiff(graph.circles.front().object_pose.p, scene.init_pose.p) ==
        0.0);
  CHECK(maxAbsDiff(graph.circles.back().object_pose.p, scene.goal_pose.p) ==
        0.0);
  for (size_t c = 1; c + 1 < graph.circles.size(); ++c) {
    const GraspCircle& circle = graph.circles[c];
    REQUIRE(circle.kind == CircleKind::Middle);
    REQUIRE(circle.placement >= 0);
    REQUIRE(circle.placement < static_cast<int>(scene.placements.size()));
    REQUIRE(circle.yaw_index >= 0);
    REQUIRE(circle.yaw_index < 4);
    const StablePlacement& placement = scene.placements[circle.placement];
    double yaw = 2.0 * M_PI * circle.yaw_index / 4;
    CHECK(maxAbsDiff(circle.object_pose.R,
                     Mat3(rotZ(yaw) * placement.rest_rotation)) <= 1e-12);
    CHECK(circle.object_pose.p.x() == doctest::Approx(scene.init_pose.p.x()));
    CHECK(circle.object_pose.p.y() == doctest::Approx(scene.init_pose.p.y()));
    CHECK(circle.object_pose.p.z() ==
          doctest::Approx(scene.table.height + placement.support_height));
  }

  // Circle membership lists the node indices in ascending order.
  std::set<int> listed;
  for (size_t c = 0; c < graph.circles.size(); ++c) {
    const std::vector<int>& members = graph.circles[c].nodes;
    CHECK(std::is_sorted(members.begin(), members.end()));
    for (int v : members) {
      REQUIRE(v >= 0);
      REQUIRE(v < static_cast<int>(graph.nodes.size()));
      CHECK(graph.nodes[v].circle == static_cast<int>(c));
      listed.insert(v);
    }
  }
  CHECK(listed.size() == graph.nodes.size());

  // Every node is an arm-reachable, collision-checked grasp of its circle.
  std::map<int, Grasp> free_by_id;
  for (const Grasp& g : scene.free_set.grasps) free_by_id[g.id] = g;
  std::map<int, Grasp> init_by_id, goal_by_id;
  for (const Grasp& g : scene.init.grasps) init_by_id[g.id] = g;
  for (const Grasp& g : scene.goal.grasps) goal_by_id[g.id] = g;
  for (const GraspNode& node : graph.nodes) {
    const GraspCircle& circle = graph.circles[node.circle];
    Grasp anchored;
    if (circle.kind == CircleKind::Top) {
      anchored = init_by_id.at(node.grasp_id);
    } else if (circle.kind == CircleKind::Bottom) {
      anchored = goal_by_id.at(node.grasp_id);
    } else {
      const Grasp& local = free_by_id.at(node.grasp_id);
      anchored = local;
      anchored.p0 = circle.object_pose.apply(local.p0);
      anchored.p1 = circle.object_pose.apply(local.p1);
      anchored.R = circle.object_pose.R * local.R;
    }
    Pose expected = graspPalmPose(anchored);
    Pose actual = forwardKinematics(robot, node.config);
    CHECK((actual.p - expected.p).norm() <= 2e-4);
    CHECK(rotationDistance(actual.R, expected.R) <= 2e-3);

    PlanningScene check_scene;
    check_scene.table = scene.table;
    check_scene.gripper_opening = graspOpening(anchored);
    CHECK(configClearance(robot, node.config, check_scene) >= -kContactSlack);
  }

  // Transfer edges pair one grasp id across circles; transit edges stay in a
  // circle and never appear in the bottom circle.
  int transfer_top_bottom = 0;
  for (const GraspEdge& e : graph.edges) {
    CHECK(e.cost == 1.0);
    const GraspNode& a = graph.nodes[e.a];
    const GraspNode& b = graph.nodes[e.b];
    if (e.transfer) {
      CHECK(a.grasp_id == b.grasp_id);
      CHECK(a.circle != b.circle);
      CircleKind ka = graph.circles[a.circle].kind;
      CircleKind kb = graph.circles[b.circle].kind;
      if ((ka == CircleKind::Top && kb == CircleKind::Bottom) ||
          (ka == CircleKind::Bottom && kb == CircleKind::Top)) {
        ++transfer_top_bottom;
      }
    } else {
      CHECK(a.circle == b.circle);
      CHECK(graph.circles[a.circle].kind != CircleKind::Bottom);
    }
  }
  // Same part orientation at start and goal: some grasp works at both, so the
  // layers connect directly.
  CHECK(transfer_top_bottom > 0);

  // The cheapest route is that direct carry: two keyframes, one transfer.
  KeyframePlan plan = searchKeyframes(graph);
  CHECK(plan.keyframes.size() == 2);
  REQUIRE(plan.segments.size() == 1);
  CHECK(plan.segments[0] == SegmentType::Transfer);
  CHECK(plan.cost == 1.0);
  CHECK(plan.keyframes[0].grasp_id == plan.keyframes[1].grasp_id);
  CHECK(maxAbsDiff(plan.keyframes[0].object_pose.p, scene.init_pose.p) == 0.0);
  CHECK(maxAbsDiff(plan.keyframes[1].object_pose.p, scene.goal_pose.p) == 0.0);
  CHECK_NOTHROW(checkKeyframePlan(plan));

  // Graph artifact: every element lands in the serialized form.
  Json j = graspGraphToJson(graph);
  CHECK(j["version"] == 1);
  CHECK(j["circles"].size() == graph.circles.size());
  CHECK(j["nodes"].size() == graph.nodes.size());
  CHECK(j["edges"].size() == graph.edges.size());
  CHECK(j["circles"][0]["kind"] == "top");
  CHECK(j["circles"][graph.circles.size() - 1]["kind"] == "bottom");
  CHECK(j["nodes"][0]["config"].size() == 6);
  std::string type0 = j["edges"][0]["type"].get<std::string>();
  CHECK((type0 == "transfer" || type0 == "transit"));

  // Input tags are validated.
  CHECK_THROWS_WITH_AS(
      buildGraspGraph(scene.free_set, scene.init_pose, scene.placements,
                      scene.goal, scene.goal_pose, scene.free_set, scene.table,
                      robot, {}, config),
      doctest::Contains("object-anchored"), Error);
  CHECK_THROWS_WITH_AS(
      buildGraspGraph(scene.init, scene.init_pose, scene.placements, scene.goal,
                      scene.goal_pose, scene.init, scene.table, robot, {},
                      config),
      doctest::Contains("free tag"), Error);
  GraspGraphConfig bad = config;
  bad.yaw_samples = 0;
  CHECK_THROWS_WITH_AS(
      buildGraspGraph(scene.init, scene.init_pose, scene.placements, scene.goal,
                      scene.goal_pose, scene.free_set, scene.table, robot, {},
                      bad),
      doctest::Contains("yaw_samples"), Error);
}

TEST_CASE("yaw sampling scales the middle layer") {
  RobotModel robot = defaultRobot();
  DirectScene scene(robot);
  GraspGraphConfig one;
  one.yaw_samples = 1;
  GraspGraphConfig six;
  six.yaw_samples = 6;
  GraspGraph g1 =
      buildGraspGraph(scene.init, scene.init_pose, scene.placements, scene.goal,
                      scene.goal_pose, scene.free_set, scene.table, robot, {},
                      one);
  GraspGraph g6 =
      buildGraspGraph(scene.init, scene.init_pose, scene.placements, scene.goal,
                      scene.goal_pose, scene.free_set, scene.table, robot, {},
                      six);
  CHECK(g1.circles.size() == 2 + scene.placements.size());
  CHECK(g6.circles.size() == 2 + scene.placements.size() * 6);
  int mid1 = countNodes(g1, CircleKind::Middle);
  int mid6 = countNodes(g6, CircleKind::Middle);
  REQUIRE(mid1 > 0);
  // The yaw-zero circles recur identically, the extra yaws populate at the
  // same per-circle rate up to arm-reachability variation.
  CHECK(mid6 >= 5 * mid1);
  CHECK(mid6 <= 6 * mid1);
}

TEST_CASE("a pocketed goal forces the route through an intermediate placement") {
  RobotModel robot = defaultRobot();
  TableModel table = benchTable();
  TriMesh cube = makeBox(0.03, 0.03, 0.03);
  GraspSampleConfig gsc;
  gsc.pairs_per_face = 5;
  gsc.approach_samples = 8;  // includes 45-degree rolls
  gsc.seed = 7;
  GraspSet free_set = sampleAntipodalGrasps(cube, robot.gripper, gsc);

  Pose init_pose = Pose::translation(Vec3(0.42, -0.10, 0.015));
  Pose goal_pose{Vec3(0.52, 0.10, 0.015), rotX(M_PI / 2)};

  // Four blocks leave a square well around the goal: straight-down grasps
  // thread it, every tilted approach sweeps into a block.
  double inner = 0.034, thickness = 0.02, length = 0.12, height = 0.075;
  double offset = inner + thickness / 2;
  Vec3 center(goal_pose.p.x(), goal_pose.p.y(), height / 2);
  std::vector<Obstacle> fixture;
  fixture.push_back({makeBox(thickness, length, height),
                     Pose::translation(center + Vec3(offset, 0, 0))});
  fixture.push_back({makeBox(thickness, length, height),
                     Pose::translation(center + Vec3(-offset, 0, 0))});
  fixture.push_back({makeBox(length, thickness, height),
                     Pose::translation(center + Vec3(0, offset, 0))});
  fixture.push_back({makeBox(length, thickness, height),
                     Pose::translation(center + Vec3(0, -offset, 0))});

  GraspSet init = collisionFilter(transformGrasps(free_set, init_pose),
                                  robot.gripper, fixture, table);
  GraspSet goal =
      collisionFilter(transformGrasps(free_set, goal_pose, GraspFrame::World),
                      robot.gripper, fixture, table);
  REQUIRE(!init.grasps.empty());
  REQUIRE(!goal.grasps.empty());

  GraspGraphConfig config;
  config.yaw_samples = 6;
  config.max_approach_tilt = 0.9;
  GraspGraph graph =
      buildGraspGraph(init, init_pose, stablePlacements(cube), goal, goal_pose,
                      free_set, table, robot, fixture, config);
  REQUIRE(countNodes(graph, CircleKind::Top) > 0);
  REQUIRE(countNodes(graph, CircleKind::Bottom) > 0);

  // The pose flip is unreachable in one carry: no grasp survives at both the
  // upright start and the pocketed goal.
  for (const GraspEdge& e : graph.edges) {
    CircleKind ka = kindOf(graph, e.a);
    CircleKind kb = kindOf(graph, e.b);
    bool direct = (ka == CircleKind::Top && kb == CircleKind::Bottom) ||
                  (ka == CircleKind::Bottom && kb == CircleKind::Top);
    CHECK(!direct);
  }
  // Stronger: removing the middle layer disconnects start from goal, so every
  // route re-places the part at least once.
  CHECK(!bottomReachableWithoutMiddle(graph));

  KeyframePlan plan = searchKeyframes(graph);
  REQUIRE(plan.keyframes.size() >= 3);
  int middle_keyframes = 0;
  for (const Keyframe& kf : plan.keyframes) {
    if (!approxEqual(kf.object_pose, init_pose, 1e-9, 1e-9) &&
        !approxEqual(kf.object_pose, goal_pose, 1e-9, 1e-9)) {
      ++middle_keyframes;
    }
  }
  CHECK(middle_keyframes >= 1);
  CHECK(plan.cost >= 2.0);  // at least two carries
  CHECK(std::count(plan.segments.begin(), plan.segments.end(),
                   SegmentType::Transfer) >= 2);
}

TEST_CASE("keyframe search matches an exhaustive oracle on random layered "
          "graphs") {
  Rng rng(414213562);
  int reachable = 0, unreachable = 0;
  for (int trial = 0; trial < 100; ++trial) {
    GraspGraph graph = randomLayeredGraph(rng);
    REQUIRE(graph.nodes.size() <= 500);
    std::optional<double> oracle = bellmanFordTopToBottom(graph);
    if (oracle) {
      KeyframePlan plan = searchKeyframes(graph);
      CHECK(plan.cost == *oracle);  // integer costs compare exactly
      REQUIRE(!plan.keyframes.empty());
      CHECK(plan.segments.size() + 1 == plan.keyframes.size());
      // Repeat runs resolve ties identically.
      KeyframePlan again = searchKeyframes(graph);
      REQUIRE(again.keyframes.size() == plan.keyframes.size());
      for (size_t i = 0; i < plan.keyframes.size(); ++i) {
        CHECK(again.keyframes[i].grasp_id == plan.keyframes[i].grasp_id);
      }
      ++reachable;
    } else {
      CHECK_THROWS_AS(searchKeyframes(graph), Error);
      ++unreachable;
    }
  }
  // The generator exercises both outcomes.
  CHECK(reachable >= 20);
  CHECK(unreachable >= 10);
}

TEST_CASE("keyframe search reports layer connectivity when no route exists") {
  RobotModel robot = defaultRobot();
  DirectScene scene(robot);
  GraspSet empty_goal;
  empty_goal.frame = GraspFrame::World;
  GraspGraphConfig config;
  config.yaw_samples = 4;
  GraspGraph graph =
      buildGraspGraph(scene.init, scene.init_pose, scene.placements, empty_goal,
                      scene.goal_pose, scene.free_set, scene.table, robot, {},
                      config);
  // A disconnected graph is not a build error; the search reports it.
  CHECK(countNodes(graph, CircleKind::Bottom) == 0);
  try {
    searchKeyframes(graph);
    FAIL("expected a planning error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Planning);
    std::string msg = e.what();
    CHECK(msg.find("no route") != std::string::npos);
    CHECK(msg.find("bottom 0") != std::string::npos);
    CHECK(msg.find("top-bottom 0") != std::string::npos);
  }

  GraspGraph bad;
  bad.circles.push_back({CircleKind::Top, Pose::identity(), -1, -1, {0}});
  bad.circles.push_back({CircleKind::Bottom, Pose::identity(), -1, -1, {1}});
  bad.nodes.push_back({0, 0, JointConfig::Zero()});
  bad.nodes.push_back({1, 0, JointConfig::Zero()});
  bad.edges.push_back({0, 0, true, 1.0});
  CHECK_THROWS_WITH_AS(searchKeyframes(bad), doctest::Contains("malformed"),
                       Error);
  bad.edges[0] = {0, 1, true, -1.0};
  CHECK_THROWS_WITH_AS(searchKeyframes(bad), doctest::Contains("malformed"),
                       Error);
  bad.edges[0] = {0, 1, true, 1.0};
  bad.nodes[1].circle = 7;
  CHECK_THROWS_WITH_AS(searchKeyframes(bad),
                       doctest::Contains("references no circle"), Error);
}

TEST_CASE("keyframe plan JSON round-trips and validates its structure") {
  KeyframePlan plan;
  Keyframe a;
  a.object_pose = Pose{Vec3(0.4, -0.1, 0.02), rotZ(0.3)};
  a.grasp_id = 5;
  a.config << 0.1, -0.4, 0.9, 0.0, 0.6, -0.2;
  Keyframe b = a;
  b.object_pose.p = Vec3(0.6, 0.1, 0.02);
  Keyframe c = b;
  c.grasp_id = 9;
  plan.keyframes = {a, b, c};
  plan.segments = {SegmentType::Transfer, SegmentType::Transit};
  plan.cost = 2.0;
  CHECK_NOTHROW(checkKeyframePlan(plan));

  Json j = keyframePlanToJson(plan);
  KeyframePlan back = keyframePlanFromJson(j);
  CHECK(back.cost == plan.cost);
  REQUIRE(back.keyframes.size() == 3);
  REQUIRE(back.segments.size() == 2);
  CHECK(back.segments[0] == SegmentType::Transfer);
  CHECK(back.segments[1] == SegmentType::Transit);
  for (size_t i = 0; i < plan.keyframes.size(); ++i) {
    CHECK(maxAbsDiff(back.keyframes[i].object_pose.p,
                     plan.keyframes[i].object_pose.p) == 0.0);
    CHECK(maxAbsDiff(back.keyframes[i].object_pose.R,
                     plan.keyframes[i].object_pose.R) == 0.0);
    CHECK(back.keyframes[i].grasp_id == plan.keyframes[i].grasp_id);
    CHECK((back.keyframes[i].config - plan.keyframes[i].config)
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }

  Json bad = j;
  bad["version"] = 2;
  CHECK_THROWS_WITH_AS(keyframePlanFromJson(bad),
                       doctest::Contains("unsupported version"), Error);
  bad = j;
  bad.erase("segments");
  CHECK_THROWS_AS(keyframePlanFromJson(bad), Error);
  bad = j;
  bad["segments"][0] = "drift";
  CHECK_THROWS_WITH_AS(keyframePlanFromJson(bad),
                       doctest::Contains("unknown segment type"), Error);

  // Structural contracts: carries keep their grasp, transits keep the pose.
  KeyframePlan broken = plan;
  broken.keyframes[1].grasp_id = 6;
  CHECK_THROWS_WITH_AS(checkKeyframePlan(broken),
                       doctest::Contains("hold one grasp"), Error);
  broken = plan;
  broken.keyframes[2].object_pose.p.x() += 0.01;
  CHECK_THROWS_WITH_AS(checkKeyframePlan(broken),
                       doctest::Contains("hold the object pose"), Error);
  broken = plan;
  broken.segments.pop_back();
  CHECK_THROWS_WITH_AS(checkKeyframePlan(broken),
                       doctest::Contains("one segment per keyframe pair"),
                       Error);
}

TEST_CASE("motion planning connects free-space configurations tightly") {
  RobotModel robot = defaultRobot();
  PlanningScene scene;
  scene.table = benchTable();
  Pose start_palm{Vec3(0.45, -0.15, 0.10), rotZ(0.3) * rotX(M_PI)};
  Pose goal_palm{Vec3(0.45, 0.15, 0.10), rotZ(-0.3) * rotX(M_PI)};
  std::optional<JointConfig> qs = solveIK(robot, start_palm);
  std::optional<JointConfig> qg = solveIK(robot, goal_palm);
  REQUIRE(qs);
  REQUIRE(qg);

  MotionConfig config;
  config.seed = 9;
  std::vector<JointConfig> path = planMotion(robot, *qs, *qg, scene, config);
  REQUIRE(path.size() >= 2);
  CHECK((path.front() - *qs).cwiseAbs().maxCoeff() == 0.0);
  CHECK((path.back() - *qg).cwiseAbs().maxCoeff() <= 1e-12);

  double length = 0.0;
  for (size_t i = 1; i < path.size(); ++i) {
    double step = (path[i] - path[i - 1]).cwiseAbs().maxCoeff();
    CHECK(step <= config.max_joint_step + 1e-12);
    length += (path[i] - path[i - 1]).norm();
    for (int j = 0; j < 6; ++j) {
      CHECK(path[i][j] >= robot.joints[j].lower - 1e-12);
      CHECK(path[i][j] <= robot.joints[j].upper + 1e-12);
    }
    CHECK(!configCollides(robot, path[i], scene));
  }
  // Nothing blocks the way: the smoothed route stays near the straight line.
  CHECK(length <= 1.5 * (*qg - *qs).norm());

  // Same seed, same route, waypoint for waypoint.
  std::vector<JointConfig> again = planMotion(robot, *qs, *qg, scene, config);
  REQUIRE(again.size() == path.size());
  for (size_t i = 0; i < path.size(); ++i) {
    CHECK((again[i] - path[i]).cwiseAbs().maxCoeff() == 0.0);
  }

  // Already there: the path degenerates to the single configuration.
  std::vector<JointConfig> still = planMotion(robot, *qs, *qs, scene, config);
  REQUIRE(still.size() == 1);
  CHECK((still[0] - *qs).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("motion planning detours around an obstacle wall") {
  RobotModel robot = defaultRobot();
  PlanningScene scene;
  scene.table = benchTable();
  scene.obstacles.push_back(
      {makeBox(0.30, 0.02, 0.15), Pose::translation(Vec3(0.47, 0.0, 0.075))});
  Pose start_palm{Vec3(0.45, -0.15, 0.10), rotZ(0.3) * rotX(M_PI)};
  Pose goal_palm{Vec3(0.45, 0.15, 0.10), rotZ(-0.3) * rotX(M_PI)};
  std::optional<JointConfig> qs = solveIK(robot, start_palm);
  std::optional<JointConfig> qg = solveIK(robot, goal_palm);
  REQUIRE(qs);
  REQUIRE(qg);
  REQUIRE(!configCollides(robot, *qs, scene));
  REQUIRE(!configCollides(robot, *qg, scene));

  MotionConfig config;
  config.seed = 9;
  std::vector<JointConfig> path = planMotion(robot, *qs, *qg, scene, config);
  REQUIRE(path.size() >= 2);
  CHECK((path.back() - *qg).cwiseAbs().maxCoeff() <= 1e-12);
  for (const JointConfig& q : path) {
    CHECK(!configCollides(robot, q, scene));
  }
  // The wall forces a genuine detour.
  double length = 0.0;
  for (size_t i = 1; i < path.size(); ++i) {
    length += (path[i] - path[i - 1]).norm();
  }
  CHECK(length > 1.2 * (*qg - *qs).norm());
}

TEST_CASE("motion planning reports its failure modes") {
  RobotModel robot = defaultRobot();
  PlanningScene scene;
  scene.table = benchTable();
  scene.obstacles.push_back(
      {makeBox(0.30, 0.02, 0.15), Pose::translation(Vec3(0.47, 0.0, 0.075))});
  Pose start_palm{Vec3(0.45, -0.15, 0.10), rotZ(0.3) * rotX(M_PI)};
  Pose goal_palm{Vec3(0.45, 0.15, 0.10), rotZ(-0.3) * rotX(M_PI)};
  std::optional<JointConfig> qs = solveIK(robot, start_palm);
  std::optional<JointConfig> qg = solveIK(robot, goal_palm);
  REQUIRE(qs);
  REQUIRE(qg);

  // Exhausting the extension budget is a planning failure, not a crash.
  MotionConfig tiny;
  tiny.max_iter = 3;
  tiny.seed = 11;
  try {
    planMotion(robot, *qs, *qg, scene, tiny);
    FAIL("expected a planning error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Planning);
    CHECK(std::string(e.what()).find("after 3 extensions") !=
          std::string::npos);
  }

  // Colliding endpoints are rejected up front.
  PlanningScene blocked = scene;
  blocked.obstacles.push_back(
      {makeBox(0.2, 0.2, 0.3), Pose::translation(Vec3(0.45, -0.15, 0.15))});
  try {
    planMotion(robot, *qs, *qg, blocked, {});
    FAIL("expected a planning error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Planning);
    CHECK(std::string(e.what()).find("start configuration") !=
          std::string::npos);
  }

  // Joint-limit violations are caller bugs.
  JointConfig out_of_range = JointConfig::Zero();
  out_of_range[1] = 9.0;
  try {
    planMotion(robot, out_of_range, *qg, scene, {});
    FAIL("expected an input error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidInput);
    CHECK(std::string(e.what()).find("joint limits") != std::string::npos);
  }

  MotionConfig bad;
  bad.goal_bias = 1.0;
  CHECK_THROWS_WITH_AS(planMotion(robot, *qs, *qg, scene, bad),
                       doctest::Contains("goal bias"), Error);
}

TEST_CASE("insertion descends exactly on the commanded line") {
  RobotModel robot = defaultRobot();
  PlanningScene scene;
  scene.table = benchTable();
  scene.gripper_opening = 0.04;
  Pose attached_in_palm = Pose::translation(Vec3(0, 0, 0.08));
  scene.attached_mesh = makeBox(0.04, 0.04, 0.04);
  scene.attached_in_palm = attached_in_palm;

  Pose palm{Vec3(0.45, -0.10, 0.16), rotZ(0.3) * rotX(M_PI)};
  std::optional<JointConfig> start = solveIK(robot, palm);
  REQUIRE(start);
  Pose object_start = forwardKinematics(robot, *start) * attached_in_palm;
  Vec3 direction(0, 0, -1);
  const double distance = 0.06;

  MotionConfig config;
  TrajectorySegment segment =
      planInsertion(robot, *start, object_start, direction, distance,
                    attached_in_palm, scene, config);
  CHECK(segment.type == SegmentType::Insert);
  REQUIRE(segment.waypoints.size() >= 2);
  REQUIRE(segment.object_poses.size() == segment.waypoints.size());
  CHECK((segment.waypoints.front() - *start).cwiseAbs().maxCoeff() == 0.0);

  for (size_t i = 0; i < segment.object_poses.size(); ++i) {
    const Pose& pose = segment.object_poses[i];
    // Lateral deviation from the commanded line is zero by construction.
    Vec3 traveled = pose.p - object_start.p;
    CHECK(std::abs(traveled.x()) <= 1e-15);
    CHECK(std::abs(traveled.y()) <= 1e-15);
    CHECK(traveled.z() <= 1e-15);
    CHECK(traveled.z() >= -distance - 1e-15);
    CHECK(maxAbsDiff(pose.R, object_start.R) == 0.0);
    if (i > 0) {
      CHECK((segment.waypoints[i] - segment.waypoints[i - 1])
                .cwiseAbs()
                .maxCoeff() <= config.max_joint_step + 1e-12);
      CHECK(pose.p.z() < segment.object_poses[i - 1].p.z());
    }
  }
  CHECK(std::abs(segment.object_poses.back().p.z() -
                 (object_start.p.z() - distance)) <= 1e-15);

  // The arm really tracks the commanded line within the IK tolerance.
  for (size_t i = 0; i < segment.waypoints.size(); ++i) {
    Pose held = forwardKinematics(robot, segment.waypoints[i]) * attached_in_palm;
    CHECK((held.p - segment.object_poses[i].p).norm() <= 5e-6);
  }

  // A zero-length insertion is the single starting sample.
  TrajectorySegment none =
      planInsertion(robot, *start, object_start, direction, 0.0,
                    attached_in_palm, scene, config);
  CHECK(none.waypoints.size() == 1);
  CHECK(none.object_poses.size() == 1);

  CHECK_THROWS_WITH_AS(
      planInsertion(robot, *start, object_start, Vec3(0, 0, -2), distance,
                    attached_in_palm, scene, config),
      doctest::Contains("unit length"), Error);
  JointConfig wrong = *start;
  wrong[0] += 0.5;
  CHECK_THROWS_WITH_AS(
      planInsertion(robot, wrong, object_start, direction, distance,
                    attached_in_palm, scene, config),
      doctest::Contains("starting pose"), Error);
}

TEST_CASE("trajectory JSON round-trips and validates per-waypoint poses") {
  Trajectory trajectory;
  TrajectorySegment transit;
  transit.type = SegmentType::Transit;
  transit.grasp_id = -1;
  transit.waypoints.push_back(JointConfig::Zero());
  transit.waypoints.push_back(JointConfig::Constant(0.1));
  transit.object_poses.push_back(Pose::translation(Vec3(0.4, 0.0, 0.02)));
  transit.object_poses.push_back(Pose::translation(Vec3(0.4, 0.0, 0.02)));
  TrajectorySegment carry;
  carry.type = SegmentType::Transfer;
  carry.grasp_id = 4;
  carry.waypoints.push_back(JointConfig::Constant(0.1));
  carry.object_poses.push_back(Pose{Vec3(0.4, 0.0, 0.02), rotZ(0.2)});
  trajectory.segments = {transit, carry};

  Json j = trajectoryToJson(trajectory);
  Trajectory back = trajectoryFromJson(j);
  REQUIRE(back.segments.size() == 2);
  CHECK(back.segments[0].type == SegmentType::Transit);
  CHECK(back.segments[0].grasp_id == -1);
  CHECK(back.segments[1].type == SegmentType::Transfer);
  CHECK(back.segments[1].grasp_id == 4);
  REQUIRE(back.segments[0].waypoints.size() == 2);
  CHECK((back.segments[0].waypoints[1] - transit.waypoints[1])
            .cwiseAbs()
            .maxCoeff() == 0.0);
  CHECK(maxAbsDiff(back.segments[1].object_poses[0].R,
                   carry.object_poses[0].R) == 0.0);

  Json bad = j;
  bad["version"] = 9;
  CHECK_THROWS_WITH_AS(trajectoryFromJson(bad),
                       doctest::Contains("unsupported version"), Error);
  bad = j;
  bad["segments"][0]["objectPoses"].erase(1);
  CHECK_THROWS_WITH_AS(trajectoryFromJson(bad),
                       doctest::Contains("one object pose per waypoint"),
                       Error);
  bad = j;
  bad["segments"][0].erase("waypoints");
  CHECK_THROWS_AS(trajectoryFromJson(bad), Error);
}
