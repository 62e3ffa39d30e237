#include "asmsim/grasp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "asmsim/errors.hpp"
#include "asmsim/geometry.hpp"
#include "asmsim/jsonio.hpp"
#include "asmsim/rng.hpp"

namespace asmsim {

namespace {

constexpr double kTouchSlack = 1e-7;  // allowed capsule-mesh interpenetration

const char* kFrameNames[] = {"f", "s'", "s", "a'", "a", "p'", "p", "g"};

GraspFrame advanceOnTransform(GraspFrame f) {
  switch (f) {
    case GraspFrame::Free:
      return GraspFrame::SurfaceCandidate;
    case GraspFrame::Surface:
      return GraspFrame::AssemblyCandidate;
    case GraspFrame::Assembly:
      return GraspFrame::PreassemblyCandidate;
    case GraspFrame::Preassembly:
      return GraspFrame::World;
    default:  // candidate and world tags re-express in place
      return f;
  }
}

GraspFrame resolveOnFilter(GraspFrame f) {
  switch (f) {
    case GraspFrame::SurfaceCandidate:
      return GraspFrame::Surface;
    case GraspFrame::AssemblyCandidate:
      return GraspFrame::Assembly;
    case GraspFrame::PreassemblyCandidate:
      return GraspFrame::Preassembly;
    default:
      return f;
  }
}

Vec3 anyPerpendicular(const Vec3& u) {
  Vec3 ref = std::abs(u.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  return u.cross(ref).normalized();
}

struct FaceGroup {
  std::vector<int> triangles;
  std::vector<double> cum_area;  // inclusive prefix sums
  double total_area = 0.0;
};

// Greedy grouping of triangles whose normals agree with the group's first
// normal within angle_tol; insertion order makes the grouping deterministic.
std::vector<FaceGroup> groupByNormal(const TriMesh& mesh, double angle_tol) {
  std::vector<FaceGroup> groups;
  std::vector<Vec3> reps;
  double cos_tol = std::cos(angle_tol);
  for (int t = 0; t < int(mesh.triangles.size()); ++t) {
    if (mesh.triangleArea(t) <= 0.0) continue;
    Vec3 n = mesh.triangleNormal(t);
    int found = -1;
    for (int g = 0; g < int(reps.size()); ++g)
      if (reps[g].dot(n) >= cos_tol) {
        found = g;
        break;
      }
    if (found < 0) {
      reps.push_back(n);
      groups.emplace_back();
      found = int(reps.size()) - 1;
    }
    groups[found].triangles.push_back(t);
  }
  for (FaceGroup& g : groups) {
    g.cum_area.reserve(g.triangles.size());
    for (int t : g.triangles) {
      g.total_area += mesh.triangleArea(t);
      g.cum_area.push_back(g.total_area);
    }
  }
  return groups;
}

struct SurfaceDraw {
  int triangle = -1;
  double b0 = 0.0, b1 = 0.0;  // folded barycentric coordinates
};

struct ContactPair {
  Vec3 p0, p1;
  bool ok = false;
};

// Shoots from p0 through the body along -n0 and returns the nearest hit on an
// exit-facing triangle: the opposing wall of the local slab.
std::optional<std::pair<Vec3, Vec3>> opposingContact(const TriMesh& mesh,
                                                     const Vec3& p0,
                                                     const Vec3& n0) {
  Ray ray{p0, -n0};
  double best_t = std::numeric_limits<double>::infinity();
  int best_tri = -1;
  for (int t = 0; t < int(mesh.triangles.size()); ++t) {
    const Triangle& tri = mesh.triangles[t];
    Vec3 n = mesh.triangleNormal(t);
    if (n.dot(ray.dir) <= 1e-9) continue;
    std::optional<double> hit = rayTriangle(ray, mesh.vertices[tri[0]],
                                            mesh.vertices[tri[1]],
                                            mesh.vertices[tri[2]]);
    if (hit && *hit > 1e-7 && *hit < best_t) {
      best_t = *hit;
      best_tri = t;
    }
  }
  if (best_tri < 0) return std::nullopt;
  return std::make_pair(Vec3(ray.origin + best_t * ray.dir),
                        mesh.triangleNormal(best_tri));
}

void checkSampleConfig(const GraspSampleConfig& config) {
  if (config.pairs_per_face <= 0)
    throw Error(ErrorKind::InvalidInput,
                "grasp sampling: pairs per face must be positive");
  if (!(config.friction_angle > 0.0 && config.friction_angle < 1.5707))
    throw Error(ErrorKind::InvalidInput,
                "grasp sampling: friction angle must lie in (0, pi/2)");
  if (config.approach_samples <= 0)
    throw Error(ErrorKind::InvalidInput,
                "grasp sampling: approach sample count must be positive");
}

GraspSet sampleImpl(const TriMesh& mesh, const GripperModel& gripper,
                    const GraspSampleConfig& config, bool parallel) {
  checkSampleConfig(config);
  if (mesh.triangles.empty())
    throw Error(ErrorKind::Geometry, "grasp sampling: empty mesh");

  // Serial RNG phase: all random choices happen here, so the parallel kernels
  // below see a fixed candidate list regardless of thread count.
  std::vector<FaceGroup> groups = groupByNormal(mesh, config.cluster_angle_tol);
  Rng rng(config.seed);
  std::vector<SurfaceDraw> draws;
  draws.reserve(groups.size() * size_t(config.pairs_per_face));
  for (const FaceGroup& g : groups)
    for (int s = 0; s < config.pairs_per_face; ++s) {
      SurfaceDraw d;
      double pick = rng.uniform() * g.total_area;
      size_t at = std::lower_bound(g.cum_area.begin(), g.cum_area.end(), pick) -
                  g.cum_area.begin();
      d.triangle = g.triangles[std::min(at, g.triangles.size() - 1)];
      d.b0 = rng.uniform();
      d.b1 = rng.uniform();
      if (d.b0 + d.b1 > 1.0) {
        d.b0 = 1.0 - d.b0;
        d.b1 = 1.0 - d.b1;
      }
      draws.push_back(d);
    }

  // Parallel kernel 1: opposing-contact search + antipodal and opening tests.
  int n_pairs = int(draws.size());
  std::vector<ContactPair> pairs(n_pairs);
  double cos_friction = std::cos(config.friction_angle);
  auto evalPair = [&](int i) {
    const SurfaceDraw& d = draws[i];
    const Triangle& tri = mesh.triangles[d.triangle];
    Vec3 p0 = (1.0 - d.b0 - d.b1) * mesh.vertices[tri[0]] +
              d.b0 * mesh.vertices[tri[1]] + d.b1 * mesh.vertices[tri[2]];
    Vec3 n0 = mesh.triangleNormal(d.triangle);
    std::optional<std::pair<Vec3, Vec3>> exit = opposingContact(mesh, p0, n0);
    if (!exit) return;
    const auto& [p1, n1] = *exit;
    double opening = (p1 - p0).norm();
    if (opening <= 1e-9 || opening > gripper.max_opening) return;
    Vec3 u = (p1 - p0) / opening;
    // Closing forces +-u must lie inside the friction cones about the inward
    // normals at both contacts.
    if (-u.dot(n0) < cos_friction || u.dot(n1) < cos_friction) return;
    pairs[i] = {p0, p1, true};
  };
#ifdef ASMSIM_HAVE_OPENMP
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 4)
    for (int i = 0; i < n_pairs; ++i) evalPair(i);
  } else {
    for (int i = 0; i < n_pairs; ++i) evalPair(i);
  }
#else
  (void)parallel;
  for (int i = 0; i < n_pairs; ++i) evalPair(i);
#endif

  // Parallel kernel 2: palm rolls about the contact axis, keeping those whose
  // gripper body stays clear of the mesh (fingertips may touch the contacts).
  struct Candidate {
    int pair;
    int roll;
  };
  std::vector<Candidate> cands;
  for (int i = 0; i < n_pairs; ++i)
    if (pairs[i].ok)
      for (int k = 0; k < config.approach_samples; ++k) cands.push_back({i, k});
  int n_cands = int(cands.size());
  std::vector<Mat3> cand_R(n_cands);
  std::vector<char> cand_ok(n_cands, 0);
  auto evalCandidate = [&](int j) {
    const ContactPair& cp = pairs[cands[j].pair];
    double opening = (cp.p1 - cp.p0).norm();
    Vec3 u = (cp.p1 - cp.p0) / opening;
    double angle = 2.0 * M_PI * cands[j].roll / config.approach_samples;
    Vec3 approach = axisAngleRotation(u, angle) * anyPerpendicular(u);
    Mat3 R;
    R.col(0) = u;
    R.col(2) = approach;
    R.col(1) = approach.cross(u);
    Pose palm{0.5 * (cp.p0 + cp.p1), R};
    for (const Capsule& c : gripperCapsules(gripper, palm, opening))
      if (capsuleMeshDistance(c, mesh, Pose::identity()) < -kTouchSlack) return;
    cand_R[j] = R;
    cand_ok[j] = 1;
  };
#ifdef ASMSIM_HAVE_OPENMP
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 8)
    for (int j = 0; j < n_cands; ++j) evalCandidate(j);
  } else {
    for (int j = 0; j < n_cands; ++j) evalCandidate(j);
  }
#else
  for (int j = 0; j < n_cands; ++j) evalCandidate(j);
#endif

  GraspSet out;
  out.frame = GraspFrame::Free;
  for (int j = 0; j < n_cands; ++j)
    if (cand_ok[j]) {
      const ContactPair& cp = pairs[cands[j].pair];
      out.grasps.push_back(
          {cp.p0, cp.p1, cand_R[j], int(out.grasps.size())});
    }
  return out;
}

}  // namespace

const char* graspFrameName(GraspFrame frame) {
  return kFrameNames[static_cast<int>(frame)];
}

GraspFrame graspFrameFromName(const std::string& name) {
  for (int i = 0; i < 8; ++i)
    if (name == kFrameNames[i]) return static_cast<GraspFrame>(i);
  throw Error(ErrorKind::InvalidInput, "unknown grasp frame tag '" + name + "'");
}

double graspOpening(const Grasp& g) { return (g.p1 - g.p0).norm(); }

Pose graspPalmPose(const Grasp& g) { return {0.5 * (g.p0 + g.p1), g.R}; }

void checkGraspSet(const GraspSet& set, const std::string& context) {
  std::unordered_set<int> ids;
  for (const Grasp& g : set.grasps) {
    if (!ids.insert(g.id).second)
      throw Error(ErrorKind::InvalidInput,
                  context + ": duplicate grasp id " + std::to_string(g.id));
    if (!isRotation(g.R, 1e-6))
      throw Error(ErrorKind::InvalidInput,
                  context + ": grasp palm rotation is not in SO(3)");
    double opening = graspOpening(g);
    if (!(opening > 0.0))
      throw Error(ErrorKind::InvalidInput,
                  context + ": grasp opening must be positive");
    Vec3 u = (g.p1 - g.p0) / opening;
    if (std::abs(u.dot(g.R.col(2))) > 1e-6)
      throw Error(ErrorKind::InvalidInput,
                  context +
                      ": grasp approach axis must be perpendicular to the "
                      "contact axis");
  }
}

GraspSet sampleAntipodalGrasps(const TriMesh& mesh, const GripperModel& gripper,
                               const GraspSampleConfig& config) {
  return sampleImpl(mesh, gripper, config, true);
}

GraspSet sampleAntipodalGraspsSerial(const TriMesh& mesh,
                                     const GripperModel& gripper,
                                     const GraspSampleConfig& config) {
  return sampleImpl(mesh, gripper, config, false);
}

GraspSet transformGrasps(const GraspSet& set, const Pose& pose) {
  return transformGrasps(set, pose, advanceOnTransform(set.frame));
}

GraspSet transformGrasps(const GraspSet& set, const Pose& pose,
                         GraspFrame target) {
  if (static_cast<int>(target) < static_cast<int>(set.frame))
    throw Error(ErrorKind::InvalidInput,
                std::string("grasp frame transition ") +
                    graspFrameName(set.frame) + " -> " + graspFrameName(target) +
                    " runs against the pipeline");
  if (!isRotation(pose.R, 1e-6))
    throw Error(ErrorKind::InvalidInput,
                "transformGrasps: pose rotation is not in SO(3)");
  GraspSet out;
  out.frame = target;
  out.grasps.reserve(set.grasps.size());
  for (const Grasp& g : set.grasps)
    out.grasps.push_back(
        {pose.apply(g.p0), pose.apply(g.p1), pose.R * g.R, g.id});
  return out;
}

std::optional<JointConfig> graspIK(const RobotModel& robot, const Grasp& g) {
  return solveIK(robot, graspPalmPose(g));
}

GraspSet ikFilter(const GraspSet& set, const RobotModel& robot) {
  checkGraspSet(set, "ikFilter");
  int n = int(set.grasps.size());
  std::vector<char> keep(n, 0);
#ifdef ASMSIM_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
  for (int i = 0; i < n; ++i)
    keep[i] = graspIK(robot, set.grasps[i]).has_value();
  GraspSet out;
  out.frame = resolveOnFilter(set.frame);
  for (int i = 0; i < n; ++i)
    if (keep[i]) out.grasps.push_back(set.grasps[i]);
  return out;
}

namespace {

std::vector<TriMesh> worldHulls(const std::vector<Obstacle>& obstacles) {
  std::vector<TriMesh> hulls;
  hulls.reserve(obstacles.size());
  for (const Obstacle& o : obstacles) {
    std::vector<Vec3> pts;
    pts.reserve(o.mesh.vertices.size());
    for (const Vec3& v : o.mesh.vertices) pts.push_back(o.pose.apply(v));
    hulls.push_back(convexHull(pts));
  }
  return hulls;
}

double clearanceAgainst(const Grasp& g, const GripperModel& gripper,
                        const std::vector<TriMesh>& hulls,
                        const TableModel& table) {
  double best = std::numeric_limits<double>::infinity();
  Pose palm = graspPalmPose(g);
  for (const Capsule& c : gripperCapsules(gripper, palm, graspOpening(g))) {
    best = std::min(best,
                    std::min(c.a.z(), c.b.z()) - c.radius - table.height);
    for (const TriMesh& hull : hulls)
      best = std::min(best, capsuleMeshDistance(c, hull, Pose::identity()));
  }
  return best;
}

}  // namespace

double graspClearance(const Grasp& g, const GripperModel& gripper,
                      const std::vector<Obstacle>& obstacles,
                      const TableModel& table) {
  return clearanceAgainst(g, gripper, worldHulls(obstacles), table);
}

GraspSet collisionFilter(const GraspSet& set, const GripperModel& gripper,
                         const std::vector<Obstacle>& obstacles,
                         const TableModel& table) {
  checkGraspSet(set, "collisionFilter");
  std::vector<TriMesh> hulls = worldHulls(obstacles);
  int n = int(set.grasps.size());
  std::vector<char> keep(n, 0);
#ifdef ASMSIM_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic, 4)
#endif
  for (int i = 0; i < n; ++i)
    keep[i] = clearanceAgainst(set.grasps[i], gripper, hulls, table) > 0.0;
  GraspSet out;
  out.frame = resolveOnFilter(set.frame);
  for (int i = 0; i < n; ++i)
    if (keep[i]) out.grasps.push_back(set.grasps[i]);
  return out;
}

GraspLabels labelGrasps(const GraspSet& set, const RobotModel& robot,
                        const std::vector<Obstacle>& obstacles,
                        const TableModel& table) {
  checkGraspSet(set, "labelGrasps");
  std::vector<TriMesh> hulls = worldHulls(obstacles);
  int n = int(set.grasps.size());
  std::vector<char> clear(n, 0), reachable(n, 0);
#ifdef ASMSIM_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
  for (int i = 0; i < n; ++i) {
    clear[i] =
        clearanceAgainst(set.grasps[i], robot.gripper, hulls, table) > 0.0;
    if (clear[i]) reachable[i] = graspIK(robot, set.grasps[i]).has_value();
  }
  GraspLabels labels;
  for (int i = 0; i < n; ++i) {
    if (!clear[i])
      labels.red.push_back(set.grasps[i].id);
    else if (reachable[i])
      labels.green.push_back(set.grasps[i].id);
    else
      labels.blue.push_back(set.grasps[i].id);
  }
  return labels;
}

void saveGraspSet(const GraspSet& set, const std::string& path) {
  checkGraspSet(set, "grasp set");
  Json j;
  j["version"] = 1;
  j["frame"] = graspFrameName(set.frame);
  Json grasps = Json::array();
  for (const Grasp& g : set.grasps) {
    Json jg;
    jg["id"] = g.id;
    jg["p0"] = toJson(g.p0);
    jg["p1"] = toJson(g.p1);
    jg["R"] = toJson(g.R);
    grasps.push_back(jg);
  }
  j["grasps"] = grasps;
  writeJsonFile(j, path);
}

GraspSet loadGraspSet(const std::string& path) {
  Json j = readJsonFile(path);
  const std::string context = "grasp set";
  const Json& version = requireKey(j, "version", context);
  if (!version.is_number_integer() || version.get<int>() != 1)
    throw Error(ErrorKind::InvalidInput,
                context + ": unsupported schema version " + version.dump());
  const Json& frame = requireKey(j, "frame", context);
  if (!frame.is_string())
    throw Error(ErrorKind::InvalidInput, context + ".frame must be a string");
  GraspSet set;
  set.frame = graspFrameFromName(frame.get<std::string>());
  const Json& grasps = requireKey(j, "grasps", context);
  if (!grasps.is_array())
    throw Error(ErrorKind::InvalidInput, context + ".grasps must be an array");
  for (size_t i = 0; i < grasps.size(); ++i) {
    std::string gctx = context + ".grasps[" + std::to_string(i) + "]";
    const Json& jg = grasps[i];
    Grasp g;
    const Json& id = requireKey(jg, "id", gctx);
    if (!id.is_number_integer())
      throw Error(ErrorKind::InvalidInput, gctx + ".id must be an integer");
    g.id = id.get<int>();
    g.p0 = vec3FromJson(requireKey(jg, "p0", gctx), gctx + ".p0");
    g.p1 = vec3FromJson(requireKey(jg, "p1", gctx), gctx + ".p1");
    g.R = mat3FromJson(requireKey(jg, "R", gctx), gctx + ".R");
    set.grasps.push_back(g);
  }
  checkGraspSet(set, context);
  return set;
}

}  // namespace asmsim
