#include "asmsim/robot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "asmsim/errors.hpp"
#include "asmsim/jsonio.hpp"

namespace asmsim {

namespace {

double fract(double x) { return x - std::floor(x); }

void checkRobot(const RobotModel& robot) {
  if (!isRotation(robot.base.R, 1e-6))
    throw Error(ErrorKind::InvalidInput, "robot base rotation is not in SO(3)");
  for (int i = 0; i < 6; ++i) {
    const JointSpec& j = robot.joints[i];
    if (std::abs(j.axis.norm() - 1.0) > 1e-6)
      throw Error(ErrorKind::InvalidInput, "robot joint axis must be unit length");
    if (!(j.lower < j.upper))
      throw Error(ErrorKind::InvalidInput, "robot joint limits must satisfy lower < upper");
  }
  for (const RobotModel::LinkCapsule& link : robot.links) {
    if (link.joint < -1 || link.joint > 5)
      throw Error(ErrorKind::InvalidInput, "robot link capsule joint index out of range");
    if (!(link.capsule.radius > 0.0))
      throw Error(ErrorKind::InvalidInput, "robot capsule radius must be positive");
  }
  const GripperModel& g = robot.gripper;
  if (!(g.max_opening > 0.0 && g.finger_length > 0.0 && g.finger_radius > 0.0 &&
        g.palm_radius > 0.0))
    throw Error(ErrorKind::InvalidInput, "gripper dimensions must be positive");
}

JointConfig clampToLimits(const RobotModel& robot, JointConfig q) {
  for (int i = 0; i < 6; ++i)
    q[i] = std::clamp(q[i], robot.joints[i].lower, robot.joints[i].upper);
  return q;
}

}  // namespace

RobotModel defaultRobot() {
  RobotModel r;
  auto joint = [](const Vec3& axis, const Vec3& offset, double lim) {
    return JointSpec{axis, offset, -lim, lim};
  };
  r.joints[0] = joint(Vec3::UnitZ(), {0, 0, 0.10}, 2.967);  // base yaw
  r.joints[1] = joint(Vec3::UnitY(), {0, 0, 0.05}, 2.094);  // shoulder
  r.joints[2] = joint(Vec3::UnitY(), {0, 0, 0.30}, 2.618);  // elbow
  r.joints[3] = joint(Vec3::UnitZ(), {0, 0, 0.25}, 2.967);  // forearm roll
  r.joints[4] = joint(Vec3::UnitY(), {0, 0, 0.08}, 2.094);  // wrist pitch
  r.joints[5] = joint(Vec3::UnitZ(), {0, 0, 0.06}, 2.967);  // wrist roll
  r.tool_offset = Vec3(0, 0, 0.08);
  auto link = [](int joint_index, const Vec3& b, double radius) {
    return RobotModel::LinkCapsule{joint_index, {Vec3::Zero(), b, radius}};
  };
  r.links = {
      link(-1, {0, 0, 0.10}, 0.060),  // base column
      link(1, {0, 0, 0.30}, 0.050),   // upper arm
      link(2, {0, 0, 0.25}, 0.045),   // forearm
      link(3, {0, 0, 0.08}, 0.040),
      link(4, {0, 0, 0.06}, 0.035),
      link(5, {0, 0, 0.05}, 0.030),   // wrist, stops short of the palm
  };
  return r;
}

std::array<Pose, 7> jointFrames(const RobotModel& robot, const JointConfig& q) {
  std::array<Pose, 7> frames;
  Pose t = robot.base;
  for (int i = 0; i < 6; ++i) {
    const JointSpec& j = robot.joints[i];
    t = t * Pose{j.offset, axisAngleRotation(j.axis, q[i])};
    frames[i] = t;
  }
  frames[6] = t * Pose::translation(robot.tool_offset);
  return frames;
}

Pose forwardKinematics(const RobotModel& robot, const JointConfig& q) {
  return jointFrames(robot, q)[6];
}

std::vector<Capsule> armCapsules(const RobotModel& robot,
                                 const JointConfig& q) {
  std::array<Pose, 7> frames = jointFrames(robot, q);
  std::vector<Capsule> out;
  out.reserve(robot.links.size());
  for (const RobotModel::LinkCapsule& link : robot.links) {
    const Pose& f = link.joint < 0 ? robot.base : frames[link.joint];
    out.push_back({f.apply(link.capsule.a), f.apply(link.capsule.b),
                   link.capsule.radius});
  }
  return out;
}

std::vector<Capsule> gripperCapsules(const GripperModel& gripper,
                                     const Pose& palm, double opening) {
  // Finger axes sit one finger radius outside the jaw faces so the capsule
  // surface is flush with the contact plane at x = +-opening/2.
  double x = 0.5 * opening + gripper.finger_radius;
  double len = gripper.finger_length;
  std::vector<Capsule> out;
  for (double side : {-1.0, 1.0})
    out.push_back({palm.apply({side * x, 0, -len}),
                   palm.apply({side * x, 0, 0.0}), gripper.finger_radius});
  double bar_z = -(len + gripper.palm_radius + gripper.finger_radius);
  double bar_x = x + gripper.finger_radius;
  out.push_back({palm.apply({-bar_x, 0, bar_z}), palm.apply({bar_x, 0, bar_z}),
                 gripper.palm_radius});
  return out;
}

std::vector<JointConfig> ikDefaultSeeds(const RobotModel& robot) {
  // Two bent elbow-down/elbow-up postures (a straight arm is singular), then
  // a low-discrepancy spread over the limit box.
  static const double kStride[6] = {0.6180339887, 0.4142135624, 0.7320508076,
                                    0.2360679775, 0.6457513111, 0.3166247904};
  std::vector<JointConfig> seeds;
  JointConfig bent;
  bent << 0.0, 0.7, 1.2, 0.0, 0.7, 0.0;
  seeds.push_back(clampToLimits(robot, bent));
  bent << 0.0, 1.2, -1.0, 0.0, -0.8, 0.0;
  seeds.push_back(clampToLimits(robot, bent));
  for (int k = 1; k <= 6; ++k) {
    JointConfig q;
    for (int i = 0; i < 6; ++i) {
      double w = fract(0.5 + k * kStride[i]);
      const JointSpec& j = robot.joints[i];
      q[i] = j.lower + w * (j.upper - j.lower);
    }
    seeds.push_back(q);
  }
  return seeds;
}

std::optional<JointConfig> solveIK(const RobotModel& robot, const Pose& target,
                                   const std::vector<JointConfig>& seeds,
                                   const IkConfig& config) {
  checkRobot(robot);
  if (!isRotation(target.R, 1e-6))
    throw Error(ErrorKind::InvalidInput, "IK target rotation is not in SO(3)");
  if (!target.p.allFinite())
    throw Error(ErrorKind::InvalidInput, "IK target position is not finite");
  const std::vector<JointConfig>& starts =
      seeds.empty() ? ikDefaultSeeds(robot) : seeds;
  auto poseError = [&](const Pose& tool) {
    Eigen::Matrix<double, 6, 1> e;
    e.head<3>() = target.p - tool.p;
    e.tail<3>() = rotationLog(target.R * tool.R.transpose());
    return e;
  };
  auto converged = [&](const Eigen::Matrix<double, 6, 1>& e) {
    return e.head<3>().norm() < config.position_tol &&
           e.tail<3>().norm() < config.orientation_tol;
  };
  for (const JointConfig& seed : starts) {
    JointConfig q = clampToLimits(robot, seed);
    std::array<Pose, 7> frames = jointFrames(robot, q);
    Eigen::Matrix<double, 6, 1> e = poseError(frames[6]);
    double lambda = config.damping;
    int restarts = 0;
    for (int iter = 0; iter < config.max_iterations; ++iter) {
      if (converged(e)) return q;
      // Geometric Jacobian: column i is the twist of the palm induced by
      // joint i, with axes and origins taken in world coordinates.
      const Pose& tool = frames[6];
      Eigen::Matrix<double, 6, 6> jac;
      for (int i = 0; i < 6; ++i) {
        Vec3 axis = frames[i].R * robot.joints[i].axis;
        jac.block<3, 1>(0, i) = axis.cross(tool.p - frames[i].p);
        jac.block<3, 1>(3, i) = axis;
      }
      Eigen::Matrix<double, 6, 6> jtj = jac.transpose() * jac;
      jtj.diagonal().array() += lambda * lambda;
      Eigen::LDLT<Eigen::Matrix<double, 6, 6>> solver(jtj);
      JointConfig dq = solver.solve(jac.transpose() * e);
      // Penalty pushing off the outer 10% of each joint range, applied in the
      // step's nullspace so it cannot fight convergence toward the target.
      JointConfig nudge = JointConfig::Zero();
      for (int i = 0; i < 6; ++i) {
        const JointSpec& j = robot.joints[i];
        double margin = 0.1 * (j.upper - j.lower);
        if (q[i] > j.upper - margin)
          nudge[i] = -0.1 * (q[i] - (j.upper - margin)) / margin;
        else if (q[i] < j.lower + margin)
          nudge[i] = 0.1 * ((j.lower + margin) - q[i]) / margin;
      }
      dq += nudge - solver.solve(jtj * nudge - lambda * lambda * nudge);
      double step = dq.cwiseAbs().maxCoeff();
      if (step > 0.5) dq *= 0.5 / step;
      JointConfig trial = clampToLimits(robot, q + dq);
      std::array<Pose, 7> trial_frames = jointFrames(robot, trial);
      Eigen::Matrix<double, 6, 1> trial_e = poseError(trial_frames[6]);
      if (trial_e.norm() < e.norm()) {
        q = trial;
        frames = trial_frames;
        e = trial_e;
        lambda = std::max(0.5 * lambda, 1e-4);
      } else {
        lambda *= 4.0;  // rejected: damp harder and retry
        if (lambda > 1e3) {
          // Local minimum. Teleport to a fresh low-discrepancy configuration
          // and spend the rest of this seed's iteration budget from there.
          static const double kHop[6] = {0.7548776662, 0.5698402910,
                                         0.4301597090, 0.8812714616,
                                         0.3247179572, 0.1673039783};
          ++restarts;
          for (int i = 0; i < 6; ++i) {
            const JointSpec& j = robot.joints[i];
            double w = fract(seed[i] + restarts * kHop[i]);
            q[i] = j.lower + w * (j.upper - j.lower);
          }
          frames = jointFrames(robot, q);
          e = poseError(frames[6]);
          lambda = config.damping;
        }
      }
    }
    if (converged(e)) return q;
  }
  return std::nullopt;
}

namespace {

double getNumber(const Json& j, const std::string& key,
                 const std::string& context) {
  const Json& v = requireKey(j, key, context);
  if (!v.is_number())
    throw Error(ErrorKind::InvalidInput, context + "." + key + " must be a number");
  return v.get<double>();
}

Json capsuleToJson(const Capsule& c) {
  Json j;
  j["a"] = toJson(c.a);
  j["b"] = toJson(c.b);
  j["radius"] = c.radius;
  return j;
}

Capsule capsuleFromJson(const Json& j, const std::string& context) {
  Capsule c;
  c.a = vec3FromJson(requireKey(j, "a", context), context + ".a");
  c.b = vec3FromJson(requireKey(j, "b", context), context + ".b");
  c.radius = getNumber(j, "radius", context);
  return c;
}

}  // namespace

void saveRobotModel(const RobotModel& robot, const std::string& path) {
  checkRobot(robot);
  Json j;
  j["version"] = 1;
  j["base"] = toJson(robot.base);
  Json joints = Json::array();
  for (const JointSpec& spec : robot.joints) {
    Json jj;
    jj["axis"] = toJson(spec.axis);
    jj["offset"] = toJson(spec.offset);
    jj["lower"] = spec.lower;
    jj["upper"] = spec.upper;
    joints.push_back(jj);
  }
  j["joints"] = joints;
  j["tool"] = toJson(robot.tool_offset);
  Json links = Json::array();
  for (const RobotModel::LinkCapsule& link : robot.links) {
    Json jl = capsuleToJson(link.capsule);
    jl["joint"] = link.joint;
    links.push_back(jl);
  }
  j["links"] = links;
  Json g;
  g["maxOpening"] = robot.gripper.max_opening;
  g["fingerLength"] = robot.gripper.finger_length;
  g["fingerRadius"] = robot.gripper.finger_radius;
  g["palmRadius"] = robot.gripper.palm_radius;
  j["gripper"] = g;
  writeJsonFile(j, path);
}

RobotModel loadRobotModel(const std::string& path) {
  Json j = readJsonFile(path);
  const std::string context = "robot model";
  const Json& version = requireKey(j, "version", context);
  if (!version.is_number_integer() || version.get<int>() != 1)
    throw Error(ErrorKind::InvalidInput,
                context + ": unsupported schema version " + version.dump());
  RobotModel robot;
  robot.base = poseFromJson(requireKey(j, "base", context), context + ".base");
  const Json& joints = requireKey(j, "joints", context);
  if (!joints.is_array() || joints.size() != 6)
    throw Error(ErrorKind::InvalidInput,
                context + ".joints must be an array of 6 joints");
  for (int i = 0; i < 6; ++i) {
    const Json& jj = joints[i];
    std::string jctx = context + ".joints[" + std::to_string(i) + "]";
    JointSpec& spec = robot.joints[i];
    spec.axis = vec3FromJson(requireKey(jj, "axis", jctx), jctx + ".axis");
    spec.offset = vec3FromJson(requireKey(jj, "offset", jctx), jctx + ".offset");
    spec.lower = getNumber(jj, "lower", jctx);
    spec.upper = getNumber(jj, "upper", jctx);
  }
  robot.tool_offset = vec3FromJson(requireKey(j, "tool", context), context + ".tool");
  robot.links.clear();
  const Json& links = requireKey(j, "links", context);
  if (!links.is_array())
    throw Error(ErrorKind::InvalidInput, context + ".links must be an array");
  for (size_t i = 0; i < links.size(); ++i) {
    std::string lctx = context + ".links[" + std::to_string(i) + "]";
    RobotModel::LinkCapsule link;
    link.capsule = capsuleFromJson(links[i], lctx);
    const Json& joint = requireKey(links[i], "joint", lctx);
    if (!joint.is_number_integer())
      throw Error(ErrorKind::InvalidInput, lctx + ".joint must be an integer");
    link.joint = joint.get<int>();
    robot.links.push_back(link);
  }
  const Json& g = requireKey(j, "gripper", context);
  const std::string gctx = context + ".gripper";
  robot.gripper.max_opening = getNumber(g, "maxOpening", gctx);
  robot.gripper.finger_length = getNumber(g, "fingerLength", gctx);
  robot.gripper.finger_radius = getNumber(g, "fingerRadius", gctx);
  robot.gripper.palm_radius = getNumber(g, "palmRadius", gctx);
  checkRobot(robot);
  return robot;
}

double capsuleMeshDistance(const Capsule& capsule, const TriMesh& mesh,
                           const Pose& mesh_pose) {
  double best = std::numeric_limits<double>::infinity();
  for (const Triangle& tri : mesh.triangles) {
    double d = segTriangleDist(capsule.a, capsule.b,
                               mesh_pose.apply(mesh.vertices[tri[0]]),
                               mesh_pose.apply(mesh.vertices[tri[1]]),
                               mesh_pose.apply(mesh.vertices[tri[2]]));
    best = std::min(best, d);
  }
  return best - capsule.radius;
}

double capsuleCapsuleDistance(const Capsule& a, const Capsule& b) {
  return segSegDist(a.a, a.b, b.a, b.b) - a.radius - b.radius;
}

}  // namespace asmsim
