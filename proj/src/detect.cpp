#include "asmsim/detect.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <queue>
#include <unordered_map>

#include <Eigen/Dense>

#include "asmsim/errors.hpp"
#include "asmsim/jsonio.hpp"
#include "asmsim/rng.hpp"

namespace asmsim {

std::vector<ViewTemplate> buildTemplateLibrary(
    const TriMesh& mesh, const TemplateLibraryConfig& config) {
  if (mesh.triangles.empty())
    throw Error(ErrorKind::Geometry, "template library of an empty mesh");

  Vec3 center = mesh.boundsCenter();
  double distance = config.distance_factor * mesh.boundingRadius();
  std::vector<Pose> viewpoints = sphereViewpoints();

  std::vector<ViewTemplate> library(viewpoints.size());
  for (size_t i = 0; i < viewpoints.size(); ++i) {
    Pose camera = lookAt(center + viewpoints[i].p * distance, center);
    RenderResult render = renderCloud(mesh, camera, config.intrinsics);
    if (render.out_of_view)
      throw Error(ErrorKind::Geometry,
                  "template view " + std::to_string(i) + " sees nothing");
    library[i].viewpoint = camera;
    library[i].cloud = std::move(render.cloud);
    library[i].descriptor = computeDescriptor(library[i].cloud);
  }
  return library;
}

namespace {

Json histToJson(const double* h, int n) {
  Json out = Json::array();
  for (int i = 0; i < n; ++i) out.push_back(h[i]);
  return out;
}

void histFromJson(const Json& j, double* h, int n, const std::string& ctx) {
  if (!j.is_array() || int(j.size()) != n)
    throw Error(ErrorKind::InvalidInput, ctx + ": bad histogram length");
  for (int i = 0; i < n; ++i) h[i] = j[i].get<double>();
}

}  // namespace

void saveTemplateLibrary(const std::vector<ViewTemplate>& library,
                         const std::string& dir) {
  std::filesystem::create_directories(dir);
  Json index;
  index["version"] = 1;
  Json views = Json::array();
  for (size_t i = 0; i < library.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "view_%03zu.ply", i);
    savePlyCloud(library[i].cloud, dir + "/" + name);
    Json v;
    v["viewpoint"] = toJson(library[i].viewpoint);
    v["cloud"] = name;
    const Descriptor& d = library[i].descriptor;
    v["normal_angle"] = histToJson(d.normal_angle.data(), Descriptor::kNormalBins);
    v["centroid_dist"] = histToJson(d.centroid_dist.data(), Descriptor::kDistBins);
    v["roll"] = histToJson(d.roll.data(), Descriptor::kRollBins);
    views.push_back(std::move(v));
  }
  index["views"] = std::move(views);
  writeJsonFile(index, dir + "/index.json");
}

std::vector<ViewTemplate> loadTemplateLibrary(const std::string& dir) {
  Json index = readJsonFile(dir + "/index.json");
  if (requireKey(index, "version", dir).get<int>() != 1)
    throw Error(ErrorKind::InvalidInput, dir + ": unsupported library version");
  const Json& views = requireKey(index, "views", dir);

  std::vector<ViewTemplate> library;
  for (size_t i = 0; i < views.size(); ++i) {
    const Json& v = views[i];
    std::string ctx = dir + " view " + std::to_string(i);
    ViewTemplate t;
    t.viewpoint = poseFromJson(requireKey(v, "viewpoint", ctx), ctx);
    t.cloud = loadPlyCloud(dir + "/" +
                           requireKey(v, "cloud", ctx).get<std::string>());
    if (t.cloud.points.empty())
      throw Error(ErrorKind::InvalidInput, ctx + ": empty template cloud");
    histFromJson(requireKey(v, "normal_angle", ctx), t.descriptor.normal_angle.data(),
                 Descriptor::kNormalBins, ctx);
    histFromJson(requireKey(v, "centroid_dist", ctx),
                 t.descriptor.centroid_dist.data(), Descriptor::kDistBins, ctx);
    histFromJson(requireKey(v, "roll", ctx), t.descriptor.roll.data(),
                 Descriptor::kRollBins, ctx);
    library.push_back(std::move(t));
  }
  return library;
}

std::vector<TemplateMatch> matchTemplates(
    const Descriptor& query, const std::vector<ViewTemplate>& library, int k) {
  if (library.empty())
    throw Error(ErrorKind::InvalidInput, "matchTemplates: empty library");

  std::vector<TemplateMatch> all(library.size());
  for (size_t i = 0; i < library.size(); ++i) {
    all[i].index = int(i);
    all[i].distance = descriptorDistance(query, library[i].descriptor);
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const TemplateMatch& a, const TemplateMatch& b) {
                     return a.distance < b.distance;
                   });
  all.resize(std::min<size_t>(all.size(), size_t(std::max(0, k))));
  for (TemplateMatch& m : all)
    m.roll = estimateRoll(query, library[m.index].descriptor);
  return all;
}

PlaneExtraction extractPlane(const PointCloud& cloud, double dist_tol,
                             int iterations, uint64_t seed,
                             double min_inlier_ratio) {
  const auto& pts = cloud.points;
  if (pts.size() < 3)
    throw Error(ErrorKind::InvalidInput, "extractPlane: needs >= 3 points");

  Rng rng(seed);
  PlaneModel best;
  size_t best_count = 0;
  int n = int(pts.size());
  for (int iter = 0; iter < iterations; ++iter) {
    int i = rng.uniformInt(0, n - 1);
    int j = rng.uniformInt(0, n - 1);
    int k = rng.uniformInt(0, n - 1);
    if (i == j || j == k || i == k) continue;
    Vec3 normal = (pts[j] - pts[i]).cross(pts[k] - pts[i]);
    if (normal.norm() < 1e-12) continue;
    normal.normalize();
    double offset = -normal.dot(pts[i]);
    size_t count = 0;
    for (const Vec3& p : pts)
      if (std::abs(normal.dot(p) + offset) <= dist_tol) ++count;
    if (count > best_count) {
      best_count = count;
      best.normal = normal;
      best.offset = offset;
    }
  }
  if (best_count < size_t(min_inlier_ratio * double(n)) || best_count < 3)
    throw Error(ErrorKind::Detection, "extractPlane: no dominant plane");

  // Least-squares refit over the consensus set, then a final inlier pass.
  for (int refit = 0; refit < 2; ++refit) {
    Vec3 centroid = Vec3::Zero();
    size_t count = 0;
    for (const Vec3& p : pts)
      if (best.distance(p) <= dist_tol) {
        centroid += p;
        ++count;
      }
    centroid /= double(count);
    Mat3 cov = Mat3::Zero();
    for (const Vec3& p : pts)
      if (best.distance(p) <= dist_tol)
        cov += (p - centroid) * (p - centroid).transpose();
    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    best.normal = eig.eigenvectors().col(0).normalized();
    best.offset = -best.normal.dot(centroid);
  }

  // Canonical orientation so identical planes serialize identically.
  if (best.normal.z() < 0 ||
      (best.normal.z() == 0 &&
       (best.normal.y() < 0 || (best.normal.y() == 0 && best.normal.x() < 0)))) {
    best.normal = -best.normal;
    best.offset = -best.offset;
  }

  PlaneExtraction out;
  out.plane = best;
  for (int i = 0; i < n; ++i)
    if (best.distance(pts[i]) <= dist_tol) out.inliers.push_back(i);
  if (out.inliers.size() < size_t(min_inlier_ratio * double(n)))
    throw Error(ErrorKind::Detection, "extractPlane: no dominant plane");
  return out;
}

std::vector<PointCloud> segmentClusters(const PointCloud& cloud,
                                        double link_distance, int min_size) {
  if (link_distance <= 0)
    throw Error(ErrorKind::InvalidInput, "segmentClusters: bad link distance");
  const auto& pts = cloud.points;
  int n = int(pts.size());

  // Uniform grid with cell = link distance: neighbors live in the 27 cells.
  auto key = [&](const Vec3& p) {
    auto cell = [&](double x) { return int64_t(std::floor(x / link_distance)); };
    return std::array<int64_t, 3>{cell(p.x()), cell(p.y()), cell(p.z())};
  };
  std::unordered_map<int64_t, std::vector<int>> grid;
  auto hash = [](const std::array<int64_t, 3>& c) {
    int64_t h = c[0] * 73856093 ^ c[1] * 19349669 ^ c[2] * 83492791;
    return h;
  };
  for (int i = 0; i < n; ++i) grid[hash(key(pts[i]))].push_back(i);

  std::vector<int> component(n, -1);
  std::vector<std::vector<int>> groups;
  for (int seed = 0; seed < n; ++seed) {
    if (component[seed] >= 0) continue;
    int id = int(groups.size());
    groups.emplace_back();
    std::queue<int> frontier;
    frontier.push(seed);
    component[seed] = id;
    while (!frontier.empty()) {
      int i = frontier.front();
      frontier.pop();
      groups[id].push_back(i);
      auto base = key(pts[i]);
      for (int dx = -1; dx <= 1; ++dx)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dz = -1; dz <= 1; ++dz) {
            auto it = grid.find(hash({base[0] + dx, base[1] + dy, base[2] + dz}));
            if (it == grid.end()) continue;
            for (int j : it->second) {
              if (component[j] >= 0) continue;
              if ((pts[i] - pts[j]).norm() <= link_distance) {
                component[j] = id;
                frontier.push(j);
              }
            }
          }
    }
  }

  std::vector<int> order;
  for (size_t g = 0; g < groups.size(); ++g) {
    std::sort(groups[g].begin(), groups[g].end());
    if (int(groups[g].size()) >= min_size) order.push_back(int(g));
  }
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (groups[a].size() != groups[b].size())
      return groups[a].size() > groups[b].size();
    return groups[a].front() < groups[b].front();
  });

  std::vector<PointCloud> out;
  for (int g : order) {
    PointCloud c;
    for (int i : groups[g]) {
      c.points.push_back(pts[i]);
      if (cloud.hasNormals()) c.normals.push_back(cloud.normals[i]);
    }
    out.push_back(std::move(c));
  }
  return out;
}

IcpResult icpRefine(const PointCloud& model, const PointCloud& scene,
                    const Pose& init, const IcpConfig& config) {
  if (model.points.empty() || scene.points.empty())
    throw Error(ErrorKind::InvalidInput, "icpRefine: empty cloud");

  KdTree3 tree(model.points);
  double cap = std::max(config.cap_floor,
                        config.cap_factor * medianNeighborSpacing(scene));

  IcpResult result;
  result.pose = init;
  double prev_rmse = std::numeric_limits<double>::infinity();
  int grow_streak = 0;

  for (int iter = 0; iter < config.max_iterations; ++iter) {
    Pose inv = result.pose.inverse();
    std::vector<int> model_idx;
    std::vector<int> scene_idx;
    model_idx.reserve(scene.points.size());
    scene_idx.reserve(scene.points.size());
    for (size_t i = 0; i < scene.points.size(); ++i) {
      double dist = 0.0;
      int j = tree.nearest(inv.apply(scene.points[i]), &dist);
      if (dist <= cap) {
        model_idx.push_back(j);
        scene_idx.push_back(int(i));
      }
    }
    if (model_idx.size() < 3) {
      result.diverged = true;
      break;
    }

    Eigen::Matrix3Xd src(3, model_idx.size()), dst(3, model_idx.size());
    for (size_t k = 0; k < model_idx.size(); ++k) {
      src.col(k) = model.points[model_idx[k]];
      dst.col(k) = scene.points[scene_idx[k]];
    }
    Eigen::Matrix4d t = Eigen::umeyama(src, dst, false);
    Pose updated{t.block<3, 1>(0, 3), nearestRotation(t.block<3, 3>(0, 0))};

    double sq_sum = 0.0;
    for (size_t k = 0; k < model_idx.size(); ++k)
      sq_sum += (updated.apply(src.col(k)) - Vec3(dst.col(k))).squaredNorm();
    double rmse = std::sqrt(sq_sum / double(model_idx.size()));

    result.pose = updated;
    result.rmse = rmse;
    result.rmse_history.push_back(rmse);

    if (rmse > prev_rmse) {
      if (++grow_streak >= 5) {
        result.diverged = true;
        break;
      }
    } else {
      grow_streak = 0;
    }
    if (prev_rmse - rmse >= 0 && prev_rmse - rmse < config.convergence_tol)
      break;
    prev_rmse = rmse;
  }

  Pose inv = result.pose.inverse();
  result.outlier_count = 0;
  for (const Vec3& s : scene.points) {
    double dist = 0.0;
    tree.nearest(inv.apply(s), &dist);
    if (dist > cap) ++result.outlier_count;
  }
  return result;
}

DetectionResult detectObject(const PointCloud& scene, const TriMesh& mesh,
                             const std::vector<ViewTemplate>& library,
                             const DetectConfig& config) {
  if (!scene.hasNormals())
    throw Error(ErrorKind::InvalidInput, "detectObject: scene needs normals");
  if (library.empty())
    throw Error(ErrorKind::InvalidInput, "detectObject: empty library");

  PlaneExtraction plane =
      extractPlane(scene, config.plane_tol, config.plane_iterations,
                   deriveSeed(config.seed, "plane"),
                   config.plane_min_inlier_ratio);

  PointCloud remaining;
  size_t next_inlier = 0;
  for (size_t i = 0; i < scene.points.size(); ++i) {
    if (next_inlier < plane.inliers.size() &&
        plane.inliers[next_inlier] == int(i)) {
      ++next_inlier;
      continue;
    }
    remaining.points.push_back(scene.points[i]);
    remaining.normals.push_back(scene.normals[i]);
  }
  if (remaining.points.empty())
    throw Error(ErrorKind::Detection, "no points above the support plane");

  std::vector<PointCloud> segments = segmentClusters(
      remaining, config.link_distance, config.min_cluster_size);
  if (segments.empty())
    throw Error(ErrorKind::Detection, "no segments above the support plane");

  PointCloud model = sampleMeshSurface(mesh, config.model_samples);

  struct Candidate {
    bool valid = false;
    int outliers = 0;
    double rmse = 0.0;
    int segment = -1;
    int template_index = -1;
    Pose pose;
  };

  // One task per (segment, template candidate); slot-indexed results keep
  // the outcome independent of evaluation order.
  struct Task {
    int segment;
    TemplateMatch match;
  };
  // Library views were rendered at a fixed camera range; judge each segment
  // from a virtual viewpoint at that same range along its own line of sight,
  // so perspective differences do not distort the histogram match.
  double template_range =
      (library.front().viewpoint.p - mesh.boundsCenter()).norm();

  std::vector<Task> tasks;
  for (size_t s = 0; s < segments.size(); ++s) {
    Vec3 center = segments[s].centroid();
    Vec3 viewpoint = Vec3::Zero();
    if (center.norm() > 1e-9)
      viewpoint = center - template_range * center.normalized();
    Descriptor d = computeDescriptor(segments[s], viewpoint);
    for (const TemplateMatch& m : matchTemplates(d, library, config.top_k))
      tasks.push_back({int(s), m});
  }

  std::vector<Candidate> candidates(tasks.size());
#ifdef ASMSIM_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
  for (size_t t = 0; t < tasks.size(); ++t) {
    const Task& task = tasks[t];
    const ViewTemplate& tmpl = library[task.match.index];
    const PointCloud& segment = segments[task.segment];

    Pose init;
    init.R = rotZ(task.match.roll) * tmpl.viewpoint.R.transpose();
    Vec3 model_centroid = tmpl.viewpoint.apply(tmpl.cloud.centroid());
    init.p = segment.centroid() - init.R * model_centroid;

    IcpResult icp = icpRefine(model, segment, init, config.icp);
    if (icp.diverged) continue;
    Candidate& c = candidates[t];
    c.valid = true;
    c.outliers = icp.outlier_count;
    c.rmse = icp.rmse;
    c.segment = task.segment;
    c.template_index = task.match.index;
    c.pose = icp.pose;
  }

  const Candidate* best = nullptr;
  for (const Candidate& c : candidates) {
    if (!c.valid) continue;
    if (!best || c.outliers < best->outliers ||
        (c.outliers == best->outliers && c.rmse < best->rmse))
      best = &c;
  }
  if (!best)
    throw Error(ErrorKind::Detection, "all detection candidates diverged");

  DetectionResult out;
  out.raw_pose = best->pose;
  out.icp_rmse = best->rmse;
  out.outlier_count = best->outliers;
  out.matched_template = best->template_index;
  out.segment_index = best->segment;
  return out;
}

}  // namespace asmsim
