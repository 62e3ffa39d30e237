#include "asmsim/cloud.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "asmsim/errors.hpp"
#include "asmsim/rng.hpp"

namespace asmsim {

Vec3 PointCloud::centroid() const {
  Vec3 sum = Vec3::Zero();
  for (const Vec3& p : points) sum += p;
  return points.empty() ? sum : Vec3(sum / double(points.size()));
}

PointCloud PointCloud::transformed(const Pose& pose) const {
  PointCloud out;
  out.points.reserve(points.size());
  for (const Vec3& p : points) out.points.push_back(pose.apply(p));
  out.normals.reserve(normals.size());
  for (const Vec3& n : normals) out.normals.push_back(pose.rotate(n));
  return out;
}

void savePlyCloud(const PointCloud& cloud, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::InvalidInput, "cannot write " + path);
  out.precision(17);
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << cloud.points.size() << "\n";
  out << "property double x\nproperty double y\nproperty double z\n";
  if (cloud.hasNormals())
    out << "property double nx\nproperty double ny\nproperty double nz\n";
  out << "end_header\n";
  for (size_t i = 0; i < cloud.points.size(); ++i) {
    const Vec3& p = cloud.points[i];
    out << p.x() << " " << p.y() << " " << p.z();
    if (cloud.hasNormals()) {
      const Vec3& n = cloud.normals[i];
      out << " " << n.x() << " " << n.y() << " " << n.z();
    }
    out << "\n";
  }
}

PointCloud loadPlyCloud(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidInput, "cannot open " + path);

  std::string line;
  size_t count = 0;
  int property_count = 0;
  bool header_done = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "element") {
      std::string kind;
      ls >> kind >> count;
      if (kind != "vertex")
        throw Error(ErrorKind::InvalidInput, path + ": unsupported element");
    } else if (word == "property") {
      ++property_count;
    } else if (word == "end_header") {
      header_done = true;
      break;
    }
  }
  if (!header_done)
    throw Error(ErrorKind::InvalidInput, path + ": missing PLY header");
  if (property_count != 3 && property_count != 6)
    throw Error(ErrorKind::InvalidInput, path + ": expected xyz or xyz+normal");

  PointCloud cloud;
  cloud.points.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line))
      throw Error(ErrorKind::InvalidInput, path + ": truncated vertex data");
    std::istringstream ls(line);
    Vec3 p, n;
    if (!(ls >> p.x() >> p.y() >> p.z()))
      throw Error(ErrorKind::InvalidInput, path + ": bad vertex line");
    cloud.points.push_back(p);
    if (property_count == 6) {
      if (!(ls >> n.x() >> n.y() >> n.z()))
        throw Error(ErrorKind::InvalidInput, path + ": bad normal");
      cloud.normals.push_back(n);
    }
  }
  return cloud;
}

PointCloud sampleMeshSurface(const TriMesh& mesh, int count) {
  if (mesh.triangles.empty())
    throw Error(ErrorKind::Geometry, "cannot sample an empty mesh");
  double total = mesh.surfaceArea();
  Rng rng(0x9e3779b97f4a7c15ull);  // fixed stream: sampling is part of the model
  PointCloud cloud;
  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    const Vec3& a = mesh.vertices[mesh.triangles[t][0]];
    const Vec3& b = mesh.vertices[mesh.triangles[t][1]];
    const Vec3& c = mesh.vertices[mesh.triangles[t][2]];
    Vec3 n = mesh.triangleNormal(int(t));
    int quota = std::max(
        1, int(std::lround(count * mesh.triangleArea(int(t)) / total)));
    for (int k = 0; k < quota; ++k) {
      double u = rng.uniform();
      double v = rng.uniform();
      if (u + v > 1.0) {  // fold into the triangle
        u = 1.0 - u;
        v = 1.0 - v;
      }
      cloud.points.push_back(a + u * (b - a) + v * (c - a));
      cloud.normals.push_back(n);
    }
  }
  return cloud;
}

KdTree3::KdTree3(std::vector<Vec3> points) : points_(std::move(points)) {
  if (points_.empty()) return;
  std::vector<int> order(points_.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = int(i);
  nodes_.reserve(points_.size());
  root_ = build(order, 0, int(order.size()), 0);
}

int KdTree3::build(std::vector<int>& order, int lo, int hi, int depth) {
  if (lo >= hi) return -1;
  int axis = depth % 3;
  int mid = (lo + hi) / 2;
  std::nth_element(order.begin() + lo, order.begin() + mid,
                   order.begin() + hi, [&](int a, int b) {
                     double va = points_[a][axis], vb = points_[b][axis];
                     return va < vb || (va == vb && a < b);
                   });
  Node node;
  node.point = order[mid];
  node.axis = axis;
  int self = int(nodes_.size());
  nodes_.push_back(node);
  int left = build(order, lo, mid, depth + 1);
  int right = build(order, mid + 1, hi, depth + 1);
  nodes_[self].left = left;
  nodes_[self].right = right;
  return self;
}

int KdTree3::nearest(const Vec3& query, double* dist_out, int exclude) const {
  if (root_ < 0) return -1;
  int best = -1;
  double best_sq = std::numeric_limits<double>::infinity();
  nearestRec(root_, query, exclude, best, best_sq);
  if (dist_out) *dist_out = std::sqrt(best_sq);
  return best;
}

void KdTree3::nearestRec(int node, const Vec3& q, int exclude, int& best,
                         double& best_sq) const {
  if (node < 0) return;
  const Node& n = nodes_[node];
  if (n.point != exclude) {
    double d_sq = (points_[n.point] - q).squaredNorm();
    if (d_sq < best_sq || (d_sq == best_sq && n.point < best)) {
      best_sq = d_sq;
      best = n.point;
    }
  }
  double delta = q[n.axis] - points_[n.point][n.axis];
  int near = delta < 0 ? n.left : n.right;
  int far = delta < 0 ? n.right : n.left;
  nearestRec(near, q, exclude, best, best_sq);
  if (delta * delta <= best_sq) nearestRec(far, q, exclude, best, best_sq);
}

std::vector<int> KdTree3::radiusSearch(const Vec3& query,
                                       double radius) const {
  std::vector<int> out;
  if (root_ >= 0 && radius >= 0) radiusRec(root_, query, radius * radius, out);
  std::sort(out.begin(), out.end());
  return out;
}

void KdTree3::radiusRec(int node, const Vec3& q, double r_sq,
                        std::vector<int>& out) const {
  if (node < 0) return;
  const Node& n = nodes_[node];
  if ((points_[n.point] - q).squaredNorm() <= r_sq) out.push_back(n.point);
  double delta = q[n.axis] - points_[n.point][n.axis];
  int near = delta < 0 ? n.left : n.right;
  int far = delta < 0 ? n.right : n.left;
  radiusRec(near, q, r_sq, out);
  if (delta * delta <= r_sq) radiusRec(far, q, r_sq, out);
}

double medianNeighborSpacing(const PointCloud& cloud) {
  if (cloud.points.size() < 2) return 0.0;
  KdTree3 tree(cloud.points);
  std::vector<double> spacing;
  spacing.reserve(cloud.points.size());
  for (size_t i = 0; i < cloud.points.size(); ++i) {
    double d = 0.0;
    tree.nearest(cloud.points[i], &d, int(i));
    spacing.push_back(d);
  }
  std::nth_element(spacing.begin(), spacing.begin() + spacing.size() / 2,
                   spacing.end());
  return spacing[spacing.size() / 2];
}

}  // namespace asmsim
