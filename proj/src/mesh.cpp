#include "asmsim/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>

#include "asmsim/errors.hpp"

namespace asmsim {

Vec3 TriMesh::triangleNormal(int t) const {
  const Triangle& f = triangles[t];
  Vec3 n = (vertices[f[1]] - vertices[f[0]])
               .cross(vertices[f[2]] - vertices[f[0]]);
  double len = n.norm();
  return len > 1e-30 ? Vec3(n / len) : Vec3::UnitZ();
}

double TriMesh::triangleArea(int t) const {
  const Triangle& f = triangles[t];
  return 0.5 * (vertices[f[1]] - vertices[f[0]])
                   .cross(vertices[f[2]] - vertices[f[0]])
                   .norm();
}

double TriMesh::surfaceArea() const {
  double a = 0.0;
  for (int t = 0; t < static_cast<int>(triangles.size()); ++t)
    a += triangleArea(t);
  return a;
}

std::pair<Vec3, Vec3> TriMesh::bounds() const {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const Vec3& v : vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  return {lo, hi};
}

Vec3 TriMesh::boundsCenter() const {
  auto [lo, hi] = bounds();
  return 0.5 * (lo + hi);
}

double TriMesh::boundingRadius() const {
  Vec3 c = boundsCenter();
  double r = 0.0;
  for (const Vec3& v : vertices) r = std::max(r, (v - c).norm());
  return r;
}

TriMesh TriMesh::transformed(const Pose& pose) const {
  TriMesh out = *this;
  for (Vec3& v : out.vertices) v = pose.apply(v);
  return out;
}

TriMesh loadObj(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorKind::InvalidInput, "cannot open mesh file: " + path);

  TriMesh mesh;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& msg) -> Error {
    return Error(ErrorKind::InvalidInput,
                 path + ":" + std::to_string(line_no) + ": " + msg);
  };

  std::vector<Triangle> raw_faces;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      Vec3 v;
      if (!(ls >> v.x() >> v.y() >> v.z())) throw fail("malformed vertex");
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ls >> tok) {
        size_t slash = tok.find('/');
        if (slash != std::string::npos) tok = tok.substr(0, slash);
        int i = 0;
        try {
          i = std::stoi(tok);
        } catch (const std::exception&) {
          throw fail("malformed face index '" + tok + "'");
        }
        if (i < 0) i = static_cast<int>(mesh.vertices.size()) + i + 1;
        if (i < 1 || i > static_cast<int>(mesh.vertices.size()))
          throw fail("face index out of range");
        idx.push_back(i - 1);
      }
      if (idx.size() < 3) throw fail("face with fewer than 3 vertices");
      for (size_t k = 1; k + 1 < idx.size(); ++k)
        raw_faces.push_back({idx[0], idx[static_cast<int>(k)],
                             idx[static_cast<int>(k) + 1]});
    }
    // other record types (vn, vt, comments, ...) are ignored
  }

  if (mesh.vertices.empty() || raw_faces.empty())
    throw Error(ErrorKind::InvalidInput, path + ": empty mesh");

  for (const Triangle& f : raw_faces) {
    double area = 0.5 * (mesh.vertices[f[1]] - mesh.vertices[f[0]])
                            .cross(mesh.vertices[f[2]] - mesh.vertices[f[0]])
                            .norm();
    if (area <= 1e-12) {
      ++mesh.dropped_degenerate;
      continue;
    }
    mesh.triangles.push_back(f);
  }
  if (mesh.triangles.empty())
    throw Error(ErrorKind::InvalidInput,
                path + ": all faces degenerate");
  mesh.watertight = checkWatertight(mesh);
  return mesh;
}

void saveObj(const TriMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out)
    throw Error(ErrorKind::InvalidInput, "cannot write mesh file: " + path);
  out.precision(17);
  for (const Vec3& v : mesh.vertices)
    out << "v " << v.x() << " " << v.y() << " " << v.z() << "\n";
  for (const Triangle& f : mesh.triangles)
    out << "f " << f[0] + 1 << " " << f[1] + 1 << " " << f[2] + 1 << "\n";
}

void savePlyMesh(const TriMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out)
    throw Error(ErrorKind::InvalidInput, "cannot write mesh file: " + path);
  out.precision(17);
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << mesh.vertices.size() << "\n";
  out << "property double x\nproperty double y\nproperty double z\n";
  out << "element face " << mesh.triangles.size() << "\n";
  out << "property list uchar int vertex_indices\nend_header\n";
  for (const Vec3& v : mesh.vertices)
    out << v.x() << " " << v.y() << " " << v.z() << "\n";
  for (const Triangle& f : mesh.triangles)
    out << "3 " << f[0] << " " << f[1] << " " << f[2] << "\n";
}

bool checkWatertight(const TriMesh& mesh) {
  if (mesh.triangles.empty()) return false;
  std::map<std::pair<int, int>, int> directed;
  for (const Triangle& f : mesh.triangles) {
    for (int e = 0; e < 3; ++e) {
      int a = f[e], b = f[(e + 1) % 3];
      if (a == b) return false;
      if (++directed[{a, b}] > 1) return false;  // non-manifold edge
    }
  }
  size_t undirected = 0;
  for (const auto& [edge, count] : directed) {
    auto rev = directed.find({edge.second, edge.first});
    if (rev == directed.end()) return false;  // boundary or flipped winding
    if (edge.first < edge.second) ++undirected;
  }
  // Count only vertices actually referenced by faces.
  std::vector<char> used(mesh.vertices.size(), 0);
  for (const Triangle& f : mesh.triangles)
    for (int v : f) used[v] = 1;
  long v_count = std::count(used.begin(), used.end(), 1);
  long euler = v_count - static_cast<long>(undirected) +
               static_cast<long>(mesh.triangles.size());
  return euler == 2;
}

double meshVolume(const TriMesh& mesh) {
  double vol = 0.0;
  for (const Triangle& f : mesh.triangles) {
    const Vec3& a = mesh.vertices[f[0]];
    const Vec3& b = mesh.vertices[f[1]];
    const Vec3& c = mesh.vertices[f[2]];
    vol += a.dot(b.cross(c)) / 6.0;
  }
  return vol;
}

Vec3 centerOfMass(const TriMesh& mesh) {
  if (!mesh.watertight && !checkWatertight(mesh))
    throw Error(ErrorKind::Geometry,
                "center of mass requires a watertight mesh");
  double vol = 0.0;
  Vec3 moment = Vec3::Zero();
  for (const Triangle& f : mesh.triangles) {
    const Vec3& a = mesh.vertices[f[0]];
    const Vec3& b = mesh.vertices[f[1]];
    const Vec3& c = mesh.vertices[f[2]];
    double v = a.dot(b.cross(c)) / 6.0;  // signed tet volume against origin
    vol += v;
    moment += v * (a + b + c) / 4.0;
  }
  if (std::abs(vol) < 1e-15)
    throw Error(ErrorKind::Geometry, "mesh encloses no volume");
  return moment / vol;
}

bool meshContains(const TriMesh& mesh, const Vec3& p) {
  // Parity of crossings along a fixed direction chosen to dodge edges.
  Ray ray{p, Vec3(0.57735026918962576, 0.21132486540518713,
                  0.78867513459481287)
                 .normalized()};
  int crossings = 0;
  for (const Triangle& f : mesh.triangles) {
    if (rayTriangle(ray, mesh.vertices[f[0]], mesh.vertices[f[1]],
                    mesh.vertices[f[2]]))
      ++crossings;
  }
  return (crossings % 2) == 1;
}

std::vector<FaceCluster> clusterFaces(const TriMesh& hull, double angle_tol) {
  int nt = static_cast<int>(hull.triangles.size());
  std::vector<Vec3> normals(nt);
  std::vector<double> areas(nt);
  for (int t = 0; t < nt; ++t) {
    normals[t] = hull.triangleNormal(t);
    areas[t] = hull.triangleArea(t);
  }

  // Edge adjacency.
  std::map<std::pair<int, int>, int> edge_owner;
  std::vector<std::array<int, 3>> neighbor(nt, {-1, -1, -1});
  for (int t = 0; t < nt; ++t) {
    const Triangle& f = hull.triangles[t];
    for (int e = 0; e < 3; ++e) {
      int a = f[e], b = f[(e + 1) % 3];
      auto it = edge_owner.find({b, a});
      if (it != edge_owner.end()) {
        int other = it->second;
        neighbor[t][e] = other;
        for (int e2 = 0; e2 < 3; ++e2) {
          const Triangle& g = hull.triangles[other];
          if (g[e2] == b && g[(e2 + 1) % 3] == a) neighbor[other][e2] = t;
        }
      } else {
        edge_owner[{a, b}] = t;
      }
    }
  }

  double cos_tol = std::cos(angle_tol);
  std::vector<int> cluster_of(nt, -1);
  std::vector<FaceCluster> clusters;

  for (int seed = 0; seed < nt; ++seed) {
    if (cluster_of[seed] >= 0) continue;
    FaceCluster cluster;
    std::vector<int> stack{seed};
    cluster_of[seed] = static_cast<int>(clusters.size());
    Vec3 seed_normal = normals[seed];
    while (!stack.empty()) {
      int t = stack.back();
      stack.pop_back();
      cluster.triangles.push_back(t);
      for (int nb : neighbor[t]) {
        if (nb < 0 || cluster_of[nb] >= 0) continue;
        if (normals[nb].dot(seed_normal) >= cos_tol) {
          cluster_of[nb] = cluster_of[seed];
          stack.push_back(nb);
        }
      }
    }
    std::sort(cluster.triangles.begin(), cluster.triangles.end());

    Vec3 mean = Vec3::Zero();
    cluster.area = 0.0;
    for (int t : cluster.triangles) {
      mean += areas[t] * normals[t];
      cluster.area += areas[t];
    }
    cluster.normal = mean.norm() > 1e-15 ? Vec3(mean.normalized()) : seed_normal;
    // Guarantee every member stays within angle_tol of the cluster normal;
    // fall back to the seed normal (which satisfies it by construction).
    for (int t : cluster.triangles) {
      if (normals[t].dot(cluster.normal) < cos_tol - 1e-12) {
        cluster.normal = seed_normal;
        break;
      }
    }
    clusters.push_back(std::move(cluster));
  }

  // Boundary polygon: project member vertices onto the cluster plane and take
  // the planar convex hull.
  for (FaceCluster& cluster : clusters) {
    std::vector<int> verts;
    for (int t : cluster.triangles)
      for (int v : hull.triangles[t]) verts.push_back(v);
    std::sort(verts.begin(), verts.end());
    verts.erase(std::unique(verts.begin(), verts.end()), verts.end());

    Vec3 n = cluster.normal;
    Vec3 u = std::abs(n.z()) < 0.9 ? n.cross(Vec3::UnitZ()).normalized()
                                   : n.cross(Vec3::UnitX()).normalized();
    Vec3 w = n.cross(u);
    Vec3 centroid = Vec3::Zero();
    for (int v : verts) centroid += hull.vertices[v];
    centroid /= static_cast<double>(verts.size());

    std::vector<Vec2> flat;
    flat.reserve(verts.size());
    for (int v : verts) {
      Vec3 d = hull.vertices[v] - centroid;
      flat.emplace_back(u.dot(d), w.dot(d));
    }
    // convexHull2D is CCW in (u, w); with w = n x u that winding is CCW when
    // viewed against the outward normal, matching the face winding.
    for (const Vec2& q : convexHull2D(flat))
      cluster.boundary.push_back(centroid + q.x() * u + q.y() * w);
  }
  return clusters;
}

namespace {

// Extrudes a CCW simple polygon along +z with the given 2D triangulation.
TriMesh extrudePolygon(const std::vector<Vec2>& poly,
                       const std::vector<Triangle>& cap, double height) {
  TriMesh mesh;
  int n = static_cast<int>(poly.size());
  for (const Vec2& p : poly) mesh.vertices.emplace_back(p.x(), p.y(), 0.0);
  for (const Vec2& p : poly) mesh.vertices.emplace_back(p.x(), p.y(), height);
  for (const Triangle& f : cap) {
    mesh.triangles.push_back({f[0], f[2], f[1]});              // bottom, -z
    mesh.triangles.push_back({f[0] + n, f[1] + n, f[2] + n});  // top, +z
  }
  for (int i = 0; i < n; ++i) {
    int j = (i + 1) % n;
    mesh.triangles.push_back({i, j, j + n});
    mesh.triangles.push_back({i, j + n, i + n});
  }
  mesh.watertight = checkWatertight(mesh);
  return mesh;
}

}  // namespace

TriMesh makeBox(double sx, double sy, double sz) {
  double hx = sx / 2.0, hy = sy / 2.0;
  std::vector<Vec2> sq{{-hx, -hy}, {hx, -hy}, {hx, hy}, {-hx, hy}};
  TriMesh mesh = extrudePolygon(sq, {{{0, 1, 2}}, {{0, 2, 3}}}, sz);
  for (Vec3& v : mesh.vertices) v.z() -= sz / 2.0;
  return mesh;
}

TriMesh makeTetrahedron(double edge) {
  double s = edge / (2.0 * std::sqrt(2.0));
  TriMesh mesh;
  mesh.vertices = {Vec3(1, 1, 1) * s, Vec3(1, -1, -1) * s,
                   Vec3(-1, 1, -1) * s, Vec3(-1, -1, 1) * s};
  mesh.triangles = {{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}};
  // Fix any inward-wound face against the centroid (origin).
  for (Triangle& f : mesh.triangles) {
    Vec3 n = (mesh.vertices[f[1]] - mesh.vertices[f[0]])
                 .cross(mesh.vertices[f[2]] - mesh.vertices[f[0]]);
    Vec3 center = (mesh.vertices[f[0]] + mesh.vertices[f[1]] +
                   mesh.vertices[f[2]]) /
                  3.0;
    if (n.dot(center) < 0.0) std::swap(f[1], f[2]);
  }
  mesh.watertight = checkWatertight(mesh);
  return mesh;
}

TriMesh makeLPrism(double arm_x, double arm_y, double thickness,
                   double height) {
  if (thickness >= arm_x || thickness >= arm_y)
    throw Error(ErrorKind::Geometry, "L prism thickness exceeds arm length");
  double a = arm_x, c = arm_y, t = thickness;
  std::vector<Vec2> poly{{0, 0}, {a, 0}, {a, t}, {t, t}, {t, c}, {0, c}};
  std::vector<Triangle> cap{{{0, 1, 2}}, {{0, 2, 3}}, {{0, 3, 5}}, {{3, 4, 5}}};
  return extrudePolygon(poly, cap, height);
}

TriMesh mergeMeshes(const std::vector<TriMesh>& parts) {
  TriMesh out;
  bool all_watertight = !parts.empty();
  for (const TriMesh& part : parts) {
    int base = int(out.vertices.size());
    out.vertices.insert(out.vertices.end(), part.vertices.begin(),
                        part.vertices.end());
    for (const Triangle& t : part.triangles)
      out.triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
    out.dropped_degenerate += part.dropped_degenerate;
    all_watertight = all_watertight && part.watertight;
  }
  out.watertight = all_watertight;
  return out;
}

}  // namespace asmsim
