#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "asmsim/errors.hpp"
#include "asmsim/mesh.hpp"

namespace asmsim {

namespace {

struct HullFace {
  std::array<int, 3> v;
  std::array<int, 3> neighbor;  // across directed edge (v[e], v[(e+1)%3])
  Vec3 normal = Vec3::UnitZ();  // outward unit
  double offset = 0.0;          // normal . x == offset on the face plane
  std::vector<int> outside;     // unassigned points strictly outside
  int farthest = -1;
  double farthest_dist = 0.0;
  bool alive = true;
};

class QuickHull {
 public:
  explicit QuickHull(const std::vector<Vec3>& pts) : pts_(pts) {}

  TriMesh build() {
    if (pts_.size() < 4)
      throw Error(ErrorKind::Geometry,
                  "convex hull needs at least 4 points");
    double scale = 0.0;
    for (const Vec3& p : pts_) scale = std::max(scale, p.cwiseAbs().maxCoeff());
    eps_ = 1e-10 * std::max(1.0, scale);

    initialSimplex();
    assignInitialPoints();

    std::vector<int> pending;
    for (int f = 0; f < static_cast<int>(faces_.size()); ++f)
      if (!faces_[f].outside.empty()) pending.push_back(f);

    while (!pending.empty()) {
      int f = pending.back();
      pending.pop_back();
      if (!faces_[f].alive || faces_[f].outside.empty()) continue;
      expand(f, pending);
    }
    return exportMesh();
  }

 private:
  double signedDist(const HullFace& f, int p) const {
    return f.normal.dot(pts_[p]) - f.offset;
  }

  void setPlane(HullFace& f) {
    Vec3 n = (pts_[f.v[1]] - pts_[f.v[0]]).cross(pts_[f.v[2]] - pts_[f.v[0]]);
    double len = n.norm();
    if (len < 1e-24)
      throw Error(ErrorKind::Geometry, "convex hull hit a degenerate face");
    f.normal = n / len;
    f.offset = f.normal.dot(pts_[f.v[0]]);
  }

  void initialSimplex() {
    int n = static_cast<int>(pts_.size());
    auto lexLess = [&](int a, int b) {
      const Vec3 &pa = pts_[a], &pb = pts_[b];
      if (pa.x() != pb.x()) return pa.x() < pb.x();
      if (pa.y() != pb.y()) return pa.y() < pb.y();
      if (pa.z() != pb.z()) return pa.z() < pb.z();
      return a < b;
    };
    int i0 = 0, i1 = 0;
    for (int i = 1; i < n; ++i) {
      if (lexLess(i, i0)) i0 = i;
      if (lexLess(i1, i)) i1 = i;
    }
    if ((pts_[i1] - pts_[i0]).norm() <= eps_)
      throw Error(ErrorKind::Geometry, "degenerate point set (all coincident)");

    Vec3 dir = (pts_[i1] - pts_[i0]).normalized();
    int i2 = -1;
    double best = eps_;
    for (int i = 0; i < n; ++i) {
      Vec3 d = pts_[i] - pts_[i0];
      double dist = (d - d.dot(dir) * dir).norm();
      if (dist > best) {
        best = dist;
        i2 = i;
      }
    }
    if (i2 < 0)
      throw Error(ErrorKind::Geometry, "degenerate point set (collinear)");

    Vec3 pn = (pts_[i1] - pts_[i0]).cross(pts_[i2] - pts_[i0]).normalized();
    int i3 = -1;
    best = eps_;
    for (int i = 0; i < n; ++i) {
      double dist = std::abs(pn.dot(pts_[i] - pts_[i0]));
      if (dist > best) {
        best = dist;
        i3 = i;
      }
    }
    if (i3 < 0)
      throw Error(ErrorKind::Geometry, "degenerate point set (coplanar)");

    // Outward-oriented tetrahedron faces.
    simplex_ = {i0, i1, i2, i3};
    Vec3 center = (pts_[i0] + pts_[i1] + pts_[i2] + pts_[i3]) / 4.0;
    std::array<std::array<int, 3>, 4> tris = {{{i0, i1, i2},
                                               {i0, i3, i1},
                                               {i0, i2, i3},
                                               {i1, i3, i2}}};
    for (auto tri : tris) {
      HullFace f;
      f.v = tri;
      Vec3 fn = (pts_[tri[1]] - pts_[tri[0]]).cross(pts_[tri[2]] - pts_[tri[0]]);
      Vec3 fc = (pts_[tri[0]] + pts_[tri[1]] + pts_[tri[2]]) / 3.0;
      if (fn.dot(fc - center) < 0.0) std::swap(f.v[1], f.v[2]);
      setPlane(f);
      f.neighbor = {-1, -1, -1};
      faces_.push_back(std::move(f));
    }
    relinkNeighbors({0, 1, 2, 3});
  }

  // Rebuilds neighbor links among the given faces from shared directed edges.
  void relinkNeighbors(const std::vector<int>& face_ids) {
    std::map<std::pair<int, int>, std::pair<int, int>> half;  // edge -> (face, slot)
    for (int fi : face_ids) {
      HullFace& f = faces_[fi];
      for (int e = 0; e < 3; ++e)
        half[{f.v[e], f.v[(e + 1) % 3]}] = {fi, e};
    }
    for (const auto& [edge, who] : half) {
      auto rev = half.find({edge.second, edge.first});
      if (rev != half.end())
        faces_[who.first].neighbor[who.second] = rev->second.first;
    }
  }

  void assignInitialPoints() {
    for (int p = 0; p < static_cast<int>(pts_.size()); ++p) {
      if (std::find(simplex_.begin(), simplex_.end(), p) != simplex_.end())
        continue;
      assignPoint(p, {0, 1, 2, 3});
    }
  }

  void assignPoint(int p, const std::vector<int>& candidates) {
    for (int fi : candidates) {
      HullFace& f = faces_[fi];
      double d = signedDist(f, p);
      if (d > eps_) {
        f.outside.push_back(p);
        if (d > f.farthest_dist) {
          f.farthest_dist = d;
          f.farthest = p;
        }
        return;
      }
    }
  }

  void expand(int start_face, std::vector<int>& pending) {
    int apex = faces_[start_face].farthest;

    // Flood-fill the faces visible from the apex.
    std::vector<int> visible{start_face};
    std::vector<char> seen(faces_.size(), 0);
    seen[start_face] = 1;
    for (size_t head = 0; head < visible.size(); ++head) {
      const HullFace& f = faces_[visible[head]];
      for (int nb : f.neighbor) {
        if (nb < 0 || seen[nb] || !faces_[nb].alive) continue;
        if (signedDist(faces_[nb], apex) > eps_) {
          seen[nb] = 1;
          visible.push_back(nb);
        }
      }
    }

    // Horizon: directed edges of visible faces bordering non-visible faces.
    std::map<int, std::pair<int, int>> loop;  // start vertex -> (end, outer face)
    for (int fi : visible) {
      const HullFace& f = faces_[fi];
      for (int e = 0; e < 3; ++e) {
        int nb = f.neighbor[e];
        if (nb >= 0 && seen[nb]) continue;
        int a = f.v[e], b = f.v[(e + 1) % 3];
        if (!loop.emplace(a, std::make_pair(b, nb)).second)
          throw Error(ErrorKind::Geometry, "convex hull horizon malformed");
      }
    }
    if (loop.empty())
      throw Error(ErrorKind::Geometry, "convex hull horizon malformed");

    // Walk the loop into order, starting from the smallest start vertex.
    std::vector<std::array<int, 3>> horizon;  // (a, b, outer face)
    int start = loop.begin()->first;
    int cur = start;
    do {
      auto it = loop.find(cur);
      if (it == loop.end())
        throw Error(ErrorKind::Geometry, "convex hull horizon malformed");
      horizon.push_back({cur, it->second.first, it->second.second});
      cur = it->second.first;
    } while (cur != start && horizon.size() <= loop.size());
    if (horizon.size() != loop.size())
      throw Error(ErrorKind::Geometry, "convex hull horizon malformed");

    // Collect orphaned points, retire the visible faces.
    std::vector<int> orphans;
    for (int fi : visible) {
      HullFace& f = faces_[fi];
      for (int p : f.outside)
        if (p != apex) orphans.push_back(p);
      f.outside.clear();
      f.alive = false;
    }

    // One new face per horizon edge, fanned from the apex.
    std::vector<int> fresh;
    fresh.reserve(horizon.size());
    for (const auto& [a, b, outer] : horizon) {
      HullFace f;
      f.v = {a, b, apex};
      setPlane(f);
      f.neighbor = {outer, -1, -1};
      faces_.push_back(std::move(f));
      fresh.push_back(static_cast<int>(faces_.size()) - 1);
    }
    // Ring links between consecutive new faces and back-links from survivors.
    int m = static_cast<int>(fresh.size());
    for (int k = 0; k < m; ++k) {
      HullFace& f = faces_[fresh[k]];
      f.neighbor[1] = fresh[(k + 1) % m];
      f.neighbor[2] = fresh[(k - 1 + m) % m];
      int outer = f.neighbor[0];
      if (outer >= 0) {
        HullFace& g = faces_[outer];
        for (int e = 0; e < 3; ++e)
          if (g.v[e] == f.v[1] && g.v[(e + 1) % 3] == f.v[0])
            g.neighbor[e] = fresh[k];
      }
    }

    for (int p : orphans) assignPoint(p, fresh);
    for (int fi : fresh)
      if (!faces_[fi].outside.empty()) pending.push_back(fi);
  }

  TriMesh exportMesh() {
    std::vector<int> used;
    for (const HullFace& f : faces_)
      if (f.alive) used.insert(used.end(), f.v.begin(), f.v.end());
    std::sort(used.begin(), used.end());
    used.erase(std::unique(used.begin(), used.end()), used.end());

    std::vector<int> remap(pts_.size(), -1);
    TriMesh mesh;
    mesh.vertices.reserve(used.size());
    for (int p : used) {
      remap[p] = static_cast<int>(mesh.vertices.size());
      mesh.vertices.push_back(pts_[p]);
    }
    for (const HullFace& f : faces_) {
      if (!f.alive) continue;
      Triangle t = {remap[f.v[0]], remap[f.v[1]], remap[f.v[2]]};
      int lo = static_cast<int>(
          std::min_element(t.begin(), t.end()) - t.begin());
      std::rotate(t.begin(), t.begin() + lo, t.end());
      mesh.triangles.push_back(t);
    }
    std::sort(mesh.triangles.begin(), mesh.triangles.end());
    mesh.watertight = checkWatertight(mesh);
    if (!mesh.watertight)
      throw Error(ErrorKind::Geometry, "convex hull output not watertight");
    return mesh;
  }

  const std::vector<Vec3>& pts_;
  std::vector<HullFace> faces_;
  std::array<int, 4> simplex_ = {-1, -1, -1, -1};
  double eps_ = 1e-10;
};

}  // namespace

TriMesh convexHull(const std::vector<Vec3>& points) {
  return QuickHull(points).build();
}

}  // namespace asmsim
