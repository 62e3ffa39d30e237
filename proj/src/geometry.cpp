#include "asmsim/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace asmsim {

std::optional<double> rayTriangle(const Ray& ray, const Vec3& a, const Vec3& b,
                                  const Vec3& c) {
  constexpr double kDetEps = 1e-14;
  constexpr double kBaryEps = 1e-12;
  Vec3 e1 = b - a;
  Vec3 e2 = c - a;
  Vec3 pv = ray.dir.cross(e2);
  double det = e1.dot(pv);
  if (std::abs(det) < kDetEps) return std::nullopt;
  double inv = 1.0 / det;
  Vec3 tv = ray.origin - a;
  double u = tv.dot(pv) * inv;
  if (u < -kBaryEps || u > 1.0 + kBaryEps) return std::nullopt;
  Vec3 qv = tv.cross(e1);
  double v = ray.dir.dot(qv) * inv;
  if (v < -kBaryEps || u + v > 1.0 + kBaryEps) return std::nullopt;
  double t = e2.dot(qv) * inv;
  if (t <= 1e-12) return std::nullopt;
  return t;
}

Vec3 closestPointOnSegment(const Vec3& p, const Vec3& a, const Vec3& b) {
  Vec3 ab = b - a;
  double denom = ab.squaredNorm();
  if (denom < 1e-30) return a;
  double t = std::clamp((p - a).dot(ab) / denom, 0.0, 1.0);
  return a + t * ab;
}

Vec3 closestPointOnTriangle(const Vec3& p, const Vec3& a, const Vec3& b,
                            const Vec3& c) {
  // Ericson, Real-Time Collision Detection, 5.1.5.
  Vec3 ab = b - a, ac = c - a, ap = p - a;
  double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  Vec3 bp = p - b;
  double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    double v = d1 / (d1 - d3);
    return a + v * ab;
  }

  Vec3 cp = p - c;
  double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    double w = d2 / (d2 - d6);
    return a + w * ac;
  }

  double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return b + w * (c - b);
  }

  double denom = 1.0 / (va + vb + vc);
  double v = vb * denom, w = vc * denom;
  return a + ab * v + ac * w;
}

double pointSegmentDist(const Vec3& p, const Vec3& a, const Vec3& b) {
  return (p - closestPointOnSegment(p, a, b)).norm();
}

double pointTriangleDist(const Vec3& p, const Vec3& a, const Vec3& b,
                         const Vec3& c) {
  return (p - closestPointOnTriangle(p, a, b, c)).norm();
}

double segSegDist(const Vec3& p1, const Vec3& q1, const Vec3& p2,
                  const Vec3& q2) {
  // Ericson, Real-Time Collision Detection, 5.1.9.
  constexpr double kEps = 1e-14;
  Vec3 d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
  double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
  double s = 0.0, t = 0.0;
  if (a <= kEps && e <= kEps) {
    return r.norm();
  }
  if (a <= kEps) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    double c = d1.dot(r);
    if (e <= kEps) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      double b = d1.dot(d2);
      double denom = a * e - b * b;
      s = denom > kEps ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return ((p1 + s * d1) - (p2 + t * d2)).norm();
}

namespace {

bool pointInTriangleOnPlane(const Vec3& x, const Vec3& a, const Vec3& b,
                            const Vec3& c, const Vec3& n) {
  double s1 = (b - a).cross(x - a).dot(n);
  double s2 = (c - b).cross(x - b).dot(n);
  double s3 = (a - c).cross(x - c).dot(n);
  double tol = -1e-12;
  return s1 >= tol && s2 >= tol && s3 >= tol;
}

}  // namespace

double segTriangleDist(const Vec3& p0, const Vec3& p1, const Vec3& a,
                       const Vec3& b, const Vec3& c) {
  // Zero if the segment pierces the triangle interior.
  Vec3 n = (b - a).cross(c - a);
  double nn = n.norm();
  if (nn > 1e-14) {
    Vec3 un = n / nn;
    double h0 = un.dot(p0 - a);
    double h1 = un.dot(p1 - a);
    if (h0 * h1 <= 0.0 && std::abs(h0 - h1) > 1e-14) {
      double t = h0 / (h0 - h1);
      Vec3 x = p0 + t * (p1 - p0);
      if (pointInTriangleOnPlane(x, a, b, c, un)) return 0.0;
    }
  }
  double d = std::min({segSegDist(p0, p1, a, b), segSegDist(p0, p1, b, c),
                       segSegDist(p0, p1, c, a)});
  d = std::min(d, pointTriangleDist(p0, a, b, c));
  d = std::min(d, pointTriangleDist(p1, a, b, c));
  return d;
}

double triTriDist(const Vec3& a0, const Vec3& a1, const Vec3& a2,
                  const Vec3& b0, const Vec3& b1, const Vec3& b2) {
  double d = std::min({segTriangleDist(a0, a1, b0, b1, b2),
                       segTriangleDist(a1, a2, b0, b1, b2),
                       segTriangleDist(a2, a0, b0, b1, b2)});
  if (d == 0.0) return 0.0;
  return std::min(d, std::min({segTriangleDist(b0, b1, a0, a1, a2),
                               segTriangleDist(b1, b2, a0, a1, a2),
                               segTriangleDist(b2, b0, a0, a1, a2)}));
}

std::vector<Vec2> convexHull2D(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Vec2& a, const Vec2& b) {
                          return a.x() == b.x() && a.y() == b.y();
                        }),
            pts.end());
  size_t n = pts.size();
  if (n < 3) return pts;

  auto cross = [](const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) -
           (a.y() - o.y()) * (b.x() - o.x());
  };

  std::vector<Vec2> hull(2 * n);
  size_t k = 0;
  for (size_t i = 0; i < n; ++i) {  // lower chain
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 1e-18) --k;
    hull[k++] = pts[i];
  }
  for (size_t i = n - 1, lo = k + 1; i-- > 0;) {  // upper chain
    while (k >= lo && cross(hull[k - 2], hull[k - 1], pts[i]) <= 1e-18) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

namespace {

struct HalfPlane {
  Vec2 m;     // outward unit normal
  double c;   // m . x <= c
};

std::vector<HalfPlane> polygonHalfPlanes(const std::vector<Vec2>& poly) {
  std::vector<HalfPlane> hp;
  size_t n = poly.size();
  hp.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    Vec2 e = poly[(i + 1) % n] - poly[i];
    double len = e.norm();
    if (len < 1e-15) continue;
    Vec2 m(e.y() / len, -e.x() / len);  // outward for CCW winding
    hp.push_back({m, m.dot(poly[i])});
  }
  return hp;
}

}  // namespace

double polygonInradius(const std::vector<Vec2>& poly) {
  auto hp = polygonHalfPlanes(poly);
  size_t n = hp.size();
  if (n < 3) return 0.0;
  // Chebyshev center: maximize r s.t. m_i.x + r <= c_i. The optimum is pinned
  // by three active constraints; enumerate candidate triples (n is small).
  double best = 0.0;
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j)
      for (size_t k = j + 1; k < n; ++k) {
        Eigen::Matrix3d A;
        A << hp[i].m.x(), hp[i].m.y(), 1.0,
             hp[j].m.x(), hp[j].m.y(), 1.0,
             hp[k].m.x(), hp[k].m.y(), 1.0;
        if (std::abs(A.determinant()) < 1e-12) continue;
        Vec3 rhs(hp[i].c, hp[j].c, hp[k].c);
        Vec3 sol = A.partialPivLu().solve(rhs);
        double r = sol.z();
        if (r <= best) continue;
        Vec2 x(sol.x(), sol.y());
        bool feasible = true;
        for (const auto& h : hp) {
          if (h.m.dot(x) + r > h.c + 1e-9) {
            feasible = false;
            break;
          }
        }
        if (feasible) best = r;
      }
  return best;
}

double signedBoundaryDistance(const std::vector<Vec2>& poly, const Vec2& p) {
  auto hp = polygonHalfPlanes(poly);
  if (hp.empty()) return 0.0;
  double d = std::numeric_limits<double>::infinity();
  for (const auto& h : hp) d = std::min(d, h.c - h.m.dot(p));
  return d;
}

}  // namespace asmsim
