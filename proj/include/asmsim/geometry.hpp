#pragma once

#include <optional>
#include <vector>

#include "asmsim/se3.hpp"

namespace asmsim {

using Vec2 = Eigen::Vector2d;

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 dir = Vec3::UnitZ();  // unit length
};

/// Moller-Trumbore; returns the ray parameter t > 0 of the hit, if any.
std::optional<double> rayTriangle(const Ray& ray, const Vec3& a, const Vec3& b,
                                  const Vec3& c);

Vec3 closestPointOnSegment(const Vec3& p, const Vec3& a, const Vec3& b);
Vec3 closestPointOnTriangle(const Vec3& p, const Vec3& a, const Vec3& b,
                            const Vec3& c);

double pointSegmentDist(const Vec3& p, const Vec3& a, const Vec3& b);
double pointTriangleDist(const Vec3& p, const Vec3& a, const Vec3& b,
                         const Vec3& c);
double segSegDist(const Vec3& p1, const Vec3& q1, const Vec3& p2,
                  const Vec3& q2);
double segTriangleDist(const Vec3& p0, const Vec3& p1, const Vec3& a,
                       const Vec3& b, const Vec3& c);
double triTriDist(const Vec3& a0, const Vec3& a1, const Vec3& a2,
                  const Vec3& b0, const Vec3& b1, const Vec3& b2);

// --- 2D helpers for support polygons ---

/// Convex hull of a 2D point set, counter-clockwise, collinear points dropped.
std::vector<Vec2> convexHull2D(std::vector<Vec2> pts);

/// Chebyshev (largest inscribed circle) radius of a convex CCW polygon.
double polygonInradius(const std::vector<Vec2>& poly);

/// Positive inside (distance to boundary), negative outside. Convex CCW only.
double signedBoundaryDistance(const std::vector<Vec2>& poly, const Vec2& p);

}  // namespace asmsim
