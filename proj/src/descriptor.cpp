#include "asmsim/descriptor.hpp"

#include <algorithm>
#include <cmath>

#include "asmsim/errors.hpp"

namespace asmsim {

namespace {

constexpr double kPi = 3.14159265358979323846;

template <size_t N>
void normalizeHist(std::array<double, N>& h) {
  double sum = 0.0;
  for (double v : h) sum += v;
  if (sum > 0)
    for (double& v : h) v /= sum;
}

// Linear (soft) binning: weight split between the two bins whose centers
// bracket the sample, so the histogram moves continuously with the input.
template <size_t N>
void addSoft(std::array<double, N>& h, double x01, double weight,
             bool circular) {
  double pos = x01 * double(N) - 0.5;
  int b0 = int(std::floor(pos));
  double frac = pos - double(b0);
  int n = int(N);
  auto slot = [&](int b) {
    if (circular) return ((b % n) + n) % n;
    return std::clamp(b, 0, n - 1);
  };
  h[slot(b0)] += weight * (1.0 - frac);
  h[slot(b0 + 1)] += weight * frac;
}

// Gaussian blur so that a small sample displacement moves the L1 distance
// proportionally instead of jumping a whole bin: the blur radius sets the
// displacement range over which the metric stays transport-like.
template <int Radius, size_t N>
void smoothHist(std::array<double, N>& h, double sigma_bins, bool circular) {
  std::array<double, 2 * Radius + 1> kernel{};
  double sum = 0.0;
  for (int i = -Radius; i <= Radius; ++i) {
    kernel[i + Radius] = std::exp(-double(i * i) / (2 * sigma_bins * sigma_bins));
    sum += kernel[i + Radius];
  }
  for (double& v : kernel) v /= sum;

  std::array<double, N> out{};
  int n = int(N);
  for (int b = 0; b < n; ++b) {
    if (h[b] == 0.0) continue;
    for (int i = -Radius; i <= Radius; ++i) {
      int t = b + i;
      if (circular)
        t = ((t % n) + n) % n;
      else
        t = std::clamp(t, 0, n - 1);
      out[t] += h[b] * kernel[i + Radius];
    }
  }
  h = out;
}

}  // namespace

Descriptor::Descriptor() {
  normal_angle.fill(0.0);
  centroid_dist.fill(0.0);
  roll.fill(0.0);
}

Descriptor computeDescriptor(const PointCloud& cloud, const Vec3& viewpoint) {
  if (cloud.points.empty())
    throw Error(ErrorKind::InvalidInput, "descriptor of an empty cloud");
  if (!cloud.hasNormals() || cloud.normals.size() != cloud.points.size())
    throw Error(ErrorKind::InvalidInput, "descriptor needs per-point normals");

  Descriptor d;
  Vec3 centroid = cloud.centroid();
  double max_dist = 0.0;
  for (const Vec3& p : cloud.points)
    max_dist = std::max(max_dist, (p - centroid).norm());

  for (size_t i = 0; i < cloud.points.size(); ++i) {
    const Vec3& p = cloud.points[i];
    const Vec3& n = cloud.normals[i];

    Vec3 to_view = viewpoint - p;
    double view_norm = to_view.norm();
    if (view_norm > 1e-12) {
      double c = std::clamp(n.dot(to_view) / view_norm, -1.0, 1.0);
      addSoft(d.normal_angle, std::acos(c) / kPi, 1.0, false);
    }

    if (max_dist > 1e-12) {
      addSoft(d.centroid_dist, (p - centroid).norm() / max_dist, 1.0, false);
    } else {
      d.centroid_dist[0] += 1.0;
    }

    // Image-plane projection of the normal; weight by its magnitude so
    // camera-facing normals (undefined roll) contribute nothing.
    double mag = std::hypot(n.x(), n.y());
    if (mag > 1e-12)
      addSoft(d.roll, (std::atan2(n.y(), n.x()) + kPi) / (2 * kPi), mag, true);
  }

  smoothHist<10>(d.normal_angle, 4.0, false);
  smoothHist<10>(d.centroid_dist, 4.0, false);
  smoothHist<3>(d.roll, 1.5, true);
  normalizeHist(d.normal_angle);
  normalizeHist(d.centroid_dist);
  normalizeHist(d.roll);
  return d;
}

double descriptorDistance(const Descriptor& a, const Descriptor& b) {
  double sum = 0.0;
  for (int i = 0; i < Descriptor::kNormalBins; ++i)
    sum += std::abs(a.normal_angle[i] - b.normal_angle[i]);
  for (int i = 0; i < Descriptor::kDistBins; ++i)
    sum += std::abs(a.centroid_dist[i] - b.centroid_dist[i]);
  return sum;
}

double estimateRoll(const Descriptor& query, const Descriptor& reference) {
  const int n = Descriptor::kRollBins;
  int best_shift = 0;
  double best_score = -1.0;
  for (int s = 0; s < n; ++s) {
    double score = 0.0;
    for (int b = 0; b < n; ++b) score += query.roll[(b + s) % n] * reference.roll[b];
    if (score > best_score) {
      best_score = score;
      best_shift = s;
    }
  }
  double angle = 2 * kPi * best_shift / n;
  return normalizeAngle(angle);
}

}  // namespace asmsim
