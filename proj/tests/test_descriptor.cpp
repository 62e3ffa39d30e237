#include <algorithm>
#include <cmath>
#include <numeric>

#include "asmsim/descriptor.hpp"
#include "asmsim/detect.hpp"
#include "asmsim/errors.hpp"
#include "asmsim/rng.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace asmsim;

namespace {

PointCloud randomCloud(int n, uint64_t seed) {
  Rng rng(seed);
  PointCloud cloud;
  for (int i = 0; i < n; ++i) {
    cloud.points.push_back(Vec3(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2),
                                rng.uniform(0.8, 1.2)));
    cloud.normals.push_back(rng.unitVector());
  }
  return cloud;
}

// One point per roll-bin weight unit: bin b gets (b+1) unit in-plane normals
// at the bin's center angle, so the roll histogram is a strict ramp.
PointCloud rampRollCloud() {
  PointCloud cloud;
  const int n = Descriptor::kRollBins;
  for (int b = 0; b < n; ++b) {
    double angle = -M_PI + (b + 0.5) * (2.0 * M_PI / n);
    for (int k = 0; k <= b; ++k) {
      cloud.points.push_back(Vec3(0.1 * std::cos(angle), 0.1 * std::sin(angle),
                                  1.0 + 0.001 * k));
      cloud.normals.push_back(Vec3(std::cos(angle), std::sin(angle), 0.0));
    }
  }
  return cloud;
}

template <size_t N>
double histSum(const std::array<double, N>& h) {
  return std::accumulate(h.begin(), h.end(), 0.0);
}

}  // namespace

TEST_CASE("descriptor histograms are unit mass") {
  Descriptor d = computeDescriptor(randomCloud(400, 7));
  CHECK(histSum(d.normal_angle) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(histSum(d.centroid_dist) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(histSum(d.roll) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("descriptor rejects empty or normal-free clouds") {
  CHECK_THROWS_AS(computeDescriptor(PointCloud{}), Error);
  PointCloud bare;
  bare.points = {{0, 0, 1}, {0.1, 0, 1}};
  try {
    computeDescriptor(bare);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidInput);
  }
}

TEST_CASE("descriptor ignores point order") {
  PointCloud cloud = randomCloud(300, 17);
  PointCloud shuffled = cloud;
  Rng rng(18);
  for (int i = int(shuffled.size()) - 1; i > 0; --i) {
    int j = int(rng.uniformInt(0, i));
    std::swap(shuffled.points[i], shuffled.points[j]);
    std::swap(shuffled.normals[i], shuffled.normals[j]);
  }
  Descriptor a = computeDescriptor(cloud);
  Descriptor b = computeDescriptor(shuffled);
  for (int i = 0; i < Descriptor::kNormalBins; ++i)
    CHECK(std::abs(a.normal_angle[i] - b.normal_angle[i]) < 1e-12);
  for (int i = 0; i < Descriptor::kDistBins; ++i)
    CHECK(std::abs(a.centroid_dist[i] - b.centroid_dist[i]) < 1e-12);
  for (int i = 0; i < Descriptor::kRollBins; ++i)
    CHECK(std::abs(a.roll[i] - b.roll[i]) < 1e-12);
}

TEST_CASE("descriptor distance is a metric-like score") {
  Descriptor a = computeDescriptor(randomCloud(300, 23));
  Descriptor b = computeDescriptor(randomCloud(300, 24));
  CHECK(descriptorDistance(a, a) == 0.0);
  CHECK(descriptorDistance(a, b) == descriptorDistance(b, a));
  CHECK(descriptorDistance(a, b) > 0.0);
  CHECK(descriptorDistance(a, b) <= 4.0 + 1e-12);  // two L1-unit hist pairs
}

TEST_CASE("view-discriminating histograms ignore rotations about the eye") {
  PointCloud cloud = randomCloud(500, 31);
  Pose spin{Vec3::Zero(), rotZ(1.2) * rotY(0.4)};
  Descriptor a = computeDescriptor(cloud);
  Descriptor b = computeDescriptor(cloud.transformed(spin));
  CHECK(descriptorDistance(a, b) < 1e-9);
}

TEST_CASE("roll histogram shifts by exactly the in-image rotation") {
  const int n = Descriptor::kRollBins;
  PointCloud ref_cloud = rampRollCloud();
  // 10 bins of 4 degrees each: a rotation landing exactly on bin centers.
  double theta = 2.0 * M_PI * 10.0 / n;
  PointCloud rot_cloud = ref_cloud.transformed(Pose{Vec3::Zero(), rotZ(theta)});

  Descriptor ref = computeDescriptor(ref_cloud);
  Descriptor rot = computeDescriptor(rot_cloud);
  for (int b = 0; b < n; ++b)
    CHECK(std::abs(rot.roll[(b + 10) % n] - ref.roll[b]) < 1e-12);

  CHECK(estimateRoll(rot, ref) == doctest::Approx(theta).epsilon(1e-12));
  CHECK(estimateRoll(ref, ref) == 0.0);

  // Backwards rotation reports a negative roll.
  PointCloud neg_cloud =
      ref_cloud.transformed(Pose{Vec3::Zero(), rotZ(-theta)});
  Descriptor neg = computeDescriptor(neg_cloud);
  CHECK(estimateRoll(neg, ref) == doctest::Approx(-theta).epsilon(1e-12));
}

TEST_CASE("camera-facing normals carry no roll information") {
  PointCloud cloud;
  cloud.points = {{0, 0, 1}, {0.1, 0, 1}, {0, 0.1, 1}};
  cloud.normals = {{0, 0, -1}, {0, 0, -1}, {0, 0, 1}};
  Descriptor d = computeDescriptor(cloud);
  CHECK(histSum(d.roll) == 0.0);
  CHECK(estimateRoll(d, d) == 0.0);
  CHECK(histSum(d.normal_angle) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("template matching ranks by distance with stable ties") {
  std::vector<ViewTemplate> library(3);
  library[0].descriptor = computeDescriptor(randomCloud(200, 41));
  library[1].descriptor = computeDescriptor(randomCloud(200, 42));
  library[2].descriptor = library[1].descriptor;  // deliberate duplicate

  std::vector<TemplateMatch> top =
      matchTemplates(library[1].descriptor, library, 3);
  REQUIRE(top.size() == 3);
  CHECK(top[0].index == 1);  // distance 0, lower index wins the tie
  CHECK(top[0].distance == 0.0);
  CHECK(top[0].roll == 0.0);
  CHECK(top[1].index == 2);
  CHECK(top[1].distance == 0.0);
  CHECK(top[2].index == 0);
  CHECK(top[2].distance > 0.0);

  CHECK(matchTemplates(library[0].descriptor, library, 99).size() == 3);
  CHECK(matchTemplates(library[0].descriptor, library, 1).size() == 1);
  CHECK(matchTemplates(library[0].descriptor, library, 0).empty());
  CHECK_THROWS_AS(matchTemplates(library[0].descriptor, {}, 3), Error);
}
