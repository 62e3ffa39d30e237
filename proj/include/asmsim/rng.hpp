#pragma once

#include <cstdint>
#include <string_view>

#include "asmsim/se3.hpp"

namespace asmsim {

// All randomness in the project flows from one root seed through this
// generator (xoshiro256++ seeded via splitmix64). Distributions are
// implemented here rather than taken from <random> so that streams are
// identical across standard libraries and runs.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t nextU64();
  double uniform();                        // [0, 1)
  double uniform(double lo, double hi);    // [lo, hi)
  int uniformInt(int lo, int hi);          // [lo, hi] inclusive
  double normal(double mean = 0.0, double stddev = 1.0);
  Vec3 unitVector();                       // uniform on the unit sphere
  Mat3 randomRotation();                   // uniform on SO(3)

 private:
  uint64_t s_[4];
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

/// Stable per-stage sub-seed so stages stay decoupled under one root seed.
uint64_t deriveSeed(uint64_t root, std::string_view stage);

}  // namespace asmsim
