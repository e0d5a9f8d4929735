#pragma once

#include <cstdint>

namespace trace::nn {

// SplitMix64. The output sequence depends only on the seed.
class Rng64 {
 public:
  explicit Rng64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double next_unit();
  // Uniform float in [lo, hi). Throws if lo >= hi.
  float uniform(float lo, float hi);

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

}  // namespace trace::nn
