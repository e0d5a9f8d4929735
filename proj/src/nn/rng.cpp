#include "trace/nn/rng.hpp"

#include <cmath>
#include <string>

#include "trace/error.hpp"

namespace trace::nn {

std::uint64_t Rng64::next_u64() {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng64::next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

float Rng64::uniform(float lo, float hi) {
  if (!(lo < hi)) {
    throw Error(ErrorCode::kInvalidArgument, "uniform requires lo < hi, got lo=" +
                                                 std::to_string(lo) + " hi=" + std::to_string(hi));
  }
  const double u = next_unit();
  const float x = static_cast<float>(lo + (static_cast<double>(hi) - lo) * u);
  // Rounding to float can land exactly on hi.
  return x < hi ? x : std::nextafter(hi, lo);
}

}  // namespace trace::nn
