#include "trace/coder/quantize.hpp"

#include <cmath>
#include <string>

#include "trace/error.hpp"

namespace trace::coder {

QuantizedDistribution QuantizedDistribution::uniform() {
  std::array<std::uint32_t, 256> f;
  f.fill(kTotal / 256);
  return from_frequencies(f);
}

QuantizedDistribution QuantizedDistribution::from_frequencies(
    const std::array<std::uint32_t, 256>& freq) {
  QuantizedDistribution q;
  q.freq = freq;
  q.cum[0] = 0;
  for (std::size_t i = 0; i < 256; ++i) {
    if (freq[i] == 0) {
      throw Error(ErrorCode::kInvalidArgument, "zero frequency for symbol " + std::to_string(i));
    }
    q.cum[i + 1] = q.cum[i] + freq[i];
  }
  if (q.cum[256] != kTotal) {
    throw Error(ErrorCode::kInvalidArgument,
                "frequencies sum to " + std::to_string(q.cum[256]) + ", expected 65536");
  }
  return q;
}

std::uint8_t QuantizedDistribution::find(std::uint32_t target) const {
  std::size_t lo = 0, hi = 256;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    if (cum[mid] <= target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return static_cast<std::uint8_t>(lo);
}

QuantizedDistribution quantize(std::span<const float> p) {
  if (p.size() != 256) {
    throw Error(ErrorCode::kShapeMismatch,
                "quantize expects 256 probabilities, got " + std::to_string(p.size()));
  }
  constexpr double kSpread = QuantizedDistribution::kTotal - 256;
  std::array<std::uint32_t, 256> f;
  double total_p = 0.0;
  std::int64_t sum = 0;
  std::size_t argmax = 0;
  for (std::size_t i = 0; i < 256; ++i) {
    const float pi = p[i];
    if (!(pi > 0.0f) || !std::isfinite(pi)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "probability for symbol " + std::to_string(i) + " is not positive");
    }
    total_p += pi;
    if (pi > p[argmax]) argmax = i;
    f[i] = 1 + static_cast<std::uint32_t>(std::floor(static_cast<double>(pi) * kSpread));
    sum += f[i];
  }
  if (std::abs(total_p - 1.0) > 1e-4) {
    throw Error(ErrorCode::kInvalidArgument,
                "probabilities sum to " + std::to_string(total_p) + ", not 1");
  }
  // Within the sum tolerance the floors can overshoot by a few counts; the
  // argmax symbol absorbs the correction either way.
  const std::int64_t leftover = static_cast<std::int64_t>(QuantizedDistribution::kTotal) - sum;
  f[argmax] = static_cast<std::uint32_t>(static_cast<std::int64_t>(f[argmax]) + leftover);
  return QuantizedDistribution::from_frequencies(f);
}

}  // namespace trace::coder
