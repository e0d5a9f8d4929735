#include "trace/bench/order0.hpp"

#include <array>
#include <vector>

#include "trace/coder/arithmetic_coder.hpp"
#include "trace/error.hpp"

namespace trace::bench {

coder::QuantizedDistribution order0_distribution(std::span<const std::uint8_t> corpus) {
  if (corpus.empty()) throw Error(ErrorCode::kInvalidArgument, "order-0 baseline needs a non-empty corpus");
  std::array<std::uint64_t, 256> counts{};
  for (std::uint8_t b : corpus) ++counts[b];
  std::array<float, 256> p;
  const double n = static_cast<double>(corpus.size());
  // Renormalize in float so the sum sits inside quantize's tolerance.
  double total = 0.0;
  for (std::size_t i = 0; i < 256; ++i) {
    p[i] = static_cast<float>(static_cast<double>(counts[i]) / n);
    if (p[i] <= 0.0f) p[i] = 1e-30f;
    total += p[i];
  }
  for (float& v : p) v = static_cast<float>(v / total);
  return coder::quantize(p);
}

std::uint64_t order0_baseline(std::span<const std::uint8_t> corpus) {
  const coder::QuantizedDistribution q = order0_distribution(corpus);
  coder::ArithmeticEncoder enc;
  for (std::uint8_t b : corpus) enc.encode(b, q);
  return enc.finish().size();
}

}  // namespace trace::bench
