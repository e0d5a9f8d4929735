#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace trace::coder {

// 256 frequencies, each >= 1, summing to exactly kTotal.
struct QuantizedDistribution {
  static constexpr std::uint32_t kBits = 16;
  static constexpr std::uint32_t kTotal = 1u << kBits;

  std::array<std::uint32_t, 256> freq{};
  std::array<std::uint32_t, 257> cum{};

  static QuantizedDistribution uniform();
  // Builds cum from freq and checks the invariants.
  static QuantizedDistribution from_frequencies(const std::array<std::uint32_t, 256>& freq);

  // Symbol whose interval [cum[s], cum[s+1]) contains target < kTotal.
  std::uint8_t find(std::uint32_t target) const;

  friend bool operator==(const QuantizedDistribution&, const QuantizedDistribution&) = default;
};

// freq[i] = 1 + floor(p[i] * (kTotal - 256)); the leftover goes to the most
// probable symbol (lowest index on ties). Requires p > 0 and |sum - 1| <= 1e-4.
QuantizedDistribution quantize(std::span<const float> p);

}  // namespace trace::coder
