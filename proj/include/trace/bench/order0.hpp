#pragma once

#include <cstdint>
#include <span>

#include "trace/coder/quantize.hpp"

namespace trace::bench {

// Static distribution from the corpus byte histogram (quantized like model
// output, so unseen bytes keep frequency 1).
coder::QuantizedDistribution order0_distribution(std::span<const std::uint8_t> corpus);

// Payload bytes from arithmetic-coding `corpus` under its own order-0
// distribution. The frequency table itself is not counted.
std::uint64_t order0_baseline(std::span<const std::uint8_t> corpus);

}  // namespace trace::bench
