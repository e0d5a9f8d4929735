#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "trace/coder/quantize.hpp"

namespace trace::coder {

// 32-bit binary arithmetic coder with carry-free pending-bit renormalization.
// Encoder and decoder narrow [low, high] identically for identical frequency
// sequences.
class ArithmeticEncoder {
 public:
  void encode(std::uint8_t symbol, const QuantizedDistribution& q);

  // Flushes enough bits for the decoder to resolve the final symbol and pads
  // to a byte boundary. Callable once.
  std::vector<std::uint8_t> finish();

  // Bits committed so far, counting pending bits.
  std::uint64_t bits() const { return emitted_ + pending_; }
  std::uint32_t low() const { return low_; }
  std::uint32_t high() const { return high_; }
  std::uint64_t pending() const { return pending_; }

 private:
  void emit(bool bit);
  void emit_with_pending(bool bit);

  std::uint32_t low_ = 0;
  std::uint32_t high_ = 0xFFFFFFFFu;
  std::uint64_t pending_ = 0;
  std::uint64_t emitted_ = 0;
  std::vector<std::uint8_t> out_;
  std::uint8_t partial_ = 0;
  int partial_bits_ = 0;
  bool finished_ = false;
};

class ArithmeticDecoder {
 public:
  // Reads past the end of `payload` as zero bits, up to 32 of them; beyond
  // that decode() throws kTruncated.
  explicit ArithmeticDecoder(std::span<const std::uint8_t> payload);

  std::uint8_t decode(const QuantizedDistribution& q);

  std::uint32_t low() const { return low_; }
  std::uint32_t high() const { return high_; }
  // Bits shifted past the 32-bit code window so far.
  std::uint64_t bits_consumed() const { return bit_pos_ - 32; }

 private:
  std::uint32_t next_bit();

  std::span<const std::uint8_t> in_;
  std::uint64_t bit_pos_ = 0;
  std::uint32_t low_ = 0;
  std::uint32_t high_ = 0xFFFFFFFFu;
  std::uint32_t code_ = 0;
};

}  // namespace trace::coder
