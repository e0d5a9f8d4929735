#include "trace/coder/arithmetic_coder.hpp"

#include "trace/error.hpp"

namespace trace::coder {
namespace {

constexpr std::uint32_t kHalf = 0x80000000u;
constexpr std::uint32_t kQuarter = 0x40000000u;
constexpr std::uint32_t kThreeQuarters = 0xC0000000u;
constexpr std::uint64_t kMaxOverrunBits = 32;

struct Interval {
  std::uint32_t low;
  std::uint32_t high;
};

Interval narrow(std::uint32_t low, std::uint32_t high, std::uint32_t cum_lo,
                std::uint32_t cum_hi) {
  const std::uint64_t range = static_cast<std::uint64_t>(high) - low + 1;
  const std::uint32_t new_high = static_cast<std::uint32_t>(
      low + (range * cum_hi >> QuantizedDistribution::kBits) - 1);
  const std::uint32_t new_low =
      static_cast<std::uint32_t>(low + (range * cum_lo >> QuantizedDistribution::kBits));
  return {new_low, new_high};
}

}  // namespace

void ArithmeticEncoder::emit(bool bit) {
  partial_ = static_cast<std::uint8_t>((partial_ << 1) | (bit ? 1 : 0));
  ++emitted_;
  if (++partial_bits_ == 8) {
    out_.push_back(partial_);
    partial_ = 0;
    partial_bits_ = 0;
  }
}

void ArithmeticEncoder::emit_with_pending(bool bit) {
  emit(bit);
  for (; pending_ > 0; --pending_) emit(!bit);
}

void ArithmeticEncoder::encode(std::uint8_t symbol, const QuantizedDistribution& q) {
  if (finished_) throw Error(ErrorCode::kState, "encode after finish");
  const Interval iv = narrow(low_, high_, q.cum[symbol], q.cum[symbol + 1]);
  low_ = iv.low;
  high_ = iv.high;
  for (;;) {
    if (high_ < kHalf) {
      emit_with_pending(false);
    } else if (low_ >= kHalf) {
      emit_with_pending(true);
      low_ -= kHalf;
      high_ -= kHalf;
    } else if (low_ >= kQuarter && high_ < kThreeQuarters) {
      ++pending_;
      low_ -= kQuarter;
      high_ -= kQuarter;
    } else {
      break;
    }
    low_ <<= 1;
    high_ = (high_ << 1) | 1u;
  }
}

std::vector<std::uint8_t> ArithmeticEncoder::finish() {
  if (finished_) throw Error(ErrorCode::kState, "finish called twice");
  finished_ = true;
  // Two more bits select a quarter that lies inside [low, high].
  ++pending_;
  emit_with_pending(low_ >= kQuarter);
  if (partial_bits_ > 0) {
    out_.push_back(static_cast<std::uint8_t>(partial_ << (8 - partial_bits_)));
    partial_ = 0;
    partial_bits_ = 0;
  }
  return std::move(out_);
}

ArithmeticDecoder::ArithmeticDecoder(std::span<const std::uint8_t> payload) : in_(payload) {
  for (int i = 0; i < 32; ++i) code_ = (code_ << 1) | next_bit();
}

std::uint32_t ArithmeticDecoder::next_bit() {
  const std::uint64_t pos = bit_pos_++;
  const std::uint64_t byte = pos >> 3;
  if (byte < in_.size()) return (in_[byte] >> (7 - (pos & 7))) & 1u;
  if (pos - in_.size() * 8 >= kMaxOverrunBits) {
    throw Error(ErrorCode::kTruncated, "arithmetic decoder ran past the end of the payload");
  }
  return 0;
}

std::uint8_t ArithmeticDecoder::decode(const QuantizedDistribution& q) {
  const std::uint64_t range = static_cast<std::uint64_t>(high_) - low_ + 1;
  const std::uint64_t offset = static_cast<std::uint64_t>(code_) - low_;
  const std::uint32_t target = static_cast<std::uint32_t>(
      ((offset + 1) * QuantizedDistribution::kTotal - 1) / range);
  const std::uint8_t symbol = q.find(target);
  const Interval iv = narrow(low_, high_, q.cum[symbol], q.cum[symbol + 1]);
  low_ = iv.low;
  high_ = iv.high;
  for (;;) {
    if (high_ < kHalf) {
      // nothing to subtract
    } else if (low_ >= kHalf) {
      low_ -= kHalf;
      high_ -= kHalf;
      code_ -= kHalf;
    } else if (low_ >= kQuarter && high_ < kThreeQuarters) {
      low_ -= kQuarter;
      high_ -= kQuarter;
      code_ -= kQuarter;
    } else {
      break;
    }
    low_ <<= 1;
    high_ = (high_ << 1) | 1u;
    code_ = (code_ << 1) | next_bit();
  }
  return symbol;
}

}  // namespace trace::coder
