#include "trace/pipeline/container.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include <zlib.h>

#include "trace/error.hpp"

namespace trace::pipeline {
namespace {

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(v) >> (8 * i)));
  }
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  template <typename T>
  T get() {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

model::ModelConfig ContainerHeader::model_config() const {
  model::ModelConfig c;
  c.hidden = hidden;
  c.ffn = ffn;
  c.group = group;
  c.context = context;
  c.shared_ffn_repeats = shared_ffn;
  c.heads = heads;
  return c;
}

void ContainerHeader::write(std::vector<std::uint8_t>& out) const {
  out.insert(out.end(), kMagic.begin(), kMagic.end());
  put<std::uint8_t>(out, version);
  put(out, hidden);
  put(out, ffn);
  put(out, group);
  put(out, context);
  put(out, shared_ffn);
  put(out, heads);
  put(out, lanes);
  put(out, std::bit_cast<std::uint32_t>(lr));
  put<std::uint8_t>(out, controller ? 1 : 0);
  put(out, cache_capacity);
  put(out, seed);
  put(out, original_length);
  put(out, payload_crc);
}

ContainerHeader ContainerHeader::read(std::span<const std::uint8_t> bytes) {
  const std::size_t prefix = std::min(bytes.size(), kMagic.size());
  if (!std::equal(bytes.begin(), bytes.begin() + prefix, kMagic.begin())) {
    throw Error(ErrorCode::kBadMagic, "not a TRCE container (bad magic)");
  }
  if (bytes.size() < kMagic.size() + 1) {
    throw Error(ErrorCode::kTruncated, "container truncated inside the header (" +
                                           std::to_string(bytes.size()) + " bytes)");
  }
  Reader r(bytes.subspan(kMagic.size()));
  ContainerHeader h;
  h.version = r.get<std::uint8_t>();
  if (h.version != kFormatVersion) {
    throw Error(ErrorCode::kUnsupportedVersion,
                "unsupported container version " + std::to_string(h.version));
  }
  if (bytes.size() < kSize) {
    throw Error(ErrorCode::kTruncated, "container truncated inside the header (" +
                                           std::to_string(bytes.size()) + " of " +
                                           std::to_string(kSize) + " bytes)");
  }
  h.hidden = r.get<std::uint16_t>();
  h.ffn = r.get<std::uint16_t>();
  h.group = r.get<std::uint16_t>();
  h.context = r.get<std::uint16_t>();
  h.shared_ffn = r.get<std::uint16_t>();
  h.heads = r.get<std::uint16_t>();
  h.lanes = r.get<std::uint16_t>();
  h.lr = std::bit_cast<float>(r.get<std::uint32_t>());
  h.controller = r.get<std::uint8_t>() != 0;
  h.cache_capacity = r.get<std::uint16_t>();
  h.seed = r.get<std::uint64_t>();
  h.original_length = r.get<std::uint64_t>();
  h.payload_crc = r.get<std::uint32_t>();
  return h;
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths.
  constexpr std::size_t kStep = 1u << 30;
  for (std::size_t off = 0; off < bytes.size(); off += kStep) {
    const std::size_t n = std::min(kStep, bytes.size() - off);
    crc = ::crc32(crc, bytes.data() + off, static_cast<uInt>(n));
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace trace::pipeline
