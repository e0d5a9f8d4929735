#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "trace/model/config.hpp"

namespace trace::pipeline {

inline constexpr std::array<std::uint8_t, 4> kMagic{'T', 'R', 'C', 'E'};
inline constexpr std::uint8_t kFormatVersion = 1;

// Fixed 46-byte little-endian preamble, fields in declaration order,
// followed immediately by the arithmetic-coded payload.
struct ContainerHeader {
  static constexpr std::size_t kSize = 46;

  std::uint8_t version = kFormatVersion;
  std::uint16_t hidden = 0;
  std::uint16_t ffn = 0;
  std::uint16_t group = 0;
  std::uint16_t context = 0;
  std::uint16_t shared_ffn = 0;
  std::uint16_t heads = 0;
  std::uint16_t lanes = 0;
  float lr = 0.0f;
  bool controller = false;
  std::uint16_t cache_capacity = 0;
  std::uint64_t seed = 0;
  std::uint64_t original_length = 0;
  std::uint32_t payload_crc = 0;

  model::ModelConfig model_config() const;

  void write(std::vector<std::uint8_t>& out) const;
  // Checks magic, then version, then length. Distinct error codes for each.
  static ContainerHeader read(std::span<const std::uint8_t> bytes);

  friend bool operator==(const ContainerHeader&, const ContainerHeader&) = default;
};

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

}  // namespace trace::pipeline
