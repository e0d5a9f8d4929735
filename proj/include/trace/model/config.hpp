#pragma once

#include <cstddef>
#include <string>

namespace trace::model {

struct ModelConfig {
  static constexpr std::size_t kVocab = 256;

  std::size_t hidden = 256;
  std::size_t ffn = 4096;
  std::size_t group = 4;    // bytes per position vector
  std::size_t context = 8;  // position vectors per window
  std::size_t shared_ffn_repeats = 2;
  std::size_t heads = 8;

  // Embedding width of a single byte.
  std::size_t byte_width() const { return hidden / group; }
  // History bytes consumed per prediction.
  std::size_t window() const { return context * group; }
  std::size_t head_width() const { return hidden / heads; }

  // Throws kInvalidArgument on non-positive sizes or when group/heads do
  // not divide hidden.
  void validate() const;

  // Compact "h=..;ffn=..;..." form, free of commas for CSV use.
  std::string describe() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Total trainable scalars; independent of shared_ffn_repeats.
std::size_t parameter_count(const ModelConfig& config);

}  // namespace trace::model
