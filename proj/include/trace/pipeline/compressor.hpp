#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "trace/coder/quantize.hpp"
#include "trace/controller/bp_controller.hpp"
#include "trace/model/config.hpp"

namespace trace::pipeline {

struct CompressOptions {
  model::ModelConfig model;
  std::size_t lanes = 64;
  float lr = 0.001f;
  bool controller = false;
  std::size_t cache_capacity = 16;
  std::uint64_t seed = 0;

  // Throws kInvalidArgument for invalid model shapes or values that do not
  // fit the container's field widths.
  void validate() const;
};

// One metrics row per chunk of input. Counters are cumulative from the
// start of the job; mean_loss covers only the chunk's model-coded steps.
struct ChunkRecord {
  std::uint64_t bytes_in = 0;
  std::uint64_t bits_out = 0;
  double code_bits = 0.0;  // sum of -log2 q(x) over coded symbols
  double mean_loss = 0.0;  // nats; NaN if the chunk had no model-coded steps
  std::uint64_t skip_count = 0;
  double wall_seconds = 0.0;
};

// Per global timestep.
struct StepRecord {
  std::uint64_t step = 0;
  std::size_t coded_lanes = 0;
  std::size_t model_lanes = 0;  // lanes past warm-up, coded from the model
  double code_bits = 0.0;
  double mean_loss = 0.0;  // NaN when model_lanes == 0
  bool updated = false;
};

struct Observer {
  std::function<void(std::uint64_t step, std::size_t lane, const coder::QuantizedDistribution& q,
                     std::uint8_t symbol)>
      on_symbol;
  std::function<void(const StepRecord&)> on_step;
};

struct JobReport {
  // Input: chunk granularity in bytes for `chunks`.
  std::uint64_t chunk_bytes = 1u << 16;

  std::vector<ChunkRecord> chunks;
  controller::ControllerStats controller;
  std::uint64_t steps = 0;
  std::uint64_t updates = 0;
  std::uint64_t payload_bytes = 0;
  double wall_seconds = 0.0;
};

// Container bytes for `input`. Deterministic in (input, options).
std::vector<std::uint8_t> compress(std::span<const std::uint8_t> input,
                                   const CompressOptions& options, JobReport* report = nullptr,
                                   const Observer* observer = nullptr);

// Inverse of compress. Rejects bad magic, unsupported versions, truncated
// headers and payload checksum mismatches before decoding anything.
std::vector<std::uint8_t> decompress(std::span<const std::uint8_t> container,
                                     JobReport* report = nullptr,
                                     const Observer* observer = nullptr);

}  // namespace trace::pipeline
