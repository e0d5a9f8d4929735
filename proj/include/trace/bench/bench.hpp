#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "trace/pipeline/compressor.hpp"

namespace trace::bench {

struct BenchRecord {
  std::string config;
  std::string corpus;
  std::uint64_t in_bytes = 0;
  std::uint64_t out_bytes = 0;
  double cr = 0.0;
  double bpc = 0.0;
  double ms_per_mb = 0.0;  // median wall time per 10^6 input bytes
  double skip_frac = 0.0;
  std::optional<double> lcr;
};

// Fills cr = in/out and bpc = 8/cr.
BenchRecord make_record(std::string config, std::string corpus, std::uint64_t in_bytes,
                        std::uint64_t out_bytes, double ms_per_mb, double skip_frac);

// Config descriptor used in the CSV `config` column.
std::string describe(const pipeline::CompressOptions& options);

struct BenchOptions {
  int repeats = 3;
  // Also decompress each run and compare with the input.
  bool verify = false;
};

// Compresses `corpus` `repeats` times and reports the median latency. Throws
// kState if repeated runs disagree on the compressed size.
BenchRecord run_bench(std::span<const std::uint8_t> corpus, const std::string& corpus_id,
                      const pipeline::CompressOptions& options, const BenchOptions& bench = {});

struct SweepAxis {
  // hidden (alias attention), ffn, groups, context, shared-ffn, heads, lanes,
  // cache-size
  std::string name;
  std::vector<std::size_t> values;
};

// Parses "name=v1,v2,...". Throws kInvalidArgument on unknown names.
SweepAxis parse_axis(const std::string& spec);
void apply_axis(pipeline::CompressOptions& options, const std::string& name, std::size_t value);

enum class SweepMode {
  kGrid,   // cartesian product of all axes
  kCross,  // each axis varied alone around the base options
};

struct SweepSpec {
  pipeline::CompressOptions base;
  std::vector<SweepAxis> axes;
  SweepMode mode = SweepMode::kGrid;
  // Defaults to the cell with the fewest parameters.
  std::optional<pipeline::CompressOptions> reference;
  BenchOptions bench;
};

struct SweepCell {
  pipeline::CompressOptions options;
  std::string axis;  // varied axis in cross mode, empty in grid mode
  bool ok = false;
  std::string error;
  BenchRecord record;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  std::size_t reference = 0;  // index into cells
};

// Runs every cell (identical configurations only once), then fills each
// cell's LCR against the reference. The reference's own LCR, failed cells
// and cells whose ratio equals the reference's stay empty.
SweepResult sweep(std::span<const std::uint8_t> corpus, const std::string& corpus_id,
                  const SweepSpec& spec);

void write_csv_header(std::ostream& os);
void write_csv_row(std::ostream& os, const BenchRecord& r);

}  // namespace trace::bench
