#include "trace/pipeline/compressor.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "trace/coder/arithmetic_coder.hpp"
#include "trace/error.hpp"
#include "trace/model/trace_model.hpp"
#include "trace/nn/adam.hpp"
#include "trace/nn/graph.hpp"
#include "trace/nn/ops.hpp"
#include "trace/pipeline/container.hpp"
#include "trace/pipeline/lanes.hpp"

namespace trace::pipeline {
namespace {

using Clock = std::chrono::steady_clock;

void require_u16(std::size_t v, const char* name) {
  if (v > std::numeric_limits<std::uint16_t>::max()) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(name) + " " + std::to_string(v) + " exceeds the 16-bit header field");
  }
}

class MetricsRecorder {
 public:
  explicit MetricsRecorder(JobReport* report) : report_(report), start_(Clock::now()) {}

  void add_step(const StepRecord& s, std::uint64_t bits_out, bool skipped) {
    bytes_ += s.coded_lanes;
    code_bits_ += s.code_bits;
    if (skipped) ++skips_;
    if (s.model_lanes > 0) {
      chunk_loss_ += s.mean_loss;
      ++chunk_loss_steps_;
    }
    if (report_ && bytes_ >= next_boundary_) {
      flush(bits_out);
      while (next_boundary_ <= bytes_) next_boundary_ += report_->chunk_bytes;
    }
  }

  void finish(std::uint64_t bits_out) {
    if (!report_) return;
    if (report_->chunks.empty() || report_->chunks.back().bytes_in != bytes_) {
      flush(bits_out);
    } else {
      report_->chunks.back().bits_out = bits_out;
      report_->chunks.back().wall_seconds = elapsed();
    }
    report_->wall_seconds = elapsed();
  }

 private:
  double elapsed() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }

  void flush(std::uint64_t bits_out) {
    ChunkRecord r;
    r.bytes_in = bytes_;
    r.bits_out = bits_out;
    r.code_bits = code_bits_;
    r.mean_loss = chunk_loss_steps_ ? chunk_loss_ / static_cast<double>(chunk_loss_steps_)
                                    : std::numeric_limits<double>::quiet_NaN();
    r.skip_count = skips_;
    r.wall_seconds = elapsed();
    report_->chunks.push_back(r);
    chunk_loss_ = 0.0;
    chunk_loss_steps_ = 0;
  }

  JobReport* report_;
  Clock::time_point start_;
  std::uint64_t next_boundary_ = report_ ? std::max<std::uint64_t>(report_->chunk_bytes, 1) : 0;
  std::uint64_t bytes_ = 0;
  double code_bits_ = 0.0;
  std::uint64_t skips_ = 0;
  double chunk_loss_ = 0.0;
  std::uint64_t chunk_loss_steps_ = 0;
};

struct EncodeSide {
  coder::ArithmeticEncoder coder;
  std::span<const std::uint8_t> data;

  std::uint8_t code(std::uint64_t pos, const coder::QuantizedDistribution& q) {
    coder.encode(data[pos], q);
    return data[pos];
  }
  std::uint64_t bits() const { return coder.bits(); }
};

struct DecodeSide {
  coder::ArithmeticDecoder coder;
  std::span<std::uint8_t> data;

  std::uint8_t code(std::uint64_t pos, const coder::QuantizedDistribution& q) {
    data[pos] = coder.decode(q);
    return data[pos];
  }
  std::uint64_t bits() const { return coder.bits_consumed(); }
};

// The shared timestep loop. At every global step each active lane's byte is
// coded, in lane order, from a distribution built before that byte is seen;
// only then may the model update. Encoder and decoder therefore see the same
// model state at every prediction.
template <typename Side>
void run_loop(Side& side, std::span<const std::uint8_t> data, std::uint64_t length,
              const CompressOptions& options, MetricsRecorder& metrics, JobReport* report,
              const Observer* observer) {
  const model::ModelConfig& mc = options.model;
  model::TraceModel net(mc, options.seed);
  auto params = net.parameters();
  const nn::AdamSettings adam{.lr = options.lr};
  controller::BpController ctrl(options.controller, options.cache_capacity);

  const auto segments = segment_lanes(length, options.lanes);
  const std::uint64_t steps = segments.empty() ? 0 : segments.front().length;
  const std::size_t window = mc.window();
  const auto uniform = coder::QuantizedDistribution::uniform();

  std::vector<std::uint8_t> windows;
  std::vector<std::uint8_t> targets;
  std::uint64_t updates = 0;

  for (std::uint64_t s = 0; s < steps; ++s) {
    std::size_t active = 0;
    while (active < segments.size() && segments[active].length > s) ++active;
    const bool use_model = s >= window;
    const std::size_t model_lanes = use_model ? active : 0;

    nn::Graph graph;
    nn::Var logits;
    nn::Tensor probs;
    if (model_lanes > 0) {
      windows.resize(model_lanes * window);
      for (std::size_t l = 0; l < model_lanes; ++l) {
        const std::uint8_t* src = data.data() + segments[l].offset + s - window;
        std::copy(src, src + window, windows.begin() + l * window);
      }
      logits = net.logits(graph, windows, model_lanes);
      probs = nn::softmax_rows(logits.value());
    }

    StepRecord rec;
    rec.step = s;
    rec.coded_lanes = active;
    rec.model_lanes = model_lanes;
    targets.resize(model_lanes);
    double loss_sum = 0.0;
    for (std::size_t l = 0; l < active; ++l) {
      const coder::QuantizedDistribution q = use_model ? coder::quantize(probs.row(l)) : uniform;
      const std::uint8_t sym = side.code(segments[l].offset + s, q);
      rec.code_bits -= std::log2(static_cast<double>(q.freq[sym]) / coder::QuantizedDistribution::kTotal);
      if (use_model) {
        targets[l] = sym;
        loss_sum += controller::cross_entropy(sym, probs.row(l));
      }
      if (observer && observer->on_symbol) observer->on_symbol(s, l, q, sym);
    }

    bool skipped = false;
    rec.mean_loss = std::numeric_limits<double>::quiet_NaN();
    if (model_lanes > 0) {
      rec.mean_loss = loss_sum / static_cast<double>(model_lanes);
      if (ctrl.decide(rec.mean_loss) == controller::Decision::kBackprop) {
        nn::Var loss = nn::softmax_cross_entropy(logits, targets);
        graph.backward(loss);
        nn::adam_step(params, adam);
        rec.updated = true;
        ++updates;
      } else {
        skipped = true;
      }
    }
    metrics.add_step(rec, side.bits(), skipped);
    if (observer && observer->on_step) observer->on_step(rec);
  }

  if (report) {
    report->controller = ctrl.stats();
    report->steps = steps;
    report->updates = updates;
  }
}

ContainerHeader make_header(const CompressOptions& o, std::uint64_t length) {
  ContainerHeader h;
  h.hidden = static_cast<std::uint16_t>(o.model.hidden);
  h.ffn = static_cast<std::uint16_t>(o.model.ffn);
  h.group = static_cast<std::uint16_t>(o.model.group);
  h.context = static_cast<std::uint16_t>(o.model.context);
  h.shared_ffn = static_cast<std::uint16_t>(o.model.shared_ffn_repeats);
  h.heads = static_cast<std::uint16_t>(o.model.heads);
  h.lanes = static_cast<std::uint16_t>(o.lanes);
  h.lr = o.lr;
  h.controller = o.controller;
  h.cache_capacity = static_cast<std::uint16_t>(o.cache_capacity);
  h.seed = o.seed;
  h.original_length = length;
  return h;
}

CompressOptions options_from_header(const ContainerHeader& h) {
  CompressOptions o;
  o.model = h.model_config();
  o.lanes = h.lanes;
  o.lr = h.lr;
  o.controller = h.controller;
  o.cache_capacity = h.cache_capacity;
  o.seed = h.seed;
  o.validate();
  return o;
}

}  // namespace

void CompressOptions::validate() const {
  model.validate();
  require_u16(model.hidden, "hidden");
  require_u16(model.ffn, "ffn");
  require_u16(model.group, "group");
  require_u16(model.context, "context");
  require_u16(model.shared_ffn_repeats, "shared_ffn_repeats");
  require_u16(model.heads, "heads");
  require_u16(lanes, "lanes");
  require_u16(cache_capacity, "cache_capacity");
  if (lanes < 1) throw Error(ErrorCode::kInvalidArgument, "lanes must be at least 1");
  if (cache_capacity < 1) throw Error(ErrorCode::kInvalidArgument, "cache capacity must be at least 1");
  if (!(lr > 0.0f) || !std::isfinite(lr)) {
    throw Error(ErrorCode::kInvalidArgument, "learning rate must be positive and finite");
  }
}

std::vector<std::uint8_t> compress(std::span<const std::uint8_t> input,
                                   const CompressOptions& options, JobReport* report,
                                   const Observer* observer) {
  options.validate();
  if (report) report->chunks.clear();
  MetricsRecorder metrics(report);
  EncodeSide side{{}, input};
  run_loop(side, input, input.size(), options, metrics, report, observer);
  const std::vector<std::uint8_t> payload = side.coder.finish();
  metrics.finish(payload.size() * 8);

  ContainerHeader header = make_header(options, input.size());
  header.payload_crc = crc32(payload);
  std::vector<std::uint8_t> out;
  out.reserve(ContainerHeader::kSize + payload.size());
  header.write(out);
  out.insert(out.end(), payload.begin(), payload.end());
  if (report) report->payload_bytes = payload.size();
  return out;
}

std::vector<std::uint8_t> decompress(std::span<const std::uint8_t> container, JobReport* report,
                                     const Observer* observer) {
  const ContainerHeader header = ContainerHeader::read(container);
  const auto payload = container.subspan(ContainerHeader::kSize);
  const std::uint32_t crc = crc32(payload);
  if (crc != header.payload_crc) {
    throw Error(ErrorCode::kChecksumMismatch, "payload checksum mismatch (stored " +
                                                  std::to_string(header.payload_crc) +
                                                  ", computed " + std::to_string(crc) + ")");
  }
  const CompressOptions options = options_from_header(header);
  // Every symbol costs at least -log2(65281/65536) > 1/178 bit, which bounds
  // the length a payload of this size can encode.
  const std::uint64_t max_symbols = (static_cast<std::uint64_t>(payload.size()) + 8) * 8 * 178;
  if (header.original_length > max_symbols) {
    throw Error(ErrorCode::kTruncated,
                "payload of " + std::to_string(payload.size()) + " bytes is too short for " +
                    std::to_string(header.original_length) + " original bytes");
  }
  if (report) report->chunks.clear();
  MetricsRecorder metrics(report);
  std::vector<std::uint8_t> out(header.original_length);
  DecodeSide side{coder::ArithmeticDecoder(payload), out};
  run_loop(side, out, out.size(), options, metrics, report, observer);
  metrics.finish(payload.size() * 8);
  if (report) report->payload_bytes = payload.size();
  return out;
}

}  // namespace trace::pipeline
