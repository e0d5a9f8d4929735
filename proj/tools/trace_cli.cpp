// Command-line front end: compress, decompress, bench, sweep.

#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "trace/bench/bench.hpp"
#include "trace/bench/order0.hpp"
#include "trace/error.hpp"
#include "trace/pipeline/compressor.hpp"

namespace {

using trace::Error;
using trace::ErrorCode;
using trace::pipeline::CompressOptions;

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "' for reading: " + std::strerror(errno));
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::kIo, "read failed for '" + path + "' at byte " + std::to_string(data.size()));
  return data;
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path + "' for writing: " + std::strerror(errno));
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path + "' after " + std::to_string(data.size()) + " bytes");
}

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path + "' for writing: " + std::strerror(errno));
  return out;
}

struct ModelFlags {
  CompressOptions options;
  bool controller = false;

  void attach(CLI::App* app) {
    auto& m = options.model;
    app->add_option("--hidden", m.hidden, "attention hidden dimension")->capture_default_str();
    app->add_option("--ffn", m.ffn, "FFN inner dimension")->capture_default_str();
    app->add_option("--groups", m.group, "bytes per group vector")->capture_default_str();
    app->add_option("--context", m.context, "group vectors per window")->capture_default_str();
    app->add_option("--shared-ffn", m.shared_ffn_repeats, "shared FFN repeats")->capture_default_str();
    app->add_option("--heads", m.heads, "attention heads")->capture_default_str();
    app->add_option("--lanes", options.lanes, "parallel lanes (batch)")->capture_default_str();
    app->add_option("--lr", options.lr, "Adam learning rate")->capture_default_str();
    app->add_flag("--bp-controller", controller, "gate updates with the back-prop controller");
    app->add_option("--cache-size", options.cache_capacity, "controller loss cache size")->capture_default_str();
  }

  CompressOptions resolved() const {
    CompressOptions o = options;
    o.controller = controller;
    return o;
  }
};

void write_stream_metrics(const std::string& path, const trace::pipeline::JobReport& report) {
  auto out = open_csv(path);
  out << "bytes_in,bits_out,code_bits,mean_loss,skip_count,wall_seconds\n";
  for (const auto& c : report.chunks) {
    out << c.bytes_in << ',' << c.bits_out << ',' << c.code_bits << ',';
    if (!std::isnan(c.mean_loss)) out << c.mean_loss;
    out << ',' << c.skip_count << ',' << c.wall_seconds << '\n';
  }
}

void emit_records(const std::string& path, const std::vector<trace::bench::BenchRecord>& records) {
  auto emit = [&](std::ostream& os) {
    trace::bench::write_csv_header(os);
    for (const auto& r : records) trace::bench::write_csv_row(os, r);
  };
  if (path.empty()) {
    emit(std::cout);
  } else {
    auto out = open_csv(path);
    emit(out);
  }
}

std::string corpus_id(const std::string& path) {
  const auto slash = path.find_last_of('/');
  return slash == std::string::npos ? path : path.substr(slash + 1);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transformer-based lossless byte-stream compressor"};
  app.require_subcommand(1);

  std::string in_path, out_path, metrics_out;
  std::uint64_t chunk_bytes = 1u << 16;

  auto* compress = app.add_subcommand("compress", "compress <in> <out>");
  ModelFlags compress_flags;
  std::uint64_t seed = 0;
  compress->add_option("in", in_path)->required();
  compress->add_option("out", out_path)->required();
  compress_flags.attach(compress);
  compress->add_option("--seed", seed, "model initialization seed (stored in the header)")->required();
  compress->add_option("--metrics-out", metrics_out, "per-chunk stream metrics CSV");
  compress->add_option("--chunk-bytes", chunk_bytes, "metrics chunk size")->capture_default_str();

  auto* decompress = app.add_subcommand("decompress", "decompress <in> <out>");
  decompress->add_option("in", in_path)->required();
  decompress->add_option("out", out_path)->required();
  decompress->add_option("--metrics-out", metrics_out, "per-chunk stream metrics CSV");
  decompress->add_option("--chunk-bytes", chunk_bytes, "metrics chunk size")->capture_default_str();

  auto* bench = app.add_subcommand("bench", "benchmark one configuration on a corpus");
  ModelFlags bench_flags;
  std::uint64_t bench_seed = 0;
  int repeats = 3;
  bool verify = false;
  bench->add_option("corpus", in_path)->required();
  bench_flags.attach(bench);
  bench->add_option("--seed", bench_seed)->capture_default_str();
  bench->add_option("--repeats", repeats, "timed runs; latency is the median")->capture_default_str();
  bench->add_flag("--verify", verify, "decompress each run and compare");
  bench->add_option("--metrics-out", metrics_out, "BenchRecord CSV (stdout if omitted)");

  auto* sweep = app.add_subcommand("sweep", "run a configuration sweep and report LCR");
  ModelFlags sweep_flags;
  std::uint64_t sweep_seed = 0;
  std::vector<std::string> axes;
  std::vector<std::string> reference;
  bool cross = false;
  int sweep_repeats = 3;
  sweep->add_option("corpus", in_path)->required();
  sweep_flags.attach(sweep);
  sweep->add_option("--seed", sweep_seed)->capture_default_str();
  sweep->add_option("--axis", axes, "name=v1,v2,... (repeatable)")->required();
  sweep->add_flag("--cross", cross, "vary each axis alone around the base config instead of the full grid");
  sweep->add_option("--reference", reference, "name=value overrides of the base config for the LCR reference cell");
  sweep->add_option("--repeats", sweep_repeats, "timed runs per cell")->capture_default_str();
  sweep->add_option("--metrics-out", metrics_out, "BenchRecord CSV (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: usage: " << e.what() << '\n';
    return 2;
  }

  try {
    if (compress->parsed()) {
      CompressOptions options = compress_flags.resolved();
      options.seed = seed;
      const auto input = read_file(in_path);
      trace::pipeline::JobReport report;
      report.chunk_bytes = chunk_bytes;
      const auto container = trace::pipeline::compress(input, options, &report);
      write_file(out_path, container);
      if (!metrics_out.empty()) write_stream_metrics(metrics_out, report);
      std::cerr << input.size() << " -> " << container.size() << " bytes\n";
    } else if (decompress->parsed()) {
      const auto container = read_file(in_path);
      trace::pipeline::JobReport report;
      report.chunk_bytes = chunk_bytes;
      const auto output = trace::pipeline::decompress(container, &report);
      write_file(out_path, output);
      if (!metrics_out.empty()) write_stream_metrics(metrics_out, report);
    } else if (bench->parsed()) {
      CompressOptions options = bench_flags.resolved();
      options.seed = bench_seed;
      const auto corpus = read_file(in_path);
      const std::string id = corpus_id(in_path);
      std::vector<trace::bench::BenchRecord> records;
      records.push_back(trace::bench::run_bench(corpus, id, options, {repeats, verify}));
      const auto baseline = trace::bench::order0_baseline(corpus);
      records.push_back(trace::bench::make_record("order0", id, corpus.size(), baseline, 0.0, 0.0));
      emit_records(metrics_out, records);
    } else if (sweep->parsed()) {
      trace::bench::SweepSpec spec;
      spec.base = sweep_flags.resolved();
      spec.base.seed = sweep_seed;
      spec.mode = cross ? trace::bench::SweepMode::kCross : trace::bench::SweepMode::kGrid;
      spec.bench.repeats = sweep_repeats;
      for (const auto& a : axes) spec.axes.push_back(trace::bench::parse_axis(a));
      if (!reference.empty()) {
        CompressOptions ref = spec.base;
        for (const auto& r : reference) {
          const auto axis = trace::bench::parse_axis(r);
          if (axis.values.size() != 1) {
            throw Error(ErrorCode::kInvalidArgument, "--reference takes a single value per name: " + r);
          }
          trace::bench::apply_axis(ref, axis.name, axis.values.front());
        }
        spec.reference = ref;
      }
      const auto corpus = read_file(in_path);
      const auto result = trace::bench::sweep(corpus, corpus_id(in_path), spec);
      std::vector<trace::bench::BenchRecord> records;
      for (const auto& cell : result.cells) {
        if (cell.ok) {
          records.push_back(cell.record);
        } else {
          std::cerr << "warning: cell " << cell.record.config << " failed: " << cell.error << '\n';
        }
      }
      emit_records(metrics_out, records);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << trace::error_code_name(e.code()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
