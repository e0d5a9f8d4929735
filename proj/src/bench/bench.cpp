#include "trace/bench/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <map>
#include <sstream>

#include "trace/bench/lcr.hpp"
#include "trace/error.hpp"
#include "trace/model/config.hpp"

namespace trace::bench {
namespace {

using pipeline::CompressOptions;

std::string key_of(const CompressOptions& o) {
  return describe(o) + ";lr=" + std::to_string(o.lr) + ";seed=" + std::to_string(o.seed);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

BenchRecord make_record(std::string config, std::string corpus, std::uint64_t in_bytes,
                        std::uint64_t out_bytes, double ms_per_mb, double skip_frac) {
  if (in_bytes == 0 || out_bytes == 0) {
    throw Error(ErrorCode::kInvalidArgument, "bench record needs non-zero input and output sizes");
  }
  BenchRecord r;
  r.config = std::move(config);
  r.corpus = std::move(corpus);
  r.in_bytes = in_bytes;
  r.out_bytes = out_bytes;
  r.cr = static_cast<double>(in_bytes) / static_cast<double>(out_bytes);
  r.bpc = 8.0 / r.cr;
  r.ms_per_mb = ms_per_mb;
  r.skip_frac = skip_frac;
  return r;
}

std::string describe(const CompressOptions& o) {
  return o.model.describe() + ";lanes=" + std::to_string(o.lanes) +
         ";bp=" + (o.controller ? std::to_string(o.cache_capacity) : std::string("off"));
}

BenchRecord run_bench(std::span<const std::uint8_t> corpus, const std::string& corpus_id,
                      const CompressOptions& options, const BenchOptions& bench) {
  if (corpus.empty()) throw Error(ErrorCode::kInvalidArgument, "bench corpus is empty");
  if (bench.repeats < 1) throw Error(ErrorCode::kInvalidArgument, "repeats must be at least 1");
  std::vector<double> ms;
  std::uint64_t out_bytes = 0;
  double skip = 0.0;
  for (int r = 0; r < bench.repeats; ++r) {
    pipeline::JobReport report;
    const auto t0 = std::chrono::steady_clock::now();
    const auto container = pipeline::compress(corpus, options, &report);
    const double elapsed =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    ms.push_back(elapsed / (static_cast<double>(corpus.size()) / 1e6));
    if (r > 0 && container.size() != out_bytes) {
      throw Error(ErrorCode::kState, "compressed size changed between repeated runs");
    }
    out_bytes = container.size();
    skip = report.controller.decisions ? controller::skip_fraction(report.controller) : 0.0;
    if (bench.verify) {
      const auto restored = pipeline::decompress(container);
      if (!std::equal(restored.begin(), restored.end(), corpus.begin(), corpus.end())) {
        throw Error(ErrorCode::kState, "round trip mismatch for " + describe(options));
      }
    }
  }
  return make_record(describe(options), corpus_id, corpus.size(), out_bytes, median(ms), skip);
}

SweepAxis parse_axis(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
    throw Error(ErrorCode::kInvalidArgument, "axis must look like name=v1,v2: " + spec);
  }
  SweepAxis axis;
  axis.name = spec.substr(0, eq);
  std::stringstream ss(spec.substr(eq + 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || item.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "bad axis value '" + item + "' in " + spec);
    }
    axis.values.push_back(static_cast<std::size_t>(v));
  }
  CompressOptions probe;
  apply_axis(probe, axis.name, 1);  // validates the name
  return axis;
}

void apply_axis(CompressOptions& o, const std::string& name, std::size_t value) {
  if (name == "hidden" || name == "attention") {
    o.model.hidden = value;
  } else if (name == "ffn") {
    o.model.ffn = value;
  } else if (name == "groups") {
    o.model.group = value;
  } else if (name == "context") {
    o.model.context = value;
  } else if (name == "shared-ffn") {
    o.model.shared_ffn_repeats = value;
  } else if (name == "heads") {
    o.model.heads = value;
  } else if (name == "lanes") {
    o.lanes = value;
  } else if (name == "cache-size") {
    o.cache_capacity = value;
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown sweep axis '" + name + "'");
  }
}

SweepResult sweep(std::span<const std::uint8_t> corpus, const std::string& corpus_id,
                  const SweepSpec& spec) {
  SweepResult result;
  auto add_cell = [&](const CompressOptions& o, const std::string& axis) {
    SweepCell cell;
    cell.options = o;
    cell.axis = axis;
    result.cells.push_back(std::move(cell));
  };

  if (spec.mode == SweepMode::kGrid) {
    std::vector<CompressOptions> grid{spec.base};
    for (const SweepAxis& axis : spec.axes) {
      std::vector<CompressOptions> next;
      for (const CompressOptions& o : grid) {
        for (std::size_t v : axis.values) {
          CompressOptions c = o;
          apply_axis(c, axis.name, v);
          next.push_back(c);
        }
      }
      grid = std::move(next);
    }
    for (const auto& o : grid) add_cell(o, "");
  } else {
    for (const SweepAxis& axis : spec.axes) {
      for (std::size_t v : axis.values) {
        CompressOptions c = spec.base;
        apply_axis(c, axis.name, v);
        add_cell(c, axis.name);
      }
    }
  }

  if (spec.reference) {
    const std::string ref_key = key_of(*spec.reference);
    auto it = std::find_if(result.cells.begin(), result.cells.end(),
                           [&](const SweepCell& c) { return key_of(c.options) == ref_key; });
    if (it == result.cells.end()) {
      add_cell(*spec.reference, "reference");
      result.reference = result.cells.size() - 1;
    } else {
      result.reference = static_cast<std::size_t>(it - result.cells.begin());
    }
  }

  std::map<std::string, SweepCell> done;
  for (SweepCell& cell : result.cells) {
    const std::string key = key_of(cell.options);
    if (auto it = done.find(key); it != done.end()) {
      cell.ok = it->second.ok;
      cell.error = it->second.error;
      cell.record = it->second.record;
      continue;
    }
    try {
      cell.options.validate();
      cell.record = run_bench(corpus, corpus_id, cell.options, spec.bench);
      cell.ok = true;
    } catch (const std::exception& e) {
      cell.ok = false;
      cell.error = e.what();
      cell.record.config = describe(cell.options);
      cell.record.corpus = corpus_id;
    }
    done.emplace(key, cell);
  }

  if (!spec.reference) {
    std::size_t best = 0;
    std::size_t best_params = SIZE_MAX;
    for (std::size_t i = 0; i < result.cells.size(); ++i) {
      std::size_t params = SIZE_MAX;
      try {
        params = model::parameter_count(result.cells[i].options.model);
      } catch (const std::exception&) {
      }
      if (params < best_params) {
        best_params = params;
        best = i;
      }
    }
    result.reference = best;
  }

  const SweepCell& ref = result.cells[result.reference];
  const std::string ref_key = key_of(ref.options);
  for (SweepCell& cell : result.cells) {
    cell.record.lcr.reset();
    if (!cell.ok || !ref.ok || key_of(cell.options) == ref_key) continue;
    if (cell.record.cr == ref.record.cr) continue;
    cell.record.lcr = lcr(cell.record.ms_per_mb, cell.record.cr, ref.record.ms_per_mb, ref.record.cr);
  }
  if (spec.mode == SweepMode::kCross) {
    for (SweepCell& cell : result.cells) {
      cell.record.config = "axis=" + cell.axis + ";" + cell.record.config;
    }
  }
  return result;
}

void write_csv_header(std::ostream& os) {
  os << "config,corpus,in_bytes,out_bytes,cr,bpc,ms_per_mb,skip_frac,lcr\n";
}

void write_csv_row(std::ostream& os, const BenchRecord& r) {
  os << r.config << ',' << r.corpus << ',' << r.in_bytes << ',' << r.out_bytes << ','
     << format_double(r.cr) << ',' << format_double(r.bpc) << ',' << format_double(r.ms_per_mb)
     << ',' << format_double(r.skip_frac) << ',' << (r.lcr ? format_double(*r.lcr) : "") << '\n';
}

}  // namespace trace::bench
