#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "trace/model/config.hpp"
#include "trace/model/trace_model.hpp"

// Scalar double-precision re-implementation of the byte predictor, written
// loop by loop from the model equations. Used as an oracle for the float
// implementation and for 64-bit finite differences.
namespace trace::testing {

struct RefParams {
  // Row-major copies, same shapes as the model parameters.
  std::vector<double> embed, pos, wq, wk, wv, wo, w1, w2, out;

  static RefParams from(model::TraceModel& m) {
    auto copy = [](const nn::Parameter& p) {
      return std::vector<double>(p.value.values().begin(), p.value.values().end());
    };
    return {copy(m.byte_embedding()), copy(m.positional()), copy(m.query()),
            copy(m.key()),            copy(m.value()),      copy(m.attn_out()),
            copy(m.ffn_in()),         copy(m.ffn_out()),    copy(m.head())};
  }

  std::vector<std::vector<double>*> all() {
    return {&embed, &pos, &wq, &wk, &wv, &wo, &w1, &w2, &out};
  }
};

inline double ref_gelu(double x) {
  return 0.5 * x * (1.0 + std::tanh(std::sqrt(2.0 / M_PI) * (x + 0.044715 * x * x * x)));
}

// out[r][j] = sum_p a[r][p] * w[p][j]
inline std::vector<double> ref_matmul(const std::vector<double>& a, std::size_t rows,
                                      std::size_t inner, const std::vector<double>& w,
                                      std::size_t cols) {
  std::vector<double> out(rows * cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < cols; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < inner; ++p) s += a[r * inner + p] * w[p * cols + j];
      out[r * cols + j] = s;
    }
  }
  return out;
}

// Position vectors of one window: context x hidden.
inline std::vector<double> ref_embed(const model::ModelConfig& cfg, const RefParams& p,
                                     std::span<const std::uint8_t> window) {
  const std::size_t h = cfg.hidden, bw = cfg.byte_width();
  std::vector<double> x(cfg.context * h);
  for (std::size_t j = 0; j < cfg.context; ++j) {
    for (std::size_t k = 0; k < cfg.group; ++k) {
      const std::uint8_t b = window[j * cfg.group + k];
      for (std::size_t d = 0; d < bw; ++d) {
        x[j * h + k * bw + d] = p.embed[b * bw + d] + p.pos[j * h + k * bw + d];
      }
    }
  }
  return x;
}

// Multi-head attention output (before the residual) for the given query
// rows of x; `first_query` selects which rows act as queries.
inline std::vector<double> ref_attention(const model::ModelConfig& cfg, const RefParams& p,
                                         const std::vector<double>& x, std::size_t first_query) {
  const std::size_t h = cfg.hidden, c = cfg.context, hw = cfg.head_width();
  const std::size_t nq = c - first_query;
  std::vector<double> xq(x.begin() + static_cast<std::ptrdiff_t>(first_query * h), x.end());
  const auto q = ref_matmul(xq, nq, h, p.wq, h);
  const auto k = ref_matmul(x, c, h, p.wk, h);
  const auto v = ref_matmul(x, c, h, p.wv, h);
  std::vector<double> heads(nq * h, 0.0);
  for (std::size_t i = 0; i < nq; ++i) {
    for (std::size_t hd = 0; hd < cfg.heads; ++hd) {
      std::vector<double> s(c);
      double mx = -1e300;
      for (std::size_t j = 0; j < c; ++j) {
        double dot = 0.0;
        for (std::size_t d = 0; d < hw; ++d) dot += q[i * h + hd * hw + d] * k[j * h + hd * hw + d];
        s[j] = dot / std::sqrt(static_cast<double>(hw));
        mx = std::max(mx, s[j]);
      }
      double z = 0.0;
      for (double& e : s) z += (e = std::exp(e - mx));
      for (std::size_t j = 0; j < c; ++j) {
        for (std::size_t d = 0; d < hw; ++d) heads[i * h + hd * hw + d] += s[j] / z * v[j * h + hd * hw + d];
      }
    }
  }
  return ref_matmul(heads, nq, h, p.wo, h);
}

// Attention residual followed by the shared FFN applied `repeats` times.
inline std::vector<double> ref_layer(const model::ModelConfig& cfg, const RefParams& p,
                                     const std::vector<double>& x, std::size_t first_query) {
  const std::size_t h = cfg.hidden, nq = cfg.context - first_query;
  auto y = ref_attention(cfg, p, x, first_query);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += x[first_query * h + i];
  for (std::size_t n = 0; n < cfg.shared_ffn_repeats; ++n) {
    auto hid = ref_matmul(y, nq, h, p.w1, cfg.ffn);
    for (double& e : hid) e = ref_gelu(e);
    const auto f = ref_matmul(hid, nq, cfg.ffn, p.w2, h);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += f[i];
  }
  return y;
}

// Softmax over the next-byte logits of one window.
inline std::vector<double> ref_predict(const model::ModelConfig& cfg, const RefParams& p,
                                       std::span<const std::uint8_t> window) {
  const auto x = ref_embed(cfg, p, window);
  const auto y = ref_layer(cfg, p, x, cfg.context - 1);
  auto logits = ref_matmul(y, 1, cfg.hidden, p.out, 256);
  double mx = -1e300;
  for (double l : logits) mx = std::max(mx, l);
  double z = 0.0;
  for (double& l : logits) z += (l = std::exp(l - mx));
  for (double& l : logits) l /= z;
  return logits;
}

// Mean next-byte cross-entropy (nats) over `lanes` windows.
inline double ref_loss(const model::ModelConfig& cfg, const RefParams& p,
                       std::span<const std::uint8_t> windows, std::span<const std::uint8_t> targets) {
  const std::size_t w = cfg.window();
  double total = 0.0;
  for (std::size_t l = 0; l < targets.size(); ++l) {
    const auto probs = ref_predict(cfg, p, windows.subspan(l * w, w));
    total -= std::log(probs[targets[l]]);
  }
  return total / static_cast<double>(targets.size());
}

}  // namespace trace::testing
