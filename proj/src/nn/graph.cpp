#include "trace/nn/graph.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <memory>
#include <string>

#include "trace/error.hpp"
#include "trace/nn/kernels.hpp"
#include "trace/nn/ops.hpp"

namespace trace::nn {

namespace {
std::atomic<std::uint64_t> next_graph_id{1};
}  // namespace

Graph::Graph() : id_(next_graph_id.fetch_add(1, std::memory_order_relaxed)) {}

const Tensor& Var::value() const { return graph->value(*this); }

Var Graph::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Graph::parameter(Parameter& p) {
  Node n;
  n.borrowed = &p.value;
  n.param = &p;
  n.needs_grad = true;
  return push(std::move(n));
}

Var Graph::input(Tensor value) {
  Node n;
  n.owned = std::move(value);
  n.needs_grad = true;
  return push(std::move(n));
}

Var Graph::constant(Tensor value) {
  Node n;
  n.owned = std::move(value);
  return push(std::move(n));
}

Var Graph::record(Tensor value, bool needs_grad, BackwardFn fn) {
  Node n;
  n.owned = std::move(value);
  n.needs_grad = needs_grad;
  if (needs_grad) n.backward = std::move(fn);
  return push(std::move(n));
}

const Tensor& Graph::value(Var v) const {
  const Node& n = nodes_[v.id];
  return n.borrowed ? *n.borrowed : n.owned;
}

const Tensor* Graph::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (n.param) return &n.param->grad;
  return n.grad_touched ? &n.grad : nullptr;
}

Tensor& Graph::grad_buffer(Var v) {
  Node& n = nodes_[v.id];
  if (n.param) return n.param->grad;
  if (!n.grad_touched) {
    n.grad = Tensor(value(v).shape());
    n.grad_touched = true;
  }
  return n.grad;
}

void Graph::backward(Var loss) {
  if (value(loss).size() != 1) {
    throw Error(ErrorCode::kShapeMismatch,
                "backward needs a scalar loss, got " + shape_string(value(loss).shape()));
  }
  grad_buffer(loss)[0] += 1.0f;
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || !n.grad_touched) continue;
    n.backward(*this, n.grad);
  }
}

namespace {

void require_same_graph(Var a, Var b) {
  if (a.graph != b.graph) throw Error(ErrorCode::kInvalidArgument, "vars from different graphs");
}

void add_into(Tensor& dst, const Tensor& src) {
  float* d = dst.data();
  const float* s = src.data();
  for (std::size_t i = 0; i < dst.size(); ++i) d[i] += s[i];
}

}  // namespace

Var matmul(Var a, Var b) {
  require_same_graph(a, b);
  Graph& g = *a.graph;
  Tensor out = matmul(a.value(), b.value());
  const bool needs = g.requires_grad(a) || g.requires_grad(b);
  return g.record(std::move(out), needs, [a, b](Graph& g, const Tensor& dc) {
    const Tensor& av = g.value(a);
    const Tensor& bv = g.value(b);
    const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
    if (g.requires_grad(a)) {
      kernels::gemm(dc.data(), bv.data(), g.grad_buffer(a).data(), m, n, k, true,
                    kernels::Layout::kNormal, kernels::Layout::kTransposed);
    }
    if (g.requires_grad(b)) {
      kernels::gemm(av.data(), dc.data(), g.grad_buffer(b).data(), k, m, n, true,
                    kernels::Layout::kTransposed, kernels::Layout::kNormal);
    }
  });
}

Var add(Var a, Var b) {
  require_same_graph(a, b);
  Graph& g = *a.graph;
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (!av.same_shape(bv)) {
    throw Error(ErrorCode::kShapeMismatch,
                "add shape mismatch: " + shape_string(av.shape()) + " vs " + shape_string(bv.shape()));
  }
  Tensor out = av;
  add_into(out, bv);
  const bool needs = g.requires_grad(a) || g.requires_grad(b);
  return g.record(std::move(out), needs, [a, b](Graph& g, const Tensor& dy) {
    if (g.requires_grad(a)) add_into(g.grad_buffer(a), dy);
    if (g.requires_grad(b)) add_into(g.grad_buffer(b), dy);
  });
}

Var scale(Var a, float s) {
  Graph& g = *a.graph;
  Tensor out = a.value();
  for (float& x : out.values()) x *= s;
  return g.record(std::move(out), g.requires_grad(a), [a, s](Graph& g, const Tensor& dy) {
    Tensor& da = g.grad_buffer(a);
    for (std::size_t i = 0; i < da.size(); ++i) da[i] += s * dy[i];
  });
}

Var sum(Var a) {
  Graph& g = *a.graph;
  double total = 0.0;
  for (float x : a.value().values()) total += x;
  Tensor out({1}, static_cast<float>(total));
  return g.record(std::move(out), g.requires_grad(a), [a](Graph& g, const Tensor& dy) {
    Tensor& da = g.grad_buffer(a);
    for (float& x : da.values()) x += dy[0];
  });
}

Var gelu(Var a) {
  Graph& g = *a.graph;
  return g.record(gelu(a.value()), g.requires_grad(a), [a](Graph& g, const Tensor& dy) {
    const Tensor& x = g.value(a);
    Tensor& da = g.grad_buffer(a);
    for (std::size_t i = 0; i < da.size(); ++i) da[i] += gelu_derivative(x[i]) * dy[i];
  });
}

Var softmax_rows(Var a) {
  Graph& g = *a.graph;
  auto y = std::make_shared<Tensor>(softmax_rows(a.value()));
  Tensor out = *y;
  return g.record(std::move(out), g.requires_grad(a), [a, y](Graph& g, const Tensor& dy) {
    Tensor& da = g.grad_buffer(a);
    for (std::size_t r = 0; r < y->rows(); ++r) {
      auto yr = y->row(r);
      auto dyr = dy.row(r);
      double dot = 0.0;
      for (std::size_t i = 0; i < yr.size(); ++i) dot += static_cast<double>(yr[i]) * dyr[i];
      auto dar = da.row(r);
      for (std::size_t i = 0; i < yr.size(); ++i) {
        dar[i] += static_cast<float>(yr[i] * (dyr[i] - dot));
      }
    }
  });
}

Var softmax_cross_entropy(Var logits, std::span<const std::uint8_t> targets) {
  Graph& g = *logits.graph;
  const Tensor& x = logits.value();
  if (x.rank() != 2 || x.rows() != targets.size()) {
    throw Error(ErrorCode::kShapeMismatch, "softmax_cross_entropy: logits " +
                                               shape_string(x.shape()) + " vs " +
                                               std::to_string(targets.size()) + " targets");
  }
  for (std::uint8_t t : targets) {
    if (t >= x.cols()) throw Error(ErrorCode::kInvalidArgument, "target index out of range");
  }
  auto probs = std::make_shared<Tensor>(softmax_rows(x));
  std::vector<std::uint8_t> tgt(targets.begin(), targets.end());
  double total = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    const float mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (float v : row) z += std::exp(static_cast<double>(v) - mx);
    total += std::log(z) + mx - row[tgt[r]];
  }
  const double rows = static_cast<double>(x.rows());
  Tensor out({1}, static_cast<float>(total / rows));
  return g.record(std::move(out), g.requires_grad(logits),
                  [logits, probs, tgt = std::move(tgt), rows](Graph& g, const Tensor& dy) {
                    Tensor& dx = g.grad_buffer(logits);
                    const double s = dy[0] / rows;
                    for (std::size_t r = 0; r < probs->rows(); ++r) {
                      auto p = probs->row(r);
                      auto d = dx.row(r);
                      for (std::size_t i = 0; i < p.size(); ++i) {
                        const double onehot = i == tgt[r] ? 1.0 : 0.0;
                        d[i] += static_cast<float>((p[i] - onehot) * s);
                      }
                    }
                  });
}

Var embed_groups(Var table, Var positions, std::span<const std::uint8_t> bytes,
                 std::size_t lanes, std::size_t context, std::size_t group) {
  require_same_graph(table, positions);
  Graph& g = *table.graph;
  const Tensor& tv = table.value();
  const Tensor& pv = positions.value();
  const std::size_t width = tv.cols();
  const std::size_t h = width * group;
  if (tv.rows() != 256 || pv.rows() != context || pv.cols() != h) {
    throw Error(ErrorCode::kShapeMismatch,
                "embed_groups: table " + shape_string(tv.shape()) + ", positions " +
                    shape_string(pv.shape()) + " for context " + std::to_string(context) +
                    " group " + std::to_string(group));
  }
  if (bytes.size() != lanes * context * group) {
    throw Error(ErrorCode::kShapeMismatch,
                "embed_groups: expected " + std::to_string(lanes * context * group) +
                    " history bytes, got " + std::to_string(bytes.size()));
  }
  Tensor out = Tensor::uninitialized({lanes * context, h});
  for (std::size_t l = 0; l < lanes; ++l) {
    for (std::size_t j = 0; j < context; ++j) {
      float* dst = out.row(l * context + j).data();
      const float* pos = pv.row(j).data();
      for (std::size_t k = 0; k < group; ++k) {
        const std::uint8_t byte = bytes[(l * context + j) * group + k];
        const float* src = tv.row(byte).data();
        for (std::size_t d = 0; d < width; ++d) {
          dst[k * width + d] = src[d] + pos[k * width + d];
        }
      }
    }
  }
  std::vector<std::uint8_t> saved(bytes.begin(), bytes.end());
  const bool needs = g.requires_grad(table) || g.requires_grad(positions);
  return g.record(
      std::move(out), needs,
      [table, positions, saved = std::move(saved), lanes, context, group, width, h](
          Graph& g, const Tensor& dy) {
        if (g.requires_grad(table)) {
          std::vector<double> acc(256 * width, 0.0);
          std::vector<bool> used(256, false);
          for (std::size_t l = 0; l < lanes; ++l) {
            for (std::size_t j = 0; j < context; ++j) {
              const float* src = dy.row(l * context + j).data();
              for (std::size_t k = 0; k < group; ++k) {
                const std::uint8_t byte = saved[(l * context + j) * group + k];
                used[byte] = true;
                double* dst = acc.data() + byte * width;
                for (std::size_t d = 0; d < width; ++d) dst[d] += src[k * width + d];
              }
            }
          }
          Tensor& dt = g.grad_buffer(table);
          for (std::size_t b = 0; b < 256; ++b) {
            if (!used[b]) continue;
            for (std::size_t d = 0; d < width; ++d) {
              dt[b * width + d] = static_cast<float>(dt[b * width + d] + acc[b * width + d]);
            }
          }
        }
        if (g.requires_grad(positions)) {
          Tensor& dp = g.grad_buffer(positions);
          std::vector<double> acc(h);
          for (std::size_t j = 0; j < context; ++j) {
            std::fill(acc.begin(), acc.end(), 0.0);
            for (std::size_t l = 0; l < lanes; ++l) {
              const float* src = dy.row(l * context + j).data();
              for (std::size_t d = 0; d < h; ++d) acc[d] += src[d];
            }
            for (std::size_t d = 0; d < h; ++d) {
              dp[j * h + d] = static_cast<float>(dp[j * h + d] + acc[d]);
            }
          }
        }
      });
}

Var take_last_rows(Var x, std::size_t block_rows) {
  Graph& g = *x.graph;
  const Tensor& xv = x.value();
  if (xv.rank() != 2 || block_rows == 0 || xv.rows() % block_rows != 0) {
    throw Error(ErrorCode::kShapeMismatch, "take_last_rows: " + shape_string(xv.shape()) +
                                               " not divisible into blocks of " +
                                               std::to_string(block_rows));
  }
  const std::size_t blocks = xv.rows() / block_rows;
  const std::size_t n = xv.cols();
  Tensor out = Tensor::uninitialized({blocks, n});
  for (std::size_t b = 0; b < blocks; ++b) {
    auto src = xv.row(b * block_rows + block_rows - 1);
    std::copy(src.begin(), src.end(), out.row(b).begin());
  }
  return g.record(std::move(out), g.requires_grad(x),
                  [x, blocks, block_rows, n](Graph& g, const Tensor& dy) {
                    Tensor& dx = g.grad_buffer(x);
                    for (std::size_t b = 0; b < blocks; ++b) {
                      float* dst = dx.row(b * block_rows + block_rows - 1).data();
                      const float* src = dy.row(b).data();
                      for (std::size_t i = 0; i < n; ++i) dst[i] += src[i];
                    }
                  });
}

Var multi_head_attention(Var q, Var k, Var v, std::size_t heads, std::size_t context,
                         std::size_t query_rows) {
  require_same_graph(q, k);
  require_same_graph(q, v);
  Graph& g = *q.graph;
  const Tensor& qv = q.value();
  const Tensor& kv = k.value();
  const Tensor& vv = v.value();
  const std::size_t h = qv.cols();
  if (heads == 0 || context == 0 || query_rows == 0 || h % heads != 0 ||
      qv.rows() % query_rows != 0 || kv.cols() != h || vv.cols() != h ||
      kv.rows() != (qv.rows() / query_rows) * context || vv.rows() != kv.rows()) {
    throw Error(ErrorCode::kShapeMismatch,
                "multi_head_attention: q " + shape_string(qv.shape()) + ", k " +
                    shape_string(kv.shape()) + ", v " + shape_string(vv.shape()) + ", heads " +
                    std::to_string(heads) + ", context " + std::to_string(context));
  }
  const std::size_t lanes = qv.rows() / query_rows;
  const std::size_t hk = h / heads;
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(hk));

  // weights[((lane * query_rows + i) * heads + head) * context + j]
  auto weights = std::make_shared<std::vector<double>>(lanes * query_rows * heads * context);
  Tensor out = Tensor::uninitialized({qv.rows(), h});
  std::vector<double> scores(context);
  std::vector<double> acc(hk);
  for (std::size_t l = 0; l < lanes; ++l) {
    for (std::size_t i = 0; i < query_rows; ++i) {
      const float* qrow = qv.row(l * query_rows + i).data();
      float* orow = out.row(l * query_rows + i).data();
      for (std::size_t hd = 0; hd < heads; ++hd) {
        const std::size_t off = hd * hk;
        double mx = -INFINITY;
        for (std::size_t j = 0; j < context; ++j) {
          const float* krow = kv.row(l * context + j).data() + off;
          double s = 0.0;
          for (std::size_t d = 0; d < hk; ++d) s += static_cast<double>(qrow[off + d]) * krow[d];
          scores[j] = s * inv_scale;
          mx = std::max(mx, scores[j]);
        }
        double z = 0.0;
        for (std::size_t j = 0; j < context; ++j) {
          scores[j] = std::exp(scores[j] - mx);
          z += scores[j];
        }
        double* w = weights->data() + ((l * query_rows + i) * heads + hd) * context;
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t j = 0; j < context; ++j) {
          w[j] = scores[j] / z;
          const float* vrow = vv.row(l * context + j).data() + off;
          for (std::size_t d = 0; d < hk; ++d) acc[d] += w[j] * vrow[d];
        }
        for (std::size_t d = 0; d < hk; ++d) orow[off + d] = static_cast<float>(acc[d]);
      }
    }
  }

  const bool needs = g.requires_grad(q) || g.requires_grad(k) || g.requires_grad(v);
  return g.record(
      std::move(out), needs,
      [q, k, v, weights, lanes, query_rows, heads, context, hk, inv_scale](Graph& g,
                                                                           const Tensor& dy) {
        const Tensor& qv = g.value(q);
        const Tensor& kv = g.value(k);
        const Tensor& vv = g.value(v);
        const std::size_t h = qv.cols();
        // Accumulate in double, add into the float buffers once at the end.
        std::vector<double> dq(qv.size(), 0.0), dk(kv.size(), 0.0), dv(vv.size(), 0.0);
        std::vector<double> da(context), ds(context);
        for (std::size_t l = 0; l < lanes; ++l) {
          for (std::size_t i = 0; i < query_rows; ++i) {
            const std::size_t qr = l * query_rows + i;
            const float* qrow = qv.row(qr).data();
            const float* dorow = dy.row(qr).data();
            for (std::size_t hd = 0; hd < heads; ++hd) {
              const std::size_t off = hd * hk;
              const double* w = weights->data() + (qr * heads + hd) * context;
              double wda = 0.0;
              for (std::size_t j = 0; j < context; ++j) {
                const std::size_t kr = l * context + j;
                const float* vrow = vv.row(kr).data() + off;
                double s = 0.0;
                for (std::size_t d = 0; d < hk; ++d) {
                  s += static_cast<double>(dorow[off + d]) * vrow[d];
                  dv[kr * h + off + d] += w[j] * dorow[off + d];
                }
                da[j] = s;
                wda += w[j] * s;
              }
              for (std::size_t j = 0; j < context; ++j) {
                ds[j] = w[j] * (da[j] - wda) * inv_scale;
                const std::size_t kr = l * context + j;
                const float* krow = kv.row(kr).data() + off;
                for (std::size_t d = 0; d < hk; ++d) {
                  dq[qr * h + off + d] += ds[j] * krow[d];
                  dk[kr * h + off + d] += ds[j] * qrow[off + d];
                }
              }
            }
          }
        }
        auto flush = [&g](Var target, const std::vector<double>& src) {
          if (!g.requires_grad(target)) return;
          Tensor& dst = g.grad_buffer(target);
          for (std::size_t i = 0; i < dst.size(); ++i) {
            dst[i] = static_cast<float>(dst[i] + src[i]);
          }
        };
        flush(q, dq);
        flush(k, dk);
        flush(v, dv);
      });
}

}  // namespace trace::nn
