#include "trace/model/trace_model.hpp"

#include <cmath>
#include <string>

#include "trace/error.hpp"
#include "trace/nn/ops.hpp"
#include "trace/nn/rng.hpp"

namespace trace::model {
namespace {

nn::Parameter glorot(std::string name, std::size_t rows, std::size_t cols, nn::Rng64& rng) {
  const float bound = static_cast<float>(std::sqrt(6.0 / static_cast<double>(rows + cols)));
  nn::Tensor t = nn::Tensor::matrix(rows, cols);
  for (float& v : t.values()) v = rng.uniform(-bound, bound);
  return nn::Parameter(std::move(name), std::move(t));
}

}  // namespace

TraceModel::TraceModel(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  nn::Rng64 rng(seed);
  const std::size_t h = config_.hidden;
  byte_embedding_ = glorot("byte_embedding", ModelConfig::kVocab, config_.byte_width(), rng);
  positional_ = glorot("positional", config_.context, h, rng);
  query_ = glorot("query", h, h, rng);
  key_ = glorot("key", h, h, rng);
  value_ = glorot("value", h, h, rng);
  attn_out_ = glorot("attn_out", h, h, rng);
  ffn_in_ = glorot("ffn_in", h, config_.ffn, rng);
  ffn_out_ = glorot("ffn_out", config_.ffn, h, rng);
  head_ = glorot("head", h, ModelConfig::kVocab, rng);
}

std::vector<nn::Parameter*> TraceModel::parameters() {
  return {&byte_embedding_, &positional_, &query_,   &key_, &value_,
          &attn_out_,       &ffn_in_,     &ffn_out_, &head_};
}

std::size_t TraceModel::parameter_count() const { return model::parameter_count(config_); }

void TraceModel::bind(nn::Graph& g) {
  if (bound_.graph_id == g.id()) return;
  bound_.graph_id = g.id();
  bound_.byte_embedding = g.parameter(byte_embedding_);
  bound_.positional = g.parameter(positional_);
  bound_.query = g.parameter(query_);
  bound_.key = g.parameter(key_);
  bound_.value = g.parameter(value_);
  bound_.attn_out = g.parameter(attn_out_);
  bound_.ffn_in = g.parameter(ffn_in_);
  bound_.ffn_out = g.parameter(ffn_out_);
  bound_.head = g.parameter(head_);
}

nn::Var TraceModel::embed(nn::Graph& g, std::span<const std::uint8_t> windows,
                          std::size_t lanes) {
  if (lanes == 0 || windows.size() != lanes * config_.window()) {
    throw Error(ErrorCode::kShapeMismatch,
                "history length " + std::to_string(windows.size()) + " does not match " +
                    std::to_string(lanes) + " windows of " + std::to_string(config_.window()) +
                    " bytes");
  }
  bind(g);
  return nn::embed_groups(bound_.byte_embedding, bound_.positional, windows, lanes,
                          config_.context, config_.group);
}

nn::Var TraceModel::attention(nn::Graph& g, nn::Var x, std::size_t query_rows) {
  bind(g);
  const std::size_t c = config_.context;
  if (query_rows != 1 && query_rows != c) {
    throw Error(ErrorCode::kInvalidArgument, "query_rows must be 1 or the context length");
  }
  nn::Var xq = query_rows == c ? x : nn::take_last_rows(x, c);
  nn::Var q = nn::matmul(xq, bound_.query);
  nn::Var k = nn::matmul(x, bound_.key);
  nn::Var v = nn::matmul(x, bound_.value);
  nn::Var heads = nn::multi_head_attention(q, k, v, config_.heads, c, query_rows);
  return nn::matmul(heads, bound_.attn_out);
}

nn::Var TraceModel::layer(nn::Graph& g, nn::Var x, std::size_t query_rows) {
  nn::Var a = attention(g, x, query_rows);
  nn::Var xq = query_rows == config_.context ? x : nn::take_last_rows(x, config_.context);
  nn::Var y = nn::add(a, xq);
  for (std::size_t i = 0; i < config_.shared_ffn_repeats; ++i) {
    nn::Var hidden = nn::gelu(nn::matmul(y, bound_.ffn_in));
    y = nn::add(nn::matmul(hidden, bound_.ffn_out), y);
  }
  return y;
}

nn::Var TraceModel::logits(nn::Graph& g, std::span<const std::uint8_t> windows,
                           std::size_t lanes) {
  nn::Var x = embed(g, windows, lanes);
  nn::Var y = layer(g, x, 1);
  return nn::matmul(y, bound_.head);
}

nn::Tensor TraceModel::embed_groups(std::span<const std::uint8_t> window) {
  nn::Graph g;
  return embed(g, window, 1).value();
}

nn::Tensor TraceModel::attention(const nn::Tensor& x) {
  const std::size_t c = config_.context;
  if (x.rank() != 2 || x.rows() != c || x.cols() != config_.hidden) {
    throw Error(ErrorCode::kShapeMismatch,
                "attention input " + nn::shape_string(x.shape()) + " is not context x hidden");
  }
  nn::Graph g;
  return attention(g, g.constant(x), c).value();
}

nn::Tensor TraceModel::transformer_layer(const nn::Tensor& x) {
  const std::size_t c = config_.context;
  if (x.rank() != 2 || x.rows() != c || x.cols() != config_.hidden) {
    throw Error(ErrorCode::kShapeMismatch, "transformer_layer input " +
                                               nn::shape_string(x.shape()) +
                                               " is not context x hidden");
  }
  nn::Graph g;
  return layer(g, g.constant(x), c).value();
}

std::vector<float> TraceModel::predict(std::span<const std::uint8_t> window) {
  nn::Tensor p = predict_batch(window, 1);
  return {p.values().begin(), p.values().end()};
}

nn::Tensor TraceModel::predict_batch(std::span<const std::uint8_t> windows, std::size_t lanes) {
  nn::Graph g;
  return nn::softmax_rows(logits(g, windows, lanes).value());
}

}  // namespace trace::model
