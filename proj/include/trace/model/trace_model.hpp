#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "trace/model/config.hpp"
#include "trace/nn/graph.hpp"
#include "trace/nn/parameter.hpp"
#include "trace/nn/tensor.hpp"

namespace trace::model {

// Single-layer transformer byte predictor with byte-grouped inputs and one
// FFN parameter pair applied shared_ffn_repeats times:
//
//   a = MultiHead(x) + x
//   y = a; repeat N: y = Gelu(y W1) W2 + y
//   p = softmax(y[last] Wout)
//
// No biases and no normalization layers.
class TraceModel {
 public:
  // Glorot-uniform initialization from `seed`, in parameters() order.
  TraceModel(const ModelConfig& config, std::uint64_t seed);

  TraceModel(const TraceModel&) = delete;
  TraceModel& operator=(const TraceModel&) = delete;
  TraceModel(TraceModel&&) = default;
  TraceModel& operator=(TraceModel&&) = default;

  const ModelConfig& config() const { return config_; }

  // byte_embedding, positional, query, key, value, attn_out, ffn_in,
  // ffn_out, head.
  std::vector<nn::Parameter*> parameters();
  std::size_t parameter_count() const;

  nn::Parameter& byte_embedding() { return byte_embedding_; }
  nn::Parameter& positional() { return positional_; }
  nn::Parameter& query() { return query_; }
  nn::Parameter& key() { return key_; }
  nn::Parameter& value() { return value_; }
  nn::Parameter& attn_out() { return attn_out_; }
  nn::Parameter& ffn_in() { return ffn_in_; }
  nn::Parameter& ffn_out() { return ffn_out_; }
  nn::Parameter& head() { return head_; }

  // Graph builders, batched over `lanes` windows of config().window() bytes.
  // query_rows selects how many trailing positions per lane produce output:
  // context for the full layer, 1 when only the last position is needed.
  nn::Var embed(nn::Graph& g, std::span<const std::uint8_t> windows, std::size_t lanes);
  nn::Var attention(nn::Graph& g, nn::Var x, std::size_t query_rows);
  nn::Var layer(nn::Graph& g, nn::Var x, std::size_t query_rows);
  // Next-byte logits, lanes x 256.
  nn::Var logits(nn::Graph& g, std::span<const std::uint8_t> windows, std::size_t lanes);

  // Single-window conveniences over a throwaway graph.
  nn::Tensor embed_groups(std::span<const std::uint8_t> window);
  nn::Tensor attention(const nn::Tensor& x);
  nn::Tensor transformer_layer(const nn::Tensor& x);
  std::vector<float> predict(std::span<const std::uint8_t> window);
  // lanes x 256 probabilities.
  nn::Tensor predict_batch(std::span<const std::uint8_t> windows, std::size_t lanes);

 private:
  void bind(nn::Graph& g);

  ModelConfig config_;
  nn::Parameter byte_embedding_;
  nn::Parameter positional_;
  nn::Parameter query_;
  nn::Parameter key_;
  nn::Parameter value_;
  nn::Parameter attn_out_;
  nn::Parameter ffn_in_;
  nn::Parameter ffn_out_;
  nn::Parameter head_;

  // Parameter leaves of the graph currently being built.
  struct Bound {
    std::uint64_t graph_id = 0;
    nn::Var byte_embedding, positional, query, key, value, attn_out, ffn_in, ffn_out, head;
  } bound_;
};

}  // namespace trace::model
