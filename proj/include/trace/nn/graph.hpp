#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "trace/nn/parameter.hpp"
#include "trace/nn/tensor.hpp"

namespace trace::nn {

class Graph;

// Handle to a node in a Graph. Cheap to copy; valid while its Graph lives.
struct Var {
  Graph* graph = nullptr;
  std::uint32_t id = 0;

  const Tensor& value() const;
};

// Define-by-run reverse-mode record. A forward pass appends nodes; backward()
// walks them in reverse creation order, so gradient accumulation order is
// fixed by the forward program.
class Graph {
 public:
  // Receives the node's accumulated output gradient.
  using BackwardFn = std::function<void(Graph&, const Tensor& out_grad)>;

  Graph();
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Leaf bound to a parameter: reads p.value in place, and gradients
  // accumulate into p.grad.
  Var parameter(Parameter& p);
  // Leaf that owns its value and collects a gradient (readable via grad()).
  Var input(Tensor value);
  // Leaf without gradient.
  Var constant(Tensor value);

  // Appends an interior node. `fn` may be empty when no input needs a gradient.
  Var record(Tensor value, bool needs_grad, BackwardFn fn);

  const Tensor& value(Var v) const;
  // Null when no gradient reached the node.
  const Tensor* grad(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id].needs_grad; }

  // Gradient accumulator for v, zero-initialized on first use. For parameter
  // leaves this is the parameter's own grad tensor.
  Tensor& grad_buffer(Var v);

  // Seeds d(loss)/d(loss) = 1 and propagates. Throws unless loss is scalar.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }
  // Unique per Graph object within the process.
  std::uint64_t id() const { return id_; }

 private:
  struct Node {
    Tensor owned;
    const Tensor* borrowed = nullptr;
    Parameter* param = nullptr;
    Tensor grad;
    bool needs_grad = false;
    bool grad_touched = false;
    BackwardFn backward;
  };

  Var push(Node node);

  std::uint64_t id_;
  std::vector<Node> nodes_;
};

// Differentiable ops. Forward values come from the plain tensor ops.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var scale(Var a, float s);
Var sum(Var a);
Var gelu(Var a);
Var softmax_rows(Var a);

// Mean over rows of -ln softmax(logits[r])[targets[r]], as a scalar.
Var softmax_cross_entropy(Var logits, std::span<const std::uint8_t> targets);

// Byte-group embedding. `bytes` holds `lanes` windows of context*group bytes.
// Window byte j*group + k is looked up in `table` (256 x h/group) and written
// to columns [k*h/group, (k+1)*h/group) of output row lane*context + j;
// positional row j of `positions` (context x h) is added.
Var embed_groups(Var table, Var positions, std::span<const std::uint8_t> bytes,
                 std::size_t lanes, std::size_t context, std::size_t group);

// Row block*block_rows + block_rows-1 of each block: (blocks*block_rows x n) -> (blocks x n).
Var take_last_rows(Var x, std::size_t block_rows);

// Unmasked multi-head scaled dot-product attention, batched over lanes.
// q holds query_rows rows per lane, k and v hold context rows per lane, all
// h wide. Head i uses columns [i*h/heads, (i+1)*h/heads) and scores are
// scaled by 1/sqrt(h/heads). Output has q's shape, heads concatenated.
Var multi_head_attention(Var q, Var k, Var v, std::size_t heads, std::size_t context,
                         std::size_t query_rows);

}  // namespace trace::nn
