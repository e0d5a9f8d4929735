#pragma once

#include <cstdint>
#include <string>

#include "trace/nn/tensor.hpp"

namespace trace::nn {

// A trainable tensor with its gradient accumulator and Adam moments. All four
// tensors share one shape; grad, m and v start at zero.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Tensor initial)
      : name(std::move(name)),
        value(std::move(initial)),
        grad(value.shape()),
        m(value.shape()),
        v(value.shape()) {}

  std::string name;
  Tensor value;
  Tensor grad;
  Tensor m;
  Tensor v;
  std::uint64_t step_count = 0;

  std::size_t size() const { return value.size(); }
  void zero_grad() { grad.fill(0.0f); }
};

}  // namespace trace::nn
