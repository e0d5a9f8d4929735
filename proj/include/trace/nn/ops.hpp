#pragma once

#include "trace/nn/tensor.hpp"

// Forward-only tensor math. The differentiable versions in graph.hpp call
// these for their forward values.
namespace trace::nn {

// Rank-2 product. Summation over the inner dimension runs in increasing index
// order with a double accumulator.
Tensor matmul(const Tensor& a, const Tensor& b);

// Row-wise softmax over the trailing dimension, with max subtraction. Outputs
// are clamped to the smallest normal float so every entry stays positive.
Tensor softmax_rows(const Tensor& x);

// tanh-approximation GELU, elementwise.
Tensor gelu(const Tensor& x);
float gelu(float x);
// d gelu / dx at x.
float gelu_derivative(float x);

Tensor transpose(const Tensor& a);

}  // namespace trace::nn
