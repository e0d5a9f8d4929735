#include "trace/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "trace/error.hpp"
#include "trace/nn/kernels.hpp"

namespace trace::nn {
namespace {

constexpr float kGeluScale = 0.7978845608028654f;  // sqrt(2/pi)
constexpr float kGeluCubic = 0.044715f;

void require_matrix(const Tensor& t, const char* what) {
  if (t.rank() != 2) {
    throw Error(ErrorCode::kShapeMismatch,
                std::string(what) + " expects a rank-2 tensor, got " + shape_string(t.shape()));
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  if (a.cols() != b.rows()) {
    throw Error(ErrorCode::kShapeMismatch, "matmul shape mismatch: " + shape_string(a.shape()) +
                                               " x " + shape_string(b.shape()));
  }
  Tensor c = Tensor::uninitialized({a.rows(), b.cols()});
  kernels::gemm(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
  return c;
}

Tensor softmax_rows(const Tensor& x) {
  Tensor y = Tensor::uninitialized(x.shape());
  const std::size_t n = x.cols();
  constexpr double kFloor = std::numeric_limits<float>::min();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto in = x.row(r);
    auto out = y.row(r);
    const float mx = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += std::exp(static_cast<double>(in[i]) - mx);
    for (std::size_t i = 0; i < n; ++i) {
      const double p = std::exp(static_cast<double>(in[i]) - mx) / total;
      out[i] = static_cast<float>(std::max(p, kFloor));
    }
  }
  return y;
}

float gelu(float x) {
  const float inner = kGeluScale * (x + kGeluCubic * x * x * x);
  return 0.5f * x * (1.0f + std::tanh(inner));
}

float gelu_derivative(float x) {
  const float inner = kGeluScale * (x + kGeluCubic * x * x * x);
  const float t = std::tanh(inner);
  const float dinner = kGeluScale * (1.0f + 3.0f * kGeluCubic * x * x);
  return 0.5f * (1.0f + t) + 0.5f * x * (1.0f - t * t) * dinner;
}

Tensor gelu(const Tensor& x) {
  Tensor y = Tensor::uninitialized(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = gelu(x[i]);
  return y;
}

Tensor transpose(const Tensor& a) {
  require_matrix(a, "transpose");
  Tensor t = Tensor::uninitialized({a.cols(), a.rows()});
  kernels::transpose(a.data(), t.data(), a.rows(), a.cols());
  return t;
}

}  // namespace trace::nn
