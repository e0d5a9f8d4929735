#pragma once

#include <cstddef>

// Raw dense kernels behind the tensor ops. Every output element is a float32
// rounding of a double accumulator that sums its products in strictly
// increasing inner index, so results are independent of blocking or vector
// width.
namespace trace::nn::kernels {

// kTransposed means the operand is stored as its transpose: a as [k x m],
// b as [n x k].
enum class Layout { kNormal, kTransposed };

// c[m x n] = a[m x k] * b[k x n]; with accumulate, the double accumulator
// starts from the existing value of c instead of zero.
void gemm(const float* a, const float* b, float* c, std::size_t m, std::size_t k,
          std::size_t n, bool accumulate = false, Layout a_layout = Layout::kNormal,
          Layout b_layout = Layout::kNormal);

// dst[cols x rows] = transpose(src[rows x cols])
void transpose(const float* src, float* dst, std::size_t rows, std::size_t cols);

}  // namespace trace::nn::kernels
