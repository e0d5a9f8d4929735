#include "trace/nn/kernels.hpp"

#include <cstring>
#include <vector>

#if defined(__AVX512F__)
#include <immintrin.h>
#endif

namespace trace::nn::kernels {
namespace {

constexpr std::size_t kRowTile = 4;
constexpr std::size_t kColTile = 32;
constexpr std::size_t kDepthBlock = 256;

// Operands are widened to double while packing, so the inner loops only
// load and multiply-add. Packed a: for each 4-row tile, k groups of 4
// values. Packed b: kd rows of 32 values for one column panel and one
// depth block.
void pack_a(const float* a, std::size_t m, std::size_t k, bool transposed, double* out) {
  for (std::size_t i0 = 0; i0 < m; i0 += kRowTile) {
    const std::size_t rows = m - i0 < kRowTile ? m - i0 : kRowTile;
    double* tile = out + i0 * k;
    for (std::size_t p = 0; p < k; ++p) {
      for (std::size_t r = 0; r < kRowTile; ++r) {
        const float v = r >= rows ? 0.0f : transposed ? a[p * m + i0 + r] : a[(i0 + r) * k + p];
        tile[p * kRowTile + r] = v;
      }
    }
  }
}

void pack_b(const float* b, std::size_t k, std::size_t n, std::size_t j, std::size_t p0,
            std::size_t kd, bool transposed, double* out) {
  if (transposed) {
    for (std::size_t q0 = 0; q0 < kd; q0 += 8) {
      const std::size_t q1 = q0 + 8 < kd ? q0 + 8 : kd;
      for (std::size_t v = 0; v < kColTile; ++v) {
        const float* src = b + (j + v) * k + p0;
        for (std::size_t q = q0; q < q1; ++q) out[q * kColTile + v] = src[q];
      }
    }
    return;
  }
  for (std::size_t q = 0; q < kd; ++q) {
    const float* src = b + (p0 + q) * n + j;
    double* dst = out + q * kColTile;
    for (std::size_t v = 0; v < kColTile; ++v) dst[v] = src[v];
  }
}

// Where a tile's accumulators start and end. Partial sums between depth
// blocks live in a double buffer with row stride 32.
struct TileIo {
  float* c;
  std::size_t ldc;
  double* partial;
  bool load_c;        // start from c (accumulate, first block)
  bool load_partial;  // start from the partial buffer
  bool store_c;       // last block: round into c
};

void tile_generic(const double* ap, const double* bp, std::size_t kd, std::size_t rows,
                  const TileIo& io) {
  double acc[kRowTile][kColTile];
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t v = 0; v < kColTile; ++v) {
      acc[r][v] = io.load_partial ? io.partial[r * kColTile + v]
                  : io.load_c     ? static_cast<double>(io.c[r * io.ldc + v])
                                  : 0.0;
    }
  }
  for (std::size_t p = 0; p < kd; ++p) {
    const double* brow = bp + p * kColTile;
    for (std::size_t r = 0; r < rows; ++r) {
      const double av = ap[p * kRowTile + r];
      for (std::size_t v = 0; v < kColTile; ++v) acc[r][v] += av * brow[v];
    }
  }
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t v = 0; v < kColTile; ++v) {
      if (io.store_c) {
        io.c[r * io.ldc + v] = static_cast<float>(acc[r][v]);
      } else {
        io.partial[r * kColTile + v] = acc[r][v];
      }
    }
  }
}

#if defined(__AVX512F__)
// Register-resident 4 x 32 tile; 16 zmm accumulators.
void tile_avx512(const double* ap, const double* bp, std::size_t kd, const TileIo& io) {
  float* const c = io.c;
  const std::size_t ldc = io.ldc;
  const double* const part = io.partial;
#define TRACE_ACC_INIT(r)                                                          \
  __m512d c##r##0 = _mm512_setzero_pd(), c##r##1 = _mm512_setzero_pd();            \
  __m512d c##r##2 = _mm512_setzero_pd(), c##r##3 = _mm512_setzero_pd();            \
  if (io.load_partial) {                                                           \
    c##r##0 = _mm512_loadu_pd(part + r * kColTile);                                \
    c##r##1 = _mm512_loadu_pd(part + r * kColTile + 8);                            \
    c##r##2 = _mm512_loadu_pd(part + r * kColTile + 16);                           \
    c##r##3 = _mm512_loadu_pd(part + r * kColTile + 24);                           \
  } else if (io.load_c) {                                                          \
    c##r##0 = _mm512_cvtps_pd(_mm256_loadu_ps(c + r * ldc));                       \
    c##r##1 = _mm512_cvtps_pd(_mm256_loadu_ps(c + r * ldc + 8));                   \
    c##r##2 = _mm512_cvtps_pd(_mm256_loadu_ps(c + r * ldc + 16));                  \
    c##r##3 = _mm512_cvtps_pd(_mm256_loadu_ps(c + r * ldc + 24));                  \
  }
  TRACE_ACC_INIT(0)
  TRACE_ACC_INIT(1)
  TRACE_ACC_INIT(2)
  TRACE_ACC_INIT(3)
#undef TRACE_ACC_INIT
  for (std::size_t p = 0; p < kd; ++p) {
    const double* brow = bp + p * kColTile;
    const double* arow = ap + p * kRowTile;
    const __m512d b0 = _mm512_loadu_pd(brow);
    const __m512d b1 = _mm512_loadu_pd(brow + 8);
    const __m512d b2 = _mm512_loadu_pd(brow + 16);
    const __m512d b3 = _mm512_loadu_pd(brow + 24);
#define TRACE_ROW(r)                                  \
  {                                                   \
    const __m512d av = _mm512_set1_pd(arow[r]);       \
    c##r##0 = _mm512_fmadd_pd(av, b0, c##r##0);       \
    c##r##1 = _mm512_fmadd_pd(av, b1, c##r##1);       \
    c##r##2 = _mm512_fmadd_pd(av, b2, c##r##2);       \
    c##r##3 = _mm512_fmadd_pd(av, b3, c##r##3);       \
  }
    TRACE_ROW(0)
    TRACE_ROW(1)
    TRACE_ROW(2)
    TRACE_ROW(3)
#undef TRACE_ROW
  }
#define TRACE_ACC_STORE(r)                                          \
  if (io.store_c) {                                                 \
    _mm256_storeu_ps(c + r * ldc, _mm512_cvtpd_ps(c##r##0));        \
    _mm256_storeu_ps(c + r * ldc + 8, _mm512_cvtpd_ps(c##r##1));    \
    _mm256_storeu_ps(c + r * ldc + 16, _mm512_cvtpd_ps(c##r##2));   \
    _mm256_storeu_ps(c + r * ldc + 24, _mm512_cvtpd_ps(c##r##3));   \
  } else {                                                          \
    _mm512_storeu_pd(io.partial + r * kColTile, c##r##0);           \
    _mm512_storeu_pd(io.partial + r * kColTile + 8, c##r##1);       \
    _mm512_storeu_pd(io.partial + r * kColTile + 16, c##r##2);      \
    _mm512_storeu_pd(io.partial + r * kColTile + 24, c##r##3);      \
  }
  TRACE_ACC_STORE(0)
  TRACE_ACC_STORE(1)
  TRACE_ACC_STORE(2)
  TRACE_ACC_STORE(3)
#undef TRACE_ACC_STORE
}
#endif

void edge_columns(const float* a, const float* b, float* c, std::size_t m, std::size_t k,
                  std::size_t n, std::size_t col_begin, bool accumulate, bool ta, bool tb) {
  const std::size_t a_row = ta ? 1 : k, a_col = ta ? m : 1;
  const std::size_t b_row = tb ? 1 : n, b_col = tb ? k : 1;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = col_begin; j < n; ++j) {
      double acc = accumulate ? static_cast<double>(c[i * n + j]) : 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        acc += static_cast<double>(a[i * a_row + p * a_col]) *
               static_cast<double>(b[p * b_row + j * b_col]);
      }
      c[i * n + j] = static_cast<float>(acc);
    }
  }
}

}  // namespace

void gemm(const float* a, const float* b, float* c, std::size_t m, std::size_t k,
          std::size_t n, bool accumulate, Layout a_layout, Layout b_layout) {
  const bool ta = a_layout == Layout::kTransposed;
  const bool tb = b_layout == Layout::kTransposed;
  const std::size_t full_cols = n - n % kColTile;
  if (full_cols > 0 && m > 0 && k > 0) {
    const std::size_t padded_m = (m + kRowTile - 1) / kRowTile * kRowTile;
    const std::size_t blocks = (k + kDepthBlock - 1) / kDepthBlock;
    thread_local std::vector<double> a_pack;
    thread_local std::vector<double> b_pack;
    thread_local std::vector<double> partial;
    if (a_pack.size() < padded_m * k) a_pack.resize(padded_m * k);
    if (b_pack.size() < kDepthBlock * kColTile) b_pack.resize(kDepthBlock * kColTile);
    if (blocks > 1 && partial.size() < padded_m * kColTile) partial.resize(padded_m * kColTile);
    pack_a(a, m, k, ta, a_pack.data());
    for (std::size_t j = 0; j < full_cols; j += kColTile) {
      for (std::size_t blk = 0; blk < blocks; ++blk) {
        const std::size_t p0 = blk * kDepthBlock;
        const std::size_t kd = k - p0 < kDepthBlock ? k - p0 : kDepthBlock;
        pack_b(b, k, n, j, p0, kd, tb, b_pack.data());
        for (std::size_t i = 0; i < m; i += kRowTile) {
          const double* ap = a_pack.data() + i * k + p0 * kRowTile;
          TileIo io{c + i * n + j, n, partial.data() + i * kColTile, accumulate && blk == 0,
                    blk > 0, blk + 1 == blocks};
#if defined(__AVX512F__)
          if (m - i >= kRowTile) {
            tile_avx512(ap, b_pack.data(), kd, io);
            continue;
          }
#endif
          tile_generic(ap, b_pack.data(), kd, m - i < kRowTile ? m - i : kRowTile, io);
        }
      }
    }
  } else if (k == 0 && !accumulate) {
    std::memset(c, 0, sizeof(float) * m * n);
    return;
  }
  if (full_cols < n) edge_columns(a, b, c, m, k, n, full_cols, accumulate, ta, tb);
}

void transpose(const float* src, float* dst, std::size_t rows, std::size_t cols) {
  constexpr std::size_t kBlock = 16;
  for (std::size_t r0 = 0; r0 < rows; r0 += kBlock) {
    const std::size_t r1 = r0 + kBlock < rows ? r0 + kBlock : rows;
    for (std::size_t c0 = 0; c0 < cols; c0 += kBlock) {
      const std::size_t c1 = c0 + kBlock < cols ? c0 + kBlock : cols;
      for (std::size_t cc = c0; cc < c1; ++cc) {
        for (std::size_t r = r0; r < r1; ++r) dst[cc * rows + r] = src[r * cols + cc];
      }
    }
  }
}

}  // namespace trace::nn::kernels
