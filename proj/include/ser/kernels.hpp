#pragma once

#include <cstddef>
#include <vector>

#include "ser/tensor.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

// Hot inner loops: dense matrix product and 1-D cross-correlation plus its two
// gradients. The default entry points parallelize over independent output rows
// with OpenMP; ser::kernels::serial holds the reference implementations used by
// the tests and the benchmark. Both paths call the same per-row helpers, so for
// a fixed input the results are bit-identical at any thread count.

namespace ser::kernels {

namespace detail {

/// Dot product with four running partial sums. Fixed summation pattern shared
/// by every caller so parallel and serial results match exactly.
template <class S>
inline S dot(const S* a, const S* b, size_t n) {
  S acc0 = 0, acc1 = 0, acc2 = 0, acc3 = 0;
  const size_t limit = n & ~size_t(3);
  size_t i = 0;
  for (; i < limit; i += 4) {
    acc0 += a[i] * b[i];
    acc1 += a[i + 1] * b[i + 1];
    acc2 += a[i + 2] * b[i + 2];
    acc3 += a[i + 3] * b[i + 3];
  }
  S tail = 0;
  for (; i < n; ++i) tail += a[i] * b[i];
  return ((acc0 + acc1) + (acc2 + acc3)) + tail;
}

// y row i of a[m x k] * b[k x n]: accumulate k rank-1 updates.
template <class S>
inline void matmul_row(const S* a, const S* b, S* y, size_t i, size_t k, size_t n) {
  const S* arow = a + i * k;
  S* yrow = y + i * n;
  if (n == 1) {
    yrow[0] = dot(arow, b, k);  // matrix-vector fast path
    return;
  }
  for (size_t j = 0; j < n; ++j) yrow[j] = 0;
  for (size_t p = 0; p < k; ++p) {
    const S s = arow[p];
    const S* brow = b + p * n;
    for (size_t j = 0; j < n; ++j) yrow[j] += s * brow[j];
  }
}

// One output position of the cross-correlation: y[t][:] over all channels.
template <class S>
inline void conv1d_row(const S* x, const S* w, const S* bias, S* y, size_t t, size_t in_ch,
                       size_t out_ch, size_t kw) {
  S* yrow = y + t * out_ch;
  for (size_t o = 0; o < out_ch; ++o) yrow[o] = bias[o];
  for (size_t j = 0; j < kw; ++j) {
    const S* xrow = x + (t + j) * in_ch;
    for (size_t c = 0; c < in_ch; ++c) {
      const S s = xrow[c];
      const S* wrow = w + (j * in_ch + c) * out_ch;
      for (size_t o = 0; o < out_ch; ++o) yrow[o] += s * wrow[o];
    }
  }
}

// Kernel/bias gradients for output channels [o0, o1): serial over time so each
// accumulator sees addends in ascending-t order regardless of the block split.
template <class S>
inline void conv1d_grad_w_block(const S* x, const S* dy, S* dw, S* dbias, size_t out_len,
                                size_t in_ch, size_t out_ch, size_t kw, size_t o0, size_t o1) {
  for (size_t t = 0; t < out_len; ++t) {
    const S* dyrow = dy + t * out_ch;
    for (size_t o = o0; o < o1; ++o) dbias[o] += dyrow[o];
    for (size_t j = 0; j < kw; ++j) {
      const S* xrow = x + (t + j) * in_ch;
      for (size_t c = 0; c < in_ch; ++c) {
        const S s = xrow[c];
        S* dwrow = dw + (j * in_ch + c) * out_ch;
        for (size_t o = o0; o < o1; ++o) dwrow[o] += s * dyrow[o];
      }
    }
  }
}

// Input gradient at position s: sum over kernel taps whose window covers s.
template <class S>
inline void conv1d_grad_x_row(const S* w, const S* dy, S* dx, size_t s, size_t out_len,
                              size_t in_ch, size_t out_ch, size_t kw) {
  S* dxrow = dx + s * in_ch;
  for (size_t c = 0; c < in_ch; ++c) dxrow[c] = 0;
  for (size_t j = 0; j < kw; ++j) {
    if (s < j) break;  // j ascending: once s < j all later taps miss too
    const size_t t = s - j;
    if (t >= out_len) continue;
    const S* dyrow = dy + t * out_ch;
    for (size_t c = 0; c < in_ch; ++c) {
      dxrow[c] += dot(w + (j * in_ch + c) * out_ch, dyrow, out_ch);
    }
  }
}

inline size_t block_begin(size_t n, int nblocks, int b) {
  return n * static_cast<size_t>(b) / static_cast<size_t>(nblocks);
}

}  // namespace detail

namespace serial {

/// y[m x n] = a[m x k] * b[k x n].
template <class S>
void matmul(const S* a, const S* b, S* y, size_t m, size_t k, size_t n) {
  for (size_t i = 0; i < m; ++i) detail::matmul_row(a, b, y, i, k, n);
}

/// Valid cross-correlation: x[len x in_ch], w[kw x in_ch x out_ch], bias[out_ch]
/// -> y[(len-kw+1) x out_ch].
template <class S>
void conv1d_forward(const S* x, const S* w, const S* bias, S* y, size_t len, size_t in_ch,
                    size_t out_ch, size_t kw) {
  const size_t out_len = len - kw + 1;
  for (size_t t = 0; t < out_len; ++t) detail::conv1d_row(x, w, bias, y, t, in_ch, out_ch, kw);
}

/// dw[kw x in_ch x out_ch], dbias[out_ch] accumulated from dy[out_len x out_ch].
/// Output buffers must be zeroed by the caller.
template <class S>
void conv1d_grad_w(const S* x, const S* dy, S* dw, S* dbias, size_t out_len, size_t in_ch,
                   size_t out_ch, size_t kw) {
  detail::conv1d_grad_w_block(x, dy, dw, dbias, out_len, in_ch, out_ch, kw, 0, out_ch);
}

/// dx[len x in_ch] from dy[out_len x out_ch]; len = out_len + kw - 1.
template <class S>
void conv1d_grad_x(const S* w, const S* dy, S* dx, size_t len, size_t in_ch, size_t out_ch,
                   size_t kw) {
  const size_t out_len = len - kw + 1;
  for (size_t s = 0; s < len; ++s)
    detail::conv1d_grad_x_row(w, dy, dx, s, out_len, in_ch, out_ch, kw);
}

}  // namespace serial

template <class S>
void matmul(const S* a, const S* b, S* y, size_t m, size_t k, size_t n) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (m * k * n > 16384)
#endif
  for (ptrdiff_t i = 0; i < static_cast<ptrdiff_t>(m); ++i) {
    detail::matmul_row(a, b, y, static_cast<size_t>(i), k, n);
  }
}

template <class S>
void conv1d_forward(const S* x, const S* w, const S* bias, S* y, size_t len, size_t in_ch,
                    size_t out_ch, size_t kw) {
  const size_t out_len = len - kw + 1;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (out_len * in_ch * out_ch * kw > 32768)
#endif
  for (ptrdiff_t t = 0; t < static_cast<ptrdiff_t>(out_len); ++t) {
    detail::conv1d_row(x, w, bias, y, static_cast<size_t>(t), in_ch, out_ch, kw);
  }
}

template <class S>
void conv1d_grad_w(const S* x, const S* dy, S* dw, S* dbias, size_t out_len, size_t in_ch,
                   size_t out_ch, size_t kw) {
#ifdef _OPENMP
  // memory-bound below ~8 multiply-adds per dy element; serial wins there
  if (out_len * in_ch * out_ch * kw > 32768 && out_ch >= 8 && in_ch * kw >= 8) {
#pragma omp parallel
    {
      const int nb = omp_get_num_threads();
      const int b = omp_get_thread_num();
      const size_t o0 = detail::block_begin(out_ch, nb, b);
      const size_t o1 = detail::block_begin(out_ch, nb, b + 1);
      if (o0 < o1) {
        // accumulate into thread-local scratch: shared rows would false-share
        std::vector<S> local_dw(kw * in_ch * out_ch, S(0));
        std::vector<S> local_db(out_ch, S(0));
        detail::conv1d_grad_w_block(x, dy, local_dw.data(), local_db.data(), out_len, in_ch,
                                    out_ch, kw, o0, o1);
        for (size_t row = 0; row < kw * in_ch; ++row) {
          for (size_t o = o0; o < o1; ++o) dw[row * out_ch + o] += local_dw[row * out_ch + o];
        }
        for (size_t o = o0; o < o1; ++o) dbias[o] += local_db[o];
      }
    }
    return;
  }
#endif
  detail::conv1d_grad_w_block(x, dy, dw, dbias, out_len, in_ch, out_ch, kw, 0, out_ch);
}

template <class S>
void conv1d_grad_x(const S* w, const S* dy, S* dx, size_t len, size_t in_ch, size_t out_ch,
                   size_t kw) {
  const size_t out_len = len - kw + 1;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (len * in_ch * out_ch * kw > 32768)
#endif
  for (ptrdiff_t s = 0; s < static_cast<ptrdiff_t>(len); ++s) {
    detail::conv1d_grad_x_row(w, dy, dx, static_cast<size_t>(s), out_len, in_ch, out_ch, kw);
  }
}

}  // namespace ser::kernels

namespace ser {

/// Matrix product with shape checking; inner extents must agree.
template <class S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.extent(1) != b.extent(0)) {
    throw ShapeError("matmul shape mismatch: " + a.shape_str() + " x " + b.shape_str());
  }
  Tensor<S> y({a.extent(0), b.extent(1)});
  kernels::matmul(a.data(), b.data(), y.data(), a.extent(0), a.extent(1), b.extent(1));
  return y;
}

}  // namespace ser
