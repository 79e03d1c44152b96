#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ser/errors.hpp"
#include "ser/kernels.hpp"
#include "ser/rng.hpp"
#include "ser/tensor.hpp"

// Forward and backward passes of every layer in the recognition model:
// 1-D convolution, dropout, 1-D average pooling, sequence chunking, GRU cell
// and layer, dense, softmax. Backward passes are hand-derived and verified
// against central finite differences in the test suite.

namespace ser::nn {

// ---------------------------------------------------------------------------
// 1-D convolution (valid padding, cross-correlation convention)

template <class S>
struct Conv1dGrads {
  Tensor<S> d_kernels;  // [kw x in_ch x out_ch]
  Tensor<S> d_bias;     // [out_ch]
  Tensor<S> d_input;    // [len x in_ch]
};

template <class S>
void conv1d_forward_into(const Tensor<S>& x, const Tensor<S>& kernels, const Tensor<S>& bias,
                         Tensor<S>& y) {
  if (x.rank() != 2 || kernels.rank() != 3 || bias.rank() != 1) {
    throw ShapeError("conv1d: expected x[len x in_ch], kernels[k x in_ch x out_ch], bias[out_ch]");
  }
  const size_t len = x.extent(0), in_ch = x.extent(1);
  const size_t kw = kernels.extent(0), out_ch = kernels.extent(2);
  if (kernels.extent(1) != in_ch || bias.extent(0) != out_ch) {
    throw ShapeError("conv1d channel mismatch: x " + x.shape_str() + ", kernels " +
                     kernels.shape_str());
  }
  if (len < kw) {
    throw ShapeError("conv1d: input length " + std::to_string(len) + " shorter than kernel " +
                     std::to_string(kw));
  }
  y.reset({len - kw + 1, out_ch});
  kernels::conv1d_forward(x.data(), kernels.data(), bias.data(), y.data(), len, in_ch, out_ch, kw);
}

template <class S>
Tensor<S> conv1d_forward(const Tensor<S>& x, const Tensor<S>& kernels, const Tensor<S>& bias) {
  Tensor<S> y;
  conv1d_forward_into(x, kernels, bias, y);
  return y;
}

template <class S>
Conv1dGrads<S> conv1d_backward(const Tensor<S>& x, const Tensor<S>& kernels,
                               const Tensor<S>& upstream) {
  const size_t len = x.extent(0), in_ch = x.extent(1);
  const size_t kw = kernels.extent(0), out_ch = kernels.extent(2);
  const size_t out_len = len - kw + 1;
  if (upstream.rank() != 2 || upstream.extent(0) != out_len || upstream.extent(1) != out_ch) {
    throw ShapeError("conv1d_backward: upstream " + upstream.shape_str() + " does not match [" +
                     std::to_string(out_len) + "x" + std::to_string(out_ch) + "]");
  }
  Conv1dGrads<S> g{Tensor<S>(kernels.shape()), Tensor<S>({out_ch}), Tensor<S>(x.shape())};
  kernels::conv1d_grad_w(x.data(), upstream.data(), g.d_kernels.data(), g.d_bias.data(), out_len,
                         in_ch, out_ch, kw);
  kernels::conv1d_grad_x(kernels.data(), upstream.data(), g.d_input.data(), len, in_ch, out_ch,
                         kw);
  return g;
}

// ---------------------------------------------------------------------------
// 1-D average pooling (valid padding: trailing samples without a full window
// are dropped)

inline size_t pooled_length(size_t len, size_t pool, size_t stride) {
  return (len - pool) / stride + 1;
}

template <class S>
void avgpool1d_forward_into(const Tensor<S>& x, size_t pool, size_t stride, Tensor<S>& y) {
  if (x.rank() != 2) throw ShapeError("avgpool1d: expected x[len x ch]");
  const size_t len = x.extent(0), ch = x.extent(1);
  if (len < pool) {
    throw ShapeError("avgpool1d: input length " + std::to_string(len) + " shorter than pool " +
                     std::to_string(pool));
  }
  const size_t out_len = pooled_length(len, pool, stride);
  y.reset({out_len, ch});
  const S inv = S(1) / static_cast<S>(pool);
  for (size_t o = 0; o < out_len; ++o) {
    S* yrow = y.data() + o * ch;
    for (size_t j = 0; j < pool; ++j) {
      const S* xrow = x.data() + (o * stride + j) * ch;
      for (size_t c = 0; c < ch; ++c) yrow[c] += xrow[c];
    }
    for (size_t c = 0; c < ch; ++c) yrow[c] *= inv;
  }
}

template <class S>
Tensor<S> avgpool1d_forward(const Tensor<S>& x, size_t pool, size_t stride) {
  Tensor<S> y;
  avgpool1d_forward_into(x, pool, stride, y);
  return y;
}

template <class S>
void avgpool1d_backward_into(size_t in_len, const Tensor<S>& upstream, size_t pool, size_t stride,
                             Tensor<S>& dx) {
  const size_t out_len = upstream.extent(0), ch = upstream.extent(1);
  if (pooled_length(in_len, pool, stride) != out_len) {
    throw ShapeError("avgpool1d_backward: upstream rows " + std::to_string(out_len) +
                     " inconsistent with input length " + std::to_string(in_len));
  }
  dx.reset({in_len, ch});
  const S inv = S(1) / static_cast<S>(pool);
  for (size_t o = 0; o < out_len; ++o) {
    const S* urow = upstream.data() + o * ch;
    for (size_t j = 0; j < pool; ++j) {
      S* dxrow = dx.data() + (o * stride + j) * ch;
      for (size_t c = 0; c < ch; ++c) dxrow[c] += urow[c] * inv;
    }
  }
}

template <class S>
Tensor<S> avgpool1d_backward(size_t in_len, const Tensor<S>& upstream, size_t pool,
                             size_t stride) {
  Tensor<S> dx;
  avgpool1d_backward_into(in_len, upstream, pool, stride, dx);
  return dx;
}

// ---------------------------------------------------------------------------
// Inverted dropout: survivors are scaled by 1/(1-rate) at train time so that
// inference is the identity. The mask stores the applied scale per element.

enum class DropoutMode { Train, Infer };

template <class S>
struct DropoutResult {
  Tensor<S> output;
  Tensor<S> mask;  // 0 for dropped elements, 1/(1-rate) for survivors
};

/// Train-mode dropout on x itself; fills `mask`. Decisions consume one 32-bit
/// draw per element (two elements per generator step, low word first),
/// dropping when draw < rate * 2^32.
template <class S>
void dropout_apply_inplace(Tensor<S>& x, double rate, Rng& rng, Tensor<S>& mask) {
  if (rate < 0.0 || rate >= 1.0) {
    throw ValueError("dropout rate must be in [0, 1), got " + std::to_string(rate));
  }
  const uint32_t threshold = static_cast<uint32_t>(rate * 4294967296.0);
  const S keep_scale = static_cast<S>(1.0 / (1.0 - rate));
  mask.reset(x.shape());
  const size_t n = x.numel();
  size_t i = 0;
  auto decide = [&](uint32_t draw) {
    const S scale = draw < threshold ? S(0) : keep_scale;
    mask[i] = scale;
    x[i] *= scale;
    ++i;
  };
  while (i + 2 <= n) {
    const uint64_t v = rng.next_u64();
    decide(static_cast<uint32_t>(v));
    decide(static_cast<uint32_t>(v >> 32));
  }
  if (i < n) decide(static_cast<uint32_t>(rng.next_u64()));
}

template <class S>
DropoutResult<S> dropout_apply(const Tensor<S>& x, double rate, DropoutMode mode, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw ValueError("dropout rate must be in [0, 1), got " + std::to_string(rate));
  }
  if (mode == DropoutMode::Infer) {
    return {x, Tensor<S>::full(x.shape(), S(1))};
  }
  DropoutResult<S> r{x, Tensor<S>()};
  dropout_apply_inplace(r.output, rate, rng, r.mask);
  return r;
}

template <class S>
Tensor<S> dropout_backward(const Tensor<S>& mask, const Tensor<S>& upstream) {
  return hadamard(mask, upstream);
}

/// In-place variant used on large activations: upstream *= mask.
template <class S>
void dropout_backward_inplace(const Tensor<S>& mask, Tensor<S>& upstream) {
  if (!mask.same_shape(upstream)) {
    throw ShapeError("dropout_backward shape mismatch: " + mask.shape_str() + " vs " +
                     upstream.shape_str());
  }
  for (size_t i = 0; i < upstream.numel(); ++i) upstream[i] *= mask[i];
}

// ---------------------------------------------------------------------------
// Sequence chunking: bridge from the pooled conv output (variable length) to
// the fixed GRU step count. The time axis is partitioned into `steps`
// contiguous segments, as equal as possible (the first len % steps segments
// one sample longer), and each segment contributes its per-channel mean.

inline size_t chunk_segment_length(size_t len, size_t steps, size_t seg) {
  return len / steps + (seg < len % steps ? 1 : 0);
}

template <class S>
void sequence_chunk_into(const Tensor<S>& x, size_t steps, Tensor<S>& y) {
  if (x.rank() != 2) throw ShapeError("sequence_chunk: expected x[len x ch]");
  const size_t len = x.extent(0), ch = x.extent(1);
  if (len < steps) {
    throw ShapeError("sequence_chunk: input length " + std::to_string(len) +
                     " shorter than steps " + std::to_string(steps));
  }
  y.reset({steps, ch});
  size_t pos = 0;
  for (size_t s = 0; s < steps; ++s) {
    const size_t seg = chunk_segment_length(len, steps, s);
    const S inv = S(1) / static_cast<S>(seg);
    S* yrow = y.data() + s * ch;
    for (size_t j = 0; j < seg; ++j) {
      const S* xrow = x.data() + (pos + j) * ch;
      for (size_t c = 0; c < ch; ++c) yrow[c] += xrow[c];
    }
    for (size_t c = 0; c < ch; ++c) yrow[c] *= inv;
    pos += seg;
  }
}

template <class S>
Tensor<S> sequence_chunk(const Tensor<S>& x, size_t steps) {
  Tensor<S> y;
  sequence_chunk_into(x, steps, y);
  return y;
}

template <class S>
void sequence_chunk_backward_into(size_t in_len, const Tensor<S>& upstream, Tensor<S>& dx) {
  const size_t steps = upstream.extent(0), ch = upstream.extent(1);
  dx.reset({in_len, ch});
  size_t pos = 0;
  for (size_t s = 0; s < steps; ++s) {
    const size_t seg = chunk_segment_length(in_len, steps, s);
    const S inv = S(1) / static_cast<S>(seg);
    const S* urow = upstream.data() + s * ch;
    for (size_t j = 0; j < seg; ++j) {
      S* dxrow = dx.data() + (pos + j) * ch;
      for (size_t c = 0; c < ch; ++c) dxrow[c] = urow[c] * inv;
    }
    pos += seg;
  }
}

template <class S>
Tensor<S> sequence_chunk_backward(size_t in_len, const Tensor<S>& upstream) {
  Tensor<S> dx;
  sequence_chunk_backward_into(in_len, upstream, dx);
  return dx;
}

// ---------------------------------------------------------------------------
// GRU cell and layer.
//
//   z  = sigmoid(Wz x + Uz h_prev + bz)        update gate
//   r  = sigmoid(Wr x + Ur h_prev + br)        reset gate
//   hc = tanh(Wc x + Uc (r . h_prev) + bc)     candidate state
//   h  = (1 - z) . h_prev + z . hc
//
// Biases exist and start at zero even though the gate equations are often
// written without them.

template <class S>
struct GruParams {
  Tensor<S> w_update, w_reset, w_cand;  // [units x input_dim]
  Tensor<S> u_update, u_reset, u_cand;  // [units x units]
  Tensor<S> b_update, b_reset, b_cand;  // [units]

  size_t units() const { return w_update.extent(0); }
  size_t input_dim() const { return w_update.extent(1); }

  void check() const {
    const size_t u = units(), in = input_dim();
    auto expect = [](const Tensor<S>& t, size_t r, size_t c, const char* name) {
      if (t.rank() != 2 || t.extent(0) != r || t.extent(1) != c) {
        throw ShapeError(std::string("GruParams::") + name + " has shape " + t.shape_str() +
                         ", expected [" + std::to_string(r) + "x" + std::to_string(c) + "]");
      }
    };
    expect(w_reset, u, in, "w_reset");
    expect(w_cand, u, in, "w_cand");
    expect(u_update, u, u, "u_update");
    expect(u_reset, u, u, "u_reset");
    expect(u_cand, u, u, "u_cand");
    for (const auto* b : {&b_update, &b_reset, &b_cand}) {
      if (b->rank() != 1 || b->extent(0) != u) {
        throw ShapeError("GruParams bias has shape " + b->shape_str() + ", expected [" +
                         std::to_string(u) + "]");
      }
    }
  }
};

template <class S>
struct GruStepCache {
  Tensor<S> x, h_prev, z, r, hcand;
};

template <class S>
struct GruLayerCache {
  std::vector<GruStepCache<S>> steps;
};

template <class S>
struct GruGrads {
  GruParams<S> params;      // same shapes as the cell parameters
  Tensor<S> d_input_seq;    // [T x input_dim]
  Tensor<S> d_h0;           // [units]
};

namespace detail {

// y[units] = M[units x dim] * v[dim]
template <class S>
Tensor<S> matvec(const Tensor<S>& m, const Tensor<S>& v) {
  Tensor<S> y({m.extent(0)});
  kernels::matmul(m.data(), v.data(), y.data(), m.extent(0), m.extent(1), 1);
  return y;
}

// y[dim] = M^T[dim x units] * v[units], computed without materializing M^T.
template <class S>
Tensor<S> matvec_transposed(const Tensor<S>& m, const Tensor<S>& v) {
  const size_t rows = m.extent(0), cols = m.extent(1);
  Tensor<S> y({cols});
  for (size_t i = 0; i < rows; ++i) {
    const S s = v[i];
    const S* mrow = m.data() + i * cols;
    for (size_t j = 0; j < cols; ++j) y[j] += s * mrow[j];
  }
  return y;
}

// dM[rows x cols] += a[rows] outer b[cols]
template <class S>
void add_outer(Tensor<S>& dm, const Tensor<S>& a, const Tensor<S>& b) {
  const size_t rows = dm.extent(0), cols = dm.extent(1);
  for (size_t i = 0; i < rows; ++i) {
    const S s = a[i];
    S* row = dm.data() + i * cols;
    for (size_t j = 0; j < cols; ++j) row[j] += s * b[j];
  }
}

template <class S>
void add_into(Tensor<S>& dst, const Tensor<S>& src) {
  for (size_t i = 0; i < dst.numel(); ++i) dst[i] += src[i];
}

}  // namespace detail

template <class S>
std::pair<Tensor<S>, GruStepCache<S>> gru_cell_step(const Tensor<S>& x, const Tensor<S>& h_prev,
                                                    const GruParams<S>& p) {
  p.check();
  const size_t units = p.units();
  if (x.rank() != 1 || x.extent(0) != p.input_dim()) {
    throw ShapeError("gru_cell_step: x " + x.shape_str() + " does not match input_dim " +
                     std::to_string(p.input_dim()));
  }
  if (h_prev.rank() != 1 || h_prev.extent(0) != units) {
    throw ShapeError("gru_cell_step: h_prev " + h_prev.shape_str() + " does not match units " +
                     std::to_string(units));
  }

  Tensor<S> z = detail::matvec(p.w_update, x);
  detail::add_into(z, detail::matvec(p.u_update, h_prev));
  detail::add_into(z, p.b_update);
  z = map_unary(z, Activation::Sigmoid);

  Tensor<S> r = detail::matvec(p.w_reset, x);
  detail::add_into(r, detail::matvec(p.u_reset, h_prev));
  detail::add_into(r, p.b_reset);
  r = map_unary(r, Activation::Sigmoid);

  Tensor<S> hcand = detail::matvec(p.w_cand, x);
  detail::add_into(hcand, detail::matvec(p.u_cand, hadamard(r, h_prev)));
  detail::add_into(hcand, p.b_cand);
  hcand = map_unary(hcand, Activation::Tanh);

  Tensor<S> h({units});
  for (size_t i = 0; i < units; ++i) {
    h[i] = (S(1) - z[i]) * h_prev[i] + z[i] * hcand[i];
  }
  return {std::move(h), GruStepCache<S>{x, h_prev, std::move(z), std::move(r), std::move(hcand)}};
}

/// Runs the cell left to right from h0 (zeros when omitted); returns the full
/// output sequence so a flatten layer can follow the stacked layers.
template <class S>
std::pair<Tensor<S>, GruLayerCache<S>> gru_layer_forward(const Tensor<S>& seq,
                                                         const GruParams<S>& p,
                                                         const Tensor<S>* h0 = nullptr) {
  if (seq.rank() != 2) throw ShapeError("gru_layer_forward: expected seq[T x input_dim]");
  const size_t t_steps = seq.extent(0), in = seq.extent(1);
  if (t_steps == 0) throw ShapeError("gru_layer_forward: empty sequence");
  if (in != p.input_dim()) {
    throw ShapeError("gru_layer_forward: seq " + seq.shape_str() + " does not match input_dim " +
                     std::to_string(p.input_dim()));
  }
  const size_t units = p.units();
  Tensor<S> h = h0 ? *h0 : Tensor<S>({units});
  Tensor<S> out({t_steps, units});
  GruLayerCache<S> cache;
  cache.steps.reserve(t_steps);
  for (size_t t = 0; t < t_steps; ++t) {
    Tensor<S> x({in});
    for (size_t c = 0; c < in; ++c) x[c] = seq.at(t, c);
    auto [h_next, step] = gru_cell_step(x, h, p);
    for (size_t c = 0; c < units; ++c) out.at(t, c) = h_next[c];
    cache.steps.push_back(std::move(step));
    h = std::move(h_next);
  }
  return {std::move(out), std::move(cache)};
}

/// Backpropagation through time across all unrolled steps.
template <class S>
GruGrads<S> gru_layer_backward(const GruParams<S>& p, const GruLayerCache<S>& cache,
                               const Tensor<S>& upstream) {
  const size_t t_steps = cache.steps.size();
  const size_t units = p.units(), in = p.input_dim();
  if (upstream.rank() != 2 || upstream.extent(0) != t_steps || upstream.extent(1) != units) {
    throw ShapeError("gru_layer_backward: upstream " + upstream.shape_str() +
                     " does not match cache [" + std::to_string(t_steps) + "x" +
                     std::to_string(units) + "]");
  }

  GruGrads<S> g{GruParams<S>{Tensor<S>({units, in}), Tensor<S>({units, in}), Tensor<S>({units, in}),
                             Tensor<S>({units, units}), Tensor<S>({units, units}),
                             Tensor<S>({units, units}), Tensor<S>({units}), Tensor<S>({units}),
                             Tensor<S>({units})},
                Tensor<S>({t_steps, in}), Tensor<S>({units})};

  Tensor<S> carry({units});  // dL/dh_t arriving from step t+1
  for (size_t ti = t_steps; ti-- > 0;) {
    const GruStepCache<S>& s = cache.steps[ti];
    Tensor<S> dh({units});
    for (size_t i = 0; i < units; ++i) dh[i] = carry[i] + upstream.at(ti, i);

    Tensor<S> d_hcand({units}), d_z({units}), d_hprev({units});
    for (size_t i = 0; i < units; ++i) {
      d_hcand[i] = dh[i] * s.z[i];
      d_z[i] = dh[i] * (s.hcand[i] - s.h_prev[i]);
      d_hprev[i] = dh[i] * (S(1) - s.z[i]);
    }

    // candidate branch: hc = tanh(Wc x + Uc (r.h_prev) + bc)
    Tensor<S> da_c({units});
    for (size_t i = 0; i < units; ++i) da_c[i] = d_hcand[i] * (S(1) - s.hcand[i] * s.hcand[i]);
    Tensor<S> rh = hadamard(s.r, s.h_prev);
    detail::add_outer(g.params.w_cand, da_c, s.x);
    detail::add_outer(g.params.u_cand, da_c, rh);
    detail::add_into(g.params.b_cand, da_c);
    Tensor<S> dx = detail::matvec_transposed(p.w_cand, da_c);
    Tensor<S> d_rh = detail::matvec_transposed(p.u_cand, da_c);
    Tensor<S> d_r({units});
    for (size_t i = 0; i < units; ++i) {
      d_r[i] = d_rh[i] * s.h_prev[i];
      d_hprev[i] += d_rh[i] * s.r[i];
    }

    // update gate branch
    Tensor<S> da_z({units});
    for (size_t i = 0; i < units; ++i) da_z[i] = d_z[i] * s.z[i] * (S(1) - s.z[i]);
    detail::add_outer(g.params.w_update, da_z, s.x);
    detail::add_outer(g.params.u_update, da_z, s.h_prev);
    detail::add_into(g.params.b_update, da_z);
    detail::add_into(dx, detail::matvec_transposed(p.w_update, da_z));
    detail::add_into(d_hprev, detail::matvec_transposed(p.u_update, da_z));

    // reset gate branch
    Tensor<S> da_r({units});
    for (size_t i = 0; i < units; ++i) da_r[i] = d_r[i] * s.r[i] * (S(1) - s.r[i]);
    detail::add_outer(g.params.w_reset, da_r, s.x);
    detail::add_outer(g.params.u_reset, da_r, s.h_prev);
    detail::add_into(g.params.b_reset, da_r);
    detail::add_into(dx, detail::matvec_transposed(p.w_reset, da_r));
    detail::add_into(d_hprev, detail::matvec_transposed(p.u_reset, da_r));

    for (size_t c = 0; c < in; ++c) g.d_input_seq.at(ti, c) = dx[c];
    carry = std::move(d_hprev);
  }
  g.d_h0 = std::move(carry);
  return g;
}

// ---------------------------------------------------------------------------
// Dense layer

enum class DenseActivation { None, Relu };

template <class S>
struct DenseCache {
  Tensor<S> x;    // input
  Tensor<S> pre;  // pre-activation Wx + b
};

template <class S>
struct DenseGrads {
  Tensor<S> d_weights, d_bias, d_input;
};

template <class S>
std::pair<Tensor<S>, DenseCache<S>> dense_forward(const Tensor<S>& x, const Tensor<S>& w,
                                                  const Tensor<S>& b, DenseActivation act) {
  if (x.rank() != 1 || w.rank() != 2 || w.extent(1) != x.extent(0) ||
      b.extent(0) != w.extent(0)) {
    throw ShapeError("dense: x " + x.shape_str() + " incompatible with W " + w.shape_str() +
                     ", b " + b.shape_str());
  }
  Tensor<S> pre = detail::matvec(w, x);
  detail::add_into(pre, b);
  Tensor<S> y = act == DenseActivation::Relu ? map_unary(pre, Activation::Relu) : pre;
  return {std::move(y), DenseCache<S>{x, std::move(pre)}};
}

template <class S>
void dense_backward_into(const Tensor<S>& w, const DenseCache<S>& cache,
                         const Tensor<S>& upstream, DenseActivation act, DenseGrads<S>& g) {
  const size_t m = w.extent(0);
  if (upstream.rank() != 1 || upstream.extent(0) != m) {
    throw ShapeError("dense_backward: upstream " + upstream.shape_str() + " does not match [" +
                     std::to_string(m) + "]");
  }
  g.d_bias = upstream;
  if (act == DenseActivation::Relu) {
    for (size_t i = 0; i < m; ++i) {
      if (cache.pre[i] <= S(0)) g.d_bias[i] = 0;
    }
  }
  g.d_weights.reset(w.shape());
  detail::add_outer(g.d_weights, g.d_bias, cache.x);
  g.d_input = detail::matvec_transposed(w, g.d_bias);
}

template <class S>
DenseGrads<S> dense_backward(const Tensor<S>& w, const DenseCache<S>& cache,
                             const Tensor<S>& upstream, DenseActivation act) {
  DenseGrads<S> g;
  dense_backward_into(w, cache, upstream, act, g);
  return g;
}

// ---------------------------------------------------------------------------
// Softmax (max-subtraction for stability)

template <class S>
Tensor<S> softmax_forward(const Tensor<S>& x) {
  if (x.rank() != 1 || x.numel() == 0) throw ShapeError("softmax: expected nonempty vector");
  S max = x[0];
  for (size_t i = 1; i < x.numel(); ++i) max = x[i] > max ? x[i] : max;
  Tensor<S> y(x.shape());
  S sum = 0;
  for (size_t i = 0; i < x.numel(); ++i) {
    y[i] = std::exp(x[i] - max);
    sum += y[i];
  }
  for (size_t i = 0; i < x.numel(); ++i) y[i] /= sum;
  return y;
}

/// dx_i = y_i * (dy_i - sum_j dy_j y_j); `probs` is the forward output.
template <class S>
Tensor<S> softmax_backward(const Tensor<S>& probs, const Tensor<S>& upstream) {
  if (!probs.same_shape(upstream)) {
    throw ShapeError("softmax_backward shape mismatch: " + probs.shape_str() + " vs " +
                     upstream.shape_str());
  }
  S inner = 0;
  for (size_t i = 0; i < probs.numel(); ++i) inner += upstream[i] * probs[i];
  Tensor<S> dx(probs.shape());
  for (size_t i = 0; i < probs.numel(); ++i) dx[i] = probs[i] * (upstream[i] - inner);
  return dx;
}

/// Row-major flatten to a vector.
template <class S>
Tensor<S> flatten(const Tensor<S>& x) {
  return x.reshaped({x.numel()});
}

}  // namespace ser::nn
