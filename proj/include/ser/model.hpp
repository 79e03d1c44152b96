#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ser/errors.hpp"
#include "ser/init.hpp"
#include "ser/layers.hpp"
#include "ser/loss.hpp"
#include "ser/rng.hpp"
#include "ser/tensor.hpp"

// Architecture: conv1d -> dropout -> avgpool -> sequence_chunk -> stacked GRU
// -> flatten -> dense (ReLU) -> softmax head.

namespace ser {

struct ModelConfig {
  size_t input_samples = 16000;
  size_t conv_kernels = 128;
  size_t conv_kernel_size = 3;
  double dropout_rate = 0.3;
  size_t pool_size = 3;
  size_t pool_stride = 2;
  size_t gru_layers = 3;
  size_t gru_units = 64;
  size_t gru_steps = 10;
  size_t dense_units = 256;
  size_t num_classes = 7;
  std::string precision = "f32";  // "f32" | "f64"
  uint64_t seed = 1234;
};

/// Parse a flat key=value document with exactly the ModelConfig field names.
/// Unknown keys are errors. Blank lines and '#' comments are ignored.
ModelConfig parse_model_config(const std::string& text);
ModelConfig load_model_config(const std::string& path);

/// Canonical one-key-per-line serialization; parse_model_config round-trips it.
std::string serialize_model_config(const ModelConfig& cfg);

void validate_model_config(const ModelConfig& cfg);

/// Time-axis extents along the pipeline for a given config.
struct ShapeChain {
  size_t conv_len;    // input_samples - conv_kernel_size + 1
  size_t pooled_len;  // (conv_len - pool_size) / pool_stride + 1
  size_t steps;       // gru_steps
  size_t flat;        // gru_steps * gru_units
};

/// Throws when the pooled sequence is shorter than the GRU step count; the
/// message carries the computed lengths.
inline ShapeChain compute_shape_chain(const ModelConfig& cfg) {
  if (cfg.input_samples < cfg.conv_kernel_size) {
    throw ShapeError("infeasible geometry: input " + std::to_string(cfg.input_samples) +
                     " shorter than conv kernel " + std::to_string(cfg.conv_kernel_size));
  }
  const size_t conv_len = cfg.input_samples - cfg.conv_kernel_size + 1;
  if (conv_len < cfg.pool_size) {
    throw ShapeError("infeasible geometry: conv output " + std::to_string(conv_len) +
                     " shorter than pool " + std::to_string(cfg.pool_size));
  }
  const size_t pooled = nn::pooled_length(conv_len, cfg.pool_size, cfg.pool_stride);
  if (pooled < cfg.gru_steps) {
    throw ShapeError("infeasible geometry: pooled length " + std::to_string(pooled) +
                     " (conv " + std::to_string(conv_len) + ") is shorter than gru_steps " +
                     std::to_string(cfg.gru_steps));
  }
  return {conv_len, pooled, cfg.gru_steps, cfg.gru_steps * cfg.gru_units};
}

/// Closed-form trainable-parameter count for a config.
inline uint64_t param_count(const ModelConfig& cfg) {
  validate_model_config(cfg);
  const uint64_t conv =
      (static_cast<uint64_t>(cfg.conv_kernel_size) * 1 + 1) * cfg.conv_kernels;
  uint64_t gru = 0;
  uint64_t in_dim = cfg.conv_kernels;
  for (size_t l = 0; l < cfg.gru_layers; ++l) {
    gru += 3 * (static_cast<uint64_t>(cfg.gru_units) * (in_dim + cfg.gru_units) + cfg.gru_units);
    in_dim = cfg.gru_units;
  }
  const uint64_t flat = static_cast<uint64_t>(cfg.gru_steps) * cfg.gru_units;
  const uint64_t dense = (flat + 1) * cfg.dense_units;
  const uint64_t head = (static_cast<uint64_t>(cfg.dense_units) + 1) * cfg.num_classes;
  return conv + gru + dense + head;
}

/// The ordered, named collection of trainable tensors.
template <class S>
struct ParamSet {
  Tensor<S> conv_kernels;  // [k x 1 x conv_kernels]
  Tensor<S> conv_bias;     // [conv_kernels]
  std::vector<nn::GruParams<S>> gru;
  Tensor<S> dense_weights, dense_bias;  // [dense x flat], [dense]
  Tensor<S> head_weights, head_bias;    // [classes x dense], [classes]

  /// Visits every tensor in declared order. Serialization, the optimizer and
  /// the gradient checker all rely on this order being stable.
  template <class F>
  void for_each(F fn) {
    fn("conv.kernels", conv_kernels);
    fn("conv.bias", conv_bias);
    for (size_t l = 0; l < gru.size(); ++l) {
      const std::string prefix = "gru" + std::to_string(l) + ".";
      fn(prefix + "w_update", gru[l].w_update);
      fn(prefix + "w_reset", gru[l].w_reset);
      fn(prefix + "w_cand", gru[l].w_cand);
      fn(prefix + "u_update", gru[l].u_update);
      fn(prefix + "u_reset", gru[l].u_reset);
      fn(prefix + "u_cand", gru[l].u_cand);
      fn(prefix + "b_update", gru[l].b_update);
      fn(prefix + "b_reset", gru[l].b_reset);
      fn(prefix + "b_cand", gru[l].b_cand);
    }
    fn("dense.weights", dense_weights);
    fn("dense.bias", dense_bias);
    fn("head.weights", head_weights);
    fn("head.bias", head_bias);
  }

  template <class F>
  void for_each(F fn) const {
    const_cast<ParamSet*>(this)->for_each(
        [&fn](const std::string& name, Tensor<S>& t) { fn(name, static_cast<const Tensor<S>&>(t)); });
  }

  uint64_t scalar_count() const {
    uint64_t n = 0;
    for_each([&n](const std::string&, const Tensor<S>& t) { n += t.numel(); });
    return n;
  }

  /// Zero tensors with the same shapes as `other` (gradient / accumulator mirror).
  static ParamSet zeros_like(const ParamSet& other) {
    ParamSet z;
    z.conv_kernels = Tensor<S>(other.conv_kernels.shape());
    z.conv_bias = Tensor<S>(other.conv_bias.shape());
    for (const auto& g : other.gru) {
      z.gru.push_back(nn::GruParams<S>{
          Tensor<S>(g.w_update.shape()), Tensor<S>(g.w_reset.shape()), Tensor<S>(g.w_cand.shape()),
          Tensor<S>(g.u_update.shape()), Tensor<S>(g.u_reset.shape()), Tensor<S>(g.u_cand.shape()),
          Tensor<S>(g.b_update.shape()), Tensor<S>(g.b_reset.shape()),
          Tensor<S>(g.b_cand.shape())});
    }
    z.dense_weights = Tensor<S>(other.dense_weights.shape());
    z.dense_bias = Tensor<S>(other.dense_bias.shape());
    z.head_weights = Tensor<S>(other.head_weights.shape());
    z.head_bias = Tensor<S>(other.head_bias.shape());
    return z;
  }
};

template <class S>
struct Model {
  ModelConfig config;
  ParamSet<S> params;
};

/// He-uniform conv kernels, Glorot-uniform GRU/dense/head weights, zero biases.
/// Deterministic for a fixed seed (one stream, declared fill order).
template <class S>
Model<S> build_model(const ModelConfig& cfg, Rng& rng) {
  validate_model_config(cfg);
  compute_shape_chain(cfg);  // geometry must be feasible

  Model<S> m;
  m.config = cfg;
  const size_t k = cfg.conv_kernel_size, oc = cfg.conv_kernels;
  m.params.conv_kernels = he_uniform_init<S>({k, 1, oc}, k * 1, rng);
  m.params.conv_bias = Tensor<S>({oc});

  size_t in_dim = oc;
  const size_t units = cfg.gru_units;
  for (size_t l = 0; l < cfg.gru_layers; ++l) {
    nn::GruParams<S> g{
        glorot_uniform_init<S>({units, in_dim}, in_dim, units, rng),
        glorot_uniform_init<S>({units, in_dim}, in_dim, units, rng),
        glorot_uniform_init<S>({units, in_dim}, in_dim, units, rng),
        glorot_uniform_init<S>({units, units}, units, units, rng),
        glorot_uniform_init<S>({units, units}, units, units, rng),
        glorot_uniform_init<S>({units, units}, units, units, rng),
        Tensor<S>({units}), Tensor<S>({units}), Tensor<S>({units})};
    m.params.gru.push_back(std::move(g));
    in_dim = units;
  }

  const size_t flat = cfg.gru_steps * units;
  m.params.dense_weights = glorot_uniform_init<S>({cfg.dense_units, flat}, flat, cfg.dense_units, rng);
  m.params.dense_bias = Tensor<S>({cfg.dense_units});
  m.params.head_weights =
      glorot_uniform_init<S>({cfg.num_classes, cfg.dense_units}, cfg.dense_units, cfg.num_classes, rng);
  m.params.head_bias = Tensor<S>({cfg.num_classes});
  return m;
}

/// Per-sample forward state consumed by the backward pass. The large buffers
/// (conv activations, pooled map, dropout mask, their gradients) live here so
/// a reused cache object keeps its allocations across samples.
template <class S>
struct ModelCache {
  Tensor<S> input;         // [len x 1]
  Tensor<S> dropout_mask;  // empty in inference mode
  size_t conv_len = 0;
  size_t pooled_len = 0;
  std::vector<nn::GruLayerCache<S>> gru;
  nn::DenseCache<S> dense;
  Tensor<S> dense_out;
  nn::DenseCache<S> head;
  Tensor<S> probs;

  // scratch: conv-scale activations on the way forward, gradients on the way
  // back (the values are not needed once pooling has consumed them)
  Tensor<S> scratch_conv;
  Tensor<S> scratch_pooled;
};

/// Full pipeline forward pass into a reusable cache. `rng` is required in
/// train mode (dropout); inference ignores it.
template <class S>
void model_forward_into(const Model<S>& m, const Tensor<S>& input, bool train, Rng* rng,
                        ModelCache<S>& c) {
  const ModelConfig& cfg = m.config;
  if (input.rank() != 2 || input.extent(1) != 1 || input.extent(0) != cfg.input_samples) {
    throw ShapeError("model_forward: input " + input.shape_str() + " does not match [" +
                     std::to_string(cfg.input_samples) + "x1]");
  }
  if (train && rng == nullptr) throw ValueError("model_forward: train mode requires an rng");

  c.input = input;
  nn::conv1d_forward_into(input, m.params.conv_kernels, m.params.conv_bias, c.scratch_conv);
  c.conv_len = c.scratch_conv.extent(0);

  if (train && cfg.dropout_rate > 0.0) {
    nn::dropout_apply_inplace(c.scratch_conv, cfg.dropout_rate, *rng, c.dropout_mask);
  } else {
    c.dropout_mask = Tensor<S>();
  }

  nn::avgpool1d_forward_into(c.scratch_conv, cfg.pool_size, cfg.pool_stride, c.scratch_pooled);
  c.pooled_len = c.scratch_pooled.extent(0);
  Tensor<S> seq;
  nn::sequence_chunk_into(c.scratch_pooled, cfg.gru_steps, seq);

  c.gru.clear();
  for (size_t l = 0; l < m.params.gru.size(); ++l) {
    auto [out, cache] = nn::gru_layer_forward(seq, m.params.gru[l]);
    c.gru.push_back(std::move(cache));
    seq = std::move(out);
  }

  Tensor<S> flat = nn::flatten(seq);
  auto [dense_out, dense_cache] =
      nn::dense_forward(flat, m.params.dense_weights, m.params.dense_bias, nn::DenseActivation::Relu);
  c.dense = std::move(dense_cache);
  c.dense_out = dense_out;
  auto [logits, head_cache] =
      nn::dense_forward(dense_out, m.params.head_weights, m.params.head_bias, nn::DenseActivation::None);
  c.head = std::move(head_cache);
  c.probs = nn::softmax_forward(logits);
}

template <class S>
ModelCache<S> model_forward(const Model<S>& m, const Tensor<S>& input, bool train,
                            Rng* rng = nullptr) {
  ModelCache<S> c;
  model_forward_into(m, input, train, rng, c);
  return c;
}

/// Exact analytic gradients of the cross-entropy loss w.r.t. every parameter,
/// written into `grads` (shapes follow the parameters; buffers are reused).
/// Consumes the cache's scratch buffers.
template <class S>
void model_backward_into(const Model<S>& m, ModelCache<S>& cache, size_t target,
                         ParamSet<S>& grads) {
  const ModelConfig& cfg = m.config;

  Tensor<S> d_probs = cross_entropy_backward(cache.probs, target);
  Tensor<S> d_logits = nn::softmax_backward(cache.probs, d_probs);

  nn::DenseGrads<S> head;
  nn::dense_backward_into(m.params.head_weights, cache.head, d_logits, nn::DenseActivation::None,
                          head);
  grads.head_weights = std::move(head.d_weights);
  grads.head_bias = std::move(head.d_bias);

  nn::DenseGrads<S> dense{std::move(grads.dense_weights), Tensor<S>(), Tensor<S>()};
  nn::dense_backward_into(m.params.dense_weights, cache.dense, head.d_input,
                          nn::DenseActivation::Relu, dense);
  grads.dense_weights = std::move(dense.d_weights);
  grads.dense_bias = std::move(dense.d_bias);

  Tensor<S> d_seq = dense.d_input.reshaped({cfg.gru_steps, cfg.gru_units});
  for (size_t l = m.params.gru.size(); l-- > 0;) {
    nn::GruGrads<S> g = nn::gru_layer_backward(m.params.gru[l], cache.gru[l], d_seq);
    grads.gru[l] = std::move(g.params);
    d_seq = std::move(g.d_input_seq);
  }

  // reuse the forward scratch for the conv-scale gradients
  nn::sequence_chunk_backward_into(cache.pooled_len, d_seq, cache.scratch_pooled);
  nn::avgpool1d_backward_into(cache.conv_len, cache.scratch_pooled, cfg.pool_size, cfg.pool_stride,
                              cache.scratch_conv);
  if (cache.dropout_mask.numel() > 0) {
    nn::dropout_backward_inplace(cache.dropout_mask, cache.scratch_conv);
  }
  nn::Conv1dGrads<S> conv = nn::conv1d_backward(cache.input, m.params.conv_kernels,
                                                cache.scratch_conv);
  grads.conv_kernels = std::move(conv.d_kernels);
  grads.conv_bias = std::move(conv.d_bias);
}

template <class S>
ParamSet<S> model_backward(const Model<S>& m, ModelCache<S>& cache, size_t target) {
  ParamSet<S> grads = ParamSet<S>::zeros_like(m.params);
  model_backward_into(m, cache, target, grads);
  return grads;
}

/// Inference helper: class probabilities for one standardized clip.
template <class S>
Tensor<S> model_predict(const Model<S>& m, const Tensor<S>& input) {
  return model_forward(m, input, /*train=*/false).probs;
}

}  // namespace ser
