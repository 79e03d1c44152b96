#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ser/errors.hpp"
#include "ser/loss.hpp"
#include "ser/model.hpp"
#include "ser/optimizer.hpp"

namespace ser {

template <class S>
struct Sample {
  Tensor<S> input;  // [input_samples x 1]
  int label = 0;
};

struct FitConfig {
  size_t epochs = 20;
  size_t batch_size = 20;
  RmsPropConfig optimizer;
  uint64_t seed = 1234;
};

struct TrainRunLog {
  uint64_t seed = 0;
  std::string config_snapshot;
  struct Epoch {
    size_t epoch;       // 1-based
    double train_loss;  // mean over the epoch's samples (dropout active)
    double train_acc;
    double val_acc;  // NaN when no validation split was given
  };
  std::vector<Epoch> epochs;
};

namespace detail {

template <class S>
std::vector<Tensor<S>*> tensor_ptrs(ParamSet<S>& set) {
  std::vector<Tensor<S>*> out;
  set.for_each([&out](const std::string&, Tensor<S>& t) { out.push_back(&t); });
  return out;
}

template <class S>
void zero_all(ParamSet<S>& set) {
  set.for_each([](const std::string&, Tensor<S>& t) { t.fill(S(0)); });
}

template <class S>
void add_scaled(ParamSet<S>& into, const ParamSet<S>& from, S scale) {
  auto dst = tensor_ptrs(into);
  auto src = tensor_ptrs(const_cast<ParamSet<S>&>(from));
  for (size_t i = 0; i < dst.size(); ++i) {
    for (size_t j = 0; j < dst[i]->numel(); ++j) (*dst[i])[j] += (*src[i])[j] * scale;
  }
}

}  // namespace detail

/// Fraction of samples whose argmax probability matches the label (inference mode).
template <class S>
double evaluate_accuracy(const Model<S>& model, const std::vector<Sample<S>>& samples) {
  if (samples.empty()) return std::nan("");
  size_t hits = 0;
  ModelCache<S> cache;
  for (const auto& s : samples) {
    model_forward_into(model, s.input, /*train=*/false, nullptr, cache);
    if (static_cast<int>(argmax(cache.probs)) == s.label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

/// Mini-batch training. Defaults: 20 epochs, batch 20, RMSProp(lr 0.001,
/// rho 0.9, eps 1e-7, momentum 0). Reshuffles per epoch with one seeded
/// generator; the final partial batch is trained. Deterministic for a fixed
/// seed.
template <class S>
TrainRunLog fit(Model<S>& model, const std::vector<Sample<S>>& train,
                const std::vector<Sample<S>>& validation, const FitConfig& cfg) {
  if (train.empty()) throw TrainingError("fit: empty training set");
  for (const auto& s : train) {
    if (s.label < 0 || static_cast<size_t>(s.label) >= model.config.num_classes) {
      throw TrainingError("fit: label " + std::to_string(s.label) + " out of range");
    }
  }

  Rng rng(cfg.seed);
  ParamSet<S> grad_sum = ParamSet<S>::zeros_like(model.params);
  ParamSet<S> sample_grads = ParamSet<S>::zeros_like(model.params);
  ParamSet<S> acc = ParamSet<S>::zeros_like(model.params);
  ModelCache<S> cache;
  auto param_ptrs = detail::tensor_ptrs(model.params);
  auto grad_ptrs = detail::tensor_ptrs(grad_sum);
  auto acc_ptrs = detail::tensor_ptrs(acc);

  TrainRunLog log;
  log.seed = cfg.seed;
  log.config_snapshot = serialize_model_config(model.config);

  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), size_t{0});

  for (size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (size_t i = order.size(); i-- > 1;) {
      std::swap(order[i], order[rng.below(i + 1)]);
    }

    double loss_sum = 0;
    size_t hit = 0;
    size_t batch_index = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
      const size_t end = std::min(start + cfg.batch_size, order.size());
      detail::zero_all(grad_sum);
      for (size_t i = start; i < end; ++i) {
        const Sample<S>& s = train[order[i]];
        model_forward_into(model, s.input, /*train=*/true, &rng, cache);
        const double loss = cross_entropy_loss(cache.probs, static_cast<size_t>(s.label));
        if (!std::isfinite(loss)) {
          throw TrainingError("fit: non-finite loss at epoch " + std::to_string(epoch) +
                              ", batch " + std::to_string(batch_index));
        }
        loss_sum += loss;
        if (static_cast<int>(argmax(cache.probs)) == s.label) ++hit;
        model_backward_into(model, cache, static_cast<size_t>(s.label), sample_grads);
        detail::add_scaled(grad_sum, sample_grads, S(1));
      }
      const S inv = S(1) / static_cast<S>(end - start);
      for (size_t t = 0; t < grad_ptrs.size(); ++t) {
        Tensor<S>& g = *grad_ptrs[t];
        for (size_t j = 0; j < g.numel(); ++j) g[j] *= inv;
        rmsprop_step(*param_ptrs[t], g, *acc_ptrs[t], cfg.optimizer);
      }
    }

    log.epochs.push_back({epoch, loss_sum / static_cast<double>(train.size()),
                          static_cast<double>(hit) / static_cast<double>(train.size()),
                          evaluate_accuracy(model, validation)});
  }
  return log;
}

/// Line-delimited records for plotting: epoch, train_loss, train_acc, val_acc.
inline std::string format_train_log(const TrainRunLog& log) {
  std::ostringstream out;
  out << "# seed\t" << log.seed << "\n";
  std::istringstream cfg(log.config_snapshot);
  std::string line;
  while (std::getline(cfg, line)) {
    if (!line.empty()) out << "# config\t" << line << "\n";
  }
  out << "# epoch\ttrain_loss\ttrain_acc\tval_acc\n";
  char buf[160];
  for (const auto& e : log.epochs) {
    std::snprintf(buf, sizeof(buf), "%zu\t%.9g\t%.9g\t%.9g\n", e.epoch, e.train_loss, e.train_acc,
                  e.val_acc);
    out << buf;
  }
  return out.str();
}

inline void write_train_log(const TrainRunLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write train log: " + path);
  out << format_train_log(log);
}

// ---------------------------------------------------------------------------
// Gradient verification: analytic gradients vs central finite differences on
// tiny 64-bit models. Relative error = |a - n| / max(|a|, |n|, 1e-8).

struct GradCheckEntry {
  std::string name;  // parameter tensor name
  double max_rel_err = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_err = 0.0;
};

enum class GradCheckStack { DenseOnly, ConvPoolDense, Full };

namespace detail {

inline double rel_err(double a, double n) {
  const double denom = std::max({std::abs(a), std::abs(n), 1e-8});
  return std::abs(a - n) / denom;
}

/// Central finite differences over every named parameter tensor.
/// `loss_fn` must re-run the full forward pass against the current parameters.
inline GradCheckReport fd_check(std::vector<std::pair<std::string, Tensor<double>*>> params,
                                const std::function<double()>& loss_fn,
                                const std::map<std::string, Tensor<double>>& analytic,
                                double step = 1e-5) {
  GradCheckReport report;
  for (auto& [name, tensor] : params) {
    const Tensor<double>& a = analytic.at(name);
    GradCheckEntry entry{name, 0.0};
    for (size_t i = 0; i < tensor->numel(); ++i) {
      const double saved = (*tensor)[i];
      (*tensor)[i] = saved + step;
      const double up = loss_fn();
      (*tensor)[i] = saved - step;
      const double down = loss_fn();
      (*tensor)[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      entry.max_rel_err = std::max(entry.max_rel_err, rel_err(a[i], numeric));
    }
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace detail

/// Gradient check of the full pipeline built from `cfg` (dropout disabled:
/// finite differences need a deterministic forward pass). 64-bit only.
inline GradCheckReport grad_check(const ModelConfig& config, uint64_t seed) {
  ModelConfig cfg = config;
  cfg.dropout_rate = 0.0;
  cfg.precision = "f64";
  Rng rng(seed);
  Model<double> model = build_model<double>(cfg, rng);

  const size_t batch = 2;
  std::vector<Tensor<double>> inputs;
  std::vector<size_t> targets;
  for (size_t b = 0; b < batch; ++b) {
    Tensor<double> x({cfg.input_samples, 1});
    for (size_t i = 0; i < x.numel(); ++i) x[i] = rng.uniform_symmetric(1.0);
    inputs.push_back(std::move(x));
    targets.push_back(rng.below(cfg.num_classes));
  }

  auto loss_fn = [&]() {
    double total = 0;
    for (size_t b = 0; b < batch; ++b) {
      total += cross_entropy_loss(model_predict(model, inputs[b]), targets[b]);
    }
    return total / static_cast<double>(batch);
  };

  ParamSet<double> grads = ParamSet<double>::zeros_like(model.params);
  for (size_t b = 0; b < batch; ++b) {
    ModelCache<double> cache = model_forward(model, inputs[b], /*train=*/false);
    ParamSet<double> g = model_backward(model, cache, targets[b]);
    detail::add_scaled(grads, g, 1.0 / static_cast<double>(batch));
  }

  std::map<std::string, Tensor<double>> analytic;
  grads.for_each([&](const std::string& name, Tensor<double>& t) { analytic.emplace(name, t); });
  std::vector<std::pair<std::string, Tensor<double>*>> params;
  model.params.for_each(
      [&](const std::string& name, Tensor<double>& t) { params.emplace_back(name, &t); });
  return detail::fd_check(std::move(params), loss_fn, analytic);
}

/// Reduced stacks for the acceptance gate: dense-only and conv+pool+dense.
inline GradCheckReport grad_check_stack(GradCheckStack stack, uint64_t seed) {
  if (stack == GradCheckStack::Full) {
    ModelConfig cfg;
    cfg.input_samples = 40;
    cfg.conv_kernels = 4;
    cfg.gru_units = 3;
    cfg.gru_steps = 10;
    cfg.dense_units = 8;
    return grad_check(cfg, seed);
  }

  Rng rng(seed);
  const size_t classes = 7;

  if (stack == GradCheckStack::DenseOnly) {
    const size_t in = 12, hidden = 8, batch = 3;
    Tensor<double> w1 = glorot_uniform_init<double>({hidden, in}, in, hidden, rng);
    Tensor<double> b1 = glorot_uniform_init<double>({hidden}, in, hidden, rng);
    Tensor<double> w2 = glorot_uniform_init<double>({classes, hidden}, hidden, classes, rng);
    Tensor<double> b2 = glorot_uniform_init<double>({classes}, hidden, classes, rng);
    std::vector<Tensor<double>> xs;
    std::vector<size_t> ys;
    for (size_t b = 0; b < batch; ++b) {
      Tensor<double> x({in});
      for (size_t i = 0; i < in; ++i) x[i] = rng.uniform_symmetric(1.0);
      xs.push_back(std::move(x));
      ys.push_back(rng.below(classes));
    }

    auto loss_fn = [&]() {
      double total = 0;
      for (size_t b = 0; b < batch; ++b) {
        auto [h, c1] = nn::dense_forward(xs[b], w1, b1, nn::DenseActivation::Relu);
        auto [logits, c2] = nn::dense_forward(h, w2, b2, nn::DenseActivation::None);
        total += cross_entropy_loss(nn::softmax_forward(logits), ys[b]);
      }
      return total / static_cast<double>(batch);
    };

    std::map<std::string, Tensor<double>> analytic;
    analytic.emplace("dense.weights", Tensor<double>(w1.shape()));
    analytic.emplace("dense.bias", Tensor<double>(b1.shape()));
    analytic.emplace("head.weights", Tensor<double>(w2.shape()));
    analytic.emplace("head.bias", Tensor<double>(b2.shape()));
    for (size_t b = 0; b < batch; ++b) {
      auto [h, c1] = nn::dense_forward(xs[b], w1, b1, nn::DenseActivation::Relu);
      auto [logits, c2] = nn::dense_forward(h, w2, b2, nn::DenseActivation::None);
      Tensor<double> probs = nn::softmax_forward(logits);
      Tensor<double> d_logits =
          nn::softmax_backward(probs, cross_entropy_backward(probs, ys[b]));
      nn::DenseGrads<double> g2 = nn::dense_backward(w2, c2, d_logits, nn::DenseActivation::None);
      nn::DenseGrads<double> g1 =
          nn::dense_backward(w1, c1, g2.d_input, nn::DenseActivation::Relu);
      const double inv = 1.0 / static_cast<double>(batch);
      for (size_t i = 0; i < g1.d_weights.numel(); ++i)
        analytic.at("dense.weights")[i] += g1.d_weights[i] * inv;
      for (size_t i = 0; i < g1.d_bias.numel(); ++i)
        analytic.at("dense.bias")[i] += g1.d_bias[i] * inv;
      for (size_t i = 0; i < g2.d_weights.numel(); ++i)
        analytic.at("head.weights")[i] += g2.d_weights[i] * inv;
      for (size_t i = 0; i < g2.d_bias.numel(); ++i)
        analytic.at("head.bias")[i] += g2.d_bias[i] * inv;
    }
    return detail::fd_check(
        {{"dense.weights", &w1}, {"dense.bias", &b1}, {"head.weights", &w2}, {"head.bias", &b2}},
        loss_fn, analytic);
  }

  // Conv + pool + dense stack.
  const size_t len = 24, oc = 3, kw = 3, pool = 3, stride = 2, hidden = 6, batch = 2;
  const size_t pooled = nn::pooled_length(len - kw + 1, pool, stride);
  const size_t flat = pooled * oc;
  Tensor<double> conv_w = he_uniform_init<double>({kw, 1, oc}, kw, rng);
  Tensor<double> conv_b = he_uniform_init<double>({oc}, kw, rng);
  Tensor<double> w1 = glorot_uniform_init<double>({hidden, flat}, flat, hidden, rng);
  Tensor<double> b1({hidden});
  Tensor<double> w2 = glorot_uniform_init<double>({classes, hidden}, hidden, classes, rng);
  Tensor<double> b2({classes});
  std::vector<Tensor<double>> xs;
  std::vector<size_t> ys;
  for (size_t b = 0; b < batch; ++b) {
    Tensor<double> x({len, 1});
    for (size_t i = 0; i < x.numel(); ++i) x[i] = rng.uniform_symmetric(1.0);
    xs.push_back(std::move(x));
    ys.push_back(rng.below(classes));
  }

  auto loss_fn = [&]() {
    double total = 0;
    for (size_t b = 0; b < batch; ++b) {
      Tensor<double> conv = nn::conv1d_forward(xs[b], conv_w, conv_b);
      Tensor<double> flat_in = nn::flatten(nn::avgpool1d_forward(conv, pool, stride));
      auto [h, c1] = nn::dense_forward(flat_in, w1, b1, nn::DenseActivation::Relu);
      auto [logits, c2] = nn::dense_forward(h, w2, b2, nn::DenseActivation::None);
      total += cross_entropy_loss(nn::softmax_forward(logits), ys[b]);
    }
    return total / static_cast<double>(batch);
  };

  std::map<std::string, Tensor<double>> analytic;
  analytic.emplace("conv.kernels", Tensor<double>(conv_w.shape()));
  analytic.emplace("conv.bias", Tensor<double>(conv_b.shape()));
  analytic.emplace("dense.weights", Tensor<double>(w1.shape()));
  analytic.emplace("dense.bias", Tensor<double>(b1.shape()));
  analytic.emplace("head.weights", Tensor<double>(w2.shape()));
  analytic.emplace("head.bias", Tensor<double>(b2.shape()));
  for (size_t b = 0; b < batch; ++b) {
    Tensor<double> conv = nn::conv1d_forward(xs[b], conv_w, conv_b);
    Tensor<double> pooled_out = nn::avgpool1d_forward(conv, pool, stride);
    auto [h, c1] = nn::dense_forward(nn::flatten(pooled_out), w1, b1, nn::DenseActivation::Relu);
    auto [logits, c2] = nn::dense_forward(h, w2, b2, nn::DenseActivation::None);
    Tensor<double> probs = nn::softmax_forward(logits);
    Tensor<double> d_logits = nn::softmax_backward(probs, cross_entropy_backward(probs, ys[b]));
    nn::DenseGrads<double> g2 = nn::dense_backward(w2, c2, d_logits, nn::DenseActivation::None);
    nn::DenseGrads<double> g1 = nn::dense_backward(w1, c1, g2.d_input, nn::DenseActivation::Relu);
    Tensor<double> d_pooled = g1.d_input.reshaped({pooled, oc});
    Tensor<double> d_conv = nn::avgpool1d_backward(conv.extent(0), d_pooled, pool, stride);
    nn::Conv1dGrads<double> gc = nn::conv1d_backward(xs[b], conv_w, d_conv);
    const double inv = 1.0 / static_cast<double>(batch);
    for (size_t i = 0; i < gc.d_kernels.numel(); ++i)
      analytic.at("conv.kernels")[i] += gc.d_kernels[i] * inv;
    for (size_t i = 0; i < gc.d_bias.numel(); ++i) analytic.at("conv.bias")[i] += gc.d_bias[i] * inv;
    for (size_t i = 0; i < g1.d_weights.numel(); ++i)
      analytic.at("dense.weights")[i] += g1.d_weights[i] * inv;
    for (size_t i = 0; i < g1.d_bias.numel(); ++i) analytic.at("dense.bias")[i] += g1.d_bias[i] * inv;
    for (size_t i = 0; i < g2.d_weights.numel(); ++i)
      analytic.at("head.weights")[i] += g2.d_weights[i] * inv;
    for (size_t i = 0; i < g2.d_bias.numel(); ++i) analytic.at("head.bias")[i] += g2.d_bias[i] * inv;
  }
  return detail::fd_check({{"conv.kernels", &conv_w},
                           {"conv.bias", &conv_b},
                           {"dense.weights", &w1},
                           {"dense.bias", &b1},
                           {"head.weights", &w2},
                           {"head.bias", &b2}},
                          loss_fn, analytic);
}

}  // namespace ser
