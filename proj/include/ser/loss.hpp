#pragma once

#include <cmath>
#include <string>

#include "ser/errors.hpp"
#include "ser/tensor.hpp"

namespace ser {

/// Clip applied inside the log so a zero probability cannot produce -inf.
inline constexpr double kCrossEntropyClip = 1e-12;

/// Categorical cross-entropy for a single sample: -ln(pred[target] + clip).
/// `pred` must be a probability vector (sums to 1 within 1e-4). Batch loss is
/// the mean over samples, taken by the caller.
template <class S>
double cross_entropy_loss(const Tensor<S>& pred, size_t target) {
  if (target >= pred.numel()) {
    throw ValueError("cross_entropy_loss: target " + std::to_string(target) +
                     " out of range for " + std::to_string(pred.numel()) + " classes");
  }
  double sum = 0;
  for (size_t i = 0; i < pred.numel(); ++i) sum += static_cast<double>(pred[i]);
  if (std::abs(sum - 1.0) > 1e-4) {
    throw ValueError("cross_entropy_loss: pred sums to " + std::to_string(sum) +
                     ", expected a probability vector");
  }
  return -std::log(static_cast<double>(pred[target]) + kCrossEntropyClip);
}

/// Gradient w.r.t. the probability vector: zero except at the target entry.
template <class S>
Tensor<S> cross_entropy_backward(const Tensor<S>& pred, size_t target) {
  if (target >= pred.numel()) {
    throw ValueError("cross_entropy_backward: target " + std::to_string(target) +
                     " out of range for " + std::to_string(pred.numel()) + " classes");
  }
  Tensor<S> d(pred.shape());
  d[target] = static_cast<S>(-1.0 / (static_cast<double>(pred[target]) + kCrossEntropyClip));
  return d;
}

}  // namespace ser
