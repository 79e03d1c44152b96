#pragma once

#include <cmath>
#include <vector>

#include "ser/errors.hpp"
#include "ser/rng.hpp"
#include "ser/tensor.hpp"

namespace ser {

/// Uniform on [-L, L], L = sqrt(6 / fan_in). Used for the conv kernels.
template <class S>
Tensor<S> he_uniform_init(std::vector<size_t> shape, size_t fan_in, Rng& rng) {
  if (fan_in == 0) throw ValueError("he_uniform_init: fan_in must be >= 1");
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  Tensor<S> t(std::move(shape));
  for (size_t i = 0; i < t.numel(); ++i) t[i] = static_cast<S>(rng.uniform_symmetric(limit));
  return t;
}

/// Uniform on [-L, L], L = sqrt(6 / (fan_in + fan_out)). Used for GRU and dense
/// kernel weights; biases are zero everywhere.
template <class S>
Tensor<S> glorot_uniform_init(std::vector<size_t> shape, size_t fan_in, size_t fan_out, Rng& rng) {
  if (fan_in + fan_out == 0) throw ValueError("glorot_uniform_init: fan_in + fan_out must be >= 1");
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor<S> t(std::move(shape));
  for (size_t i = 0; i < t.numel(); ++i) t[i] = static_cast<S>(rng.uniform_symmetric(limit));
  return t;
}

}  // namespace ser
