#pragma once

#include <cmath>

#include "ser/errors.hpp"
#include "ser/tensor.hpp"

namespace ser {

struct RmsPropConfig {
  double learning_rate = 0.001;
  double rho = 0.9;  // discount factor for the mean-square history
  double epsilon = 1e-7;
  double momentum = 0.0;  // kept at zero: no velocity term
};

/// One RMSProp update on a single parameter tensor:
///   acc   <- rho * acc + (1 - rho) * grad^2
///   param <- param - lr * grad / (sqrt(acc) + epsilon)
template <class S>
void rmsprop_step(Tensor<S>& param, const Tensor<S>& grad, Tensor<S>& acc,
                  const RmsPropConfig& cfg) {
  if (!param.same_shape(grad) || !param.same_shape(acc)) {
    throw ShapeError("rmsprop_step shape mismatch: param " + param.shape_str() + ", grad " +
                     grad.shape_str() + ", acc " + acc.shape_str());
  }
  const S rho = static_cast<S>(cfg.rho);
  const S one_minus_rho = static_cast<S>(1.0 - cfg.rho);
  const S lr = static_cast<S>(cfg.learning_rate);
  const S eps = static_cast<S>(cfg.epsilon);
  for (size_t i = 0; i < param.numel(); ++i) {
    acc[i] = rho * acc[i] + one_minus_rho * grad[i] * grad[i];
    param[i] -= lr * grad[i] / (std::sqrt(acc[i]) + eps);
  }
}

}  // namespace ser
