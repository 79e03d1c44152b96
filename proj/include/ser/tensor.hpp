#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "ser/errors.hpp"

namespace ser {

/// Dense N-dimensional array, row-major flat storage. Scalar type is float for
/// training speed or double for finite-difference gradient checks.
template <class S>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<size_t> shape) : shape_(std::move(shape)) {
    data_.assign(checked_numel(shape_), S(0));
  }

  Tensor(std::vector<size_t> shape, std::vector<S> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_numel(shape_) != data_.size()) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_str(shape_));
    }
  }

  static Tensor full(std::vector<size_t> shape, S value) {
    Tensor t(std::move(shape));
    t.fill(value);
    return t;
  }

  const std::vector<size_t>& shape() const { return shape_; }
  size_t rank() const { return shape_.size(); }
  size_t extent(size_t axis) const { return shape_.at(axis); }
  size_t numel() const { return data_.size(); }
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  S* data() { return data_.data(); }
  const S* data() const { return data_.data(); }

  S& operator[](size_t i) { return data_[i]; }
  const S& operator[](size_t i) const { return data_[i]; }

  /// 2-D access; row-major.
  S& at(size_t row, size_t col) { return data_[row * shape_[1] + col]; }
  const S& at(size_t row, size_t col) const { return data_[row * shape_[1] + col]; }

  void fill(S value) {
    for (auto& x : data_) x = value;
  }

  /// Reshape to `shape` with all elements zeroed. Keeps the existing
  /// allocation when capacity suffices, so hot loops can reuse buffers.
  void reset(std::vector<size_t> shape) {
    const size_t n = checked_numel(shape);
    shape_ = std::move(shape);
    data_.assign(n, S(0));
  }

  /// Same storage under a new shape with identical element count.
  Tensor reshaped(std::vector<size_t> shape) const {
    if (checked_numel(shape) != data_.size()) {
      throw ShapeError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
    }
    return Tensor(std::move(shape), data_);
  }

  bool all_finite() const {
    for (S x : data_) {
      if (!std::isfinite(static_cast<double>(x))) return false;
    }
    return true;
  }

  std::string shape_str() const { return shape_str(shape_); }

  static std::string shape_str(const std::vector<size_t>& shape) {
    std::string s = "[";
    for (size_t i = 0; i < shape.size(); ++i) {
      if (i) s += "x";
      s += std::to_string(shape[i]);
    }
    return s + "]";
  }

 private:
  static size_t checked_numel(const std::vector<size_t>& shape) {
    size_t n = 1;
    for (size_t e : shape) {
      if (e == 0) throw ShapeError("tensor extents must be positive, got " + shape_str(shape));
      n *= e;
    }
    return n;
  }

  std::vector<size_t> shape_;
  std::vector<S> data_;
};

enum class Activation { Sigmoid, Tanh, Relu };

/// Overflow-safe logistic sigmoid.
template <class S>
inline S sigmoid(S x) {
  if (x >= S(0)) {
    return S(1) / (S(1) + std::exp(-x));
  }
  const S e = std::exp(x);
  return e / (S(1) + e);
}

template <class S>
inline S apply_activation(S x, Activation f) {
  switch (f) {
    case Activation::Sigmoid:
      return sigmoid(x);
    case Activation::Tanh:
      return std::tanh(x);
    case Activation::Relu:
      return x > S(0) ? x : S(0);
  }
  return x;
}

/// Elementwise product. Shapes must agree exactly (no broadcasting).
template <class S>
Tensor<S> hadamard(const Tensor<S>& a, const Tensor<S>& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("hadamard shape mismatch: " + a.shape_str() + " vs " + b.shape_str());
  }
  Tensor<S> out(a.shape());
  for (size_t i = 0; i < a.numel(); ++i) out[i] = a[i] * b[i];
  return out;
}

template <class S>
Tensor<S> map_unary(const Tensor<S>& t, Activation f) {
  Tensor<S> out(t.shape());
  for (size_t i = 0; i < t.numel(); ++i) out[i] = apply_activation(t[i], f);
  return out;
}

/// Index of the largest entry; ties resolve to the lowest index.
template <class S>
size_t argmax(const Tensor<S>& v) {
  size_t best = 0;
  for (size_t i = 1; i < v.numel(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

}  // namespace ser
