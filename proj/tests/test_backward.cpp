// Finite-difference verification of every hand-derived backward pass.
// Loss used throughout: L = sum(output . v) for a fixed random v, so the
// upstream gradient of each layer is v reshaped to the output.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "ser/layers.hpp"
#include "ser/loss.hpp"
#include "ser/rng.hpp"

using ser::Tensor;
namespace nn = ser::nn;

namespace {

constexpr double kStep = 1e-5;
constexpr double kTol = 1e-4;

double rel_err(double a, double n) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8});
}

Tensor<double> random_tensor(std::vector<size_t> shape, ser::Rng& rng, double scale = 1.0) {
  Tensor<double> t(std::move(shape));
  for (size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform_symmetric(scale);
  return t;
}

double dot_loss(const Tensor<double>& out, const Tensor<double>& v) {
  double loss = 0;
  for (size_t i = 0; i < out.numel(); ++i) loss += out[i] * v[i];
  return loss;
}

/// Central finite differences of `loss` w.r.t. every entry of `param`,
/// compared against `analytic`.
void check_grad(Tensor<double>& param, const Tensor<double>& analytic,
                const std::function<double()>& loss) {
  REQUIRE(param.same_shape(analytic));
  for (size_t i = 0; i < param.numel(); ++i) {
    const double saved = param[i];
    param[i] = saved + kStep;
    const double up = loss();
    param[i] = saved - kStep;
    const double down = loss();
    param[i] = saved;
    const double numeric = (up - down) / (2 * kStep);
    CHECK(rel_err(analytic[i], numeric) < kTol);
  }
}

}  // namespace

TEST_CASE("conv1d gradients vs finite differences") {
  ser::Rng rng(21);
  Tensor<double> x = random_tensor({9, 2}, rng);
  Tensor<double> w = random_tensor({3, 2, 4}, rng);
  Tensor<double> b = random_tensor({4}, rng);
  Tensor<double> v = random_tensor({7, 4}, rng);

  auto loss = [&] { return dot_loss(nn::conv1d_forward(x, w, b), v); };
  nn::Conv1dGrads<double> g = nn::conv1d_backward(x, w, v);
  check_grad(w, g.d_kernels, loss);
  check_grad(b, g.d_bias, loss);
  check_grad(x, g.d_input, loss);
}

TEST_CASE("avgpool1d gradient vs finite differences and hand case") {
  ser::Rng rng(22);
  Tensor<double> x = random_tensor({11, 3}, rng);
  Tensor<double> v = random_tensor({5, 3}, rng);
  auto loss = [&] { return dot_loss(nn::avgpool1d_forward(x, 3, 2), v); };
  Tensor<double> dx = nn::avgpool1d_backward(11, v, 3, 2);
  check_grad(x, dx, loss);

  // len 5, pool 3, stride 2: windows [0..2] and [2..4]; middle sample belongs
  // to both, each contribution upstream/3
  Tensor<double> up({2, 1}, {3.0, 6.0});
  Tensor<double> hand = nn::avgpool1d_backward(5, up, 3, 2);
  CHECK(hand[0] == doctest::Approx(1.0));
  CHECK(hand[1] == doctest::Approx(1.0));
  CHECK(hand[2] == doctest::Approx(3.0));
  CHECK(hand[3] == doctest::Approx(2.0));
  CHECK(hand[4] == doctest::Approx(2.0));

  // dropped tail gets zero gradient: len 6, same windows
  Tensor<double> tail = nn::avgpool1d_backward(6, up, 3, 2);
  CHECK(tail[5] == doctest::Approx(0.0));
}

TEST_CASE("dropout gradient with a fixed mask") {
  ser::Rng rng(23);
  Tensor<double> x = random_tensor({40}, rng);
  auto applied = nn::dropout_apply(x, 0.3, nn::DropoutMode::Train, rng);
  Tensor<double> v = random_tensor({40}, rng);
  // with the mask held fixed the layer is linear: out = mask . x
  auto loss = [&] { return dot_loss(ser::hadamard(applied.mask, x), v); };
  Tensor<double> dx = nn::dropout_backward(applied.mask, v);
  check_grad(x, dx, loss);
}

TEST_CASE("sequence_chunk gradient vs finite differences") {
  ser::Rng rng(24);
  Tensor<double> x = random_tensor({13, 2}, rng);
  Tensor<double> v = random_tensor({5, 2}, rng);
  auto loss = [&] { return dot_loss(nn::sequence_chunk(x, 5), v); };
  Tensor<double> dx = nn::sequence_chunk_backward(13, v);
  check_grad(x, dx, loss);
}

TEST_CASE("gru layer gradients vs finite differences") {
  ser::Rng rng(25);
  const size_t units = 4, in = 3, steps = 6;
  nn::GruParams<double> p{random_tensor({units, in}, rng),    random_tensor({units, in}, rng),
                          random_tensor({units, in}, rng),    random_tensor({units, units}, rng),
                          random_tensor({units, units}, rng), random_tensor({units, units}, rng),
                          random_tensor({units}, rng),        random_tensor({units}, rng),
                          random_tensor({units}, rng)};
  Tensor<double> seq = random_tensor({steps, in}, rng);
  Tensor<double> v = random_tensor({steps, units}, rng);

  auto loss = [&] {
    auto [out, cache] = nn::gru_layer_forward(seq, p);
    return dot_loss(out, v);
  };
  auto [out, cache] = nn::gru_layer_forward(seq, p);
  nn::GruGrads<double> g = nn::gru_layer_backward(p, cache, v);

  check_grad(p.w_update, g.params.w_update, loss);
  check_grad(p.w_reset, g.params.w_reset, loss);
  check_grad(p.w_cand, g.params.w_cand, loss);
  check_grad(p.u_update, g.params.u_update, loss);
  check_grad(p.u_reset, g.params.u_reset, loss);
  check_grad(p.u_cand, g.params.u_cand, loss);
  check_grad(p.b_update, g.params.b_update, loss);
  check_grad(p.b_reset, g.params.b_reset, loss);
  check_grad(p.b_cand, g.params.b_cand, loss);
  check_grad(seq, g.d_input_seq, loss);
}

TEST_CASE("dense gradients vs finite differences; identity Jacobian case") {
  ser::Rng rng(26);
  Tensor<double> w = random_tensor({5, 7}, rng);
  Tensor<double> b = random_tensor({5}, rng);
  Tensor<double> x = random_tensor({7}, rng);
  Tensor<double> v = random_tensor({5}, rng);

  for (auto act : {nn::DenseActivation::None, nn::DenseActivation::Relu}) {
    auto loss = [&] {
      auto [y, c] = nn::dense_forward(x, w, b, act);
      return dot_loss(y, v);
    };
    auto [y, cache] = nn::dense_forward(x, w, b, act);
    nn::DenseGrads<double> g = nn::dense_backward(w, cache, v, act);
    check_grad(w, g.d_weights, loss);
    check_grad(b, g.d_bias, loss);
    check_grad(x, g.d_input, loss);
  }

  // identity weights, zero bias, no activation: input grad == upstream grad
  Tensor<double> identity({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  Tensor<double> zero({3});
  auto [y, cache] = nn::dense_forward(Tensor<double>({3}, {1, -2, 3}), identity, zero,
                                      nn::DenseActivation::None);
  Tensor<double> up({3}, {0.5, -0.25, 2.0});
  nn::DenseGrads<double> g = nn::dense_backward(identity, cache, up, nn::DenseActivation::None);
  for (size_t i = 0; i < 3; ++i) CHECK(g.d_input[i] == doctest::Approx(up[i]).epsilon(1e-15));
}

TEST_CASE("softmax and cross-entropy gradients vs finite differences") {
  ser::Rng rng(27);
  Tensor<double> x = random_tensor({7}, rng, 2.0);
  const size_t target = 3;

  auto loss = [&] {
    return ser::cross_entropy_loss(nn::softmax_forward(x), target);
  };
  Tensor<double> probs = nn::softmax_forward(x);
  Tensor<double> d_probs = ser::cross_entropy_backward(probs, target);
  Tensor<double> dx = nn::softmax_backward(probs, d_probs);
  check_grad(x, dx, loss);

  // the composed gradient equals probs - onehot
  for (size_t i = 0; i < 7; ++i) {
    const double expect = probs[i] - (i == target ? 1.0 : 0.0);
    CHECK(dx[i] == doctest::Approx(expect).epsilon(1e-9));
  }
}
