#include <gtest/gtest.h>

#include <cmath>

#include "econet/error.hpp"
#include "econet/layers/batchnorm.hpp"
#include "econet/layers/conv1d.hpp"
#include "econet/layers/dense.hpp"
#include "econet/layers/gru.hpp"
#include "econet/layers/pooling.hpp"
#include "econet/layers/reshape.hpp"
#include "gru_oracle.hpp"
#include "support.hpp"

using namespace econet;
using econet::testing::dot;
using econet::testing::max_abs_diff;
using econet::testing::max_rel_error;
using econet::testing::numeric_gradient;
using econet::testing::random_tensor;

namespace {

Conv1DParams<double> random_conv(std::size_t k, std::size_t cin, std::size_t f, SeededRng& rng) {
  return {random_tensor({k, cin, f}, rng), random_tensor({f}, rng)};
}

}  // namespace

// ------------------------------------------------------------------ conv1d

TEST(Conv1D, MatchesDirectLoops) {
  SeededRng rng(1);
  for (std::size_t k : {1u, 2u, 3u, 4u, 5u}) {
    const auto x = random_tensor({2, 7, 3}, rng);
    const auto p = random_conv(k, 3, 4, rng);
    const auto y = conv1d_forward(x, p).output;
    ASSERT_EQ(y.shape(), (Shape{2, 7, 4}));
    const long pad = static_cast<long>(k - 1) / 2;
    for (std::size_t b = 0; b < 2; ++b)
      for (long t = 0; t < 7; ++t)
        for (std::size_t f = 0; f < 4; ++f) {
          double s = p.bias[f];
          for (std::size_t tap = 0; tap < k; ++tap) {
            const long src = t + static_cast<long>(tap) - pad;
            if (src < 0 || src >= 7) continue;
            for (std::size_t c = 0; c < 3; ++c)
              s += x(b, static_cast<std::size_t>(src), c) * p.kernel(tap, c, f);
          }
          EXPECT_NEAR(y(b, static_cast<std::size_t>(t), f), s, 1e-14);
        }
  }
}

TEST(Conv1D, HandValueWithZeroPadding) {
  // One channel, one filter, kernel [1, 2, 3]: y[t] = x[t-1] + 2x[t] + 3x[t+1].
  Conv1DParams<double> p{Tensor<double>({3, 1, 1}, std::vector<double>{1, 2, 3}),
                         Tensor<double>({1}, std::vector<double>{0.5})};
  Tensor<double> x({1, 4, 1}, std::vector<double>{1, 2, 3, 4});
  const auto y = conv1d_forward(x, p).output;
  EXPECT_DOUBLE_EQ(y[0], 0 + 2 + 6 + 0.5);
  EXPECT_DOUBLE_EQ(y[1], 1 + 4 + 9 + 0.5);
  EXPECT_DOUBLE_EQ(y[2], 2 + 6 + 12 + 0.5);
  EXPECT_DOUBLE_EQ(y[3], 3 + 8 + 0 + 0.5);
}

TEST(Conv1D, BackwardMatchesFiniteDifferences) {
  SeededRng rng(2);
  auto x = random_tensor({2, 6, 2}, rng);
  auto p = random_conv(3, 2, 3, rng);
  const auto r = random_tensor({2, 6, 3}, rng);
  auto fwd = conv1d_forward(x, p);
  const auto g = conv1d_backward(fwd.cache, r, p);
  auto loss = [&] { return dot(conv1d_forward(x, p).output, r); };
  EXPECT_LT(max_rel_error(g.input, numeric_gradient(x, loss)), 1e-5);
  EXPECT_LT(max_rel_error(g.params.kernel, numeric_gradient(p.kernel, loss)), 1e-5);
  EXPECT_LT(max_rel_error(g.params.bias, numeric_gradient(p.bias, loss)), 1e-5);
}

TEST(Conv1D, RejectsWrongChannels) {
  SeededRng rng(3);
  const auto x = random_tensor({1, 5, 2}, rng);
  EXPECT_THROW(conv1d_forward(x, random_conv(3, 1, 2, rng)), ShapeError);
  EXPECT_THROW(conv1d_forward(random_tensor({5, 2}, rng), random_conv(3, 2, 2, rng)), ShapeError);
}

TEST(Conv1D, SecondBackwardOnSameCacheThrows) {
  SeededRng rng(4);
  const auto x = random_tensor({1, 4, 1}, rng);
  const auto p = random_conv(3, 1, 2, rng);
  auto fwd = conv1d_forward(x, p);
  const auto dy = random_tensor({1, 4, 2}, rng);
  conv1d_backward(fwd.cache, dy, p);
  EXPECT_THROW(conv1d_backward(fwd.cache, dy, p), ContractError);
}

// --------------------------------------------------------------- batchnorm

TEST(BatchNorm, TrainModeUsesBatchStatisticsAndUpdatesMovingAverages) {
  SeededRng rng(5);
  const auto x = random_tensor({3, 4, 2}, rng, 0.0, 4.0);
  auto p = BatchNormParams<double>::defaults(2);
  p.gamma = Tensor<double>::vector({2.0, 0.5});
  p.beta = Tensor<double>::vector({-1.0, 1.0});
  const auto y = batchnorm_forward_train(x, p).output;
  for (std::size_t c = 0; c < 2; ++c) {
    double mean = 0, var = 0;
    for (std::size_t i = 0; i < 12; ++i) mean += x[i * 2 + c];
    mean /= 12;
    for (std::size_t i = 0; i < 12; ++i) var += (x[i * 2 + c] - mean) * (x[i * 2 + c] - mean);
    var /= 12;
    for (std::size_t i = 0; i < 12; ++i) {
      const double want = p.gamma[c] * (x[i * 2 + c] - mean) / std::sqrt(var + 1e-3) + p.beta[c];
      EXPECT_NEAR(y[i * 2 + c], want, 1e-12);
    }
    EXPECT_NEAR(p.moving_mean[c], 0.01 * mean, 1e-15);
    EXPECT_NEAR(p.moving_var[c], 0.99 + 0.01 * var, 1e-15);
  }
}

TEST(BatchNorm, InferModeUsesMovingStatisticsOnly) {
  SeededRng rng(6);
  const auto x = random_tensor({2, 3, 2}, rng);
  auto p = BatchNormParams<double>::defaults(2);
  p.moving_mean = Tensor<double>::vector({0.3, -0.2});
  p.moving_var = Tensor<double>::vector({2.0, 0.5});
  p.gamma = Tensor<double>::vector({1.5, 1.0});
  const auto before = p.moving_mean;
  const auto y = batchnorm_forward_infer(x, p).output;
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t c = 0; c < 2; ++c) {
      const double want =
          p.gamma[c] * (x[i * 2 + c] - p.moving_mean[c]) / std::sqrt(p.moving_var[c] + 1e-3);
      EXPECT_NEAR(y[i * 2 + c], want, 1e-14);
    }
  EXPECT_EQ(p.moving_mean, before);
}

TEST(BatchNorm, BackwardMatchesFiniteDifferencesInBothModes) {
  SeededRng rng(7);
  for (Mode mode : {Mode::Train, Mode::Infer}) {
    auto x = random_tensor({3, 5, 2}, rng);
    auto p = BatchNormParams<double>::defaults(2);
    p.gamma = random_tensor({2}, rng, 0.5, 1.5);
    p.beta = random_tensor({2}, rng);
    p.moving_mean = random_tensor({2}, rng);
    p.moving_var = random_tensor({2}, rng, 0.5, 2.0);
    const auto r = random_tensor({3, 5, 2}, rng);
    auto loss = [&] {
      auto copy = p;
      return dot(batchnorm_forward(x, copy, mode).output, r);
    };
    auto scratch = p;
    auto fwd = batchnorm_forward(x, scratch, mode);
    const auto g = batchnorm_backward(fwd.cache, r, p);
    EXPECT_LT(max_rel_error(g.input, numeric_gradient(x, loss)), 1e-5);
    EXPECT_LT(max_rel_error(g.gamma, numeric_gradient(p.gamma, loss)), 1e-5);
    EXPECT_LT(max_rel_error(g.beta, numeric_gradient(p.beta, loss)), 1e-5);
  }
}

TEST(BatchNorm, ParameterCountsSplitTrainable) {
  const auto p = BatchNormParams<double>::defaults(128);
  EXPECT_EQ(p.parameter_count(), 512u);
  EXPECT_EQ(p.trainable_count(), 256u);
  EXPECT_EQ(p.non_trainable_count(), 256u);
}

TEST(BatchNorm, TrainModeNeedsMoreThanOneValue) {
  auto p = BatchNormParams<double>::defaults(2);
  const Tensor<double> x({1, 1, 2});
  EXPECT_THROW(batchnorm_forward_train(x, p), ShapeError);
}

// --------------------------------------------------------------------- GRU

TEST(GRU, MatchesScalarOracleOnRandomConfigurations) {
  SeededRng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t batch = 1 + rng.below(3);
    const std::size_t steps = 1 + rng.below(8);
    const std::size_t input = 1 + rng.below(4);
    const std::size_t units = 1 + rng.below(6);
    const auto p = econet::testing::random_gru(input, units, rng);
    const auto x = random_tensor({batch, steps, input}, rng, -2.0, 2.0);
    const auto h0 = random_tensor({batch, units}, rng);
    const auto got = gru_forward(x, p, h0).output;
    const auto want = econet::testing::scalar_gru(x, p, h0);
    EXPECT_LT(max_abs_diff(got, want), 1e-10) << "trial " << trial;
  }
}

TEST(GRU, ZeroRecurrentBiasIsTheSingleBiasCell) {
  // With rb = 0 and h0 = 0, one step reduces to z = σ(xWz + bz),
  // h~ = tanh(xWc + bc), h = z·h~.
  auto p = GRUParams<double>::zeros(1, 1);
  p.input_weights[kUpdateGate][0] = 0.5;
  p.input_weights[kCandidate][0] = -1.0;
  p.input_bias[kUpdateGate][0] = 0.1;
  p.input_bias[kCandidate][0] = 0.2;
  const Tensor<double> x({1, 1, 1}, std::vector<double>{2.0});
  const double z = 1.0 / (1.0 + std::exp(-(1.0 + 0.1)));
  const double c = std::tanh(-2.0 + 0.2);
  EXPECT_NEAR(gru_forward(x, p).output[0], z * c, 1e-15);
}

TEST(GRU, BackwardMatchesFiniteDifferences) {
  SeededRng rng(9);
  auto p = econet::testing::random_gru(2, 3, rng);
  auto x = random_tensor({2, 5, 2}, rng);
  auto h0 = random_tensor({2, 3}, rng);
  const auto r = random_tensor({2, 5, 3}, rng);
  auto fwd = gru_forward(x, p, h0);
  const auto g = gru_backward(fwd.cache, r, p);
  auto loss = [&] { return dot(gru_forward(x, p, h0).output, r); };
  EXPECT_LT(max_rel_error(g.input, numeric_gradient(x, loss)), 1e-5);
  EXPECT_LT(max_rel_error(g.initial, numeric_gradient(h0, loss)), 1e-5);
  for (std::size_t gate = 0; gate < 3; ++gate) {
    EXPECT_LT(max_rel_error(g.params.input_weights[gate], numeric_gradient(p.input_weights[gate], loss)), 1e-5);
    EXPECT_LT(max_rel_error(g.params.recurrent_weights[gate], numeric_gradient(p.recurrent_weights[gate], loss)), 1e-5);
    EXPECT_LT(max_rel_error(g.params.input_bias[gate], numeric_gradient(p.input_bias[gate], loss)), 1e-5);
    EXPECT_LT(max_rel_error(g.params.recurrent_bias[gate], numeric_gradient(p.recurrent_bias[gate], loss)), 1e-5);
  }
}

TEST(GRU, ParameterCountOfTenUnitsOnOneChannel) {
  EXPECT_EQ(GRUParams<double>::zeros(1, 10).parameter_count(), 390u);
}

// ----------------------------------------------------------------- pooling

TEST(GlobalPool, MaxPicksFirstMaximumAndRoutesGradientThere) {
  Tensor<double> x({1, 4, 2}, std::vector<double>{1, 5, 3, 5, 3, 2, 0, 5});
  auto fwd = global_pool_forward(x, PoolMode::Max);
  EXPECT_EQ(fwd.output, Tensor<double>::matrix({{3, 5}}));
  const auto dx = global_pool_backward(fwd.cache, Tensor<double>::matrix({{10, 20}}));
  // channel 0: first 3 at t=1; channel 1: first 5 at t=0
  EXPECT_EQ(dx, Tensor<double>({1, 4, 2}, std::vector<double>{0, 20, 10, 0, 0, 0, 0, 0}));
}

TEST(GlobalPool, AverageForwardAndBackward) {
  SeededRng rng(10);
  auto x = random_tensor({2, 5, 3}, rng);
  const auto r = random_tensor({2, 3}, rng);
  auto fwd = global_pool_forward(x, PoolMode::Average);
  const auto dx = global_pool_backward(fwd.cache, r);
  auto loss = [&] { return dot(global_pool_forward(x, PoolMode::Average).output, r); };
  EXPECT_LT(max_rel_error(dx, numeric_gradient(x, loss)), 1e-5);
}

TEST(GlobalPool, ModeNames) {
  EXPECT_EQ(parse_pool_mode("max"), PoolMode::Max);
  EXPECT_EQ(parse_pool_mode(to_string(PoolMode::Average)), PoolMode::Average);
  EXPECT_THROW(parse_pool_mode("median"), ConfigError);
}

// ------------------------------------------------------------------- dense

TEST(Dense, ForwardHandValues) {
  DenseParams<double> p{Tensor<double>::matrix({{1, -1}, {2, 0.5}}), Tensor<double>::vector({0.5, -3})};
  const auto x = Tensor<double>::matrix({{1, 2}});
  EXPECT_EQ(dense_forward(x, p).output, Tensor<double>::matrix({{5.5, -3}}));
  EXPECT_EQ(dense_forward(x, p, Activation::Relu).output, Tensor<double>::matrix({{5.5, 0}}));
}

TEST(Dense, BackwardMatchesFiniteDifferences) {
  SeededRng rng(11);
  for (Activation act : {Activation::Linear, Activation::Relu, Activation::Softmax}) {
    auto x = random_tensor({3, 4}, rng);
    DenseParams<double> p{random_tensor({4, 5}, rng), random_tensor({5}, rng)};
    const auto r = random_tensor({3, 5}, rng);
    auto fwd = dense_forward(x, p, act);
    const auto g = dense_backward(fwd.cache, r, p);
    auto loss = [&] { return dot(dense_forward(x, p, act).output, r); };
    EXPECT_LT(max_rel_error(g.input, numeric_gradient(x, loss)), 1e-5) << to_string(act);
    EXPECT_LT(max_rel_error(g.params.weights, numeric_gradient(p.weights, loss)), 1e-5);
    EXPECT_LT(max_rel_error(g.params.bias, numeric_gradient(p.bias, loss)), 1e-5);
  }
}

// ----------------------------------------------------------------- reshape

TEST(Reshape, FlattenConcatenateSplitRoundTrip) {
  SeededRng rng(12);
  const auto seq = random_tensor({2, 3, 4}, rng);
  const auto flat = flatten(seq);
  EXPECT_EQ(flat.shape(), (Shape{2, 12}));
  EXPECT_EQ(unflatten(flat, seq.shape()), seq);
  const auto a = random_tensor({2, 5}, rng);
  const auto joined = concatenate(a, flat);
  EXPECT_EQ(joined.shape(), (Shape{2, 17}));
  EXPECT_EQ(joined(1, 5), flat(1, 0));
  const auto [left, right] = split_columns(joined, 5);
  EXPECT_EQ(left, a);
  EXPECT_EQ(right, flat);
  EXPECT_THROW(concatenate(a, random_tensor({3, 2}, rng)), ShapeError);
}
