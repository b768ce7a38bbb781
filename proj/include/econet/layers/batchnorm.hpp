#pragma once

#include <cstddef>

#include "econet/layers/common.hpp"

namespace econet {

/// Per-channel batch normalization state. gamma/beta are trainable; the
/// moving statistics only change through a train-mode forward pass.
template <typename T>
struct BatchNormParams {
  Tensor<T> gamma;
  Tensor<T> beta;
  Tensor<T> moving_mean;
  Tensor<T> moving_var;
  double epsilon = 1e-3;
  double momentum = 0.99;

  static BatchNormParams defaults(std::size_t channels, double epsilon = 1e-3,
                                  double momentum = 0.99) {
    return {Tensor<T>({channels}, T{1}), Tensor<T>({channels}),
            Tensor<T>({channels}), Tensor<T>({channels}, T{1}), epsilon, momentum};
  }
  std::size_t channels() const { return gamma.size(); }
  std::size_t trainable_count() const { return gamma.size() + beta.size(); }
  std::size_t non_trainable_count() const { return moving_mean.size() + moving_var.size(); }
  std::size_t parameter_count() const { return trainable_count() + non_trainable_count(); }
};

template <typename T>
struct BatchNormCache {
  Mode mode = Mode::Infer;
  Tensor<T> normalized;   // x-hat, same shape as the input
  Tensor<T> inv_std;      // (C)
  CacheGuard guard;
};

template <typename T>
struct BatchNormGrads {
  Tensor<T> input;
  Tensor<T> gamma;
  Tensor<T> beta;
};

/// Train mode: normalizes x (batch, time, channels) by the batch statistics
/// over (batch, time) and folds them into the moving averages.
template <typename T>
Forward<T, BatchNormCache<T>> batchnorm_forward_train(const Tensor<T>& x,
                                                      BatchNormParams<T>& p);

/// Infer mode: fixed affine map using the moving statistics.
template <typename T>
Forward<T, BatchNormCache<T>> batchnorm_forward_infer(const Tensor<T>& x,
                                                      const BatchNormParams<T>& p);

template <typename T>
Forward<T, BatchNormCache<T>> batchnorm_forward(const Tensor<T>& x, BatchNormParams<T>& p,
                                                Mode mode) {
  return mode == Mode::Train ? batchnorm_forward_train(x, p) : batchnorm_forward_infer(x, p);
}

template <typename T>
BatchNormGrads<T> batchnorm_backward(BatchNormCache<T>& cache, const Tensor<T>& dy,
                                     const BatchNormParams<T>& p);

}  // namespace econet
