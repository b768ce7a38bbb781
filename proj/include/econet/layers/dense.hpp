#pragma once

#include <cstddef>

#include "econet/activations.hpp"
#include "econet/layers/common.hpp"

namespace econet {

template <typename T>
struct DenseParams {
  Tensor<T> weights;  // (in, out)
  Tensor<T> bias;     // (out)

  static DenseParams zeros(std::size_t in, std::size_t out) {
    return {Tensor<T>({in, out}), Tensor<T>({out})};
  }
  std::size_t inputs() const { return weights.dim(0); }
  std::size_t outputs() const { return weights.dim(1); }
  std::size_t parameter_count() const { return weights.size() + bias.size(); }
};

template <typename T>
struct DenseCache {
  Activation activation = Activation::Linear;
  Tensor<T> input;
  Tensor<T> output;
  CacheGuard guard;
};

template <typename T>
struct DenseGrads {
  Tensor<T> input;
  DenseParams<T> params;
};

/// y = activation(x·W + b) for x (batch, in).
template <typename T>
Forward<T, DenseCache<T>> dense_forward(const Tensor<T>& x, const DenseParams<T>& p,
                                        Activation activation = Activation::Linear);

/// dy is the gradient w.r.t. the activated output.
template <typename T>
DenseGrads<T> dense_backward(DenseCache<T>& cache, const Tensor<T>& dy,
                             const DenseParams<T>& p);

template <typename T>
struct ActivationCache {
  Activation activation = Activation::Linear;
  Tensor<T> output;
  CacheGuard guard;
};

/// Standalone activation layer.
template <typename T>
Forward<T, ActivationCache<T>> activation_forward(const Tensor<T>& x, Activation a) {
  Forward<T, ActivationCache<T>> f{activate(x, a), {}};
  f.cache.activation = a;
  f.cache.output = f.output;
  return f;
}

template <typename T>
Tensor<T> activation_backward(ActivationCache<T>& cache, const Tensor<T>& dy) {
  cache.guard.consume("activation");
  return activate_backward(cache.output, dy, cache.activation);
}

}  // namespace econet
