#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

#include "econet/tensor.hpp"

namespace econet {

template <typename T>
T sigmoid(T x) noexcept {
  // Split by sign so exp never overflows.
  if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
  const T e = std::exp(x);
  return e / (T{1} + e);
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  return map(x, [](T v) { return sigmoid(v); });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& x) {
  return map(x, [](T v) { return std::tanh(v); });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  return map(x, [](T v) { return v > T{0} ? v : T{0}; });
}

/// Softmax over the last axis, with max-subtraction.
template <typename T>
Tensor<T> softmax(const Tensor<T>& x) {
  if (x.empty()) throw ShapeError("softmax of an empty tensor");
  const std::size_t k = x.shape().back();
  Tensor<T> out = x;
  for (std::size_t row = 0; row < out.size() / k; ++row) {
    T* v = out.data() + row * k;
    const T peak = *std::max_element(v, v + k);
    T total{0};
    for (std::size_t i = 0; i < k; ++i) {
      v[i] = std::exp(v[i] - peak);
      total += v[i];
    }
    for (std::size_t i = 0; i < k; ++i) v[i] /= total;
  }
  return out;
}

/// Pointwise activations selectable on the Activation and Dense layers.
enum class Activation { Linear, Relu, Sigmoid, Tanh, Softmax };

std::string_view to_string(Activation a) noexcept;
Activation parse_activation(std::string_view name);

/// Applies an activation to pre-activations; softmax runs over the last axis.
template <typename T>
Tensor<T> activate(const Tensor<T>& pre, Activation a) {
  switch (a) {
    case Activation::Linear: return pre;
    case Activation::Relu: return relu(pre);
    case Activation::Sigmoid: return sigmoid(pre);
    case Activation::Tanh: return tanh(pre);
    case Activation::Softmax: return softmax(pre);
  }
  return pre;
}

/// Gradient w.r.t. pre-activation given the activation output and the
/// upstream gradient w.r.t. that output.
template <typename T>
Tensor<T> activate_backward(const Tensor<T>& out, const Tensor<T>& dout,
                            Activation a) {
  require_shape(dout, out.shape(), "activation backward");
  Tensor<T> d = dout;
  switch (a) {
    case Activation::Linear:
      break;
    case Activation::Relu:
      for (std::size_t i = 0; i < d.size(); ++i)
        if (!(out[i] > T{0})) d[i] = T{0};
      break;
    case Activation::Sigmoid:
      for (std::size_t i = 0; i < d.size(); ++i) d[i] *= out[i] * (T{1} - out[i]);
      break;
    case Activation::Tanh:
      for (std::size_t i = 0; i < d.size(); ++i) d[i] *= T{1} - out[i] * out[i];
      break;
    case Activation::Softmax: {
      const std::size_t k = out.shape().back();
      for (std::size_t row = 0; row < d.size() / k; ++row) {
        const T* p = out.data() + row * k;
        T* g = d.data() + row * k;
        T dot{0};
        for (std::size_t i = 0; i < k; ++i) dot += p[i] * g[i];
        for (std::size_t i = 0; i < k; ++i) g[i] = p[i] * (g[i] - dot);
      }
      break;
    }
  }
  return d;
}

}  // namespace econet
