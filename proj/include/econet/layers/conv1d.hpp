#pragma once

#include <cstddef>

#include "econet/layers/common.hpp"

namespace econet {

/// 1-D convolution weights: kernel (kernel_size, in_channels, filters), bias (filters).
template <typename T>
struct Conv1DParams {
  Tensor<T> kernel;
  Tensor<T> bias;

  static Conv1DParams zeros(std::size_t kernel_size, std::size_t in_channels,
                            std::size_t filters) {
    return {Tensor<T>({kernel_size, in_channels, filters}), Tensor<T>({filters})};
  }
  std::size_t kernel_size() const { return kernel.dim(0); }
  std::size_t in_channels() const { return kernel.dim(1); }
  std::size_t filters() const { return kernel.dim(2); }
  std::size_t parameter_count() const { return kernel.size() + bias.size(); }
};

template <typename T>
struct Conv1DCache {
  Tensor<T> input;
  CacheGuard guard;
};

template <typename T>
struct Conv1DGrads {
  Tensor<T> input;
  Conv1DParams<T> params;
};

/// Stride-1 convolution with "same" zero padding over x (batch, time, channels).
///
/// The kernel is centred: tap k reads x[t + k - (kernel_size - 1) / 2].
template <typename T>
Forward<T, Conv1DCache<T>> conv1d_forward(const Tensor<T>& x, const Conv1DParams<T>& p);

template <typename T>
Conv1DGrads<T> conv1d_backward(Conv1DCache<T>& cache, const Tensor<T>& dy,
                               const Conv1DParams<T>& p);

}  // namespace econet
