#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "econet/layers/common.hpp"

namespace econet {

enum class PoolMode { Max, Average };

std::string_view to_string(PoolMode mode) noexcept;
PoolMode parse_pool_mode(std::string_view name);

template <typename T>
struct GlobalPoolCache {
  PoolMode mode = PoolMode::Max;
  Shape input_shape;
  std::vector<std::size_t> argmax;  // (B·C), time index of the first maximum
  CacheGuard guard;
};

/// Reduces x (batch, time, channels) over time to (batch, channels).
template <typename T>
Forward<T, GlobalPoolCache<T>> global_pool_forward(const Tensor<T>& x,
                                                   PoolMode mode = PoolMode::Max);

/// Max mode routes each gradient to the first maximal time step only.
template <typename T>
Tensor<T> global_pool_backward(GlobalPoolCache<T>& cache, const Tensor<T>& dy);

}  // namespace econet
