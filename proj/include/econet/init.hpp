#pragma once

#include <cmath>
#include <cstddef>

#include "econet/error.hpp"
#include "econet/rng.hpp"
#include "econet/tensor.hpp"

namespace econet {

/// N(0, stddev²) with draws outside ±2·stddev resampled.
template <typename T>
Tensor<T> init_truncated_normal(const Shape& shape, double stddev, SeededRng& rng) {
  if (!(stddev > 0.0)) throw ConfigError("truncated normal: stddev must be positive");
  Tensor<T> out(shape);
  const double bound = 2.0 * stddev;
  for (T& v : out.values()) {
    double draw;
    do {
      draw = rng.normal() * stddev;
    } while (std::abs(draw) > bound);
    v = static_cast<T>(draw);
  }
  return out;
}

/// Uniform on [-L, L] with L = sqrt(6 / fan_in).
template <typename T>
Tensor<T> init_he_uniform(const Shape& shape, std::size_t fan_in, SeededRng& rng) {
  if (fan_in < 1) throw ConfigError("he uniform: fan_in must be at least 1");
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  Tensor<T> out(shape);
  for (T& v : out.values()) v = static_cast<T>(rng.uniform(-limit, limit));
  return out;
}

}  // namespace econet
