#pragma once

#include <cstddef>

#include "econet/tensor.hpp"

namespace econet {

/// (batch, d1, d2, ...) -> (batch, d1·d2·...), row-major: element (b, t, c)
/// of a (B, T, C) input lands at column t·C + c.
template <typename T>
Tensor<T> flatten(const Tensor<T>& x) {
  if (x.rank() < 2) throw ShapeError("flatten: need a batch axis and at least one more");
  return x.reshaped({x.dim(0), x.size() / x.dim(0)});
}

/// Inverse of flatten.
template <typename T>
Tensor<T> unflatten(const Tensor<T>& x, const Shape& shape) {
  return x.reshaped(shape);
}

/// Joins (B, m) and (B, n) along the feature axis into (B, m + n). Either
/// side may be an empty tensor (no features).
template <typename T>
Tensor<T> concatenate(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  require_rank(a, 2, "concatenate lhs");
  require_rank(b, 2, "concatenate rhs");
  if (a.dim(0) != b.dim(0)) {
    throw ShapeError("concatenate: batch sizes differ, " + shape_string(a.shape()) +
                     " vs " + shape_string(b.shape()));
  }
  const std::size_t batch = a.dim(0), m = a.dim(1), n = b.dim(1);
  Tensor<T> out({batch, m + n});
  for (std::size_t i = 0; i < batch; ++i) {
    std::copy_n(a.data() + i * m, m, out.data() + i * (m + n));
    std::copy_n(b.data() + i * n, n, out.data() + i * (m + n) + m);
  }
  return out;
}

/// Splits a (B, m + n) gradient back into its (B, m) and (B, n) halves.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> split_columns(const Tensor<T>& g, std::size_t m) {
  require_rank(g, 2, "split_columns");
  const std::size_t batch = g.dim(0), total = g.dim(1);
  if (m == 0 || m >= total) throw ShapeError("split_columns: split point out of range");
  const std::size_t n = total - m;
  Tensor<T> a({batch, m}), b({batch, n});
  for (std::size_t i = 0; i < batch; ++i) {
    std::copy_n(g.data() + i * total, m, a.data() + i * m);
    std::copy_n(g.data() + i * total + m, n, b.data() + i * n);
  }
  return {std::move(a), std::move(b)};
}

}  // namespace econet
