#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "econet/rng.hpp"
#include "econet/tensor.hpp"

namespace econet::testing {

inline Tensor<double> random_tensor(const Shape& shape, SeededRng& rng, double lo = -1.0,
                                    double hi = 1.0) {
  Tensor<double> t(shape);
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

inline double dot(const Tensor<double>& a, const Tensor<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Central difference of f with respect to every entry of x.
inline Tensor<double> numeric_gradient(Tensor<double>& x, const std::function<double()>& f,
                                       double h = 1e-6) {
  Tensor<double> g(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = f();
    x[i] = saved - h;
    const double down = f();
    x[i] = saved;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

inline double max_abs_diff(const Tensor<double>& a, const Tensor<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Largest |a - n| / max(|a|, |n|, floor) over all entries.
inline double max_rel_error(const Tensor<double>& analytic, const Tensor<double>& numeric,
                            double floor = 1e-6) {
  double m = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double a = analytic[i], n = numeric[i];
    m = std::max(m, std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor}));
  }
  return m;
}

}  // namespace econet::testing
