#include <cmath>
#include <limits>

#include "econet/activations.hpp"
#include "econet/layers/batchnorm.hpp"
#include "econet/layers/conv1d.hpp"
#include "econet/layers/dense.hpp"
#include "econet/layers/gru.hpp"
#include "econet/layers/pooling.hpp"

namespace econet {

// ---------------------------------------------------------------- Conv1D

template <typename T>
Forward<T, Conv1DCache<T>> conv1d_forward(const Tensor<T>& x, const Conv1DParams<T>& p) {
  require_rank(x, 3, "conv1d input");
  if (x.dim(2) != p.in_channels()) {
    throw ShapeError("conv1d: input has " + std::to_string(x.dim(2)) +
                     " channels, kernel expects " + std::to_string(p.in_channels()));
  }
  require_shape(p.bias, {p.filters()}, "conv1d bias");
  const std::size_t batch = x.dim(0), steps = x.dim(1), cin = x.dim(2);
  const std::size_t width = p.kernel_size(), filters = p.filters();
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>((width - 1) / 2);

  Tensor<T> y({batch, steps, filters});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < steps; ++t) {
      T* out = &y(b, t, 0);
      for (std::size_t f = 0; f < filters; ++f) out[f] = p.bias[f];
      for (std::size_t k = 0; k < width; ++k) {
        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + k) - pad;
        if (src < 0 || src >= static_cast<std::ptrdiff_t>(steps)) continue;
        for (std::size_t c = 0; c < cin; ++c) {
          const T xv = x(b, static_cast<std::size_t>(src), c);
          const T* w = &p.kernel(k, c, 0);
          for (std::size_t f = 0; f < filters; ++f) out[f] += xv * w[f];
        }
      }
    }
  }
  return {std::move(y), Conv1DCache<T>{x, {}}};
}

template <typename T>
Conv1DGrads<T> conv1d_backward(Conv1DCache<T>& cache, const Tensor<T>& dy,
                               const Conv1DParams<T>& p) {
  cache.guard.consume("conv1d");
  const Tensor<T>& x = cache.input;
  const std::size_t batch = x.dim(0), steps = x.dim(1), cin = x.dim(2);
  const std::size_t width = p.kernel_size(), filters = p.filters();
  require_shape(dy, {batch, steps, filters}, "conv1d upstream gradient");
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>((width - 1) / 2);

  Conv1DGrads<T> g{Tensor<T>(x.shape()), Conv1DParams<T>::zeros(width, cin, filters)};
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < steps; ++t) {
      const T* d = &dy(b, t, 0);
      for (std::size_t f = 0; f < filters; ++f) g.params.bias[f] += d[f];
      for (std::size_t k = 0; k < width; ++k) {
        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + k) - pad;
        if (src < 0 || src >= static_cast<std::ptrdiff_t>(steps)) continue;
        const auto s = static_cast<std::size_t>(src);
        for (std::size_t c = 0; c < cin; ++c) {
          const T xv = x(b, s, c);
          const T* w = &p.kernel(k, c, 0);
          T* gw = &g.params.kernel(k, c, 0);
          T acc{0};
          for (std::size_t f = 0; f < filters; ++f) {
            gw[f] += xv * d[f];
            acc += w[f] * d[f];
          }
          g.input(b, s, c) += acc;
        }
      }
    }
  }
  return g;
}

// ------------------------------------------------------ BatchNormalization

namespace {

template <typename T>
void check_bn_input(const Tensor<T>& x, const BatchNormParams<T>& p) {
  if (x.rank() < 2 || x.shape().back() != p.channels()) {
    throw ShapeError("batchnorm: input " + shape_string(x.shape()) + " does not end in " +
                     std::to_string(p.channels()) + " channels");
  }
}

template <typename T>
Forward<T, BatchNormCache<T>> bn_apply(const Tensor<T>& x, const BatchNormParams<T>& p,
                                       const std::vector<T>& mean, Tensor<T> inv_std,
                                       Mode mode) {
  const std::size_t channels = p.channels();
  const std::size_t rows = x.size() / channels;
  Tensor<T> normalized(x.shape()), y(x.shape());
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t idx = i * channels + c;
      normalized[idx] = (x[idx] - mean[c]) * inv_std[c];
      y[idx] = normalized[idx] * p.gamma[c] + p.beta[c];
    }
  }
  BatchNormCache<T> cache;
  cache.mode = mode;
  cache.normalized = std::move(normalized);
  cache.inv_std = std::move(inv_std);
  return {std::move(y), std::move(cache)};
}

}  // namespace

template <typename T>
Forward<T, BatchNormCache<T>> batchnorm_forward_train(const Tensor<T>& x,
                                                      BatchNormParams<T>& p) {
  check_bn_input(x, p);
  const std::size_t channels = p.channels();
  const std::size_t rows = x.size() / channels;
  if (rows < 2) throw ShapeError("batchnorm: train mode needs at least 2 values per channel");

  std::vector<T> mean(channels, T{0}), var(channels, T{0});
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t c = 0; c < channels; ++c) mean[c] += x[i * channels + c];
  for (auto& m : mean) m /= static_cast<T>(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      const T d = x[i * channels + c] - mean[c];
      var[c] += d * d;
    }
  }
  for (auto& v : var) v /= static_cast<T>(rows);

  Tensor<T> inv_std({channels});
  const T eps = static_cast<T>(p.epsilon);
  for (std::size_t c = 0; c < channels; ++c) inv_std[c] = T{1} / std::sqrt(var[c] + eps);

  auto out = bn_apply(x, p, mean, std::move(inv_std), Mode::Train);

  const T momentum = static_cast<T>(p.momentum);
  for (std::size_t c = 0; c < channels; ++c) {
    p.moving_mean[c] = momentum * p.moving_mean[c] + (T{1} - momentum) * mean[c];
    p.moving_var[c] = momentum * p.moving_var[c] + (T{1} - momentum) * var[c];
  }
  return out;
}

template <typename T>
Forward<T, BatchNormCache<T>> batchnorm_forward_infer(const Tensor<T>& x,
                                                      const BatchNormParams<T>& p) {
  check_bn_input(x, p);
  const std::size_t channels = p.channels();
  std::vector<T> mean(p.moving_mean.values().begin(), p.moving_mean.values().end());
  Tensor<T> inv_std({channels});
  const T eps = static_cast<T>(p.epsilon);
  for (std::size_t c = 0; c < channels; ++c)
    inv_std[c] = T{1} / std::sqrt(p.moving_var[c] + eps);
  return bn_apply(x, p, mean, std::move(inv_std), Mode::Infer);
}

template <typename T>
BatchNormGrads<T> batchnorm_backward(BatchNormCache<T>& cache, const Tensor<T>& dy,
                                     const BatchNormParams<T>& p) {
  cache.guard.consume("batchnorm");
  const Tensor<T>& xhat = cache.normalized;
  require_shape(dy, xhat.shape(), "batchnorm upstream gradient");
  const std::size_t channels = p.channels();
  const std::size_t rows = xhat.size() / channels;

  BatchNormGrads<T> g{Tensor<T>(xhat.shape()), Tensor<T>({channels}), Tensor<T>({channels})};
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t idx = i * channels + c;
      g.beta[c] += dy[idx];
      g.gamma[c] += dy[idx] * xhat[idx];
    }
  }

  if (cache.mode == Mode::Infer) {
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t c = 0; c < channels; ++c) {
        const std::size_t idx = i * channels + c;
        g.input[idx] = dy[idx] * p.gamma[c] * cache.inv_std[c];
      }
    return g;
  }

  // dx = gamma·inv_std/M · (M·dy - Σdy - x̂·Σ(dy·x̂)); Σdy = dbeta, Σ(dy·x̂) = dgamma.
  const T m = static_cast<T>(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t idx = i * channels + c;
      g.input[idx] = p.gamma[c] * cache.inv_std[c] / m *
                     (m * dy[idx] - g.beta[c] - xhat[idx] * g.gamma[c]);
    }
  }
  return g;
}

// ------------------------------------------------------------------- GRU

namespace {

// out(b, j) += Σ_i a(b, i) · w(i, j)
template <typename T>
void accumulate_product(const T* a, std::size_t batch, std::size_t in, const Tensor<T>& w,
                        T* out) {
  const std::size_t units = w.dim(1);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t i = 0; i < in; ++i) {
      const T av = a[b * in + i];
      const T* row = w.data() + i * units;
      T* o = out + b * units;
      for (std::size_t j = 0; j < units; ++j) o[j] += av * row[j];
    }
}

// out(b, i) += Σ_j d(b, j) · w(i, j)
template <typename T>
void accumulate_product_transposed(const T* d, std::size_t batch, const Tensor<T>& w,
                                   T* out) {
  const std::size_t in = w.dim(0), units = w.dim(1);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t i = 0; i < in; ++i) {
      const T* row = w.data() + i * units;
      const T* db = d + b * units;
      T acc{0};
      for (std::size_t j = 0; j < units; ++j) acc += db[j] * row[j];
      out[b * in + i] += acc;
    }
}

// gw(i, j) += Σ_b a(b, i) · d(b, j)
template <typename T>
void accumulate_outer(const T* a, std::size_t batch, std::size_t in, const T* d,
                      Tensor<T>& gw) {
  const std::size_t units = gw.dim(1);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t i = 0; i < in; ++i) {
      const T av = a[b * in + i];
      T* row = gw.data() + i * units;
      const T* db = d + b * units;
      for (std::size_t j = 0; j < units; ++j) row[j] += av * db[j];
    }
}

template <typename T>
void check_gru_params(const GRUParams<T>& p) {
  const std::size_t in = p.input_dim(), units = p.units();
  for (std::size_t g = 0; g < 3; ++g) {
    require_shape(p.input_weights[g], {in, units}, "gru input weights");
    require_shape(p.recurrent_weights[g], {units, units}, "gru recurrent weights");
    require_shape(p.input_bias[g], {units}, "gru input bias");
    require_shape(p.recurrent_bias[g], {units}, "gru recurrent bias");
  }
}

}  // namespace

template <typename T>
Forward<T, GRUCache<T>> gru_forward(const Tensor<T>& x, const GRUParams<T>& p,
                                    const Tensor<T>& h0) {
  require_rank(x, 3, "gru input");
  check_gru_params(p);
  const std::size_t batch = x.dim(0), steps = x.dim(1), in = x.dim(2), units = p.units();
  if (in != p.input_dim()) {
    throw ShapeError("gru: input dim " + std::to_string(in) + ", weights expect " +
                     std::to_string(p.input_dim()));
  }
  require_shape(h0, {batch, units}, "gru initial state");

  GRUCache<T> cache;
  cache.input = x;
  Tensor<T> hseq({batch, steps, units});
  Tensor<T> h = h0;
  std::vector<T> xt(batch * in);

  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t i = 0; i < in; ++i) xt[b * in + i] = x(b, t, i);

    Tensor<T> z({batch, units}), r({batch, units}), cand({batch, units}), rec({batch, units});
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t j = 0; j < units; ++j) {
        z(b, j) = p.input_bias[kUpdateGate][j] + p.recurrent_bias[kUpdateGate][j];
        r(b, j) = p.input_bias[kResetGate][j] + p.recurrent_bias[kResetGate][j];
        cand(b, j) = p.input_bias[kCandidate][j];
        rec(b, j) = p.recurrent_bias[kCandidate][j];
      }
    accumulate_product(xt.data(), batch, in, p.input_weights[kUpdateGate], z.data());
    accumulate_product(h.data(), batch, units, p.recurrent_weights[kUpdateGate], z.data());
    accumulate_product(xt.data(), batch, in, p.input_weights[kResetGate], r.data());
    accumulate_product(h.data(), batch, units, p.recurrent_weights[kResetGate], r.data());
    accumulate_product(xt.data(), batch, in, p.input_weights[kCandidate], cand.data());
    accumulate_product(h.data(), batch, units, p.recurrent_weights[kCandidate], rec.data());

    Tensor<T> next({batch, units});
    for (std::size_t k = 0; k < z.size(); ++k) {
      z[k] = sigmoid(z[k]);
      r[k] = sigmoid(r[k]);
      cand[k] = std::tanh(cand[k] + r[k] * rec[k]);
      next[k] = (T{1} - z[k]) * h[k] + z[k] * cand[k];
    }
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t j = 0; j < units; ++j) hseq(b, t, j) = next(b, j);

    cache.h_prev.push_back(std::move(h));
    cache.update.push_back(std::move(z));
    cache.reset.push_back(std::move(r));
    cache.candidate.push_back(std::move(cand));
    cache.recurrent_candidate.push_back(std::move(rec));
    h = std::move(next);
  }
  return {std::move(hseq), std::move(cache)};
}

template <typename T>
GRUGrads<T> gru_backward(GRUCache<T>& cache, const Tensor<T>& dh_seq, const GRUParams<T>& p) {
  cache.guard.consume("gru");
  const Tensor<T>& x = cache.input;
  const std::size_t batch = x.dim(0), steps = x.dim(1), in = x.dim(2), units = p.units();
  require_shape(dh_seq, {batch, steps, units}, "gru upstream gradient");

  GRUGrads<T> g{Tensor<T>(x.shape()), Tensor<T>({batch, units}),
                GRUParams<T>::zeros(in, units)};
  Tensor<T> dh_next({batch, units});
  std::vector<T> xt(batch * in), dxt(batch * in);
  Tensor<T> dh({batch, units}), da_z({batch, units}), da_r({batch, units}),
      da_c({batch, units}), drec({batch, units});

  for (std::size_t step = steps; step-- > 0;) {
    const Tensor<T>& hp = cache.h_prev[step];
    const Tensor<T>& z = cache.update[step];
    const Tensor<T>& r = cache.reset[step];
    const Tensor<T>& c = cache.candidate[step];
    const Tensor<T>& rec = cache.recurrent_candidate[step];
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t i = 0; i < in; ++i) xt[b * in + i] = x(b, step, i);

    Tensor<T> dh_prev({batch, units});
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t j = 0; j < units; ++j) {
        const std::size_t k = b * units + j;
        dh[k] = dh_seq(b, step, j) + dh_next[k];
        const T dz = dh[k] * (c[k] - hp[k]);
        const T dc = dh[k] * z[k];
        dh_prev[k] = dh[k] * (T{1} - z[k]);
        da_c[k] = dc * (T{1} - c[k] * c[k]);
        const T dr = da_c[k] * rec[k];
        drec[k] = da_c[k] * r[k];
        da_z[k] = dz * z[k] * (T{1} - z[k]);
        da_r[k] = dr * r[k] * (T{1} - r[k]);
      }

    const Tensor<T>* pre[3] = {&da_z, &da_r, &da_c};
    for (std::size_t gate = 0; gate < 3; ++gate) {
      const Tensor<T>& d = *pre[gate];
      accumulate_outer(xt.data(), batch, in, d.data(), g.params.input_weights[gate]);
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t j = 0; j < units; ++j) g.params.input_bias[gate][j] += d(b, j);
    }
    // Update and reset gates see h directly; the candidate sees it through r.
    const Tensor<T>* rec_pre[3] = {&da_z, &da_r, &drec};
    for (std::size_t gate = 0; gate < 3; ++gate) {
      const Tensor<T>& d = *rec_pre[gate];
      accumulate_outer(hp.data(), batch, units, d.data(), g.params.recurrent_weights[gate]);
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t j = 0; j < units; ++j) g.params.recurrent_bias[gate][j] += d(b, j);
      accumulate_product_transposed(d.data(), batch, p.recurrent_weights[gate],
                                    dh_prev.data());
    }

    std::fill(dxt.begin(), dxt.end(), T{0});
    for (std::size_t gate = 0; gate < 3; ++gate)
      accumulate_product_transposed(pre[gate]->data(), batch, p.input_weights[gate],
                                    dxt.data());
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t i = 0; i < in; ++i) g.input(b, step, i) = dxt[b * in + i];

    dh_next = std::move(dh_prev);
  }
  g.initial = std::move(dh_next);
  return g;
}

// --------------------------------------------------------- Global pooling

std::string_view to_string(PoolMode mode) noexcept {
  return mode == PoolMode::Max ? "max" : "average";
}

PoolMode parse_pool_mode(std::string_view name) {
  if (name == "max") return PoolMode::Max;
  if (name == "average" || name == "avg") return PoolMode::Average;
  throw ConfigError("unknown pooling mode '" + std::string(name) + "'");
}

template <typename T>
Forward<T, GlobalPoolCache<T>> global_pool_forward(const Tensor<T>& x, PoolMode mode) {
  require_rank(x, 3, "global pooling input");
  const std::size_t batch = x.dim(0), steps = x.dim(1), channels = x.dim(2);
  Tensor<T> y({batch, channels});
  GlobalPoolCache<T> cache;
  cache.mode = mode;
  cache.input_shape = x.shape();
  if (mode == PoolMode::Max) cache.argmax.assign(batch * channels, 0);

  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t c = 0; c < channels; ++c) {
      if (mode == PoolMode::Max) {
        std::size_t best = 0;
        T peak = x(b, 0, c);
        for (std::size_t t = 1; t < steps; ++t) {
          if (x(b, t, c) > peak) {
            peak = x(b, t, c);
            best = t;
          }
        }
        y(b, c) = peak;
        cache.argmax[b * channels + c] = best;
      } else {
        T total{0};
        for (std::size_t t = 0; t < steps; ++t) total += x(b, t, c);
        y(b, c) = total / static_cast<T>(steps);
      }
    }
  }
  return {std::move(y), std::move(cache)};
}

template <typename T>
Tensor<T> global_pool_backward(GlobalPoolCache<T>& cache, const Tensor<T>& dy) {
  cache.guard.consume("global pooling");
  const std::size_t batch = cache.input_shape[0], steps = cache.input_shape[1],
                    channels = cache.input_shape[2];
  require_shape(dy, {batch, channels}, "global pooling upstream gradient");
  Tensor<T> dx(cache.input_shape);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t c = 0; c < channels; ++c) {
      if (cache.mode == PoolMode::Max) {
        dx(b, cache.argmax[b * channels + c], c) = dy(b, c);
      } else {
        const T share = dy(b, c) / static_cast<T>(steps);
        for (std::size_t t = 0; t < steps; ++t) dx(b, t, c) = share;
      }
    }
  return dx;
}

// ------------------------------------------------------------------ Dense

template <typename T>
Forward<T, DenseCache<T>> dense_forward(const Tensor<T>& x, const DenseParams<T>& p,
                                        Activation activation) {
  require_rank(x, 2, "dense input");
  if (x.dim(1) != p.inputs()) {
    throw ShapeError("dense: input width " + std::to_string(x.dim(1)) +
                     ", weights expect " + std::to_string(p.inputs()));
  }
  require_shape(p.bias, {p.outputs()}, "dense bias");
  Tensor<T> pre = matmul(x, p.weights);
  for (std::size_t b = 0; b < pre.dim(0); ++b)
    for (std::size_t j = 0; j < p.outputs(); ++j) pre(b, j) += p.bias[j];
  Tensor<T> y = activate(pre, activation);
  DenseCache<T> cache;
  cache.activation = activation;
  cache.input = x;
  cache.output = y;
  return {std::move(y), std::move(cache)};
}

template <typename T>
DenseGrads<T> dense_backward(DenseCache<T>& cache, const Tensor<T>& dy,
                             const DenseParams<T>& p) {
  cache.guard.consume("dense");
  const Tensor<T> dpre = activate_backward(cache.output, dy, cache.activation);
  const Tensor<T>& x = cache.input;
  const std::size_t batch = x.dim(0);
  DenseGrads<T> g{Tensor<T>(x.shape()), DenseParams<T>::zeros(p.inputs(), p.outputs())};
  accumulate_outer(x.data(), batch, p.inputs(), dpre.data(), g.params.weights);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t j = 0; j < p.outputs(); ++j) g.params.bias[j] += dpre(b, j);
  accumulate_product_transposed(dpre.data(), batch, p.weights, g.input.data());
  return g;
}

#define ECONET_INSTANTIATE_LAYERS(T)                                                       \
  template Forward<T, Conv1DCache<T>> conv1d_forward(const Tensor<T>&,                     \
                                                     const Conv1DParams<T>&);              \
  template Conv1DGrads<T> conv1d_backward(Conv1DCache<T>&, const Tensor<T>&,               \
                                          const Conv1DParams<T>&);                         \
  template Forward<T, BatchNormCache<T>> batchnorm_forward_train(const Tensor<T>&,         \
                                                                 BatchNormParams<T>&);     \
  template Forward<T, BatchNormCache<T>> batchnorm_forward_infer(                          \
      const Tensor<T>&, const BatchNormParams<T>&);                                        \
  template BatchNormGrads<T> batchnorm_backward(BatchNormCache<T>&, const Tensor<T>&,      \
                                                const BatchNormParams<T>&);                \
  template Forward<T, GRUCache<T>> gru_forward(const Tensor<T>&, const GRUParams<T>&,      \
                                               const Tensor<T>&);                          \
  template GRUGrads<T> gru_backward(GRUCache<T>&, const Tensor<T>&, const GRUParams<T>&);  \
  template Forward<T, GlobalPoolCache<T>> global_pool_forward(const Tensor<T>&, PoolMode); \
  template Tensor<T> global_pool_backward(GlobalPoolCache<T>&, const Tensor<T>&);          \
  template Forward<T, DenseCache<T>> dense_forward(const Tensor<T>&, const DenseParams<T>&, \
                                                   Activation);                            \
  template DenseGrads<T> dense_backward(DenseCache<T>&, const Tensor<T>&,                  \
                                        const DenseParams<T>&);

ECONET_INSTANTIATE_LAYERS(float)
ECONET_INSTANTIATE_LAYERS(double)

}  // namespace econet
