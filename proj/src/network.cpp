#include "econet/network.hpp"

#include <iomanip>
#include <sstream>

#include "econet/init.hpp"
#include "econet/layers/reshape.hpp"
#include "econet/rng.hpp"

namespace econet {

void ArchConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string("architecture: ") + name + " must be positive");
  };
  positive(sequence_length, "sequence_length");
  positive(input_channels, "input_channels");
  positive(kernel_size, "kernel_size");
  positive(filters, "filters");
  positive(gru_units, "gru_units");
  positive(dense_units, "dense_units");
  positive(classes, "classes");
  if (!(bn_epsilon > 0.0)) throw ConfigError("architecture: bn_epsilon must be positive");
  if (!(bn_momentum > 0.0 && bn_momentum < 1.0))
    throw ConfigError("architecture: bn_momentum must lie in (0, 1)");
  if (conv_activation == Activation::Softmax || dense_activation == Activation::Softmax)
    throw ConfigError("architecture: softmax is reserved for the output layer");
}

template <typename T>
NetworkParameters<T> NetworkParameters<T>::zeros(const ArchConfig& arch) {
  arch.validate();
  NetworkParameters p;
  p.arch = arch;
  p.conv = Conv1DParams<T>::zeros(arch.kernel_size, arch.input_channels, arch.filters);
  p.bn = BatchNormParams<T>::defaults(arch.filters, arch.bn_epsilon, arch.bn_momentum);
  p.gru = GRUParams<T>::zeros(arch.input_channels, arch.gru_units);
  p.dense = DenseParams<T>::zeros(arch.concat_width(), arch.dense_units);
  p.head = DenseParams<T>::zeros(arch.dense_units, arch.classes);
  return p;
}

template <typename T>
bool NetworkParameters<T>::operator==(const NetworkParameters& other) const {
  if (!(arch == other.arch)) return false;
  const auto a = named_tensors(*this);
  const auto b = named_tensors(other);
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!(*a[i].tensor == *b[i].tensor)) return false;
  return true;
}

namespace {

template <typename P, typename Out>
void collect(P& p, Out& out) {
  static constexpr const char* gate[3] = {"z", "r", "h"};
  out.push_back({"conv1d.kernel", "conv1d", &p.conv.kernel, true});
  out.push_back({"conv1d.bias", "conv1d", &p.conv.bias, true});
  out.push_back({"batch_normalization.gamma", "batch_normalization", &p.bn.gamma, true});
  out.push_back({"batch_normalization.beta", "batch_normalization", &p.bn.beta, true});
  out.push_back({"batch_normalization.moving_mean", "batch_normalization", &p.bn.moving_mean,
                 false});
  out.push_back({"batch_normalization.moving_variance", "batch_normalization",
                 &p.bn.moving_var, false});
  for (int g = 0; g < 3; ++g)
    out.push_back({std::string("gru.w_") + gate[g], "gru", &p.gru.input_weights[g], true});
  for (int g = 0; g < 3; ++g)
    out.push_back({std::string("gru.u_") + gate[g], "gru", &p.gru.recurrent_weights[g], true});
  for (int g = 0; g < 3; ++g)
    out.push_back({std::string("gru.b_") + gate[g], "gru", &p.gru.input_bias[g], true});
  for (int g = 0; g < 3; ++g)
    out.push_back(
        {std::string("gru.recurrent_b_") + gate[g], "gru", &p.gru.recurrent_bias[g], true});
  out.push_back({"dense.kernel", "dense", &p.dense.weights, true});
  out.push_back({"dense.bias", "dense", &p.dense.bias, true});
  out.push_back({"dense_1.kernel", "dense_1", &p.head.weights, true});
  out.push_back({"dense_1.bias", "dense_1", &p.head.bias, true});
}

}  // namespace

template <typename T>
std::vector<NamedTensor<Tensor<T>>> named_tensors(NetworkParameters<T>& params) {
  std::vector<NamedTensor<Tensor<T>>> out;
  collect(params, out);
  return out;
}

template <typename T>
std::vector<NamedTensor<const Tensor<T>>> named_tensors(const NetworkParameters<T>& params) {
  std::vector<NamedTensor<const Tensor<T>>> out;
  collect(params, out);
  return out;
}

template <typename T>
NetworkParameters<T> build(std::uint64_t seed, const ArchConfig& arch) {
  auto p = NetworkParameters<T>::zeros(arch);
  const SeededRng root(seed);

  SeededRng conv_rng = root.fork("conv1d");
  p.conv.kernel = init_he_uniform<T>(p.conv.kernel.shape(),
                                     arch.kernel_size * arch.input_channels, conv_rng);

  SeededRng gru_rng = root.fork("gru");
  for (std::size_t g = 0; g < 3; ++g) {
    p.gru.input_weights[g] =
        init_truncated_normal<T>(p.gru.input_weights[g].shape(), arch.gru_init_stddev, gru_rng);
    p.gru.recurrent_weights[g] = init_truncated_normal<T>(p.gru.recurrent_weights[g].shape(),
                                                          arch.gru_init_stddev, gru_rng);
  }

  SeededRng dense_rng = root.fork("dense");
  p.dense.weights = init_he_uniform<T>(p.dense.weights.shape(), p.dense.inputs(), dense_rng);
  SeededRng head_rng = root.fork("dense_1");
  p.head.weights = init_he_uniform<T>(p.head.weights.shape(), p.head.inputs(), head_rng);
  return p;
}

ParameterCount param_count(const ArchConfig& arch) {
  const ModelSummary s = summary(arch);
  return s.totals;
}

template <typename T>
ParameterCount param_count(const NetworkParameters<T>& params) {
  ParameterCount c;
  for (const auto& nt : named_tensors(params)) {
    c.total += nt.tensor->size();
    (nt.trainable ? c.trainable : c.non_trainable) += nt.tensor->size();
  }
  return c;
}

ModelSummary summary(const ArchConfig& arch) {
  arch.validate();
  const std::size_t T = arch.sequence_length, C = arch.input_channels, F = arch.filters,
                    U = arch.gru_units, D = arch.dense_units, K = arch.classes;
  const std::size_t conv = arch.kernel_size * C * F + F;
  const std::size_t bn = 4 * F;
  const std::size_t gru = 3 * U * (C + U + 2);
  const std::size_t dense = arch.concat_width() * D + D;
  const std::size_t head = D * K + K;

  ModelSummary s;
  s.rows = {
      {"InputLayer", {T, C}, 0},
      {"Conv1D", {T, F}, conv},
      {"BatchNormalization", {T, F}, bn},
      {"GRU", {T, U}, gru},
      {"Activation", {T, F}, 0},
      {"Flatten", {T * U}, 0},
      {arch.pooling == PoolMode::Max ? "GlobalMaxPooling1D" : "GlobalAveragePooling1D", {F}, 0},
      {"Concatenate", {arch.concat_width()}, 0},
      {"dense", {D}, dense},
      {"dense_1", {K}, head},
  };
  for (const auto& row : s.rows) s.totals.total += row.parameters;
  s.totals.non_trainable = 2 * F;
  s.totals.trainable = s.totals.total - s.totals.non_trainable;
  return s;
}

std::string format_summary(const ModelSummary& s) {
  std::ostringstream out;
  auto shape_cell = [](const Shape& shape) {
    std::string text = "(None";
    for (std::size_t d : shape) text += ", " + std::to_string(d);
    return text + ")";
  };
  out << std::left << std::setw(24) << "Layer (type)" << std::setw(20) << "Output Shape"
      << "Param #\n";
  out << std::string(52, '=') << '\n';
  for (const auto& row : s.rows) {
    out << std::left << std::setw(24) << row.layer << std::setw(20) << shape_cell(row.output_shape)
        << row.parameters << '\n';
  }
  out << std::string(52, '=') << '\n';
  out << "Total params: " << s.totals.total << '\n';
  out << "Trainable params: " << s.totals.trainable << '\n';
  out << "Non-trainable params: " << s.totals.non_trainable << '\n';
  return out.str();
}

namespace {

template <typename T>
NetworkOutput<T> run_forward(const NetworkParameters<T>& params, BatchNormParams<T>* bn_train,
                             const Tensor<T>& x) {
  const ArchConfig& arch = params.arch;
  if (x.rank() != 3 || x.dim(1) != arch.sequence_length || x.dim(2) != arch.input_channels) {
    throw ShapeError("network input must be (batch, " + std::to_string(arch.sequence_length) +
                     ", " + std::to_string(arch.input_channels) + "), expected " +
                     std::to_string(arch.sequence_length) + " features per record, got " +
                     shape_string(x.shape()));
  }
  NetworkOutput<T> out;
  NetworkCache<T>& cache = out.cache;
  cache.mode = bn_train ? Mode::Train : Mode::Infer;

  auto conv = conv1d_forward(x, params.conv);
  cache.conv = std::move(conv.cache);
  auto bn = bn_train ? batchnorm_forward_train(conv.output, *bn_train)
                     : batchnorm_forward_infer(conv.output, params.bn);
  cache.bn = std::move(bn.cache);
  auto act = activation_forward(bn.output, arch.conv_activation);
  cache.act = std::move(act.cache);
  auto pool = global_pool_forward(act.output, arch.pooling);
  cache.pool = std::move(pool.cache);

  auto gru = gru_forward(x, params.gru);
  cache.gru = std::move(gru.cache);
  cache.gru_output_shape = gru.output.shape();
  const Tensor<T> flat = flatten(gru.output);

  cache.pool_width = pool.output.dim(1);
  const Tensor<T> merged = concatenate(pool.output, flat);
  auto dense = dense_forward(merged, params.dense, arch.dense_activation);
  cache.dense = std::move(dense.cache);
  auto head = dense_forward(dense.output, params.head, Activation::Linear);
  cache.head = std::move(head.cache);

  out.logits = std::move(head.output);
  out.probs = softmax(out.logits);
  return out;
}

}  // namespace

template <typename T>
NetworkOutput<T> forward(NetworkParameters<T>& params, const Tensor<T>& x, Mode mode) {
  return run_forward(params, mode == Mode::Train ? &params.bn : nullptr, x);
}

template <typename T>
NetworkOutput<T> infer(const NetworkParameters<T>& params, const Tensor<T>& x) {
  return run_forward<T>(params, nullptr, x);
}

template <typename T>
NetworkParameters<T> backward(const NetworkParameters<T>& params, NetworkCache<T>& cache,
                              const Tensor<T>& dlogits) {
  auto grads = NetworkParameters<T>::zeros(params.arch);
  grads.bn.gamma.fill(T{0});
  grads.bn.moving_var.fill(T{0});

  auto head = dense_backward(cache.head, dlogits, params.head);
  grads.head = std::move(head.params);
  auto dense = dense_backward(cache.dense, head.input, params.dense);
  grads.dense = std::move(dense.params);

  auto [dpool, dflat] = split_columns(dense.input, cache.pool_width);

  auto gru = gru_backward(cache.gru, unflatten(dflat, cache.gru_output_shape), params.gru);
  grads.gru = std::move(gru.params);

  const Tensor<T> dact = global_pool_backward(cache.pool, dpool);
  const Tensor<T> dbn = activation_backward(cache.act, dact);
  auto bn = batchnorm_backward(cache.bn, dbn, params.bn);
  grads.bn.gamma = std::move(bn.gamma);
  grads.bn.beta = std::move(bn.beta);
  auto conv = conv1d_backward(cache.conv, bn.input, params.conv);
  grads.conv = std::move(conv.params);
  return grads;
}

#define ECONET_INSTANTIATE_NETWORK(T)                                                      \
  template struct NetworkParameters<T>;                                                    \
  template std::vector<NamedTensor<Tensor<T>>> named_tensors(NetworkParameters<T>&);       \
  template std::vector<NamedTensor<const Tensor<T>>> named_tensors(                        \
      const NetworkParameters<T>&);                                                        \
  template NetworkParameters<T> build(std::uint64_t, const ArchConfig&);                   \
  template ParameterCount param_count(const NetworkParameters<T>&);                        \
  template NetworkOutput<T> forward(NetworkParameters<T>&, const Tensor<T>&, Mode);        \
  template NetworkOutput<T> infer(const NetworkParameters<T>&, const Tensor<T>&);          \
  template NetworkParameters<T> backward(const NetworkParameters<T>&, NetworkCache<T>&,    \
                                         const Tensor<T>&);

ECONET_INSTANTIATE_NETWORK(float)
ECONET_INSTANTIATE_NETWORK(double)

}  // namespace econet
