#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "econet/activations.hpp"
#include "econet/layers/batchnorm.hpp"
#include "econet/layers/conv1d.hpp"
#include "econet/layers/dense.hpp"
#include "econet/layers/gru.hpp"
#include "econet/layers/pooling.hpp"

namespace econet {

/// Fixed two-branch topology; only widths and a few layer options vary.
///
///   input (16, 1) ─┬─ Conv1D ── BatchNorm ── Activation ── GlobalPool ─┐
///                  └─ GRU (return sequences) ── Flatten ────────────────┴─ Concatenate
///   ── Dense(dense_units) ── Dense(classes, softmax)
struct ArchConfig {
  std::size_t sequence_length = 16;
  std::size_t input_channels = 1;
  std::size_t kernel_size = 3;
  std::size_t filters = 128;
  std::size_t gru_units = 10;
  std::size_t dense_units = 10;
  std::size_t classes = 6;
  Activation conv_activation = Activation::Relu;
  Activation dense_activation = Activation::Relu;
  PoolMode pooling = PoolMode::Max;
  double bn_epsilon = 1e-3;
  double bn_momentum = 0.99;
  double gru_init_stddev = 0.05;

  std::size_t concat_width() const { return filters + sequence_length * gru_units; }
  void validate() const;
  bool operator==(const ArchConfig&) const = default;
};

template <typename T>
struct NetworkParameters {
  ArchConfig arch;
  Conv1DParams<T> conv;
  BatchNormParams<T> bn;
  GRUParams<T> gru;
  DenseParams<T> dense;
  DenseParams<T> head;

  /// All tensors zero except batchnorm, which starts at its defaults.
  static NetworkParameters zeros(const ArchConfig& arch);

  bool operator==(const NetworkParameters& other) const;
};

/// One named tensor of the parameter set, in manifest order.
template <typename Tensor>
struct NamedTensor {
  std::string name;
  std::string layer;
  Tensor* tensor;
  bool trainable;
};

/// Lists every tensor under its stable manifest name. Order is fixed:
/// conv, batchnorm, gru, dense, dense_1.
template <typename T>
std::vector<NamedTensor<Tensor<T>>> named_tensors(NetworkParameters<T>& params);
template <typename T>
std::vector<NamedTensor<const Tensor<T>>> named_tensors(const NetworkParameters<T>& params);

/// Initializes a network: He-uniform conv and dense kernels, truncated-normal
/// GRU weights, zero biases, batchnorm at its defaults. Each layer draws from
/// its own stream forked from `seed` by layer name.
template <typename T>
NetworkParameters<T> build(std::uint64_t seed, const ArchConfig& arch = {});

struct ParameterCount {
  std::size_t total = 0;
  std::size_t trainable = 0;
  std::size_t non_trainable = 0;
  bool operator==(const ParameterCount&) const = default;
};

ParameterCount param_count(const ArchConfig& arch);

template <typename T>
ParameterCount param_count(const NetworkParameters<T>& params);

struct SummaryRow {
  std::string layer;
  Shape output_shape;  // without the batch axis
  std::size_t parameters = 0;
};

struct ModelSummary {
  std::vector<SummaryRow> rows;
  ParameterCount totals;
};

/// Layer table in the order InputLayer, Conv1D, BatchNormalization, GRU,
/// Activation, Flatten, GlobalMaxPooling1D, Concatenate, dense, dense_1.
ModelSummary summary(const ArchConfig& arch);

/// Renders the summary as a fixed-width text table.
std::string format_summary(const ModelSummary& s);

template <typename T>
struct NetworkCache {
  Mode mode = Mode::Infer;
  Conv1DCache<T> conv;
  BatchNormCache<T> bn;
  ActivationCache<T> act;
  GlobalPoolCache<T> pool;
  Shape gru_output_shape;
  GRUCache<T> gru;
  DenseCache<T> dense;
  DenseCache<T> head;
  std::size_t pool_width = 0;
};

template <typename T>
struct NetworkOutput {
  Tensor<T> logits;  // (B, classes)
  Tensor<T> probs;   // (B, classes), rows sum to 1
  NetworkCache<T> cache;
};

/// Full forward pass over x (batch, sequence_length, input_channels).
/// Train mode updates the batchnorm moving statistics in `params`.
template <typename T>
NetworkOutput<T> forward(NetworkParameters<T>& params, const Tensor<T>& x, Mode mode);

/// Inference-only forward; never mutates the parameters.
template <typename T>
NetworkOutput<T> infer(const NetworkParameters<T>& params, const Tensor<T>& x);

/// Gradients of the loss w.r.t. every trainable tensor, given the gradient
/// w.r.t. the pre-softmax logits. Returned in a NetworkParameters whose
/// moving statistics are zero.
template <typename T>
NetworkParameters<T> backward(const NetworkParameters<T>& params, NetworkCache<T>& cache,
                              const Tensor<T>& dlogits);

}  // namespace econet
