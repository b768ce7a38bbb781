#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "econet/dataio.hpp"
#include "econet/metrics.hpp"
#include "econet/network.hpp"

namespace econet {

struct TrainConfig {
  std::size_t epochs = 4;
  std::size_t batch_size = 10;
  double learning_rate = 1e-3;
  double rms_decay = 0.9;
  double rms_epsilon = 1e-7;
  double validation_fraction = 0.10;
  std::uint64_t seed = 0;
  bool stratified = false;

  void validate() const;
};

/// Running average of squared gradients for every trainable tensor.
template <typename T>
struct RmsPropState {
  NetworkParameters<T> mean_square;

  static RmsPropState zeros(const ArchConfig& arch);
};

template <typename T>
struct LossResult {
  double loss = 0.0;
  Tensor<T> dlogits;  // gradient of the mean loss w.r.t. pre-softmax logits
};

/// Mean categorical cross-entropy; probabilities are clamped at 1e-12 before
/// the log. The logit gradient is (p - y) / B. Targets must be one-hot.
template <typename T>
LossResult<T> cross_entropy(const Tensor<T>& probs, const Tensor<T>& targets);

/// s <- ρ·s + (1-ρ)·g²;  θ <- θ - η·g / (sqrt(s) + ε). Batchnorm moving
/// statistics are never touched.
template <typename T>
void rmsprop_step(NetworkParameters<T>& params, const NetworkParameters<T>& grads,
                  RmsPropState<T>& state, const TrainConfig& config);

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  double seconds = 0.0;
};

/// `epoch=1 train_loss=... train_acc=... val_loss=... val_acc=... seconds=...`
std::string format_epoch(const EpochStats& s);

using ProgressSink = std::function<void(const EpochStats&)>;

struct DataSplit {
  std::vector<FlowRecord> train;
  std::vector<FlowRecord> validation;
};

/// Seeded random split. Stratified mode takes the same fraction from each
/// class separately. Both sides are non-empty; needs at least two records.
DataSplit split_train_validation(std::span<const FlowRecord> records, double validation_fraction,
                                 std::uint64_t seed, bool stratified = false);

/// Splits `dataset` per the config and trains on the training side.
template <typename T>
std::vector<EpochStats> fit(NetworkParameters<T>& params, std::span<const FlowRecord> dataset,
                            const TrainConfig& config, const ProgressSink& progress = {});

/// Trains on an explicit split. The training rows are reshuffled every epoch
/// from (seed, epoch); the last short batch is kept.
template <typename T>
std::vector<EpochStats> fit_split(NetworkParameters<T>& params,
                                  std::span<const FlowRecord> train,
                                  std::span<const FlowRecord> validation,
                                  const TrainConfig& config, const ProgressSink& progress = {});

struct Evaluation {
  ConfusionMatrix confusion;
  double loss = 0.0;
};

/// Infer-mode pass over labeled records; predicted class is the argmax.
template <typename T>
Evaluation evaluate(const NetworkParameters<T>& params, std::span<const FlowRecord> records,
                    std::size_t batch_size = 256);

/// Class probabilities (N, classes) for records, labeled or not.
template <typename T>
Tensor<T> predict_proba(const NetworkParameters<T>& params, std::span<const FlowRecord> records,
                        std::size_t batch_size = 256);

struct GradCheckOptions {
  std::size_t probes = 100;
  double tolerance = 1e-5;
  double step = 1e-4;
  /// Relative error is |a - n| / max(|a|, |n|, denominator_floor).
  double denominator_floor = 1e-5;
  std::size_t batch = 4;
  std::uint64_t seed = 1;
  Mode mode = Mode::Infer;
  /// Applied to the analytic gradients before comparison (mutation tests).
  std::function<void(NetworkParameters<double>&)> tamper;
};

struct ProbeResult {
  std::string tensor;
  std::string layer;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<ProbeResult> probes;
  double tolerance = 0.0;
  bool passed = false;
  std::size_t worst = 0;  // index into probes

  const ProbeResult& worst_probe() const { return probes.at(worst); }
};

/// Compares backward() against central differences of the mean
/// cross-entropy at coordinates spread round-robin over the five
/// parameterised layers. Inputs and labels are drawn from `options.seed`.
GradCheckReport gradient_check(const NetworkParameters<double>& params,
                               const GradCheckOptions& options = {});

std::string format_gradcheck(const GradCheckReport& report);

}  // namespace econet
