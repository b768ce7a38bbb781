#include "econet/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "econet/error.hpp"
#include "econet/rng.hpp"

namespace econet {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw ConfigError("validation fraction must lie strictly between 0 and 1");
  if (!(learning_rate >= 0.0)) throw ConfigError("learning rate must be non-negative");
  if (!(rms_decay >= 0.0 && rms_decay < 1.0)) throw ConfigError("rms decay must lie in [0, 1)");
  if (!(rms_epsilon > 0.0)) throw ConfigError("rms epsilon must be positive");
}

template <typename T>
RmsPropState<T> RmsPropState<T>::zeros(const ArchConfig& arch) {
  RmsPropState s{NetworkParameters<T>::zeros(arch)};
  for (auto& nt : named_tensors(s.mean_square)) nt.tensor->fill(T{0});
  return s;
}

template <typename T>
LossResult<T> cross_entropy(const Tensor<T>& probs, const Tensor<T>& targets) {
  require_rank(probs, 2, "cross entropy probabilities");
  require_shape(targets, probs.shape(), "cross entropy targets");
  const std::size_t batch = probs.dim(0), k = probs.dim(1);
  LossResult<T> out{0.0, Tensor<T>(probs.shape())};
  double total = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    std::size_t hot = k, ones = 0;
    for (std::size_t j = 0; j < k; ++j) {
      const T y = targets(b, j);
      if (y == T{1}) {
        hot = j;
        ++ones;
      } else if (y != T{0}) {
        ones = 2;
      }
    }
    if (ones != 1) {
      throw DataError("cross entropy: target row " + std::to_string(b) + " is not one-hot");
    }
    total -= std::log(std::max(static_cast<double>(probs(b, hot)), 1e-12));
    for (std::size_t j = 0; j < k; ++j)
      out.dlogits(b, j) = (probs(b, j) - targets(b, j)) / static_cast<T>(batch);
  }
  out.loss = total / static_cast<double>(batch);
  return out;
}

template <typename T>
void rmsprop_step(NetworkParameters<T>& params, const NetworkParameters<T>& grads,
                  RmsPropState<T>& state, const TrainConfig& config) {
  auto theta = named_tensors(params);
  const auto g = named_tensors(grads);
  auto s = named_tensors(state.mean_square);
  const T rho = static_cast<T>(config.rms_decay);
  const T lr = static_cast<T>(config.learning_rate);
  const T eps = static_cast<T>(config.rms_epsilon);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (!theta[i].trainable) continue;
    Tensor<T>& w = *theta[i].tensor;
    const Tensor<T>& dw = *g[i].tensor;
    Tensor<T>& ms = *s[i].tensor;
    require_shape(dw, w.shape(), "rmsprop gradient");
    for (std::size_t k = 0; k < w.size(); ++k) {
      ms[k] = rho * ms[k] + (T{1} - rho) * dw[k] * dw[k];
      w[k] -= lr * dw[k] / (std::sqrt(ms[k]) + eps);
    }
  }
}

std::string format_epoch(const EpochStats& s) {
  std::ostringstream out;
  out << std::setprecision(6) << "epoch=" << s.epoch << " train_loss=" << s.train_loss
      << " train_acc=" << s.train_accuracy << " val_loss=" << s.val_loss
      << " val_acc=" << s.val_accuracy << " seconds=" << std::setprecision(4) << s.seconds;
  return out.str();
}

DataSplit split_train_validation(std::span<const FlowRecord> records, double fraction,
                                 std::uint64_t seed, bool stratified) {
  if (records.size() < 2) throw DataError("need at least two records to split train/validation");
  if (!(fraction > 0.0 && fraction < 1.0))
    throw ConfigError("validation fraction must lie strictly between 0 and 1");
  SeededRng rng = SeededRng(seed).fork("split");

  std::vector<std::vector<std::size_t>> groups;
  if (stratified) {
    groups.resize(kClassCount + 1);
    for (std::size_t i = 0; i < records.size(); ++i) {
      const int label = records[i].label.value_or(-1);
      groups[label < 0 ? kClassCount : static_cast<std::size_t>(label)].push_back(i);
    }
  } else {
    groups.emplace_back(records.size());
    std::iota(groups[0].begin(), groups[0].end(), std::size_t{0});
  }

  std::vector<std::size_t> train_idx, val_idx;
  for (auto& group : groups) {
    if (group.empty()) continue;
    shuffle_indices(group, rng);
    const auto take = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(group.size())));
    val_idx.insert(val_idx.end(), group.begin(), group.begin() + take);
    train_idx.insert(train_idx.end(), group.begin() + take, group.end());
  }
  // Keep both sides non-empty.
  if (val_idx.empty()) {
    val_idx.push_back(train_idx.back());
    train_idx.pop_back();
  } else if (train_idx.empty()) {
    train_idx.push_back(val_idx.back());
    val_idx.pop_back();
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(val_idx.begin(), val_idx.end());

  DataSplit split;
  split.train.reserve(train_idx.size());
  split.validation.reserve(val_idx.size());
  for (std::size_t i : train_idx) split.train.push_back(records[i]);
  for (std::size_t i : val_idx) split.validation.push_back(records[i]);
  return split;
}

namespace {

void require_labeled(std::span<const FlowRecord> records, const char* what) {
  for (std::size_t i = 0; i < records.size(); ++i) {
    const int label = records[i].label.value_or(-1);
    if (label < 0 || label >= static_cast<int>(kClassCount)) {
      throw DataError(std::string(what) + ": record " + std::to_string(i) +
                      " has no class label in 0.." + std::to_string(kClassCount - 1));
    }
  }
}

template <typename T>
std::size_t argmax_row(const Tensor<T>& m, std::size_t row) {
  const std::size_t k = m.dim(1);
  const T* p = m.data() + row * k;
  return static_cast<std::size_t>(std::max_element(p, p + k) - p);
}

template <typename T>
void check_arch_for_records(const NetworkParameters<T>& params) {
  if (params.arch.sequence_length != kFeatureCount || params.arch.input_channels != 1 ||
      params.arch.classes != kClassCount) {
    throw ShapeError("network must take (" + std::to_string(kFeatureCount) +
                     ", 1) inputs and produce " + std::to_string(kClassCount) +
                     " classes to run on flow records");
  }
}

}  // namespace

template <typename T>
std::vector<EpochStats> fit(NetworkParameters<T>& params, std::span<const FlowRecord> dataset,
                            const TrainConfig& config, const ProgressSink& progress) {
  config.validate();
  if (dataset.empty()) throw DataError("cannot train on an empty dataset");
  const DataSplit split =
      split_train_validation(dataset, config.validation_fraction, config.seed, config.stratified);
  return fit_split(params, split.train, split.validation, config, progress);
}

template <typename T>
std::vector<EpochStats> fit_split(NetworkParameters<T>& params,
                                  std::span<const FlowRecord> train,
                                  std::span<const FlowRecord> validation,
                                  const TrainConfig& config, const ProgressSink& progress) {
  config.validate();
  check_arch_for_records(params);
  if (train.empty()) throw DataError("cannot train on an empty dataset");
  require_labeled(train, "training data");
  require_labeled(validation, "validation data");

  RmsPropState<T> state = RmsPropState<T>::zeros(params.arch);
  const SeededRng shuffle_root = SeededRng(config.seed).fork("shuffle");
  std::vector<EpochStats> history;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t epoch_seed = shuffle_root.fork(epoch).next_u64();
    BatchIterator batches(train, config.batch_size, epoch_seed, true);

    double loss_sum = 0.0;
    std::size_t correct = 0, seen = 0;
    while (auto batch = batches.next<T>()) {
      NetworkOutput<T> out = forward(params, batch->features, Mode::Train);
      LossResult<T> loss = cross_entropy(out.probs, batch->targets);
      if (!std::isfinite(loss.loss)) {
        throw NumericError("non-finite training loss in epoch " + std::to_string(epoch));
      }
      const NetworkParameters<T> grads = backward(params, out.cache, loss.dlogits);
      rmsprop_step(params, grads, state, config);

      loss_sum += loss.loss * static_cast<double>(batch->size());
      for (std::size_t b = 0; b < batch->size(); ++b)
        if (static_cast<int>(argmax_row(out.probs, b)) == batch->labels[b]) ++correct;
      seen += batch->size();
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(seen);
    stats.train_accuracy = static_cast<double>(correct) / static_cast<double>(seen);
    if (!validation.empty()) {
      const Evaluation val = evaluate(params, validation);
      stats.val_loss = val.loss;
      stats.val_accuracy = overall_stats(val.confusion).accuracy;
    }
    stats.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    history.push_back(stats);
    if (progress) progress(stats);
  }
  return history;
}

template <typename T>
Evaluation evaluate(const NetworkParameters<T>& params, std::span<const FlowRecord> records,
                    std::size_t batch_size) {
  check_arch_for_records(params);
  if (records.empty()) throw DataError("cannot evaluate on an empty dataset");
  require_labeled(records, "evaluation data");
  Evaluation result{ConfusionMatrix(params.arch.classes), 0.0};
  BatchIterator batches(records, batch_size);
  double loss_sum = 0.0;
  while (auto batch = batches.next<T>()) {
    const NetworkOutput<T> out = infer(params, batch->features);
    loss_sum += cross_entropy(out.probs, batch->targets).loss * static_cast<double>(batch->size());
    for (std::size_t b = 0; b < batch->size(); ++b)
      result.confusion.add(static_cast<std::size_t>(batch->labels[b]), argmax_row(out.probs, b));
  }
  result.loss = loss_sum / static_cast<double>(records.size());
  return result;
}

template <typename T>
Tensor<T> predict_proba(const NetworkParameters<T>& params, std::span<const FlowRecord> records,
                        std::size_t batch_size) {
  check_arch_for_records(params);
  if (records.empty()) throw DataError("no records to predict");
  Tensor<T> probs({records.size(), params.arch.classes});
  BatchIterator batches(records, batch_size);
  std::size_t row = 0;
  while (auto batch = batches.next<T>()) {
    const NetworkOutput<T> out = infer(params, batch->features);
    std::copy(out.probs.values().begin(), out.probs.values().end(),
              probs.data() + row * params.arch.classes);
    row += batch->size();
  }
  return probs;
}

// ----------------------------------------------------------- gradient check

namespace {

struct ProbeInput {
  Tensor<double> x;
  Tensor<double> targets;
};

double probe_loss(const NetworkParameters<double>& params, const ProbeInput& in, Mode mode) {
  NetworkParameters<double> copy = params;
  const NetworkOutput<double> out = forward(copy, in.x, mode);
  return cross_entropy(out.probs, in.targets).loss;
}

}  // namespace

GradCheckReport gradient_check(const NetworkParameters<double>& params,
                               const GradCheckOptions& options) {
  if (options.probes == 0) throw ConfigError("gradient check needs at least one probe");
  if (options.batch == 0) throw ConfigError("gradient check batch must be positive");
  if (options.mode == Mode::Train && options.batch * params.arch.sequence_length < 2)
    throw ConfigError("train-mode gradient check needs at least two values per channel");

  const SeededRng root(options.seed);
  SeededRng data_rng = root.fork("gradcheck-data");
  const auto& arch = params.arch;
  ProbeInput in{Tensor<double>({options.batch, arch.sequence_length, arch.input_channels}),
                Tensor<double>({options.batch, arch.classes})};
  for (double& v : in.x.values()) v = data_rng.uniform();
  for (std::size_t b = 0; b < options.batch; ++b)
    in.targets(b, static_cast<std::size_t>(data_rng.below(arch.classes))) = 1.0;

  NetworkParameters<double> work = params;
  NetworkOutput<double> out = forward(work, in.x, options.mode);
  const LossResult<double> loss = cross_entropy(out.probs, in.targets);
  NetworkParameters<double> grads = backward(params, out.cache, loss.dlogits);
  if (options.tamper) options.tamper(grads);

  // Round-robin over layers, uniform over the trainable elements of each.
  NetworkParameters<double> probe_params = params;
  auto probe_tensors = named_tensors(probe_params);
  const auto grad_tensors = named_tensors(grads);
  std::vector<std::string> layers;
  for (const auto& nt : probe_tensors)
    if (nt.trainable && std::find(layers.begin(), layers.end(), nt.layer) == layers.end())
      layers.push_back(nt.layer);

  SeededRng pick_rng = root.fork("gradcheck-probes");
  GradCheckReport report;
  report.tolerance = options.tolerance;
  for (std::size_t p = 0; p < options.probes; ++p) {
    const std::string& layer = layers[p % layers.size()];
    std::size_t layer_size = 0;
    for (const auto& nt : probe_tensors)
      if (nt.trainable && nt.layer == layer) layer_size += nt.tensor->size();
    std::size_t flat = static_cast<std::size_t>(pick_rng.below(layer_size));
    std::size_t ti = 0;
    for (; ti < probe_tensors.size(); ++ti) {
      const auto& nt = probe_tensors[ti];
      if (!nt.trainable || nt.layer != layer) continue;
      if (flat < nt.tensor->size()) break;
      flat -= nt.tensor->size();
    }

    double& w = (*probe_tensors[ti].tensor)[flat];
    const double saved = w;
    w = saved + options.step;
    const double up = probe_loss(probe_params, in, options.mode);
    w = saved - options.step;
    const double down = probe_loss(probe_params, in, options.mode);
    w = saved;

    ProbeResult r;
    r.tensor = probe_tensors[ti].name;
    r.layer = layer;
    r.index = flat;
    r.numeric = (up - down) / (2.0 * options.step);
    r.analytic = (*grad_tensors[ti].tensor)[flat];
    const double denom =
        std::max({std::abs(r.analytic), std::abs(r.numeric), options.denominator_floor});
    r.rel_error = std::abs(r.analytic - r.numeric) / denom;
    if (!std::isfinite(r.rel_error)) r.rel_error = std::numeric_limits<double>::infinity();
    report.probes.push_back(std::move(r));
  }

  report.worst = 0;
  for (std::size_t i = 1; i < report.probes.size(); ++i)
    if (report.probes[i].rel_error > report.probes[report.worst].rel_error) report.worst = i;
  report.passed = report.probes[report.worst].rel_error < options.tolerance;
  return report;
}

std::string format_gradcheck(const GradCheckReport& report) {
  std::ostringstream out;
  std::map<std::string, std::pair<std::size_t, double>> per_layer;
  for (const auto& p : report.probes) {
    auto& [count, worst] = per_layer[p.layer];
    ++count;
    worst = std::max(worst, p.rel_error);
  }
  out << std::setprecision(3);
  for (const auto& [layer, entry] : per_layer) {
    out << "layer=" << layer << " probes=" << entry.first << " max_rel_error=" << entry.second
        << '\n';
  }
  const auto& w = report.worst_probe();
  out << std::setprecision(10) << "worst layer=" << w.layer << " tensor=" << w.tensor
      << " index=" << w.index << " analytic=" << w.analytic << " numeric=" << w.numeric
      << std::setprecision(3) << " rel_error=" << w.rel_error << '\n';
  out << "probes=" << report.probes.size() << " tolerance=" << report.tolerance
      << " result=" << (report.passed ? "PASS" : "FAIL") << '\n';
  return out.str();
}

#define ECONET_INSTANTIATE_TRAINING(T)                                                         \
  template struct RmsPropState<T>;                                                             \
  template LossResult<T> cross_entropy(const Tensor<T>&, const Tensor<T>&);                    \
  template void rmsprop_step(NetworkParameters<T>&, const NetworkParameters<T>&,               \
                             RmsPropState<T>&, const TrainConfig&);                            \
  template std::vector<EpochStats> fit(NetworkParameters<T>&, std::span<const FlowRecord>,     \
                                       const TrainConfig&, const ProgressSink&);               \
  template std::vector<EpochStats> fit_split(NetworkParameters<T>&,                            \
                                             std::span<const FlowRecord>,                      \
                                             std::span<const FlowRecord>, const TrainConfig&,  \
                                             const ProgressSink&);                             \
  template Evaluation evaluate(const NetworkParameters<T>&, std::span<const FlowRecord>,       \
                               std::size_t);                                                   \
  template Tensor<T> predict_proba(const NetworkParameters<T>&, std::span<const FlowRecord>,   \
                                   std::size_t);

ECONET_INSTANTIATE_TRAINING(float)
ECONET_INSTANTIATE_TRAINING(double)

}  // namespace econet
