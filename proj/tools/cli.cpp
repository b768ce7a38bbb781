#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "econet/config.hpp"
#include "econet/dataio.hpp"
#include "econet/error.hpp"
#include "econet/metrics.hpp"
#include "econet/network.hpp"
#include "econet/training.hpp"
#include "econet/weights_io.hpp"

extern char** environ;

namespace econet::cli {

namespace {

namespace fs = std::filesystem;

enum Command : unsigned {
  kSummary = 1u << 0,
  kTrain = 1u << 1,
  kEval = 1u << 2,
  kPredict = 1u << 3,
  kGradcheck = 1u << 4,
  kAll = 0x1f,
};

struct Setting {
  const char* key;
  const char* flag;  // nullptr: config file and environment only
  const char* fallback;
  const char* help;
  unsigned commands;
  bool is_flag = false;
};

// Every setting, its default, and which commands take it on the command line.
const std::vector<Setting>& settings() {
  static const std::vector<Setting> table = {
      {"data", "--data", "", "CSV file to read", kTrain | kEval | kPredict},
      {"weights", "--weights", "", "weight manifest to read or write", kTrain | kEval | kPredict | kGradcheck},
      {"report", "--report", "econet-report.json", "metrics report output (eval)", kEval},
      {"stats", "--stats", "", "per-epoch stats output (default: <weights>.epochs)", kTrain},
      {"features", "--features", "", "CSV schema file (columns, labels, bad-row policy)", kTrain | kEval | kPredict},
      {"seed", "--seed", "1", "random seed", kTrain | kGradcheck},
      {"epochs", "--epochs", "4", "training epochs", kTrain},
      {"batch_size", "--batch-size", "10", "mini-batch size", kTrain | kEval | kPredict},
      {"learning_rate", "--learning-rate", "0.001", "RMSProp step size", kTrain},
      {"rms_decay", nullptr, "0.9", "", 0},
      {"rms_epsilon", nullptr, "1e-7", "", 0},
      {"validation_fraction", "--validation-fraction", "0.1", "held-out share of the training CSV", kTrain},
      {"stratified", "--stratified", "false", "split train/validation per class", kTrain, true},
      {"precision", "--precision", "double", "single|double", kTrain},
      {"probes", "--probes", "100", "gradient-check coordinates", kGradcheck},
      {"tolerance", "--tolerance", "1e-5", "gradient-check relative error bound", kGradcheck},
      {"gradcheck_mode", "--mode", "infer", "batchnorm mode for the gradient check: infer|train", kGradcheck},
      {"verbose", "--verbose", "false", "extra diagnostics on stderr", kAll, true},
      {"arch.kernel_size", "--kernel-size", "3", "convolution width", kSummary | kTrain | kGradcheck},
      {"arch.filters", "--filters", "128", "convolution filters", kSummary | kTrain | kGradcheck},
      {"arch.gru_units", "--gru-units", "10", "GRU hidden units", kSummary | kTrain | kGradcheck},
      {"arch.dense_units", "--dense-units", "10", "hidden dense units", kSummary | kTrain | kGradcheck},
      {"arch.pooling", nullptr, "max", "", 0},
      {"arch.conv_activation", nullptr, "relu", "", 0},
      {"arch.dense_activation", nullptr, "relu", "", 0},
      {"arch.bn_epsilon", nullptr, "0.001", "", 0},
      {"arch.bn_momentum", nullptr, "0.99", "", 0},
      {"arch.gru_init_stddev", nullptr, "0.05", "", 0},
  };
  return table;
}

std::string env_name(std::string_view key) {
  std::string name = kEnvPrefix;
  for (char c : key) name += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return name;
}

class Settings {
 public:
  std::string str(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ContractError("unknown setting " + key);
    return it->second;
  }

  template <typename N>
  N number(const std::string& key) const {
    const std::string text = str(key);
    N value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
      throw ConfigError("setting " + key + ": '" + text + "' is not a valid number");
    }
    return value;
  }

  bool boolean(const std::string& key) const {
    std::string text = str(key);
    std::transform(text.begin(), text.end(), text.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (text == "1" || text == "true" || text == "yes" || text == "on") return true;
    if (text == "0" || text == "false" || text == "no" || text == "off" || text.empty()) return false;
    throw ConfigError("setting " + key + ": '" + text + "' is not a boolean");
  }

  std::map<std::string, std::string> values_;
  std::map<std::string, std::string> origin_;
};

// defaults < config file < environment < flags
Settings resolve(const std::optional<std::string>& config_path,
                 const std::map<std::string, std::string>& env,
                 const std::map<std::string, std::string>& flags) {
  Settings s;
  for (const auto& st : settings()) {
    s.values_[st.key] = st.fallback;
    s.origin_[st.key] = "default";
  }
  std::optional<std::string> path = config_path;
  if (!path) {
    auto it = env.find(env_name("config"));
    if (it != env.end() && !it->second.empty()) path = it->second;
  }
  if (path) {
    if (!fs::is_regular_file(*path)) throw ConfigError("config file not found: " + *path);
    const KeyValueConfig file = KeyValueConfig::load(*path);
    for (const auto& [key, value] : file.values()) {
      if (!s.values_.count(key)) throw ConfigError(*path + ": unknown key '" + key + "'");
      s.values_[key] = value;
      s.origin_[key] = *path;
    }
  }
  for (const auto& st : settings()) {
    auto it = env.find(env_name(st.key));
    if (it != env.end()) {
      s.values_[st.key] = it->second;
      s.origin_[st.key] = it->first;
    }
  }
  for (const auto& [key, value] : flags) {
    s.values_[key] = value;
    s.origin_[key] = "command line";
  }
  return s;
}

ArchConfig arch_from(const Settings& s) {
  ArchConfig a;
  a.kernel_size = s.number<std::size_t>("arch.kernel_size");
  a.filters = s.number<std::size_t>("arch.filters");
  a.gru_units = s.number<std::size_t>("arch.gru_units");
  a.dense_units = s.number<std::size_t>("arch.dense_units");
  a.pooling = parse_pool_mode(s.str("arch.pooling"));
  a.conv_activation = parse_activation(s.str("arch.conv_activation"));
  a.dense_activation = parse_activation(s.str("arch.dense_activation"));
  a.bn_epsilon = s.number<double>("arch.bn_epsilon");
  a.bn_momentum = s.number<double>("arch.bn_momentum");
  a.gru_init_stddev = s.number<double>("arch.gru_init_stddev");
  a.validate();
  return a;
}

TrainConfig train_config_from(const Settings& s) {
  TrainConfig c;
  c.epochs = s.number<std::size_t>("epochs");
  c.batch_size = s.number<std::size_t>("batch_size");
  c.learning_rate = s.number<double>("learning_rate");
  c.rms_decay = s.number<double>("rms_decay");
  c.rms_epsilon = s.number<double>("rms_epsilon");
  c.validation_fraction = s.number<double>("validation_fraction");
  c.seed = s.number<std::uint64_t>("seed");
  c.stratified = s.boolean("stratified");
  c.validate();
  return c;
}

CsvSchema schema_from(const Settings& s, LabelUse use) {
  const std::string path = s.str("features");
  CsvSchema schema;
  if (!path.empty()) {
    if (!fs::is_regular_file(path)) throw ConfigError("schema file not found: " + path);
    schema = CsvSchema::from_config(KeyValueConfig::load(path));
  }
  schema.label_use = use;
  return schema;
}

std::string require_input(const Settings& s, const std::string& key) {
  const std::string path = s.str(key);
  if (path.empty()) throw ConfigError("--" + key + " is required");
  if (!fs::is_regular_file(path)) throw DataError(key + " file not found: " + path);
  return path;
}

void require_writable(const fs::path& path) {
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  if (!fs::is_directory(dir)) throw ConfigError("output directory does not exist: " + dir.string());
}

std::vector<FlowRecord> read_csv(const std::string& path, const CsvSchema& schema, bool verbose,
                                 std::ostream& err) {
  CsvStream stream(path, schema);
  std::vector<FlowRecord> records = read_all(stream);
  if (stream.rows_skipped() > 0) {
    err << "warning: skipped " << stream.rows_skipped() << " of " << stream.rows_read()
        << " rows in " << path << '\n';
    if (verbose)
      for (const auto& issue : stream.issues())
        err << "  line " << issue.line << ": " << issue.reason << '\n';
  }
  if (records.empty()) throw DataError("no usable rows in " + path);
  return records;
}

std::string format_matrix(const ConfusionMatrix& cm) {
  std::ostringstream out;
  out << "confusion matrix (rows actual, columns predicted)\n";
  for (std::size_t i = 0; i < cm.classes(); ++i) {
    for (std::size_t j = 0; j < cm.classes(); ++j) out << (j ? " " : "") << std::setw(10) << cm.count(i, j);
    out << '\n';
  }
  return out.str();
}

// ------------------------------------------------------------------ commands

int cmd_summary(const Settings& s, std::ostream& out) {
  out << format_summary(summary(arch_from(s)));
  return kOk;
}

template <typename T>
int train_as(const Settings& s, std::ostream& out, std::ostream& err) {
  const bool verbose = s.boolean("verbose");
  const std::string data = require_input(s, "data");
  std::string weights = s.str("weights");
  if (weights.empty()) weights = "econet.weights";
  std::string stats_path = s.str("stats");
  if (stats_path.empty()) stats_path = weights + ".epochs";
  require_writable(weights);
  require_writable(stats_path);
  const TrainConfig config = train_config_from(s);
  const ArchConfig arch = arch_from(s);

  std::vector<FlowRecord> records = read_csv(data, schema_from(s, LabelUse::Required), verbose, err);
  if (verbose) err << format_class_distribution(class_distribution(records));
  DataSplit split =
      split_train_validation(records, config.validation_fraction, config.seed, config.stratified);
  records.clear();
  records.shrink_to_fit();

  const FittedFeatureSpec features =
      fit_normalizer(split.train, schema_from(s, LabelUse::Required).features);
  for (const auto& name : features.constant_features())
    err << "warning: feature " << name << " is constant in the training data\n";
  features.transform(split.train);
  features.transform(split.validation);

  NetworkParameters<T> params = build<T>(config.seed, arch);
  std::ofstream stats(stats_path);
  if (!stats) throw ConfigError("cannot write " + stats_path);
  fit_split(params, split.train, split.validation, config, [&](const EpochStats& e) {
    const std::string line = format_epoch(e);
    out << line << '\n' << std::flush;
    stats << line << '\n';
  });
  save_weights(weights, params, features);
  if (verbose) err << "wrote " << weights << " and " << stats_path << '\n';
  return kOk;
}

template <typename T>
WeightFile<T> open_weights(const std::string& path) {
  return load_weights<T>(path);
}

template <typename T>
int eval_as(const Settings& s, const std::string& weights_path, std::ostream& out,
            std::ostream& err) {
  const std::string data = require_input(s, "data");
  const std::string report_path = s.str("report");
  if (!report_path.empty()) require_writable(report_path);
  WeightFile<T> weights = open_weights<T>(weights_path);

  std::vector<FlowRecord> records =
      read_csv(data, schema_from(s, LabelUse::Required), s.boolean("verbose"), err);
  if (weights.features) weights.features->transform(records);
  const Evaluation ev = evaluate(weights.params, records, s.number<std::size_t>("batch_size"));
  const MetricsReport rep = report(ev.confusion);
  out << format_overall(rep) << '\n' << format_class_table(rep) << '\n' << format_matrix(ev.confusion);
  if (!report_path.empty()) {
    std::ofstream file(report_path);
    file << report_to_json(rep) << '\n';
    if (!file) throw DataError("cannot write report " + report_path);
  }
  return kOk;
}

template <typename T>
int predict_as(const Settings& s, const std::string& weights_path, std::ostream& out,
               std::ostream& err) {
  const std::string data = require_input(s, "data");
  WeightFile<T> weights = open_weights<T>(weights_path);
  std::vector<FlowRecord> records =
      read_csv(data, schema_from(s, LabelUse::Ignore), s.boolean("verbose"), err);
  if (weights.features) weights.features->transform(records);
  const Tensor<T> probs =
      predict_proba(weights.params, records, s.number<std::size_t>("batch_size"));
  const std::size_t k = probs.dim(1);
  out << std::setprecision(9);
  for (std::size_t i = 0; i < probs.dim(0); ++i) {
    const T* row = probs.data() + i * k;
    const std::size_t best = static_cast<std::size_t>(std::max_element(row, row + k) - row);
    out << best << ',' << (best < kClassCount ? class_names()[best] : "?");
    for (std::size_t j = 0; j < k; ++j) out << ',' << static_cast<double>(row[j]);
    out << '\n';
  }
  return kOk;
}

template <typename Src>
NetworkParameters<double> to_double(const NetworkParameters<Src>& src) {
  NetworkParameters<double> dst = NetworkParameters<double>::zeros(src.arch);
  auto d = named_tensors(dst);
  const auto s = named_tensors(src);
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t k = 0; k < d[i].tensor->size(); ++k)
      (*d[i].tensor)[k] = static_cast<double>((*s[i].tensor)[k]);
  dst.bn.epsilon = src.bn.epsilon;
  dst.bn.momentum = src.bn.momentum;
  return dst;
}

int cmd_gradcheck(const Settings& s, std::ostream& out) {
  GradCheckOptions options;
  options.probes = s.number<std::size_t>("probes");
  options.tolerance = s.number<double>("tolerance");
  options.seed = s.number<std::uint64_t>("seed");
  const std::string mode = s.str("gradcheck_mode");
  if (mode == "infer") options.mode = Mode::Infer;
  else if (mode == "train") options.mode = Mode::Train;
  else throw ConfigError("gradcheck mode must be infer or train, got '" + mode + "'");
  if (!(options.tolerance > 0.0)) throw ConfigError("tolerance must be positive");

  NetworkParameters<double> params = [&] {
    const std::string path = s.str("weights");
    if (path.empty()) return build<double>(options.seed, arch_from(s));
    if (!fs::is_regular_file(path)) throw DataError("weights file not found: " + path);
    if (peek_precision(path) == Precision::Single) return to_double(load_weights<float>(path).params);
    return load_weights<double>(path).params;
  }();

  const GradCheckReport rep = gradient_check(params, options);
  out << format_gradcheck(rep);
  return rep.passed ? kOk : kNumericError;
}

int dispatch(const std::string& command, const Settings& s, std::ostream& out, std::ostream& err) {
  if (s.boolean("verbose"))
    for (const auto& [key, value] : s.values_)
      err << "setting " << key << " = " << value << "  (" << s.origin_.at(key) << ")\n";
  if (command == "summary") return cmd_summary(s, out);
  if (command == "gradcheck") return cmd_gradcheck(s, out);
  if (command == "train") {
    const Precision p = parse_precision(s.str("precision"));
    return p == Precision::Single ? train_as<float>(s, out, err) : train_as<double>(s, out, err);
  }
  const std::string weights = require_input(s, "weights");
  const Precision p = peek_precision(weights);
  if (command == "eval")
    return p == Precision::Single ? eval_as<float>(s, weights, out, err)
                                  : eval_as<double>(s, weights, out, err);
  return p == Precision::Single ? predict_as<float>(s, weights, out, err)
                                : predict_as<double>(s, weights, out, err);
}

}  // namespace

int run(const std::vector<std::string>& args, const std::map<std::string, std::string>& env,
        std::ostream& out, std::ostream& err) {
  CLI::App app{"Flow-record traffic classifier: train, evaluate, predict, inspect."};
  app.name("econet");
  app.require_subcommand(1, 1);

  struct Bound {
    std::string value;
    bool flag_value = false;
    CLI::Option* option = nullptr;
  };
  std::optional<std::string> config_path;
  std::string config_value;

  const std::pair<const char*, Command> commands[] = {
      {"summary", kSummary}, {"train", kTrain}, {"eval", kEval},
      {"predict", kPredict}, {"gradcheck", kGradcheck}};
  const char* descriptions[] = {
      "print the layer table and parameter counts", "train on a labeled CSV",
      "evaluate a weight file on a labeled CSV", "predict classes for a CSV",
      "compare backprop against finite differences"};
  std::vector<CLI::App*> subs;
  std::vector<CLI::Option*> config_opts;
  std::vector<std::unique_ptr<std::map<std::string, Bound>>> per_sub;

  for (std::size_t i = 0; i < std::size(commands); ++i) {
    CLI::App* sub = app.add_subcommand(commands[i].first, descriptions[i]);
    auto opts = std::make_unique<std::map<std::string, Bound>>();
    config_opts.push_back(sub->add_option("--config", config_value, "key = value config file"));
    for (const auto& st : settings()) {
      if (!st.flag || !(st.commands & commands[i].second)) continue;
      Bound& b = (*opts)[st.key];
      if (st.is_flag) b.option = sub->add_flag(st.flag, b.flag_value, st.help);
      else b.option = sub->add_option(st.flag, b.value, st.help);
    }
    subs.push_back(sub);
    per_sub.push_back(std::move(opts));
  }

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.emplace_back("econet");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  std::size_t chosen = 0;
  for (; chosen < subs.size(); ++chosen)
    if (subs[chosen]->parsed()) break;
  const std::string command = commands[chosen].first;

  std::map<std::string, std::string> flags;
  for (const auto& [key, b] : *per_sub[chosen]) {
    if (b.option->count() == 0) continue;
    flags[key] = b.option->get_items_expected_max() == 0 ? (b.flag_value ? "true" : "false") : b.value;
  }
  if (config_opts[chosen]->count() > 0) config_path = config_value;

  try {
    const Settings s = resolve(config_path, env, flags);
    return dispatch(command, s, out, err);
  } catch (const ConfigError& e) {
    err << "error[config]: " << e.what() << '\n';
    return kConfigError;
  } catch (const ShapeError& e) {
    err << "error[config]: " << e.what() << '\n';
    return kConfigError;
  } catch (const DataError& e) {
    err << "error[data]: " << e.what() << '\n';
    return kDataError;
  } catch (const NumericError& e) {
    err << "error[numeric]: " << e.what() << '\n';
    return kNumericError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

std::map<std::string, std::string> process_environment() {
  std::map<std::string, std::string> env;
  const std::string prefix = kEnvPrefix;
  for (char** e = environ; e && *e; ++e) {
    std::string_view entry(*e);
    if (entry.substr(0, prefix.size()) != prefix) continue;
    const auto eq = entry.find('=');
    if (eq == std::string_view::npos) continue;
    env.emplace(entry.substr(0, eq), entry.substr(eq + 1));
  }
  return env;
}

}  // namespace econet::cli
