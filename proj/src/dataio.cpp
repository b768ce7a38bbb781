#include "econet/dataio.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "econet/error.hpp"

namespace econet {

const std::array<std::string_view, kClassCount>& class_names() {
  static const std::array<std::string_view, kClassCount> names = {
      "Normal", "DDoS TCP", "DDoS UDP", "DoS HTTP", "OS Fingerprinting", "Data Exfiltration"};
  return names;
}

// ------------------------------------------------------------ FeatureSpec

FeatureSpec::FeatureSpec(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.size() != kFeatureCount) {
    throw ConfigError("feature list must name exactly " + std::to_string(kFeatureCount) +
                      " columns, got " + std::to_string(names_.size()));
  }
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw ConfigError("feature list contains an empty column name");
    if (!seen.insert(n).second) throw ConfigError("feature '" + n + "' listed twice");
  }
}

FeatureSpec FeatureSpec::defaults() {
  return FeatureSpec({"proto_number", "pkts", "bytes", "state_number", "seq", "dur", "mean",
                      "stddev", "sum", "min", "max", "spkts", "dpkts", "sbytes", "dbytes",
                      "rate"});
}

FittedFeatureSpec::FittedFeatureSpec(FeatureSpec spec, std::array<double, kFeatureCount> min,
                                     std::array<double, kFeatureCount> max)
    : spec_(std::move(spec)), min_(min), max_(max) {
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    if (!std::isfinite(min_[f]) || !std::isfinite(max_[f]) || min_[f] > max_[f]) {
      throw DataError("invalid fitted range for feature '" + spec_.names()[f] + "'");
    }
  }
}

std::vector<std::string> FittedFeatureSpec::constant_features() const {
  std::vector<std::string> out;
  for (std::size_t f = 0; f < kFeatureCount; ++f)
    if (min_[f] == max_[f]) out.push_back(spec_.names()[f]);
  return out;
}

void FittedFeatureSpec::transform(FlowRecord& record) const {
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    const double span = max_[f] - min_[f];
    double& v = record.features[f];
    v = span > 0.0 ? std::clamp((v - min_[f]) / span, 0.0, 1.0) : 0.0;
  }
}

void FittedFeatureSpec::transform(std::span<FlowRecord> records) const {
  for (auto& r : records) transform(r);
}

bool FittedFeatureSpec::operator==(const FittedFeatureSpec& other) const {
  return spec_.names() == other.spec_.names() && min_ == other.min_ && max_ == other.max_;
}

NormalizerFitter::NormalizerFitter(FeatureSpec spec) : spec_(std::move(spec)) {
  min_.fill(std::numeric_limits<double>::infinity());
  max_.fill(-std::numeric_limits<double>::infinity());
}

void NormalizerFitter::observe(const FlowRecord& record) {
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    min_[f] = std::min(min_[f], record.features[f]);
    max_[f] = std::max(max_[f], record.features[f]);
  }
  ++count_;
}

FittedFeatureSpec NormalizerFitter::finish() const {
  if (count_ == 0) throw DataError("cannot fit a normalizer on zero rows");
  return FittedFeatureSpec(spec_, min_, max_);
}

FittedFeatureSpec fit_normalizer(std::span<const FlowRecord> training, const FeatureSpec& spec) {
  NormalizerFitter fitter(spec);
  for (const auto& r : training) fitter.observe(r);
  return fitter.finish();
}

// --------------------------------------------------------------- LabelMap

namespace {

std::string label_key(std::string_view text) {
  std::string key;
  for (char c : text) {
    if (c == ' ' || c == '_' || c == '-' || c == '"' || c == '\'' || c == '\t' || c == '\r')
      continue;
    key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return key;
}

std::string pair_key(std::string_view category, std::string_view subcategory) {
  return label_key(category) + "/" + label_key(subcategory);
}

}  // namespace

LabelMap LabelMap::defaults() {
  LabelMap map;
  map.add("Normal", "Normal", 0);
  map.add("DDoS", "TCP", 1);
  map.add("DDoS", "UDP", 2);
  map.add("DoS", "HTTP", 3);
  map.add("Reconnaissance", "OS_Fingerprint", 4);
  map.add("Theft", "Data_Exfiltration", 5);
  return map;
}

void LabelMap::add(std::string_view category, std::string_view subcategory, int label) {
  if (label < 0 || label >= static_cast<int>(kClassCount)) {
    throw ConfigError("label index " + std::to_string(label) + " is outside 0.." +
                      std::to_string(kClassCount - 1));
  }
  entries_[pair_key(category, subcategory)] = label;
}

std::optional<int> LabelMap::find(std::string_view category, std::string_view subcategory) const {
  const auto it = entries_.find(pair_key(category, subcategory));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

int encode_label(std::string_view category, std::string_view subcategory, const LabelMap& map) {
  if (auto label = map.find(category, subcategory)) return *label;
  throw DataError("no class mapping for (category, subcategory) = (\"" + std::string(category) +
                  "\", \"" + std::string(subcategory) + "\")");
}

// -------------------------------------------------------------- CsvSchema

CsvSchema CsvSchema::from_config(const KeyValueConfig& config) {
  CsvSchema schema;
  if (auto v = config.get("delimiter")) {
    if (*v == "tab" || *v == "\\t") {
      schema.delimiter = '\t';
    } else if (v->size() == 1) {
      schema.delimiter = (*v)[0];
    } else {
      throw ConfigError("delimiter must be a single character, got '" + *v + "'");
    }
  }
  if (auto v = config.get("features")) {
    std::vector<std::string> names;
    for (const auto& part : split(*v, ',')) names.push_back(trim(part));
    schema.features = FeatureSpec(std::move(names));
  }
  if (auto v = config.get("category_column")) schema.category_column = *v;
  if (auto v = config.get("subcategory_column")) schema.subcategory_column = *v;
  if (auto v = config.get("label_column")) schema.label_column = *v;
  if (auto v = config.get("on_bad_row")) {
    if (*v == "skip") {
      schema.policy = RowPolicy::Skip;
    } else if (*v == "fail") {
      schema.policy = RowPolicy::Fail;
    } else {
      throw ConfigError("on_bad_row must be skip or fail, got '" + *v + "'");
    }
  }
  const auto label_keys = config.keys_with_prefix("label.");
  if (!label_keys.empty()) {
    schema.labels = LabelMap{};
    for (const auto& key : label_keys) {
      const std::string pair = key.substr(6);
      const auto slash = pair.find('/');
      if (slash == std::string::npos) {
        throw ConfigError("label key '" + key + "' must look like label.<Category>/<Subcategory>");
      }
      int index = 0;
      const std::string value = *config.get(key);
      const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), index);
      if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw ConfigError("label '" + key + "' needs an integer class index, got '" + value + "'");
      }
      schema.labels.add(pair.substr(0, slash), pair.substr(slash + 1), index);
    }
  }
  return schema;
}

// -------------------------------------------------------------- CsvStream

namespace {

// Splits on the delimiter; a field wrapped in double quotes may contain the
// delimiter. Returned views point into `line` with the quotes removed.
void split_fields(std::string_view line, char delim, std::vector<std::string_view>& out) {
  out.clear();
  std::size_t i = 0;
  while (true) {
    if (i < line.size() && line[i] == '"') {
      const auto close = line.find('"', i + 1);
      const std::size_t end = close == std::string_view::npos ? line.size() : close;
      out.push_back(line.substr(i + 1, end - i - 1));
      i = line.find(delim, end);
    } else {
      const auto pos = line.find(delim, i);
      out.push_back(line.substr(i, pos == std::string_view::npos ? pos : pos - i));
      i = pos;
    }
    if (i == std::string_view::npos) break;
    ++i;
  }
}

std::string_view strip(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view text, double& out) {
  text = strip(text);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size() && std::isfinite(out);
}

}  // namespace

CsvStream::CsvStream(const std::filesystem::path& path, CsvSchema schema)
    : schema_(std::move(schema)), in_(path) {
  if (!in_) throw DataError("cannot open data file " + path.string());
  if (!std::getline(in_, line_)) throw DataError("data file " + path.string() + " is empty");

  split_fields(line_, schema_.delimiter, fields_);
  column_count_ = fields_.size();
  std::map<std::string, std::size_t> columns;
  for (std::size_t i = 0; i < fields_.size(); ++i)
    columns.emplace(std::string(strip(fields_[i])), i);

  std::vector<std::string> missing;
  const auto& names = schema_.features.names();
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    const auto it = columns.find(names[f]);
    if (it == columns.end()) {
      missing.push_back(names[f]);
    } else {
      feature_columns_[f] = it->second;
    }
  }

  if (schema_.label_use != LabelUse::Ignore) {
    if (!schema_.label_column.empty()) {
      const auto it = columns.find(schema_.label_column);
      if (it != columns.end()) {
        label_mode_ = LabelSource::Index;
        label_column_ = it->second;
      } else if (schema_.label_use == LabelUse::Required) {
        missing.push_back(schema_.label_column);
      }
    } else {
      const auto cat = columns.find(schema_.category_column);
      const auto sub = columns.find(schema_.subcategory_column);
      if (cat != columns.end() && sub != columns.end()) {
        label_mode_ = LabelSource::Text;
        category_column_ = cat->second;
        subcategory_column_ = sub->second;
      } else if (schema_.label_use == LabelUse::Required) {
        if (cat == columns.end()) missing.push_back(schema_.category_column);
        if (sub == columns.end()) missing.push_back(schema_.subcategory_column);
      }
    }
  }

  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw DataError("data file " + path.string() + " is missing required column(s): " + list);
  }
}

std::optional<FlowRecord> CsvStream::parse_row(std::string& problem) {
  split_fields(line_, schema_.delimiter, fields_);
  if (fields_.size() != column_count_) {
    problem = "expected " + std::to_string(column_count_) + " fields, found " +
              std::to_string(fields_.size());
    return std::nullopt;
  }
  FlowRecord record;
  const auto& names = schema_.features.names();
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    if (!parse_double(fields_[feature_columns_[f]], record.features[f])) {
      problem = "non-numeric value '" + std::string(strip(fields_[feature_columns_[f]])) +
                "' in column " + names[f];
      return std::nullopt;
    }
  }
  if (label_mode_ == LabelSource::Index) {
    const std::string_view text = strip(fields_[label_column_]);
    int label = -1;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), label);
    if (ec != std::errc{} || ptr != text.data() + text.size() || label < 0 ||
        label >= static_cast<int>(kClassCount)) {
      problem = "label '" + std::string(text) + "' is not a class index 0.." +
                std::to_string(kClassCount - 1);
      return std::nullopt;
    }
    record.label = label;
  } else if (label_mode_ == LabelSource::Text) {
    const auto cat = strip(fields_[category_column_]);
    const auto sub = strip(fields_[subcategory_column_]);
    const auto label = schema_.labels.find(cat, sub);
    if (!label) {
      problem = "no class mapping for (category, subcategory) = (\"" + std::string(cat) +
                "\", \"" + std::string(sub) + "\")";
      return std::nullopt;
    }
    record.label = *label;
  }
  return record;
}

std::optional<FlowRecord> CsvStream::next() {
  while (std::getline(in_, line_)) {
    ++line_no_;
    if (strip(line_).empty()) continue;
    ++rows_read_;
    std::string problem;
    if (auto record = parse_row(problem)) return record;
    if (schema_.policy == RowPolicy::Fail) {
      throw DataError("line " + std::to_string(line_no_) + ": " + problem);
    }
    ++rows_skipped_;
    if (issues_.size() < kMaxIssues) issues_.push_back({line_no_, std::move(problem)});
  }
  return std::nullopt;
}

std::vector<FlowRecord> read_all(CsvStream& stream) {
  std::vector<FlowRecord> out;
  while (auto r = stream.next()) out.push_back(*r);
  return out;
}

std::array<std::size_t, kClassCount> class_distribution(std::span<const FlowRecord> records) {
  std::array<std::size_t, kClassCount> counts{};
  for (const auto& r : records)
    if (r.label) ++counts[static_cast<std::size_t>(*r.label)];
  return counts;
}

std::string format_class_distribution(const std::array<std::size_t, kClassCount>& counts) {
  std::ostringstream out;
  std::size_t total = 0;
  for (std::size_t c = 0; c < kClassCount; ++c) {
    out << "class " << c << " (" << class_names()[c] << "): " << counts[c] << '\n';
    total += counts[c];
  }
  out << "total: " << total << '\n';
  return out.str();
}

// ---------------------------------------------------------------- Batching

void shuffle_indices(std::vector<std::size_t>& indices, SeededRng& rng) {
  for (std::size_t i = indices.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(indices[i - 1], indices[j]);
  }
}

BatchIterator::BatchIterator(std::span<const FlowRecord> records, std::size_t batch_size,
                             std::uint64_t seed, bool shuffle)
    : records_(records), batch_size_(batch_size), order_(records.size()) {
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  if (shuffle) {
    SeededRng rng(seed);
    shuffle_indices(order_, rng);
  }
}

}  // namespace econet
