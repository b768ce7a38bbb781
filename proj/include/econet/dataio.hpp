#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "econet/config.hpp"
#include "econet/rng.hpp"
#include "econet/tensor.hpp"

namespace econet {

inline constexpr std::size_t kFeatureCount = 16;
inline constexpr std::size_t kClassCount = 6;

/// Human-readable names of the six traffic classes, indexed by label.
const std::array<std::string_view, kClassCount>& class_names();

struct FlowRecord {
  std::array<double, kFeatureCount> features{};
  std::optional<int> label;
};

/// The ordered list of 16 feature column names. Unfitted: it can select
/// columns but cannot normalize them.
class FeatureSpec {
 public:
  explicit FeatureSpec(std::vector<std::string> names);

  /// Sixteen numeric flow columns of the Bot-IoT CSV schema.
  static FeatureSpec defaults();

  const std::vector<std::string>& names() const noexcept { return names_; }

 private:
  std::vector<std::string> names_;
};

/// A FeatureSpec with per-feature min/max fitted on training rows.
/// transform() maps each feature to [0, 1], clamping values outside the
/// fitted range; a constant feature maps to 0.
class FittedFeatureSpec {
 public:
  FittedFeatureSpec(FeatureSpec spec, std::array<double, kFeatureCount> min,
                    std::array<double, kFeatureCount> max);

  const FeatureSpec& spec() const noexcept { return spec_; }
  const std::array<double, kFeatureCount>& min() const noexcept { return min_; }
  const std::array<double, kFeatureCount>& max() const noexcept { return max_; }

  /// Names of features whose fitted range is a single value.
  std::vector<std::string> constant_features() const;

  void transform(FlowRecord& record) const;
  void transform(std::span<FlowRecord> records) const;

  bool operator==(const FittedFeatureSpec& other) const;

 private:
  FeatureSpec spec_;
  std::array<double, kFeatureCount> min_;
  std::array<double, kFeatureCount> max_;
};

/// Accumulates min/max over a stream of training records.
class NormalizerFitter {
 public:
  explicit NormalizerFitter(FeatureSpec spec);
  void observe(const FlowRecord& record);
  std::size_t observed() const noexcept { return count_; }
  /// Throws DataError when no row was observed.
  FittedFeatureSpec finish() const;

 private:
  FeatureSpec spec_;
  std::array<double, kFeatureCount> min_;
  std::array<double, kFeatureCount> max_;
  std::size_t count_ = 0;
};

FittedFeatureSpec fit_normalizer(std::span<const FlowRecord> training, const FeatureSpec& spec);

/// (category, subcategory) text pairs to class indices. Matching ignores case,
/// surrounding quotes, and the separators ' ', '_' and '-'.
class LabelMap {
 public:
  /// Normal→0, DDoS/TCP→1, DDoS/UDP→2, DoS/HTTP→3,
  /// Reconnaissance/OS_Fingerprint→4, Theft/Data_Exfiltration→5.
  static LabelMap defaults();

  void add(std::string_view category, std::string_view subcategory, int label);
  std::optional<int> find(std::string_view category, std::string_view subcategory) const;

 private:
  std::map<std::string, int> entries_;
};

/// Throws DataError naming the pair when it has no mapping.
int encode_label(std::string_view category, std::string_view subcategory, const LabelMap& map);

enum class RowPolicy { Skip, Fail };

enum class LabelUse {
  Required,  // every row must carry a label
  Optional,  // labels are read when the columns exist
  Ignore,    // never read labels
};

struct CsvSchema {
  char delimiter = ',';
  FeatureSpec features = FeatureSpec::defaults();
  std::string category_column = "category";
  std::string subcategory_column = "subcategory";
  /// When set, holds the class index directly and the text columns are unused.
  std::string label_column;
  LabelMap labels = LabelMap::defaults();
  RowPolicy policy = RowPolicy::Skip;
  LabelUse label_use = LabelUse::Required;

  /// Keys: delimiter, features (comma list), category_column,
  /// subcategory_column, label_column, on_bad_row (skip|fail),
  /// label.<Category>/<Subcategory> = index (replaces the default map when any is present).
  static CsvSchema from_config(const KeyValueConfig& config);
};

struct RowIssue {
  std::size_t line = 0;
  std::string reason;
};

/// Single-pass reader over a header-first CSV. Memory use does not grow with
/// file length: one line buffer and a bounded list of row issues.
class CsvStream {
 public:
  CsvStream(const std::filesystem::path& path, CsvSchema schema);

  /// Next well-formed record, or nullopt at end of file. Malformed rows are
  /// skipped and counted, or throw DataError under RowPolicy::Fail.
  std::optional<FlowRecord> next();

  bool has_labels() const noexcept { return label_mode_ != LabelSource::None; }
  std::size_t rows_read() const noexcept { return rows_read_; }
  std::size_t rows_skipped() const noexcept { return rows_skipped_; }
  /// The first kMaxIssues problems encountered.
  const std::vector<RowIssue>& issues() const noexcept { return issues_; }

  static constexpr std::size_t kMaxIssues = 100;

 private:
  enum class LabelSource { None, Index, Text };

  std::optional<FlowRecord> parse_row(std::string& problem);

  CsvSchema schema_;
  std::ifstream in_;
  std::string line_;
  std::vector<std::string_view> fields_;
  std::array<std::size_t, kFeatureCount> feature_columns_{};
  std::size_t column_count_ = 0;
  std::size_t label_column_ = 0;
  std::size_t category_column_ = 0;
  std::size_t subcategory_column_ = 0;
  LabelSource label_mode_ = LabelSource::None;
  std::size_t line_no_ = 1;
  std::size_t rows_read_ = 0;
  std::size_t rows_skipped_ = 0;
  std::vector<RowIssue> issues_;
};

/// Drains a stream into memory.
std::vector<FlowRecord> read_all(CsvStream& stream);

/// Per-class record counts; unlabeled records are not counted.
std::array<std::size_t, kClassCount> class_distribution(std::span<const FlowRecord> records);
std::string format_class_distribution(const std::array<std::size_t, kClassCount>& counts);

template <typename T>
struct Batch {
  Tensor<T> features;  // (B, 16, 1)
  Tensor<T> targets;   // (B, 6) one-hot; all zero for unlabeled rows
  std::vector<int> labels;  // -1 for unlabeled rows
  std::size_t size() const { return labels.size(); }
};

/// Packs records[indices] into a batch.
template <typename T>
Batch<T> make_batch(std::span<const FlowRecord> records, std::span<const std::size_t> indices) {
  const std::size_t n = indices.size();
  Batch<T> batch{Tensor<T>({n, kFeatureCount, 1}), Tensor<T>({n, kClassCount}), {}};
  batch.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const FlowRecord& r = records[indices[i]];
    for (std::size_t f = 0; f < kFeatureCount; ++f)
      batch.features(i, f, 0) = static_cast<T>(r.features[f]);
    const int label = r.label.value_or(-1);
    if (label >= 0) batch.targets(i, static_cast<std::size_t>(label)) = T{1};
    batch.labels.push_back(label);
  }
  return batch;
}

/// Walks records in fixed-size batches; the last batch may be short. With
/// shuffle on, the order is a Fisher-Yates permutation drawn from `seed`.
class BatchIterator {
 public:
  BatchIterator(std::span<const FlowRecord> records, std::size_t batch_size,
                std::uint64_t seed = 0, bool shuffle = false);

  template <typename T>
  std::optional<Batch<T>> next() {
    if (cursor_ >= order_.size()) return std::nullopt;
    const std::size_t n = std::min(batch_size_, order_.size() - cursor_);
    auto batch = make_batch<T>(records_, std::span(order_).subspan(cursor_, n));
    cursor_ += n;
    return batch;
  }

  std::size_t batch_count() const noexcept {
    return (order_.size() + batch_size_ - 1) / batch_size_;
  }
  const std::vector<std::size_t>& order() const noexcept { return order_; }

 private:
  std::span<const FlowRecord> records_;
  std::size_t batch_size_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

/// In-place Fisher-Yates shuffle driven by rng.
void shuffle_indices(std::vector<std::size_t>& indices, SeededRng& rng);

}  // namespace econet
