#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace econet {

/// One class of a multi-class matrix seen as a binary problem.
struct BinaryCells {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t population() const noexcept { return tp + fp + fn + tn; }
  bool operator==(const BinaryCells&) const = default;
};

/// K×K counts; entry (i, j) counts samples of actual class i predicted as j.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes);
  static ConfusionMatrix from_counts(const std::vector<std::vector<std::uint64_t>>& counts);
  /// Tallies paired label vectors; labels must lie in [0, classes).
  static ConfusionMatrix from_labels(std::size_t classes, std::span<const int> actual,
                                     std::span<const int> predicted);

  void add(std::size_t actual, std::size_t predicted, std::uint64_t n = 1);

  std::size_t classes() const noexcept { return classes_; }
  std::uint64_t count(std::size_t actual, std::size_t predicted) const {
    return counts_[actual * classes_ + predicted];
  }
  std::uint64_t population() const noexcept { return population_; }
  std::uint64_t trace() const;
  std::uint64_t row_total(std::size_t actual) const;
  std::uint64_t column_total(std::size_t predicted) const;

  /// One-vs-rest cells for class c; TN is taken against the full population.
  BinaryCells cells(std::size_t c) const;

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t classes_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t population_ = 0;
};

enum class AucBand { Poor, Fair, Good, VeryGood, Excellent };

std::string_view to_string(AucBand band) noexcept;
std::optional<AucBand> parse_auc_band(std::string_view text);

/// [0.9, 1] Excellent, [0.8, 0.9) Very Good, [0.7, 0.8) Good, [0.6, 0.7) Fair,
/// below 0.6 Poor. Rejects values outside [0, 1].
AucBand auci_band(double auc);

/// Per-class statistics. An empty optional means the value is undefined
/// (a zero denominator) and is rendered as "None".
struct ClassStats {
  BinaryCells cells;
  double accuracy = 0.0;
  double error_rate = 0.0;
  std::optional<double> tpr;
  std::optional<double> tnr;
  std::optional<double> precision;
  std::optional<double> f1;
  std::optional<double> agf;
  std::optional<double> agm;
  std::optional<double> auc;
  std::optional<AucBand> auci;
  std::optional<double> youden;
  std::optional<double> dind;
  std::optional<double> sind;
};

ClassStats class_stats(const BinaryCells& cells);
ClassStats class_stats(const ConfusionMatrix& cm, std::size_t c);

/// F-beta score; undefined when every term of the denominator is zero.
std::optional<double> f_beta(double beta, std::uint64_t tp, std::uint64_t fp, std::uint64_t fn);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

/// Normal-approximation interval acc ± z·sqrt(acc(1-acc)/n).
Interval accuracy_interval(double accuracy, std::uint64_t n, double z = 1.96);

/// Chance agreement Σ actual_i·predicted_i / (Σactual · Σpredicted).
double expected_agreement(std::span<const std::uint64_t> actual_marginals,
                          std::span<const std::uint64_t> predicted_marginals);

/// (p_o - p_e) / (1 - p_e); undefined when p_e == 1.
std::optional<double> cohen_kappa(double observed, double expected);

struct OverallStats {
  std::uint64_t population = 0;
  double accuracy = 0.0;
  double error_rate = 0.0;
  Interval ci95;
  std::optional<double> macro_f1;
  double micro_f1 = 0.0;
  std::optional<double> kappa;
  double hamming_loss = 0.0;
  double rci = 0.0;
};

/// Throws if the matrix is empty.
OverallStats overall_stats(const ConfusionMatrix& cm);

/// Mutual information of (actual, predicted) over the entropy of actual;
/// 0 when the actual labels carry no entropy.
double relative_classifier_information(const ConfusionMatrix& cm);

struct MetricsReport {
  OverallStats overall;
  std::vector<ClassStats> classes;
  std::vector<std::vector<std::uint64_t>> matrix;
};

MetricsReport report(const ConfusionMatrix& cm);

/// Structured key/value report (JSON). Undefined values are the string "None".
std::string report_to_json(const MetricsReport& r);
MetricsReport report_from_json(std::string_view text);

/// Per-class table: one row per statistic,
/// one column per class.
std::string format_class_table(const MetricsReport& r);
std::string format_overall(const MetricsReport& r);

/// Row labels emitted by format_class_table, in order.
const std::vector<std::string>& class_table_rows();

}  // namespace econet
