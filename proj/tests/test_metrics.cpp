#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "econet/error.hpp"
#include "econet/metrics.hpp"
#include "econet/rng.hpp"

using namespace econet;

namespace {

struct Reference {
  BinaryCells cells;
  double acc, agf, agm, auc;
  AucBand band;
  double err, f1;
  std::optional<double> precision;
  double youden, dind, sind;
};

// Per-class reference columns of a test-stage breakdown (class 0 omitted:
// its cells do not sum to the population).
const std::vector<std::pair<int, Reference>>& reference_columns() {
  static const std::vector<std::pair<int, Reference>> table = {
      {1, {{318277, 57, 60, 413473}, 0.99984, 0.99983, 0.99985, 0.99984, AucBand::Excellent,
           0.00016, 0.99982, 0.99982, 0.99967, 0.00023, 0.99983}},
      {2, {{1846, 3487, 1734, 724800}, 0.99287, 0.68433, 0.85544, 0.75543, AucBand::Good,
           0.00713, 0.41423, 0.34615, 0.51085, 0.48438, 0.65749}},
      {3, {{9304, 1806, 3463, 717294}, 0.9928, 0.86309, 0.92441, 0.86312, AucBand::VeryGood,
           0.0072, 0.77933, 0.83744, 0.72624, 0.27126, 0.80819}},
      {4, {{449, 29, 55, 731334}, 0.99989, 0.94874, 0.97189, 0.94542, AucBand::Excellent,
           0.00011, 0.91446, 0.93933, 0.89083, 0.10913, 0.92284}},
      {5, {{0, 0, 107, 731760}, 0.99985, 0.0, 0.0, 0.5, AucBand::Poor, 0.00015, 0.0,
           std::nullopt, 0.0, 1.0, 0.29289}},
  };
  return table;
}

constexpr double kPrint = 5e-5;

ConfusionMatrix random_matrix(SeededRng& rng, std::size_t k, std::uint64_t max_count) {
  ConfusionMatrix cm(k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) cm.add(i, j, rng.below(max_count + 1));
  if (cm.population() == 0) cm.add(0, 0);
  return cm;
}

}  // namespace

TEST(ClassStats, ReproducesReferenceColumns) {
  for (const auto& [cls, want] : reference_columns()) {
    SCOPED_TRACE("class " + std::to_string(cls));
    ASSERT_EQ(want.cells.population(), 731867u);
    const ClassStats s = class_stats(want.cells);
    EXPECT_NEAR(s.accuracy, want.acc, kPrint);
    EXPECT_NEAR(s.error_rate, want.err, kPrint);
    EXPECT_NEAR(*s.agf, want.agf, kPrint);
    EXPECT_NEAR(*s.agm, want.agm, kPrint);
    EXPECT_NEAR(*s.auc, want.auc, kPrint);
    EXPECT_EQ(*s.auci, want.band);
    EXPECT_NEAR(*s.f1, want.f1, kPrint);
    EXPECT_NEAR(*s.youden, want.youden, kPrint);
    EXPECT_NEAR(*s.dind, want.dind, kPrint);
    EXPECT_NEAR(*s.sind, want.sind, kPrint);
    ASSERT_EQ(s.precision.has_value(), want.precision.has_value());
    if (want.precision) EXPECT_NEAR(*s.precision, *want.precision, kPrint);
  }
}

TEST(ClassStats, IdentitiesHoldOnRandomCells) {
  SeededRng rng(1);
  for (int i = 0; i < 500; ++i) {
    BinaryCells c{1 + rng.below(1000), rng.below(1000), 1 + rng.below(1000), 1 + rng.below(1000)};
    const auto s = class_stats(c);
    EXPECT_EQ(s.accuracy + s.error_rate, 1.0);
    EXPECT_DOUBLE_EQ(*s.youden, 2 * *s.auc - 1);
    EXPECT_DOUBLE_EQ(*s.sind, 1 - *s.dind / std::sqrt(2.0));
    if (s.precision) {
      const double p = *s.precision, r = *s.tpr;
      EXPECT_NEAR(*s.f1, 2 * p * r / (p + r), 1e-12);
    }
    EXPECT_GE(*s.agm, 0.0);
    EXPECT_LE(*s.agm, 1.0);
  }
}

TEST(ClassStats, UndefinedValuesStayUndefined) {
  // A class that never occurs and is never predicted.
  const auto s = class_stats(BinaryCells{0, 0, 0, 50});
  EXPECT_FALSE(s.tpr.has_value());
  EXPECT_FALSE(s.precision.has_value());
  EXPECT_FALSE(s.auc.has_value());
  EXPECT_FALSE(s.youden.has_value());
  EXPECT_FALSE(s.f1.has_value());
  EXPECT_EQ(s.accuracy, 1.0);
}

TEST(ClassStats, FBetaHandValues) {
  // P = 2/3, R = 1/2 : F1 = 4/7, F2 = 5PR/(4P+R) = (5/3)/(19/6) = 10/19
  EXPECT_NEAR(*f_beta(1.0, 2, 1, 2), 4.0 / 7.0, 1e-15);
  EXPECT_NEAR(*f_beta(2.0, 2, 1, 2), 10.0 / 19.0, 1e-15);
  EXPECT_FALSE(f_beta(1.0, 0, 0, 0).has_value());
  EXPECT_EQ(*f_beta(1.0, 0, 3, 0), 0.0);
}

TEST(AucBand, BandExamplesAndEdges) {
  EXPECT_EQ(auci_band(0.75543), AucBand::Good);
  EXPECT_EQ(auci_band(0.86312), AucBand::VeryGood);
  EXPECT_EQ(auci_band(0.5), AucBand::Poor);
  EXPECT_EQ(auci_band(0.9), AucBand::Excellent);
  EXPECT_EQ(auci_band(0.6), AucBand::Fair);
  EXPECT_EQ(auci_band(0.0), AucBand::Poor);
  EXPECT_THROW(auci_band(1.01), DataError);
  EXPECT_THROW(auci_band(-0.1), DataError);
  EXPECT_EQ(to_string(AucBand::VeryGood), "Very Good");
  EXPECT_EQ(parse_auc_band("Very Good"), AucBand::VeryGood);
}

TEST(Overall, ConfidenceIntervalHandValue) {
  const auto ci = accuracy_interval(0.99259, 731867);
  EXPECT_EQ(std::round(ci.lower * 1e5), 99239.0);
  EXPECT_EQ(std::round(ci.upper * 1e5), 99279.0);
}

TEST(Overall, KappaAndRciHandValues) {
  const auto cm = ConfusionMatrix::from_counts({{20, 5}, {10, 15}});
  const auto o = overall_stats(cm);
  EXPECT_DOUBLE_EQ(o.accuracy, 0.7);
  // p_e = (25·30 + 25·20) / 50² = 0.5
  EXPECT_NEAR(*o.kappa, 0.4, 1e-15);
  // I(A;P) / H(A) from the joint distribution, computed term by term.
  const double n = 50;
  const double joint[2][2] = {{20, 5}, {10, 15}};
  const double row[2] = {25, 25}, col[2] = {30, 20};
  double mi = 0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      mi += joint[i][j] / n * std::log(joint[i][j] * n / (row[i] * col[j]));
  EXPECT_NEAR(o.rci, mi / std::log(2.0), 1e-12);
  EXPECT_NEAR(expected_agreement(std::vector<std::uint64_t>{25, 25}, std::vector<std::uint64_t>{30, 20}),
              0.5, 1e-15);
}

TEST(Overall, IdentityMatrixIsPerfect) {
  const auto cm = ConfusionMatrix::from_counts(
      {{5, 0, 0}, {0, 7, 0}, {0, 0, 3}});
  const auto o = overall_stats(cm);
  EXPECT_EQ(o.accuracy, 1.0);
  EXPECT_EQ(*o.kappa, 1.0);
  EXPECT_EQ(o.hamming_loss, 0.0);
  EXPECT_NEAR(o.rci, 1.0, 1e-15);
  EXPECT_EQ(o.micro_f1, 1.0);
}

TEST(Overall, ConstantPredictorHasNoAgreementBeyondChance) {
  const auto cm = ConfusionMatrix::from_counts({{10, 0}, {10, 0}});
  const auto o = overall_stats(cm);
  EXPECT_NEAR(*o.kappa, 0.0, 1e-15);
  EXPECT_NEAR(o.rci, 0.0, 1e-15);
}

TEST(Overall, HammingIsOneMinusAccuracyOnRandomMatrices) {
  SeededRng rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t k = 2 + rng.below(6);
    const std::size_t n = 1 + rng.below(300);
    std::vector<int> actual(n), predicted(n);
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < n; ++i) {
      actual[i] = static_cast<int>(rng.below(k));
      predicted[i] = rng.uniform() < 0.7 ? actual[i] : static_cast<int>(rng.below(k));
      wrong += actual[i] != predicted[i];
    }
    const auto o = overall_stats(ConfusionMatrix::from_labels(k, actual, predicted));
    ASSERT_EQ(o.hamming_loss, 1.0 - o.accuracy);
    ASSERT_NEAR(o.hamming_loss, static_cast<double>(wrong) / static_cast<double>(n), 1e-15);
    if (o.kappa && o.accuracy >= 1.0) ASSERT_EQ(*o.kappa, 1.0);
  }
}

TEST(Overall, KappaOneOnlyWithoutOffDiagonalMass) {
  SeededRng rng(78);
  for (int trial = 0; trial < 200; ++trial) {
    const auto cm = random_matrix(rng, 4, 20);
    const auto o = overall_stats(cm);
    if (!o.kappa) continue;
    EXPECT_EQ(std::abs(*o.kappa - 1.0) < 1e-12, cm.trace() == cm.population());
  }
}

TEST(Overall, EmptyMatrixRejected) {
  EXPECT_THROW(overall_stats(ConfusionMatrix(3)), DataError);
}

TEST(Matrix, CellsAndLabelValidation) {
  const auto cm = ConfusionMatrix::from_counts({{3, 1, 0}, {2, 5, 1}, {0, 0, 4}});
  EXPECT_EQ(cm.cells(1), (BinaryCells{5, 1, 3, 7}));
  EXPECT_EQ(cm.row_total(1), 8u);
  EXPECT_EQ(cm.column_total(0), 5u);
  const std::vector<int> a{0, 1, 3}, p{0, 1, 1};
  EXPECT_THROW(ConfusionMatrix::from_labels(3, a, p), DataError);
  EXPECT_THROW(ConfusionMatrix::from_counts({{1, 2}, {3}}), ShapeError);
}

TEST(Report, PermutingLabelsPermutesClassStats) {
  SeededRng rng(5);
  const std::size_t k = 5;
  const auto cm = random_matrix(rng, k, 50);
  std::vector<std::size_t> perm(k);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = k - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
  ConfusionMatrix permuted(k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) permuted.add(perm[i], perm[j], cm.count(i, j));
  const auto a = report(cm), b = report(permuted);
  for (std::size_t c = 0; c < k; ++c) {
    EXPECT_EQ(a.classes[c].cells, b.classes[perm[c]].cells);
    EXPECT_EQ(a.classes[c].f1, b.classes[perm[c]].f1);
    EXPECT_EQ(a.classes[c].agm, b.classes[perm[c]].agm);
  }
  EXPECT_DOUBLE_EQ(a.overall.accuracy, b.overall.accuracy);
  EXPECT_NEAR(*a.overall.kappa, *b.overall.kappa, 1e-12);
  EXPECT_NEAR(a.overall.rci, b.overall.rci, 1e-12);
}

TEST(Report, JsonRoundTripKeepsUndefinedValues) {
  // Last class never predicted and never correct: precision is undefined.
  const auto cm = ConfusionMatrix::from_counts({{50, 2, 0}, {3, 40, 0}, {4, 1, 0}});
  const auto r = report(cm);
  ASSERT_FALSE(r.classes[2].precision.has_value());
  const std::string json = report_to_json(r);
  EXPECT_NE(json.find("\"None\""), std::string::npos);
  const auto back = report_from_json(json);
  ASSERT_EQ(back.classes.size(), 3u);
  EXPECT_FALSE(back.classes[2].precision.has_value());
  EXPECT_EQ(back.matrix, r.matrix);
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_EQ(back.classes[c].cells, r.classes[c].cells);
    EXPECT_EQ(back.classes[c].f1, r.classes[c].f1);
    EXPECT_EQ(back.classes[c].agf, r.classes[c].agf);
    EXPECT_EQ(back.classes[c].auci, r.classes[c].auci);
  }
  EXPECT_EQ(back.overall.accuracy, r.overall.accuracy);
  EXPECT_EQ(back.overall.kappa, r.overall.kappa);
  EXPECT_EQ(back.overall.ci95.lower, r.overall.ci95.lower);
  EXPECT_THROW(report_from_json("{not json"), DataError);
}

TEST(Report, TableHasEveryStatisticRow) {
  const auto cm = ConfusionMatrix::from_counts({{9, 1}, {0, 0}});
  const std::string table = format_class_table(report(cm));
  const auto& rows = class_table_rows();
  EXPECT_EQ(rows.size(), 17u);
  for (const auto& row : rows) EXPECT_NE(table.find(row), std::string::npos) << row;
  for (const char* label : {"AGF", "AGM", "AUCI", "Youden", "dInd", "sInd", "Precision",
                            "True Negative", "False Positive"})
    EXPECT_NE(table.find(label), std::string::npos) << label;
  EXPECT_NE(table.find("None"), std::string::npos);
}
