#include "econet/metrics.hpp"

#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "econet/error.hpp"

namespace econet {

// -------------------------------------------------------- ConfusionMatrix

ConfusionMatrix::ConfusionMatrix(std::size_t classes)
    : classes_(classes), counts_(classes * classes, 0) {
  if (classes == 0) throw ConfigError("confusion matrix needs at least one class");
}

ConfusionMatrix ConfusionMatrix::from_counts(
    const std::vector<std::vector<std::uint64_t>>& counts) {
  ConfusionMatrix cm(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i].size() != counts.size()) throw ShapeError("confusion matrix must be square");
    for (std::size_t j = 0; j < counts.size(); ++j) cm.add(i, j, counts[i][j]);
  }
  return cm;
}

ConfusionMatrix ConfusionMatrix::from_labels(std::size_t classes, std::span<const int> actual,
                                             std::span<const int> predicted) {
  if (actual.size() != predicted.size()) throw ShapeError("label vectors differ in length");
  ConfusionMatrix cm(classes);
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (actual[i] < 0 || predicted[i] < 0) throw DataError("negative class label");
    cm.add(static_cast<std::size_t>(actual[i]), static_cast<std::size_t>(predicted[i]));
  }
  return cm;
}

void ConfusionMatrix::add(std::size_t actual, std::size_t predicted, std::uint64_t n) {
  if (actual >= classes_ || predicted >= classes_) {
    throw DataError("class label out of range for a " + std::to_string(classes_) +
                    "-class confusion matrix");
  }
  counts_[actual * classes_ + predicted] += n;
  population_ += n;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t t = 0;
  for (std::size_t i = 0; i < classes_; ++i) t += count(i, i);
  return t;
}

std::uint64_t ConfusionMatrix::row_total(std::size_t actual) const {
  std::uint64_t t = 0;
  for (std::size_t j = 0; j < classes_; ++j) t += count(actual, j);
  return t;
}

std::uint64_t ConfusionMatrix::column_total(std::size_t predicted) const {
  std::uint64_t t = 0;
  for (std::size_t i = 0; i < classes_; ++i) t += count(i, predicted);
  return t;
}

BinaryCells ConfusionMatrix::cells(std::size_t c) const {
  BinaryCells b;
  b.tp = count(c, c);
  b.fn = row_total(c) - b.tp;
  b.fp = column_total(c) - b.tp;
  b.tn = population_ - b.tp - b.fn - b.fp;
  return b;
}

// ------------------------------------------------------------- per class

std::string_view to_string(AucBand band) noexcept {
  switch (band) {
    case AucBand::Poor: return "Poor";
    case AucBand::Fair: return "Fair";
    case AucBand::Good: return "Good";
    case AucBand::VeryGood: return "Very Good";
    case AucBand::Excellent: return "Excellent";
  }
  return "Poor";
}

std::optional<AucBand> parse_auc_band(std::string_view text) {
  for (auto band : {AucBand::Poor, AucBand::Fair, AucBand::Good, AucBand::VeryGood,
                    AucBand::Excellent})
    if (to_string(band) == text) return band;
  return std::nullopt;
}

AucBand auci_band(double auc) {
  if (!(auc >= 0.0 && auc <= 1.0)) {
    throw DataError("AUC " + std::to_string(auc) + " is outside [0, 1]");
  }
  if (auc >= 0.9) return AucBand::Excellent;
  if (auc >= 0.8) return AucBand::VeryGood;
  if (auc >= 0.7) return AucBand::Good;
  if (auc >= 0.6) return AucBand::Fair;
  return AucBand::Poor;
}

std::optional<double> f_beta(double beta, std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
  const double b2 = beta * beta;
  const double den = (1.0 + b2) * static_cast<double>(tp) + b2 * static_cast<double>(fn) +
                     static_cast<double>(fp);
  if (den == 0.0) return std::nullopt;
  return (1.0 + b2) * static_cast<double>(tp) / den;
}

namespace {

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ClassStats class_stats(const BinaryCells& c) {
  const std::uint64_t n = c.population();
  if (n == 0) throw DataError("class statistics need a non-empty population");
  ClassStats s;
  s.cells = c;
  s.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(n);
  s.error_rate = 1.0 - s.accuracy;
  s.tpr = ratio(c.tp, c.tp + c.fn);
  s.tnr = ratio(c.tn, c.tn + c.fp);
  s.precision = ratio(c.tp, c.tp + c.fp);

  if (c.tp == 0) {
    if (c.fp + c.fn > 0) s.f1 = 0.0;
  } else {
    const double p = *s.precision, r = *s.tpr;
    s.f1 = 2.0 * p * r / (p + r);
  }

  if (s.tpr && s.tnr) {
    const double tpr = *s.tpr, tnr = *s.tnr;
    s.auc = (tpr + tnr) / 2.0;
    s.auci = auci_band(*s.auc);
    s.youden = tpr + tnr - 1.0;
    s.dind = std::sqrt((1.0 - tpr) * (1.0 - tpr) + (1.0 - tnr) * (1.0 - tnr));
    s.sind = 1.0 - *s.dind / std::sqrt(2.0);

    if (tpr > 0.0) {
      const double negatives = static_cast<double>(c.tn + c.fp) / static_cast<double>(n);
      s.agm = (std::sqrt(tpr * tnr) + tnr * negatives) / (1.0 + negatives);
    } else {
      s.agm = 0.0;
    }
  }

  if (s.tpr) {
    if (c.tp == 0) {
      s.agf = 0.0;
    } else {
      // F2 on the class, F0.5 on the label-swapped cells (TP<->TN, FP<->FN).
      const auto f2 = f_beta(2.0, c.tp, c.fp, c.fn);
      const auto inv_f05 = f_beta(0.5, c.tn, c.fn, c.fp);
      if (f2 && inv_f05) s.agf = std::sqrt(*f2 * *inv_f05);
    }
  }
  return s;
}

ClassStats class_stats(const ConfusionMatrix& cm, std::size_t c) {
  if (c >= cm.classes()) throw DataError("class index out of range");
  return class_stats(cm.cells(c));
}

// ---------------------------------------------------------------- overall

Interval accuracy_interval(double accuracy, std::uint64_t n, double z) {
  if (n == 0) throw DataError("confidence interval needs a non-empty population");
  const double half = z * std::sqrt(accuracy * (1.0 - accuracy) / static_cast<double>(n));
  return {accuracy - half, accuracy + half};
}

double expected_agreement(std::span<const std::uint64_t> actual,
                          std::span<const std::uint64_t> predicted) {
  if (actual.size() != predicted.size()) throw ShapeError("marginal vectors differ in length");
  const double na = std::accumulate(actual.begin(), actual.end(), 0.0);
  const double np = std::accumulate(predicted.begin(), predicted.end(), 0.0);
  if (na == 0.0 || np == 0.0) throw DataError("marginals must not be empty");
  double pe = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i)
    pe += static_cast<double>(actual[i]) * static_cast<double>(predicted[i]);
  return pe / (na * np);
}

std::optional<double> cohen_kappa(double observed, double expected) {
  if (expected == 1.0) return std::nullopt;
  return (observed - expected) / (1.0 - expected);
}

double relative_classifier_information(const ConfusionMatrix& cm) {
  const double n = static_cast<double>(cm.population());
  double h_actual = 0.0;
  for (std::size_t i = 0; i < cm.classes(); ++i) {
    const double p = static_cast<double>(cm.row_total(i)) / n;
    if (p > 0.0) h_actual -= p * std::log(p);
  }
  if (h_actual <= 0.0) return 0.0;
  double mutual = 0.0;
  for (std::size_t i = 0; i < cm.classes(); ++i) {
    const double pi = static_cast<double>(cm.row_total(i)) / n;
    for (std::size_t j = 0; j < cm.classes(); ++j) {
      const double pij = static_cast<double>(cm.count(i, j)) / n;
      if (pij == 0.0) continue;
      const double qj = static_cast<double>(cm.column_total(j)) / n;
      mutual += pij * std::log(pij / (pi * qj));
    }
  }
  return mutual / h_actual;
}

OverallStats overall_stats(const ConfusionMatrix& cm) {
  if (cm.population() == 0) throw DataError("overall statistics need a non-empty matrix");
  OverallStats s;
  s.population = cm.population();
  const double n = static_cast<double>(s.population);
  s.accuracy = static_cast<double>(cm.trace()) / n;
  s.error_rate = 1.0 - s.accuracy;
  // Single-label data: each sample has one wrong-or-right label.
  s.hamming_loss = 1.0 - s.accuracy;
  s.ci95 = accuracy_interval(s.accuracy, s.population);

  std::vector<std::uint64_t> rows(cm.classes()), cols(cm.classes());
  double f1_sum = 0.0;
  std::size_t f1_defined = 0;
  std::uint64_t tp = 0, fp = 0, fn = 0;
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    rows[c] = cm.row_total(c);
    cols[c] = cm.column_total(c);
    const auto stats = class_stats(cm, c);
    if (stats.f1) {
      f1_sum += *stats.f1;
      ++f1_defined;
    }
    tp += stats.cells.tp;
    fp += stats.cells.fp;
    fn += stats.cells.fn;
  }
  if (f1_defined) s.macro_f1 = f1_sum / static_cast<double>(f1_defined);
  s.micro_f1 = f_beta(1.0, tp, fp, fn).value_or(0.0);
  s.kappa = cohen_kappa(s.accuracy, expected_agreement(rows, cols));
  s.rci = relative_classifier_information(cm);
  return s;
}

MetricsReport report(const ConfusionMatrix& cm) {
  MetricsReport r;
  r.overall = overall_stats(cm);
  for (std::size_t c = 0; c < cm.classes(); ++c) r.classes.push_back(class_stats(cm, c));
  r.matrix.assign(cm.classes(), std::vector<std::uint64_t>(cm.classes()));
  for (std::size_t i = 0; i < cm.classes(); ++i)
    for (std::size_t j = 0; j < cm.classes(); ++j) r.matrix[i][j] = cm.count(i, j);
  return r;
}

// ---------------------------------------------------------- serialization

namespace {

using nlohmann::json;

json opt(const std::optional<double>& v) { return v ? json(*v) : json("None"); }

std::optional<double> opt_from(const json& j) {
  if (j.is_string()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

std::string report_to_json(const MetricsReport& r) {
  json root;
  const auto& o = r.overall;
  root["overall"] = {
      {"population", o.population},
      {"accuracy", o.accuracy},
      {"error_rate", o.error_rate},
      {"ci95", {o.ci95.lower, o.ci95.upper}},
      {"macro_f1", opt(o.macro_f1)},
      {"micro_f1", o.micro_f1},
      {"kappa", opt(o.kappa)},
      {"hamming_loss", o.hamming_loss},
      {"rci", o.rci},
  };
  json classes = json::array();
  for (std::size_t c = 0; c < r.classes.size(); ++c) {
    const auto& s = r.classes[c];
    classes.push_back({
        {"class", c},
        {"TP", s.cells.tp},
        {"FP", s.cells.fp},
        {"FN", s.cells.fn},
        {"TN", s.cells.tn},
        {"ACC", s.accuracy},
        {"ERR", s.error_rate},
        {"TPR", opt(s.tpr)},
        {"TNR", opt(s.tnr)},
        {"PPV", opt(s.precision)},
        {"F1", opt(s.f1)},
        {"AGF", opt(s.agf)},
        {"AGM", opt(s.agm)},
        {"AUC", opt(s.auc)},
        {"AUCI", s.auci ? json(std::string(to_string(*s.auci))) : json("None")},
        {"Y", opt(s.youden)},
        {"dInd", opt(s.dind)},
        {"sInd", opt(s.sind)},
    });
  }
  root["classes"] = std::move(classes);
  root["confusion_matrix"] = r.matrix;
  return root.dump(2);
}

MetricsReport report_from_json(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("metrics report: ") + e.what(), e.byte);
  }
  try {
    MetricsReport r;
    const json& o = root.at("overall");
    r.overall.population = o.at("population").get<std::uint64_t>();
    r.overall.accuracy = o.at("accuracy").get<double>();
    r.overall.error_rate = o.at("error_rate").get<double>();
    r.overall.ci95 = {o.at("ci95").at(0).get<double>(), o.at("ci95").at(1).get<double>()};
    r.overall.macro_f1 = opt_from(o.at("macro_f1"));
    r.overall.micro_f1 = o.at("micro_f1").get<double>();
    r.overall.kappa = opt_from(o.at("kappa"));
    r.overall.hamming_loss = o.at("hamming_loss").get<double>();
    r.overall.rci = o.at("rci").get<double>();
    for (const json& c : root.at("classes")) {
      ClassStats s;
      s.cells = {c.at("TP").get<std::uint64_t>(), c.at("FP").get<std::uint64_t>(),
                 c.at("FN").get<std::uint64_t>(), c.at("TN").get<std::uint64_t>()};
      s.accuracy = c.at("ACC").get<double>();
      s.error_rate = c.at("ERR").get<double>();
      s.tpr = opt_from(c.at("TPR"));
      s.tnr = opt_from(c.at("TNR"));
      s.precision = opt_from(c.at("PPV"));
      s.f1 = opt_from(c.at("F1"));
      s.agf = opt_from(c.at("AGF"));
      s.agm = opt_from(c.at("AGM"));
      s.auc = opt_from(c.at("AUC"));
      s.auci = parse_auc_band(c.at("AUCI").get<std::string>());
      s.youden = opt_from(c.at("Y"));
      s.dind = opt_from(c.at("dInd"));
      s.sind = opt_from(c.at("sInd"));
      r.classes.push_back(s);
    }
    r.matrix = root.at("confusion_matrix").get<std::vector<std::vector<std::uint64_t>>>();
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("metrics report: ") + e.what());
  }
}

const std::vector<std::string>& class_table_rows() {
  static const std::vector<std::string> rows = {
      "ACC(Accuracy)",
      "AGF(Adjusted F-score)",
      "AGM(Adjusted geometric mean)",
      "AUC(Area under the ROC curve)",
      "AUCI(AUC value interpretation)",
      "ERR(Error rate)",
      "F1-Score",
      "Precision",
      "Recall(TPR)",
      "Specificity(TNR)",
      "False Negative",
      "False Positive",
      "True Positive",
      "True Negative",
      "Y(Youden index)",
      "dInd(Distance index)",
      "sInd(Similarity index)",
  };
  return rows;
}

namespace {

std::string fixed5(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(5) << v;
  return out.str();
}

std::string cell(const std::optional<double>& v) { return v ? fixed5(*v) : "None"; }

}  // namespace

std::string format_class_table(const MetricsReport& r) {
  const auto& labels = class_table_rows();
  std::vector<std::vector<std::string>> cols;
  for (const auto& s : r.classes) {
    cols.push_back({
        fixed5(s.accuracy),
        cell(s.agf),
        cell(s.agm),
        cell(s.auc),
        s.auci ? std::string(to_string(*s.auci)) : "None",
        fixed5(s.error_rate),
        cell(s.f1),
        cell(s.precision),
        cell(s.tpr),
        cell(s.tnr),
        std::to_string(s.cells.fn),
        std::to_string(s.cells.fp),
        std::to_string(s.cells.tp),
        std::to_string(s.cells.tn),
        cell(s.youden),
        cell(s.dind),
        cell(s.sind),
    });
  }
  std::ostringstream out;
  constexpr int kLabelWidth = 34, kCellWidth = 12;
  out << std::left << std::setw(kLabelWidth) << "";
  for (std::size_t c = 0; c < cols.size(); ++c)
    out << std::setw(kCellWidth) << ("Class " + std::to_string(c));
  out << '\n';
  for (std::size_t row = 0; row < labels.size(); ++row) {
    out << std::setw(kLabelWidth) << labels[row];
    for (const auto& col : cols) out << std::setw(kCellWidth) << col[row];
    out << '\n';
  }
  return out.str();
}

std::string format_overall(const MetricsReport& r) {
  const auto& o = r.overall;
  std::ostringstream out;
  out << std::left;
  auto row = [&](const std::string& name, const std::string& value) {
    out << std::setw(16) << name << value << '\n';
  };
  row("Population", std::to_string(o.population));
  row("Accuracy", fixed5(o.accuracy));
  row("95% CI", "(" + fixed5(o.ci95.lower) + "," + fixed5(o.ci95.upper) + ")");
  row("F1 (micro)", fixed5(o.micro_f1));
  row("F1 (macro)", cell(o.macro_f1));
  row("Kappa", cell(o.kappa));
  row("Hamming Loss", fixed5(o.hamming_loss));
  row("RCI", fixed5(o.rci));
  return out.str();
}

}  // namespace econet
