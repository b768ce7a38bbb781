#include "econet/synthetic.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

#include "econet/error.hpp"
#include "econet/rng.hpp"

namespace econet {

namespace {

double pattern(int label, std::size_t t, std::size_t spike_at) {
  const double x = static_cast<double>(t) / static_cast<double>(kFeatureCount - 1);
  switch (label) {
    case 0: return 0.2;
    case 1: return 0.8;
    case 2: return 0.1 + 0.8 * x;
    case 3: return 0.9 - 0.8 * x;
    case 4: return (t / 4) % 2 == 0 ? 0.2 : 0.8;
    default: return (t == spike_at || t == spike_at + 1) ? 0.95 : 0.3;
  }
}

const char* const kCategory[kClassCount][2] = {
    {"Normal", "Normal"},         {"DDoS", "TCP"},
    {"DDoS", "UDP"},              {"DoS", "HTTP"},
    {"Reconnaissance", "OS_Fingerprint"}, {"Theft", "Data_Exfiltration"},
};

}  // namespace

std::vector<FlowRecord> make_synthetic(const SyntheticConfig& config) {
  SeededRng rng = SeededRng(config.seed).fork("synthetic");
  std::vector<FlowRecord> out(config.count);
  for (std::size_t i = 0; i < config.count; ++i) {
    const int label = static_cast<int>(i % kClassCount);
    const std::size_t spike_at = 2 + static_cast<std::size_t>(rng.below(kFeatureCount - 4));
    const double level = config.offset * rng.normal();
    FlowRecord& r = out[i];
    r.label = label;
    for (std::size_t t = 0; t < kFeatureCount; ++t) {
      const double v = pattern(label, t, spike_at) + level + config.noise * rng.normal();
      r.features[t] = std::clamp(v, 0.0, 1.0);
    }
  }
  return out;
}

void write_csv(const std::filesystem::path& path, std::span<const FlowRecord> records,
               bool with_labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  const FeatureSpec spec = FeatureSpec::defaults();
  const auto& names = spec.names();
  for (std::size_t f = 0; f < names.size(); ++f) out << (f ? "," : "") << names[f];
  if (with_labels) out << ",category,subcategory";
  out << '\n';
  char buf[32];
  for (const FlowRecord& r : records) {
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      auto res = std::to_chars(buf, buf + sizeof buf, r.features[f]);
      if (f) out << ',';
      out.write(buf, res.ptr - buf);
    }
    if (with_labels) {
      if (!r.label || *r.label < 0 || *r.label >= static_cast<int>(kClassCount))
        throw DataError("record without a valid label cannot be written with label columns");
      out << ',' << kCategory[*r.label][0] << ',' << kCategory[*r.label][1];
    }
    out << '\n';
  }
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace econet
