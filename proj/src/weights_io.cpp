#include "econet/weights_io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "econet/error.hpp"

namespace econet {

std::string_view to_string(Precision p) noexcept {
  return p == Precision::Single ? "single" : "double";
}

Precision parse_precision(std::string_view text) {
  if (text == "single" || text == "float") return Precision::Single;
  if (text == "double") return Precision::Double;
  throw ConfigError("precision must be single or double, got '" + std::string(text) + "'");
}

namespace {

constexpr std::string_view kMagic = "econet-weights";

template <typename V>
void put_number(std::ostream& out, V value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  out.write(buf, ptr - buf);
}

std::string arch_line(const ArchConfig& a) {
  std::ostringstream out;
  auto num = [](double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
  };
  out << "arch sequence_length=" << a.sequence_length << " input_channels=" << a.input_channels
      << " kernel_size=" << a.kernel_size << " filters=" << a.filters
      << " gru_units=" << a.gru_units << " dense_units=" << a.dense_units
      << " classes=" << a.classes << " conv_activation=" << to_string(a.conv_activation)
      << " dense_activation=" << to_string(a.dense_activation)
      << " pooling=" << to_string(a.pooling) << " bn_epsilon=" << num(a.bn_epsilon)
      << " bn_momentum=" << num(a.bn_momentum) << " gru_init_stddev=" << num(a.gru_init_stddev);
  return out.str();
}

template <typename V>
void write_tensor(std::ostream& out, std::string_view name, const Shape& shape,
                  std::span<const V> values) {
  out << "tensor " << name;
  for (std::size_t d : shape) out << ' ' << d;
  out << '\n';
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out << ' ';
    put_number(out, values[i]);
  }
  out << '\n';
}

/// Line-oriented reader that remembers the byte offset of every token.
class ManifestReader {
 public:
  explicit ManifestReader(std::string_view text) : text_(text) {}

  bool at_end() const { return pos_ >= text_.size(); }
  std::size_t offset() const { return pos_; }

  /// Next line without its terminator; throws at end of input.
  std::string_view line(const char* expecting) {
    if (at_end()) fail(std::string("unexpected end of file, expected ") + expecting);
    line_start_ = pos_;
    const auto nl = text_.find('\n', pos_);
    std::string_view out;
    if (nl == std::string_view::npos) {
      out = text_.substr(pos_);
      pos_ = text_.size();
      terminated_ = false;
    } else {
      out = text_.substr(pos_, nl - pos_);
      pos_ = nl + 1;
      terminated_ = true;
    }
    if (!out.empty() && out.back() == '\r') out.remove_suffix(1);
    return out;
  }

  bool last_line_terminated() const { return terminated_; }
  std::size_t line_start() const { return line_start_; }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_); }
  [[noreturn]] void fail_at(const std::string& what, std::size_t offset) const {
    throw ParseError(what, offset);
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_start_ = 0;
  bool terminated_ = true;
};

struct Token {
  std::string_view text;
  std::size_t offset;
};

std::vector<Token> tokens(std::string_view line, std::size_t base) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    if (i >= line.size()) break;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ') ++i;
    out.push_back({line.substr(start, i - start), base + start});
  }
  return out;
}

template <typename V>
V parse_token(const ManifestReader& r, const Token& tok, const char* what) {
  V value{};
  const auto [ptr, ec] = std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), value);
  if (ec != std::errc{} || ptr != tok.text.data() + tok.text.size()) {
    r.fail_at(std::string("invalid ") + what + " '" + std::string(tok.text) + "'", tok.offset);
  }
  return value;
}

void apply_arch_field(ArchConfig& a, std::string_view key, std::string_view value,
                      const ManifestReader& r, std::size_t offset) {
  auto size = [&](std::size_t& field) {
    field = parse_token<std::size_t>(r, {value, offset}, "architecture value");
  };
  auto real = [&](double& field) {
    field = parse_token<double>(r, {value, offset}, "architecture value");
  };
  try {
    if (key == "sequence_length") size(a.sequence_length);
    else if (key == "input_channels") size(a.input_channels);
    else if (key == "kernel_size") size(a.kernel_size);
    else if (key == "filters") size(a.filters);
    else if (key == "gru_units") size(a.gru_units);
    else if (key == "dense_units") size(a.dense_units);
    else if (key == "classes") size(a.classes);
    else if (key == "conv_activation") a.conv_activation = parse_activation(value);
    else if (key == "dense_activation") a.dense_activation = parse_activation(value);
    else if (key == "pooling") a.pooling = parse_pool_mode(value);
    else if (key == "bn_epsilon") real(a.bn_epsilon);
    else if (key == "bn_momentum") real(a.bn_momentum);
    else if (key == "gru_init_stddev") real(a.gru_init_stddev);
    else r.fail_at("unknown architecture key '" + std::string(key) + "'", offset);
  } catch (const ConfigError& e) {
    r.fail_at(e.what(), offset);
  }
}

}  // namespace

template <typename T>
void write_weights(std::ostream& out, const NetworkParameters<T>& params,
                   const std::optional<FittedFeatureSpec>& features) {
  out << kMagic << ' ' << kWeightFormatVersion << '\n';
  out << "precision " << to_string(precision_of<T>()) << '\n';
  out << arch_line(params.arch) << '\n';
  if (features) {
    out << "features ";
    const auto& names = features->spec().names();
    for (std::size_t i = 0; i < names.size(); ++i) out << (i ? "," : "") << names[i];
    out << '\n';
    write_tensor<double>(out, "feature.min", {kFeatureCount}, features->min());
    write_tensor<double>(out, "feature.max", {kFeatureCount}, features->max());
  }
  for (const auto& nt : named_tensors(params))
    write_tensor<T>(out, nt.name, nt.tensor->shape(), nt.tensor->values());
  out << "end\n";
}

template <typename T>
void save_weights(const std::filesystem::path& path, const NetworkParameters<T>& params,
                  const std::optional<FittedFeatureSpec>& features) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write weight file " + path.string());
  write_weights(out, params, features);
  if (!out) throw DataError("failed while writing weight file " + path.string());
}

template <typename T>
WeightFile<T> parse_weights(std::string_view text) {
  ManifestReader r(text);

  {
    const auto line = r.line("header");
    const auto toks = tokens(line, r.line_start());
    if (toks.size() != 2 || toks[0].text != kMagic) r.fail_at("not a weight manifest", 0);
    const int version = parse_token<int>(r, toks[1], "format version");
    if (version != kWeightFormatVersion) {
      r.fail_at("unsupported weight format version " + std::to_string(version) +
                    " (this build reads version " + std::to_string(kWeightFormatVersion) + ")",
                toks[1].offset);
    }
  }
  {
    const auto line = r.line("precision line");
    const auto toks = tokens(line, r.line_start());
    if (toks.size() != 2 || toks[0].text != "precision") r.fail_at("expected precision line", r.line_start());
    Precision stored = Precision::Double;
    try {
      stored = parse_precision(toks[1].text);
    } catch (const ConfigError& e) {
      r.fail_at(e.what(), toks[1].offset);
    }
    if (stored != precision_of<T>()) {
      r.fail_at("file holds " + std::string(to_string(stored)) + " precision weights, requested " +
                    std::string(to_string(precision_of<T>())),
                toks[1].offset);
    }
  }
  ArchConfig arch;
  {
    const auto line = r.line("arch line");
    const auto toks = tokens(line, r.line_start());
    if (toks.empty() || toks[0].text != "arch") r.fail_at("expected arch line", r.line_start());
    for (std::size_t i = 1; i < toks.size(); ++i) {
      const auto eq = toks[i].text.find('=');
      if (eq == std::string_view::npos) r.fail_at("expected key=value", toks[i].offset);
      apply_arch_field(arch, toks[i].text.substr(0, eq), toks[i].text.substr(eq + 1), r,
                       toks[i].offset + eq + 1);
    }
    try {
      arch.validate();
    } catch (const ConfigError& e) {
      r.fail_at(e.what(), r.line_start());
    }
  }

  struct Block {
    Shape shape;
    std::vector<Token> values;
    std::size_t offset;
  };
  std::map<std::string, Block, std::less<>> blocks;
  std::optional<std::vector<std::string>> feature_names;
  bool ended = false;

  while (!r.at_end()) {
    const auto line = r.line("tensor or end");
    const std::size_t start = r.line_start();
    if (line.empty()) continue;
    const auto toks = tokens(line, start);
    if (toks[0].text == "end") {
      ended = true;
      break;
    }
    if (toks[0].text == "features") {
      if (toks.size() != 2) r.fail_at("features line takes one comma-separated list", start);
      feature_names = split(toks[1].text, ',');
      continue;
    }
    if (toks[0].text != "tensor" || toks.size() < 3) {
      r.fail_at("expected 'tensor <name> <dims...>'", start);
    }
    Block block;
    block.offset = start;
    for (std::size_t i = 2; i < toks.size(); ++i) {
      block.shape.push_back(parse_token<std::size_t>(r, toks[i], "dimension"));
      if (block.shape.back() == 0) r.fail_at("zero dimension", toks[i].offset);
    }
    const auto values_line = r.line("tensor values");
    if (!r.last_line_terminated()) r.fail("truncated tensor values for " + std::string(toks[1].text));
    block.values = tokens(values_line, r.line_start());
    if (block.values.size() != shape_size(block.shape)) {
      r.fail_at("tensor " + std::string(toks[1].text) + " declares " +
                    std::to_string(shape_size(block.shape)) + " values but has " +
                    std::to_string(block.values.size()),
                r.line_start());
    }
    if (!blocks.emplace(std::string(toks[1].text), std::move(block)).second) {
      r.fail_at("duplicate tensor " + std::string(toks[1].text), start);
    }
  }
  if (!ended) r.fail("missing 'end' line (file truncated?)");

  WeightFile<T> file{NetworkParameters<T>::zeros(arch), std::nullopt};
  for (auto& nt : named_tensors(file.params)) {
    const auto it = blocks.find(nt.name);
    if (it == blocks.end()) r.fail("weight file has no tensor '" + nt.name + "'");
    const Block& b = it->second;
    if (b.shape != nt.tensor->shape()) {
      r.fail_at("tensor " + nt.name + " has shape " + shape_string(b.shape) +
                    " but the architecture needs " + shape_string(nt.tensor->shape()),
                b.offset);
    }
    for (std::size_t i = 0; i < b.values.size(); ++i)
      (*nt.tensor)[i] = parse_token<T>(r, b.values[i], "number");
    blocks.erase(it);
  }

  if (feature_names) {
    std::array<double, kFeatureCount> lo{}, hi{};
    for (auto [name, dest] : {std::pair{"feature.min", &lo}, std::pair{"feature.max", &hi}}) {
      const auto it = blocks.find(name);
      if (it == blocks.end()) r.fail(std::string("features listed but tensor ") + name + " missing");
      if (it->second.shape != Shape{kFeatureCount}) {
        r.fail_at(std::string(name) + " must hold " + std::to_string(kFeatureCount) + " values",
                  it->second.offset);
      }
      for (std::size_t i = 0; i < kFeatureCount; ++i)
        (*dest)[i] = parse_token<double>(r, it->second.values[i], "number");
      blocks.erase(it);
    }
    try {
      file.features = FittedFeatureSpec(FeatureSpec(*feature_names), lo, hi);
    } catch (const Error& e) {
      r.fail(e.what());
    }
  }
  if (!blocks.empty()) {
    r.fail_at("unknown tensor '" + blocks.begin()->first + "' for this architecture",
              blocks.begin()->second.offset);
  }
  return file;
}

template <typename T>
WeightFile<T> load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open weight file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_weights<T>(text.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.offset());
  }
}

Precision peek_precision(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open weight file " + path.string());
  std::string header, line;
  std::getline(in, header);
  if (header.rfind(kMagic, 0) != 0) throw ParseError(path.string() + ": not a weight manifest", 0);
  const std::size_t offset = header.size() + 1;
  if (!std::getline(in, line) || line.rfind("precision ", 0) != 0) {
    throw ParseError(path.string() + ": expected precision line", offset);
  }
  return parse_precision(trim(line.substr(10)));
}

#define ECONET_INSTANTIATE_WEIGHTS(T)                                                    \
  template void write_weights(std::ostream&, const NetworkParameters<T>&,                \
                              const std::optional<FittedFeatureSpec>&);                  \
  template void save_weights(const std::filesystem::path&, const NetworkParameters<T>&,  \
                             const std::optional<FittedFeatureSpec>&);                   \
  template WeightFile<T> parse_weights(std::string_view);                                \
  template WeightFile<T> load_weights(const std::filesystem::path&);

ECONET_INSTANTIATE_WEIGHTS(float)
ECONET_INSTANTIATE_WEIGHTS(double)

}  // namespace econet
