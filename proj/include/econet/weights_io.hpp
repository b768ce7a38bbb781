#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "econet/dataio.hpp"
#include "econet/network.hpp"

namespace econet {

/// Weight manifest, version 1. Plain text, one item per line:
///
///   econet-weights 1
///   precision double|single
///   arch key=value ...            (ArchConfig fields)
///   features name,name,...        (optional, with feature.min / feature.max tensors)
///   tensor <name> <dim> [<dim>...]
///   <values, space separated, row-major, shortest round-trip decimal>
///   ...
///   end
///
/// Tensors are looked up by name on load, so their order in the file does
/// not matter; every tensor of the architecture must be present with its
/// exact shape.
inline constexpr int kWeightFormatVersion = 1;

enum class Precision { Single, Double };

std::string_view to_string(Precision p) noexcept;
Precision parse_precision(std::string_view text);

template <typename T>
constexpr Precision precision_of() {
  return sizeof(T) == sizeof(float) ? Precision::Single : Precision::Double;
}

template <typename T>
struct WeightFile {
  NetworkParameters<T> params;
  std::optional<FittedFeatureSpec> features;
};

template <typename T>
void write_weights(std::ostream& out, const NetworkParameters<T>& params,
                   const std::optional<FittedFeatureSpec>& features = std::nullopt);

template <typename T>
void save_weights(const std::filesystem::path& path, const NetworkParameters<T>& params,
                  const std::optional<FittedFeatureSpec>& features = std::nullopt);

/// Parses a manifest. Errors carry the byte offset where parsing failed.
template <typename T>
WeightFile<T> parse_weights(std::string_view text);

template <typename T>
WeightFile<T> load_weights(const std::filesystem::path& path);

/// Reads only the precision line, so callers can pick the matching type.
Precision peek_precision(const std::filesystem::path& path);

}  // namespace econet
