#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "econet/dataio.hpp"

namespace econet {

/// Seeded six-class sequence set for desk-scale runs. Every class has its own
/// shape over the 16 steps (flat low, flat high, rising, falling, square wave,
/// one spike at a random step); each sample adds a random level offset and
/// per-step Gaussian noise, then clamps to [0, 1]. Classes are balanced and
/// interleaved.
struct SyntheticConfig {
  std::size_t count = 12000;
  double noise = 0.15;
  double offset = 0.10;
  std::uint64_t seed = 7;
};

std::vector<FlowRecord> make_synthetic(const SyntheticConfig& config = {});

/// Writes records as CSV with the default feature header and
/// category/subcategory columns that the default label map decodes.
/// Unlabeled records get no label columns when `with_labels` is false.
void write_csv(const std::filesystem::path& path, std::span<const FlowRecord> records,
               bool with_labels = true);

}  // namespace econet
