#pragma once

#include <cstdint>
#include <string_view>

namespace econet {

/// SplitMix64 generator (Steele, Lea & Flood 2014), 64 bits of state.
///
/// Draws are bit-exact across platforms: uniform() takes the top 53 bits of
/// each output, normal() uses Box-Muller and caches the second variate.
/// Not thread-safe; give each thread its own instance via fork().
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() noexcept;

  /// Uniform on [0, 1).
  double uniform() noexcept;

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept;

  /// Standard normal variate.
  double normal() noexcept;

  /// Independent stream keyed by name. The child depends only on this
  /// generator's seed and the name, not on how many draws were made, so
  /// adding a layer never perturbs another layer's initialization.
  SeededRng fork(std::string_view name) const noexcept;

  /// Independent stream keyed by an integer (e.g. epoch index).
  SeededRng fork(std::uint64_t index) const noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// FNV-1a 64-bit hash.
std::uint64_t fnv1a64(std::string_view text) noexcept;

}  // namespace econet
