#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace lccr {

/// Seedable random source built on std::mt19937_64. The distribution
/// transforms are implemented here instead of using <random> distributions,
/// whose output is implementation-defined; this keeps streams bit-identical
/// across standard libraries and platforms.
class SeededRng {
public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform double in [0, 1), 53-bit resolution.
  double uniform();

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller.
  double normal();

  /// Unbiased uniform integer in [0, bound); bound must be >= 1.
  std::uint64_t uniform_index(std::uint64_t bound);

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(values[i - 1], values[j]);
    }
  }

private:
  std::mt19937_64 engine_;
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

/// Per-item stream derivation: seed xor item index.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return base ^ index;
}

}  // namespace lccr
