#pragma once

#include <cstdint>
#include <cmath>

namespace capcal {

/// Deterministic 64-bit generator with published constants (SplitMix64,
/// Steele/Lea/Flood 2014), embedded so that seeded synthetic series are
/// bit-reproducible across platforms and languages.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in (0, 1), 53-bit mantissa.
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via the Marsaglia polar method. Stream consumption
  /// order: draw u then v, both uniform in (-1, 1); reject the pair when
  /// s = u^2 + v^2 >= 1 or s == 0; on acceptance return u*sqrt(-2 ln s / s)
  /// first and cache the v-variate for the next call.
  double next_gaussian() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    while (true) {
      const double u = 2.0 * next_uniform() - 1.0;
      const double v = 2.0 * next_uniform() - 1.0;
      const double s = u * u + v * v;
      if (s >= 1.0 || s == 0.0) continue;
      const double factor = std::sqrt(-2.0 * std::log(s) / s);
      cached_ = v * factor;
      has_cached_ = true;
      return u * factor;
    }
  }

 private:
  std::uint64_t state_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace capcal
