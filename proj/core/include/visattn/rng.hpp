#pragma once

#include <cstdint>

namespace visattn {

/// SplitMix64 (Steele, Lea & Flood). Constants:
///   increment  0x9E3779B97F4A7C15
///   mix1       0xBF58476D1CE4E5B9  (shift 30)
///   mix2       0x94D049BB133111EB  (shift 27, final shift 31)
/// Output is integer-only, so every platform produces the same stream.
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  constexpr std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) from the top 53 bits.
  constexpr double uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [-a, a).
  constexpr double symmetric(double a) noexcept { return (2.0 * uniform() - 1.0) * a; }

  /// Uniform integer in [0, n). n must be > 0.
  constexpr std::uint64_t below(std::uint64_t n) noexcept { return next() % n; }

 private:
  std::uint64_t state_;
};

/// Derives an independent stream seed from a parent seed and a tag.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
  SplitMix64 g(seed ^ (tag * 0xD1B54A32D192ED03ULL));
  return g.next();
}

}  // namespace visattn
