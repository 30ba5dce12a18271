#pragma once

#include <cstdint>

namespace earwatch {

/// SplitMix64 (Steele, Lea & Flood 2014): state advances by the golden-ratio
/// increment, output is a two-round xor-multiply mix. Used instead of the
/// standard-library distributions because the whole algorithm is pinned here,
/// so a seeded trace is bit-identical on every platform and toolchain.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53-bit resolution.
  double uniform01() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  /// Zero-mean unit-variance deviate via the Irwin-Hall sum of 12 uniforms.
  /// Support is [-6, 6]. Only IEEE additions, so the stream stays
  /// bit-identical across platforms; Box-Muller would route through libm
  /// transcendentals whose last bit varies between implementations.
  double normal01() {
    double sum = 0.0;
    for (int i = 0; i < 12; ++i) {
      sum += uniform01();
    }
    return sum - 6.0;
  }

  bool bernoulli(double p) { return uniform01() < p; }

 private:
  std::uint64_t state_;
};

}  // namespace earwatch
