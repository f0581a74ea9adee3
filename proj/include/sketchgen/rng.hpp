#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace sketchgen {

/// Deterministic scalar random source used for every random draw in the
/// library. The raw stream is std::mt19937_64 (fully specified by the C++
/// standard); the uniform and normal transforms below are pinned here so
/// that fixtures can be regenerated bit-exactly from a seed, in any
/// language that provides the same engine:
///
///   uniform(): (next_u64() >> 11) * 2^-53, in [0, 1)
///   normal():  Box-Muller cosine branch, sqrt(-2 ln(1-u1)) * cos(2 pi u2),
///              consuming exactly two uniforms per call (no spare caching)
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Standard normal deviate. 1 - u1 is in (0, 1], so the log is finite.
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(1.0 - u1));
    return radius * std::cos(2.0 * pi() * u2);
  }

  /// Uniform integer in [0, bound). Modulo bias is below 2^-53 for the
  /// bounds used here (shuffles over at most a few million elements).
  std::uint64_t below(std::uint64_t bound) { return engine_() % bound; }

  static constexpr double pi() { return 3.141592653589793238462643383279502884; }

 private:
  std::mt19937_64 engine_;
};

/// splitmix64 finalizer; decorrelates derived seeds.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// FNV-1a over a byte buffer, used to fingerprint frequency matrices.
inline std::uint64_t fnv1a64(const unsigned char* data, std::size_t size,
                             std::uint64_t state = 0xcbf29ce484222325ULL) {
  for (std::size_t i = 0; i < size; ++i) {
    state ^= data[i];
    state *= 0x100000001b3ULL;
  }
  return state;
}

}  // namespace sketchgen
