#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace samid {

/// SplitMix64 finalizer. Used to derive independent sub-seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// derive_seed(m, a, b) = splitmix64(splitmix64(splitmix64(m) ^ a) ^ b).
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                    std::uint64_t b = 0) noexcept {
  return splitmix64(splitmix64(splitmix64(master) ^ a) ^ b);
}

/// Reproducible random source.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Uniforms take the top 53 bits of one engine output; Gaussian
/// variates use the Box-Muller transform, consuming two uniforms per pair and
/// returning the cosine branch first. Nothing here depends on the
/// implementation-defined std distributions, so streams are identical across
/// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Standard normal variate.
  double normal();

  /// Uniform integer on [0, n). n must be positive.
  std::size_t below(std::size_t n);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace samid
