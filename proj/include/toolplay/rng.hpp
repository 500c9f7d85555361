#pragma once

#include <cstdint>

namespace toolplay {

/// SplitMix64 finalizer.
inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Small deterministic generator. Streams are derived from a master seed and
/// a counter, so draw `i` of a batch never depends on how many draws came
/// before it or on the batch size.
///
/// Distribution helpers are written out by hand: std:: distributions are
/// implementation-defined and would break cross-platform reproducibility.
class Rng {
 public:
  explicit constexpr Rng(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr Rng stream(std::uint64_t master, std::uint64_t index) noexcept {
    return Rng(mix64(master ^ mix64(index + 0x632be59bd9b4e019ULL)));
  }

  constexpr Rng split(std::uint64_t index) const noexcept { return stream(state_, index); }

  constexpr std::uint64_t next() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53 bits of resolution.
  constexpr double uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [lo, hi], inclusive. Rejection sampling, no modulo bias.
  constexpr std::uint64_t between(std::uint64_t lo, std::uint64_t hi) noexcept {
    const std::uint64_t span = hi - lo + 1;
    if (span == 0) return next();  // full 64-bit range
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % span);
    std::uint64_t v = next();
    while (v >= limit) v = next();
    return lo + v % span;
  }

  constexpr bool bernoulli(double p) noexcept { return uniform() < p; }

 private:
  std::uint64_t state_;
};

}  // namespace toolplay
