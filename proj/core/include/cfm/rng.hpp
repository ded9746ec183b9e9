#pragma once

#include <cstdint>

namespace cfm {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

/// Derives an independent stream key from a parent key and a stream id.
/// key' = mix64(key ^ mix64(id + gamma)).
constexpr std::uint64_t derive_key(std::uint64_t key, std::uint64_t id) noexcept {
  return mix64(key ^ mix64(id + kGoldenGamma));
}

/// Counter-based 64-bit generator.
///
/// Output k of the stream with key s is mix64(s + (k + 1) * 0x9E3779B97F4A7C15),
/// i.e. SplitMix64 evaluated at an explicit counter. Any draw can be computed
/// without generating its predecessors, so per-index substreams are
/// independent of evaluation order. Test vectors live in tests/test_rng.cpp
/// and docs/formats.md.
class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t key, std::uint64_t counter = 0) noexcept
      : key_(key), counter_(counter) {}

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t counter() const noexcept { return counter_; }

  static constexpr std::uint64_t at(std::uint64_t key, std::uint64_t counter) noexcept {
    return mix64(key + (counter + 1) * kGoldenGamma);
  }

  constexpr std::uint64_t next_u64() noexcept { return at(key_, counter_++); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) noexcept;
  /// Uniform integer in [0, bound) by Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t bound) noexcept;
  /// Standard normal via Box-Muller (consumes two draws).
  double normal() noexcept;
  /// Poisson variate. Inversion for mean < 10, Hormann's PTRS otherwise.
  std::uint64_t poisson(double mean) noexcept;

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace cfm
