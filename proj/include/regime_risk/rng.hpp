#pragma once

#include <cstdint>
#include <limits>

namespace regime_risk {

// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based random stream (SplitMix64). The full state is a single
/// counter, so a stream keyed by (seed, path index) costs nothing to create
/// and Monte-Carlo results do not depend on how paths are spread over
/// workers. Satisfies UniformRandomBitGenerator, so it plugs into the
/// <random> distributions.
class Stream {
public:
  using result_type = std::uint64_t;

  explicit constexpr Stream(std::uint64_t seed) noexcept : state_(mix64(seed)) {}

  /// Stream for sub-key `key` of `seed`; distinct keys give unrelated streams.
  static constexpr Stream derive(std::uint64_t seed, std::uint64_t key) noexcept {
    return Stream(mix64(seed ^ mix64(key + 0x632be59bd9b4e019ULL)));
  }

  static constexpr Stream derive(std::uint64_t seed, std::uint64_t key1,
                                 std::uint64_t key2) noexcept {
    return derive(mix64(seed ^ mix64(key1 + 0x9e3779b97f4a7c15ULL)), key2);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

private:
  std::uint64_t state_;
};

}  // namespace regime_risk
