#pragma once

#include <cstdint>

namespace carm {

/// SplitMix64 output function.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Per-pixel random stream. The starting state is a hash of the pixel's
/// (seed, view, row, column) key, then SplitMix64 advances it.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t view, std::uint64_t row, std::uint64_t col) noexcept;

  std::uint64_t next_u64() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

/// Poisson variate. Means below 10 use CDF inversion; larger means use
/// Hormann's transformed rejection with squeeze (PTRS). Both consume the
/// stream deterministically, so a seed reproduces the same counts.
std::uint64_t sample_poisson(double mean, CounterRng& rng);

}  // namespace carm
