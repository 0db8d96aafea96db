#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace htb {

/// SplitMix64 finalizer.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Counter-based generator: the i-th output is mix64(seed + i * golden_gamma).
///
/// Draws are produced with explicit bit manipulation rather than the
/// <random> distributions so that sequences are identical across standard
/// library implementations.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return next_u64(); }

  std::uint64_t next_u64() noexcept {
    state_ += kGamma;
    return mix64(state_);
  }

  /// Uniform on [0, 1).
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1).
  double uniform_open() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; one pair of uniforms per draw.
  double normal() noexcept;

  [[nodiscard]] std::uint64_t counter_state() const noexcept { return state_; }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
  std::uint64_t state_;
};

/// Combines a master seed with a stream identifier.
[[nodiscard]] constexpr std::uint64_t split_seed(std::uint64_t master, std::uint64_t stream) noexcept {
  return mix64(mix64(master) ^ (stream + 0x9E3779B97F4A7C15ULL + (master << 6) + (master >> 2)));
}

/// Seed for repetition `rep` of `algorithm` at dimension `d`.
[[nodiscard]] std::uint64_t derive_run_seed(std::uint64_t master, std::string_view algorithm,
                                            std::uint64_t d, std::uint64_t rep) noexcept;

}  // namespace htb
