#pragma once

#include <cstdint>

#include "htb/core.hpp"

namespace htb {

/// Truncated-reward ridge UCB ("crtm-style-ucb").
struct UcbConfig {
  MomentParams moment;
  double regularizer = 1.0;  // V_0 = regularizer * I
  double width = 1.0;        // c in the exploration width
  std::uint64_t checkpoint_stride = 1;

  void validate() const;
};

/// Truncation level (upsilon t / max(ln t, 1))^(1/(1+eps)) at round t.
[[nodiscard]] double ucb_truncation_level(const MomentParams& moment, std::uint64_t t);

/// c t^((1-eps)/(2(1+eps))) sqrt(d max(ln t, 1)).
[[nodiscard]] double ucb_width(const UcbConfig& cfg, std::size_t d, std::uint64_t t);

/// Each arm is pulled once in order, then the arm maximizing
/// theta_hat'a + width_t ||a||_{V^{-1}} (ties to the first position). Rewards
/// enter the ridge estimate once |y| is below the current truncation level.
[[nodiscard]] RunRecord run_truncated_ucb(const Environment& env, const UcbConfig& cfg, std::uint64_t T,
                                          std::uint64_t seed);

}  // namespace htb
