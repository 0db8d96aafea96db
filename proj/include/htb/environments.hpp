#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "htb/core.hpp"
#include "htb/noise.hpp"

namespace htb {

/// Finite-support reward law of one action.
struct RewardLaw {
  std::vector<double> values;
  std::vector<double> probabilities;

  [[nodiscard]] double mean() const;
  /// E|y - E y|^(1+epsilon) by exact summation.
  [[nodiscard]] double central_moment(double epsilon) const;
  /// E|y|^(1+epsilon).
  [[nodiscard]] double raw_moment(double epsilon) const;
};

enum class HardFlavor { hypercube_pair, grouped_finite, unit_ball };

[[nodiscard]] std::string to_string(HardFlavor flavor);

/// Reward environments from the lower-bound constructions: every action has a
/// two- or three-point law with mean theta'x.
class BernoulliRewardInstance final : public Environment {
 public:
  BernoulliRewardInstance(HardFlavor flavor, Eigen::VectorXd theta, ActionSet actions, double epsilon, double delta,
                          double gamma_scale);

  [[nodiscard]] const ActionSet& actions() const override { return actions_; }
  [[nodiscard]] double mean_reward(std::size_t index) const override { return means_[index]; }
  double sample_reward(std::size_t index, Rng& rng) const override;

  [[nodiscard]] const RewardLaw& law(std::size_t index) const { return laws_.at(index); }
  [[nodiscard]] HardFlavor flavor() const noexcept { return flavor_; }
  [[nodiscard]] const Eigen::VectorXd& theta() const noexcept { return theta_; }
  [[nodiscard]] double epsilon() const noexcept { return epsilon_; }
  [[nodiscard]] double delta() const noexcept { return delta_; }
  [[nodiscard]] double gamma_scale() const noexcept { return gamma_; }

  /// Largest central (1+epsilon)-moment over the actions.
  [[nodiscard]] double max_central_moment() const;
  [[nodiscard]] double max_raw_moment() const;

 private:
  HardFlavor flavor_;
  Eigen::VectorXd theta_;
  ActionSet actions_;
  double epsilon_;
  double delta_;
  double gamma_;
  std::vector<RewardLaw> laws_;
  std::vector<double> means_;
};

/// Horizon below which the hypercube construction is not defined: 4^((1+eps)/eps) d^2.
[[nodiscard]] double hypercube_min_horizon(std::size_t d, double epsilon);

/// Gap parameter 1/2 d^((eps-1)/(1+eps)) T^(-eps/(1+eps)).
[[nodiscard]] double hypercube_delta(std::size_t d, std::uint64_t T, double epsilon);

/// Actions {x in {0,1}^(2d): x_(2i-1) + x_(2i) = 1}; bit i of theta_index puts
/// 2 Delta on coordinate 2i (else on 2i-1). Requires Delta <= 1/(4d).
[[nodiscard]] BernoulliRewardInstance hypercube_pair_instance_with_delta(std::size_t d, double delta,
                                                                         std::uint64_t theta_index, double epsilon);

/// As above with Delta from `hypercube_delta`; rejects T below `hypercube_min_horizon`.
[[nodiscard]] BernoulliRewardInstance hypercube_pair_instance(std::size_t d, std::uint64_t T,
                                                              std::uint64_t theta_index, double epsilon);

/// Smallest integer m >= 4 with m / log2 m >= d / log2 n.
[[nodiscard]] std::size_t grouped_block_size(std::size_t d, std::size_t n);

/// d/m blocks of size m (trailing d mod m coordinates are zero padding);
/// each action has a single 1 per block. Block i of theta carries 2 Delta at
/// offset (theta_index / m^i) mod m and Delta elsewhere.
[[nodiscard]] BernoulliRewardInstance grouped_finite_instance(std::size_t d, std::size_t n, std::uint64_t T,
                                                              std::uint64_t theta_index, double epsilon);

/// 24^(-1/(1+eps)) d^((3 eps - 1)/(2(1+eps))) (288 T)^(-eps/(1+eps)).
[[nodiscard]] double unit_ball_delta(std::size_t d, std::uint64_t T, double epsilon);

/// theta = Delta * signs. Actions: `sphere_points` random unit vectors, the
/// signed coordinate directions, and +-signs/sqrt(d).
[[nodiscard]] BernoulliRewardInstance unit_ball_instance(std::size_t d, std::uint64_t T,
                                                         const std::vector<int>& theta_signs, double epsilon,
                                                         std::size_t sphere_points = 64, std::uint64_t seed = 0);

struct SimplexBasis {};
struct SignedBasis {};
struct LpBallGrid {
  double p = 2.0;
  double r = 1.0;
  std::size_t points_per_axis = 5;
};
struct SphereRandom {
  std::size_t count = 100;
};
struct HypercubeRandom {
  std::size_t count = 100;
};
struct ExplicitActions {
  Eigen::MatrixXd rows;
};

using ActionSetKind = std::variant<SimplexBasis, SignedBasis, LpBallGrid, SphereRandom, HypercubeRandom, ExplicitActions>;

/// Deterministic given `seed`. SignedBasis yields {e1, -e1, e2, -e2, ...}.
/// LpBallGrid keeps the grid points of [-r, r]^d inside the lp ball of radius r.
/// HypercubeRandom draws uniform points of [0,1]^d scaled by 1/sqrt(d).
[[nodiscard]] ActionSet make_action_set(const ActionSetKind& kind, std::size_t d, std::uint64_t seed = 0);

}  // namespace htb
