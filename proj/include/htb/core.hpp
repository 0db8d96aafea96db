#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "htb/noise.hpp"
#include "htb/rng.hpp"

namespace htb {

using Label = std::int64_t;

/// Finite set of actions in R^d. Row i of `vectors()` carries label `labels()[i]`.
/// Immutable; subsets keep the labels of the parent.
class ActionSet {
 public:
  ActionSet(Eigen::MatrixXd vectors, std::vector<Label> labels, double radius = 1.0);

  /// Labels 0..n-1 in row order.
  explicit ActionSet(Eigen::MatrixXd vectors, double radius = 1.0);

  [[nodiscard]] std::size_t size() const noexcept { return labels_.size(); }
  [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(vectors_.cols()); }
  [[nodiscard]] double radius() const noexcept { return radius_; }

  [[nodiscard]] const Eigen::MatrixXd& vectors() const noexcept { return vectors_; }
  [[nodiscard]] const std::vector<Label>& labels() const noexcept { return labels_; }
  [[nodiscard]] Eigen::VectorXd vector(std::size_t index) const { return vectors_.row(static_cast<Eigen::Index>(index)).transpose(); }
  [[nodiscard]] Label label(std::size_t index) const { return labels_.at(index); }

  [[nodiscard]] bool contains(Label label) const { return index_.contains(label); }
  /// Throws DomainError for unknown labels.
  [[nodiscard]] std::size_t index_of(Label label) const;

  /// Rows at the given positions, in the given order.
  [[nodiscard]] ActionSet subset(std::span<const std::size_t> indices) const;
  [[nodiscard]] ActionSet subset_by_labels(std::span<const Label> labels) const;

 private:
  Eigen::MatrixXd vectors_;
  std::vector<Label> labels_;
  double radius_;
  std::unordered_map<Label, std::size_t> index_;
};

/// (epsilon, upsilon, b): tail exponent, (1+epsilon)-moment bound of the noise,
/// and norm bound on the unknown parameter.
struct MomentParams {
  double epsilon = 1.0;
  double upsilon = 1.0;
  double b = 1.0;

  void validate() const;
};

/// Reward oracle over a finite action set.
class Environment {
 public:
  virtual ~Environment() = default;
  [[nodiscard]] virtual const ActionSet& actions() const = 0;
  [[nodiscard]] virtual double mean_reward(std::size_t index) const = 0;
  virtual double sample_reward(std::size_t index, Rng& rng) const = 0;

  /// Largest mean and its index; ties go to the smallest label.
  [[nodiscard]] std::pair<std::size_t, double> best() const;
};

/// y = <a, theta*> + eta.
class LinearInstance final : public Environment {
 public:
  /// Checks max_a |<a, theta*>| <= 1 and ||theta*||_2 <= b.
  LinearInstance(Eigen::VectorXd theta_star, ActionSet actions, NoiseSpec noise, double b = 1.0);

  [[nodiscard]] const ActionSet& actions() const override { return actions_; }
  [[nodiscard]] double mean_reward(std::size_t index) const override { return means_[index]; }
  double sample_reward(std::size_t index, Rng& rng) const override;

  [[nodiscard]] const Eigen::VectorXd& theta_star() const noexcept { return theta_; }
  [[nodiscard]] const NoiseSpec& noise() const noexcept { return noise_; }

 private:
  Eigen::VectorXd theta_;
  ActionSet actions_;
  NoiseSpec noise_;
  std::vector<double> means_;
};

struct BestAction {
  Label label;
  double value;
};

/// Maximizer of <a, theta*>; ties broken by smallest label.
[[nodiscard]] BestAction best_action(const LinearInstance& instance);

/// Sum over the sequence of (best value - <a_t, theta*>).
[[nodiscard]] double pseudo_regret(const LinearInstance& instance, std::span<const Label> action_labels);

struct RoundEntry {
  std::uint64_t t = 0;
  int phase = 0;
  Label action = 0;
  double reward = 0.0;
  double gap = 0.0;
  double cumulative_regret = 0.0;
};

struct PhaseSummary {
  int ell = 0;
  std::size_t active_before = 0;
  std::size_t active_after = 0;
  double accuracy = 0.0;       // 2^-ell
  std::uint64_t budget = 0;    // tau_ell from the budget formula
  std::uint64_t rounds = 0;    // rounds actually drawn (truncated at the horizon)
  double design_value = 0.0;   // M_{1+eps} at the phase design
};

/// Trajectory of one run. `rounds` holds checkpoint entries (every
/// `checkpoint_stride` rounds plus the final round); pull counts and the
/// cumulative regret cover every round.
struct RunRecord {
  std::string algorithm;
  std::uint64_t seed = 0;
  std::uint64_t horizon = 0;
  std::uint64_t checkpoint_stride = 1;
  std::vector<RoundEntry> rounds;
  std::vector<PhaseSummary> phases;
  std::map<Label, std::uint64_t> pulls;
  std::vector<Label> final_active;
  double cumulative_regret = 0.0;
  std::uint64_t rounds_played = 0;
};

/// Appends rounds to a RunRecord and keeps the regret running sum.
class RegretTracker {
 public:
  RegretTracker(const Environment& env, RunRecord& record);

  /// Returns the observed reward after logging the pull of action `index`.
  double pull(std::size_t index, int phase, Rng& rng);

  [[nodiscard]] std::uint64_t t() const noexcept { return record_.rounds_played; }
  [[nodiscard]] double best_value() const noexcept { return best_value_; }

 private:
  const Environment& env_;
  RunRecord& record_;
  double best_value_;
};

}  // namespace htb
