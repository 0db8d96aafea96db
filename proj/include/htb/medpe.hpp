#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "htb/core.hpp"
#include "htb/design.hpp"
#include "htb/estimators.hpp"

namespace htb {

struct MedPeConfig {
  MomentParams moment;
  std::uint64_t T = 1;
  std::optional<double> gamma;  // default T^(-2 eps / (1 + eps))
  std::optional<double> beta;   // default 1
  MeanEstimator estimator = MeanEstimator::truncated_mean;
  double design_tol = 0.05;
  std::size_t design_iters = 0;  // 0: default_design_iters(d)
  bool refine_design = true;
  std::size_t refine_iters = 200;
  /// Multiplier on every phase budget. 1 runs the algorithm as stated.
  double budget_scale = 1.0;
  std::uint64_t checkpoint_stride = 1;

  void validate() const;
  [[nodiscard]] double resolved_gamma() const;
  [[nodiscard]] double resolved_beta() const;

  /// beta = d^((eps - 1)/2), gamma = 1/T.
  [[nodiscard]] static MedPeConfig simplex_preset(const MomentParams& moment, std::uint64_t T, std::size_t d);
};

/// Unrounded phase budget, before saturation.
[[nodiscard]] double phase_budget_real(const MedPeConfig& cfg, double eps_ell, double m_value, int ell,
                                       std::size_t n_active);

/// ceil of `phase_budget_real`, at least 1. Values beyond 2^53 (or non-finite)
/// saturate at T.
[[nodiscard]] std::uint64_t phase_budget(const MedPeConfig& cfg, double eps_ell, double m_value, int ell,
                                         std::size_t n_active);

/// Arms with theta_hat'a >= max_a' theta_hat'a' - 4 eps_ell, in their original order.
[[nodiscard]] ActionSet eliminate(const ActionSet& active, const Eigen::VectorXd& theta_hat, double eps_ell);

/// Positions i with values[i] >= max(values) - 4 eps_ell.
[[nodiscard]] std::vector<std::size_t> surviving_positions(const Eigen::VectorXd& values, double eps_ell);

/// How the loop sees the arms: quadratic forms for the design and the
/// inverse-propensity samples, and feature rows for the minimax fit.
class PhaseGeometry {
 public:
  virtual ~PhaseGeometry() = default;
  /// Positions refer to the environment's action set.
  [[nodiscard]] virtual std::unique_ptr<QuadraticFormOracle> oracle(std::span<const std::size_t> active) const = 0;
  [[nodiscard]] virtual Eigen::MatrixXd fit_features(std::span<const std::size_t> active) const = 0;
  [[nodiscard]] virtual std::size_t dimension() const = 0;
};

class LinearGeometry final : public PhaseGeometry {
 public:
  explicit LinearGeometry(const ActionSet& arms) : arms_(arms) {}
  [[nodiscard]] std::unique_ptr<QuadraticFormOracle> oracle(std::span<const std::size_t> active) const override;
  [[nodiscard]] Eigen::MatrixXd fit_features(std::span<const std::size_t> active) const override;
  [[nodiscard]] std::size_t dimension() const override { return arms_.dim(); }

 private:
  const ActionSet& arms_;
};

struct PhaseState {
  int ell = 0;
  std::vector<std::size_t> active;  // positions in the environment's action set
  double eps_ell = 0.0;
  std::uint64_t tau_ell = 0;
  Eigen::VectorXd design;           // weights over `active`
  std::uint64_t t_used = 0;         // rounds consumed before this phase
  double design_value = 0.0;
  Eigen::VectorXd estimates;        // W^(a) over `active`
  Eigen::VectorXd fitted;           // fitted values over `active`
  std::vector<std::size_t> survivors;
};

using PhaseObserver = std::function<void(const PhaseState&)>;

/// Algorithm loop shared by the explicit and kernel variants.
[[nodiscard]] RunRecord run_phased_elimination(const Environment& env, const PhaseGeometry& geometry,
                                               const MedPeConfig& cfg, std::uint64_t seed,
                                               const std::string& algorithm = "medpe",
                                               const PhaseObserver& observer = {});

[[nodiscard]] RunRecord run_medpe(const Environment& env, const MedPeConfig& cfg, std::uint64_t seed,
                                  const PhaseObserver& observer = {});

}  // namespace htb
