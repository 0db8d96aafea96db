#pragma once

#include <Eigen/Dense>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "htb/core.hpp"

namespace htb {

/// Parameters of the truncated empirical mean. `u` bounds E|X|^(1+epsilon)
/// of the samples being averaged; `delta` is the failure probability.
struct TruncationConfig {
  double u = 1.0;
  double epsilon = 1.0;
  double delta = 0.05;

  void validate() const;
  /// (u n / ln(1/delta))^(1/(1+epsilon)).
  [[nodiscard]] double threshold(std::size_t n) const;
};

enum class MeanEstimator { truncated_mean, median_of_means };

[[nodiscard]] std::string to_string(MeanEstimator e);
[[nodiscard]] MeanEstimator parse_estimator(const std::string& name);

/// (1/n) sum X_i 1{|X_i| <= threshold(n)}.
[[nodiscard]] double truncated_mean(std::span<const double> samples, const TruncationConfig& cfg);

/// Median of k = ceil(8 ln(1/delta)) contiguous block means, k clipped to [1, n].
/// Blocks differ in size by at most one, larger blocks first.
[[nodiscard]] double median_of_means(std::span<const double> samples, double delta);

/// a' inv x_s y_s for each draw; `draws` holds one x_s per row.
[[nodiscard]] std::vector<double> ips_samples(const Eigen::VectorXd& a, const Eigen::MatrixXd& inv_matrix,
                                              const Eigen::MatrixXd& draws, std::span<const double> rewards);

/// Per-arm scalar estimates W^(a), keyed by label.
struct ArmEstimates {
  std::map<Label, double> values;

  [[nodiscard]] double at(Label label) const;
};

struct FitResult {
  Eigen::VectorXd theta;
  double objective = 0.0;  // max_a |theta'a - W^(a)|
  std::size_t lp_iterations = 0;
};

/// argmin_theta max_i |g_i' theta - w_i| over the rows g_i of `features`,
/// the minimum-norm point of the optimal face (tolerance 1e-9).
[[nodiscard]] FitResult min_distance_fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& w);

/// Same fit with one row per arm of `arms`.
[[nodiscard]] FitResult min_distance_fit(const ActionSet& arms, const ArmEstimates& estimates);

}  // namespace htb
