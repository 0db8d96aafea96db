#include "htb/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "htb/errors.hpp"
#include "htb/linprog.hpp"

namespace htb {

void TruncationConfig::validate() const {
  if (!(u > 0.0) || !std::isfinite(u)) throw DomainError("truncation: u must be finite and positive");
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw DomainError("truncation: epsilon must lie in (0, 1]");
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("truncation: delta must lie in (0, 1)");
}

double TruncationConfig::threshold(std::size_t n) const {
  return std::pow(u * static_cast<double>(n) / std::log(1.0 / delta), 1.0 / (1.0 + epsilon));
}

std::string to_string(MeanEstimator e) {
  return e == MeanEstimator::truncated_mean ? "truncated_mean" : "median_of_means";
}

MeanEstimator parse_estimator(const std::string& name) {
  if (name == "truncated_mean") return MeanEstimator::truncated_mean;
  if (name == "median_of_means") return MeanEstimator::median_of_means;
  throw DomainError("unknown estimator '" + name + "'");
}

double truncated_mean(std::span<const double> samples, const TruncationConfig& cfg) {
  if (samples.empty()) throw DomainError("truncated_mean: empty sample");
  cfg.validate();
  const double level = cfg.threshold(samples.size());
  double sum = 0.0;
  for (const double x : samples) {
    if (std::abs(x) <= level) sum += x;
  }
  return sum / static_cast<double>(samples.size());
}

double median_of_means(std::span<const double> samples, double delta) {
  if (samples.empty()) throw DomainError("median_of_means: empty sample");
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("median_of_means: delta must lie in (0, 1)");
  const std::size_t n = samples.size();
  const double raw = std::ceil(8.0 * std::log(1.0 / delta));
  const std::size_t k = std::clamp<std::size_t>(raw < 1.0 ? 1 : static_cast<std::size_t>(std::min(raw, 1e18)), 1, n);
  const std::size_t base = n / k;
  const std::size_t extra = n % k;
  std::vector<double> means;
  means.reserve(k);
  std::size_t pos = 0;
  for (std::size_t b = 0; b < k; ++b) {
    const std::size_t len = base + (b < extra ? 1 : 0);
    double sum = 0.0;
    for (std::size_t i = pos; i < pos + len; ++i) sum += samples[i];
    means.push_back(sum / static_cast<double>(len));
    pos += len;
  }
  std::sort(means.begin(), means.end());
  if (k % 2 == 1) return means[k / 2];
  return 0.5 * (means[k / 2 - 1] + means[k / 2]);
}

std::vector<double> ips_samples(const Eigen::VectorXd& a, const Eigen::MatrixXd& inv_matrix,
                                const Eigen::MatrixXd& draws, std::span<const double> rewards) {
  if (inv_matrix.rows() != a.size() || inv_matrix.cols() != a.size() || draws.cols() != a.size()) {
    throw DomainError("ips_samples: dimension mismatch");
  }
  if (static_cast<std::size_t>(draws.rows()) != rewards.size()) {
    throw DomainError("ips_samples: one reward per draw required");
  }
  const Eigen::VectorXd transported = inv_matrix.transpose() * a;
  const Eigen::VectorXd proj = draws * transported;
  std::vector<double> out(rewards.size());
  for (std::size_t s = 0; s < rewards.size(); ++s) out[s] = proj(static_cast<Eigen::Index>(s)) * rewards[s];
  return out;
}

double ArmEstimates::at(Label label) const {
  const auto it = values.find(label);
  if (it == values.end()) throw DomainError("no estimate for arm " + std::to_string(label));
  return it->second;
}

FitResult min_distance_fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& w) {
  const Eigen::Index n = features.rows();
  const Eigen::Index d = features.cols();
  if (n == 0 || d == 0) throw DomainError("min_distance_fit: empty problem");
  if (w.size() != n) throw DomainError("min_distance_fit: one estimate per arm required");
  if (!w.allFinite() || !features.allFinite()) throw DomainError("min_distance_fit: non-finite input");

  // Variables (theta+, theta-, s) >= 0; minimize s.
  Eigen::MatrixXd A(2 * n, 2 * d + 1);
  Eigen::VectorXd b(2 * n);
  A.block(0, 0, n, d) = features;
  A.block(0, d, n, d) = -features;
  A.col(2 * d).head(n).setConstant(-1.0);
  b.head(n) = w;
  A.block(n, 0, n, d) = -features;
  A.block(n, d, n, d) = features;
  A.col(2 * d).tail(n).setConstant(-1.0);
  b.tail(n) = -w;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(2 * d + 1);
  c(2 * d) = 1.0;

  const LpSolution lp = solve_lp(c, A, b, 1e-9);
  const Eigen::VectorXd theta_lp = lp.x.head(d) - lp.x.segment(d, d);
  const double s_lp = (features * theta_lp - w).cwiseAbs().maxCoeff();

  // Tie-break: minimum-norm point of the slab |G theta - w| <= s* + tol.
  const double slack = s_lp + 1e-9 * std::max(1.0, s_lp);
  Eigen::MatrixXd H(2 * n, d);
  H.topRows(n) = features;
  H.bottomRows(n) = -features;
  Eigen::VectorXd h(2 * n);
  h.head(n) = w.array() + slack;
  h.tail(n) = -w.array() + slack;
  FitResult out;
  out.theta = min_norm_point(H, h, theta_lp);
  out.objective = (features * out.theta - w).cwiseAbs().maxCoeff();
  out.lp_iterations = lp.iterations;
  return out;
}

FitResult min_distance_fit(const ActionSet& arms, const ArmEstimates& estimates) {
  Eigen::VectorXd w(static_cast<Eigen::Index>(arms.size()));
  for (std::size_t i = 0; i < arms.size(); ++i) w(static_cast<Eigen::Index>(i)) = estimates.at(arms.label(i));
  return min_distance_fit(arms.vectors(), w);
}

}  // namespace htb
