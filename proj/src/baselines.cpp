#include "htb/baselines.hpp"

#include <cmath>
#include <queue>
#include <vector>

#include "htb/errors.hpp"

namespace htb {

namespace {

struct Pending {
  double magnitude;
  double reward;
  std::size_t arm;
  bool operator>(const Pending& other) const { return magnitude > other.magnitude; }
};

}  // namespace

void UcbConfig::validate() const {
  moment.validate();
  if (!(regularizer > 0.0) || !std::isfinite(regularizer)) throw DomainError("ucb regularizer must be positive");
  if (!(width >= 0.0) || !std::isfinite(width)) throw DomainError("ucb width constant must be >= 0");
  if (checkpoint_stride < 1) throw DomainError("checkpoint stride must be >= 1");
}

double ucb_truncation_level(const MomentParams& moment, std::uint64_t t) {
  const double td = static_cast<double>(t);
  return std::pow(moment.upsilon * td / std::max(std::log(td), 1.0), 1.0 / (1.0 + moment.epsilon));
}

double ucb_width(const UcbConfig& cfg, std::size_t d, std::uint64_t t) {
  const double e = cfg.moment.epsilon;
  const double td = static_cast<double>(t);
  return cfg.width * std::pow(td, (1.0 - e) / (2.0 * (1.0 + e))) *
         std::sqrt(static_cast<double>(d) * std::max(std::log(td), 1.0));
}

RunRecord run_truncated_ucb(const Environment& env, const UcbConfig& cfg, std::uint64_t T, std::uint64_t seed) {
  cfg.validate();
  if (T < 1) throw DomainError("horizon T must be >= 1");
  const ActionSet& arms = env.actions();
  const Eigen::MatrixXd& x = arms.vectors();
  const auto n = static_cast<Eigen::Index>(arms.size());
  const auto d = static_cast<Eigen::Index>(arms.dim());

  RunRecord record;
  record.algorithm = "crtm-style-ucb";
  record.seed = seed;
  record.horizon = T;
  record.checkpoint_stride = cfg.checkpoint_stride;
  RegretTracker tracker(env, record);
  Rng reward_rng(split_seed(seed, 2));

  Eigen::MatrixXd v = cfg.regularizer * Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd v_inv = Eigen::MatrixXd::Identity(d, d) / cfg.regularizer;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd norms = x.rowwise().squaredNorm() / cfg.regularizer;  // ||a||^2_{V^{-1}}
  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> pending;

  for (std::uint64_t t = 1; t <= T; ++t) {
    Eigen::Index choice = 0;
    if (t <= static_cast<std::uint64_t>(n)) {
      choice = static_cast<Eigen::Index>(t - 1);
    } else {
      const Eigen::VectorXd theta = v_inv * b;
      const Eigen::VectorXd index =
          x * theta + ucb_width(cfg, arms.dim(), t) * norms.cwiseMax(0.0).cwiseSqrt();
      index.maxCoeff(&choice);
    }
    const double y = tracker.pull(static_cast<std::size_t>(choice), 0, reward_rng);

    const Eigen::VectorXd a = x.row(choice).transpose();
    v.noalias() += a * a.transpose();
    if (t % 4096 == 0) {
      v_inv = v.llt().solve(Eigen::MatrixXd::Identity(d, d));
      norms = (x * v_inv).cwiseProduct(x).rowwise().sum();
    } else {
      const Eigen::VectorXd u = v_inv * a;
      const double denom = 1.0 + a.dot(u);
      v_inv.noalias() -= (u * u.transpose()) / denom;
      const Eigen::VectorXd proj = x * u;
      norms.array() -= proj.array().square() / denom;
    }

    pending.push({std::abs(y), y, static_cast<std::size_t>(choice)});
    const double level = ucb_truncation_level(cfg.moment, t);
    while (!pending.empty() && pending.top().magnitude <= level) {
      b += pending.top().reward * x.row(static_cast<Eigen::Index>(pending.top().arm)).transpose();
      pending.pop();
    }
  }
  record.final_active = arms.labels();
  return record;
}

}  // namespace htb
