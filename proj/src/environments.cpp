#include "htb/environments.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "htb/errors.hpp"

namespace htb {

namespace {

constexpr std::size_t kMaxActions = 1'000'000;

double prob_or_throw(double p, const char* what) {
  constexpr double slack = 1e-15;
  if (!(p >= -slack && p <= 1.0 + slack)) {
    std::ostringstream os;
    os << what << ": probability " << p << " outside [0, 1]; the gap parameter is too large";
    throw DomainError(os.str());
  }
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace

double RewardLaw::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) m += probabilities[i] * values[i];
  return m;
}

double RewardLaw::central_moment(double epsilon) const {
  const double m = mean();
  double out = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out += probabilities[i] * std::pow(std::abs(values[i] - m), 1.0 + epsilon);
  }
  return out;
}

double RewardLaw::raw_moment(double epsilon) const {
  double out = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) out += probabilities[i] * std::pow(std::abs(values[i]), 1.0 + epsilon);
  return out;
}

std::string to_string(HardFlavor flavor) {
  switch (flavor) {
    case HardFlavor::hypercube_pair: return "hypercube_pair";
    case HardFlavor::grouped_finite: return "grouped_finite";
    case HardFlavor::unit_ball: return "unit_ball";
  }
  return "unknown";
}

BernoulliRewardInstance::BernoulliRewardInstance(HardFlavor flavor, Eigen::VectorXd theta, ActionSet actions,
                                                 double epsilon, double delta, double gamma_scale)
    : flavor_(flavor),
      theta_(std::move(theta)),
      actions_(std::move(actions)),
      epsilon_(epsilon),
      delta_(delta),
      gamma_(gamma_scale) {
  if (!(epsilon_ > 0.0 && epsilon_ <= 1.0)) throw DomainError("epsilon must lie in (0, 1]");
  if (!(gamma_ > 0.0 && gamma_ <= 1.0)) throw DomainError("reward law scale gamma must lie in (0, 1]");
  if (static_cast<std::size_t>(theta_.size()) != actions_.dim()) {
    throw DomainError("theta dimension does not match the action set");
  }
  const double high = std::pow(gamma_, -1.0 / epsilon_);
  const double low_scale = std::pow(gamma_, 1.0 / epsilon_);
  const double shift = 2.0 * std::sqrt(static_cast<double>(actions_.dim())) * delta_;
  const Eigen::VectorXd means = actions_.vectors() * theta_;
  for (Eigen::Index i = 0; i < means.size(); ++i) {
    const double mu = means(i);
    RewardLaw law;
    if (flavor_ == HardFlavor::unit_ball) {
      const double p_high = prob_or_throw(low_scale * (mu + shift), "three-point law");
      const double p_neg = prob_or_throw(shift, "three-point law");
      const double p_zero = prob_or_throw(1.0 - p_high - p_neg, "three-point law");
      law.values = {high, 0.0, -1.0};
      law.probabilities = {p_high, p_zero, p_neg};
    } else {
      const double p_high = prob_or_throw(low_scale * mu, "two-point law");
      law.values = {high, 0.0};
      law.probabilities = {p_high, 1.0 - p_high};
    }
    laws_.push_back(std::move(law));
    means_.push_back(mu);
  }
}

double BernoulliRewardInstance::sample_reward(std::size_t index, Rng& rng) const {
  const RewardLaw& law = laws_[index];
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < law.values.size(); ++k) {
    acc += law.probabilities[k];
    if (u < acc) return law.values[k];
  }
  return law.values.back();
}

double BernoulliRewardInstance::max_central_moment() const {
  double out = 0.0;
  for (const auto& law : laws_) out = std::max(out, law.central_moment(epsilon_));
  return out;
}

double BernoulliRewardInstance::max_raw_moment() const {
  double out = 0.0;
  for (const auto& law : laws_) out = std::max(out, law.raw_moment(epsilon_));
  return out;
}

double hypercube_min_horizon(std::size_t d, double epsilon) {
  return std::pow(4.0, (1.0 + epsilon) / epsilon) * static_cast<double>(d) * static_cast<double>(d);
}

double hypercube_delta(std::size_t d, std::uint64_t T, double epsilon) {
  return 0.5 * std::pow(static_cast<double>(d), (epsilon - 1.0) / (1.0 + epsilon)) *
         std::pow(static_cast<double>(T), -epsilon / (1.0 + epsilon));
}

BernoulliRewardInstance hypercube_pair_instance_with_delta(std::size_t d, double delta, std::uint64_t theta_index,
                                                           double epsilon) {
  if (d < 1 || d > 20) throw DomainError("hypercube instance: d must lie in [1, 20]");
  if (!(delta > 0.0)) throw DomainError("hypercube instance: Delta must be positive");
  if (delta > 1.0 / (4.0 * static_cast<double>(d))) {
    throw DomainError("hypercube instance: Delta exceeds 1/(4d)");
  }
  if (theta_index >= (std::uint64_t{1} << d)) throw DomainError("hypercube instance: theta_index out of range");
  const auto dim = static_cast<Eigen::Index>(2 * d);
  Eigen::VectorXd theta(dim);
  for (std::size_t i = 0; i < d; ++i) {
    const bool second = (theta_index >> i) & 1U;
    theta(static_cast<Eigen::Index>(2 * i)) = second ? delta : 2.0 * delta;
    theta(static_cast<Eigen::Index>(2 * i + 1)) = second ? 2.0 * delta : delta;
  }
  const std::size_t count = std::size_t{1} << d;
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(count), dim);
  for (std::size_t k = 0; k < count; ++k) {
    for (std::size_t i = 0; i < d; ++i) {
      const std::size_t col = 2 * i + (((k >> i) & 1U) ? 1 : 0);
      rows(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(col)) = 1.0;
    }
  }
  const double gamma = 2.0 * static_cast<double>(d) * delta;
  return BernoulliRewardInstance(HardFlavor::hypercube_pair, std::move(theta),
                                 ActionSet(std::move(rows), std::sqrt(static_cast<double>(d))), epsilon, delta, gamma);
}

BernoulliRewardInstance hypercube_pair_instance(std::size_t d, std::uint64_t T, std::uint64_t theta_index,
                                                double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw DomainError("epsilon must lie in (0, 1]");
  const double floor = hypercube_min_horizon(d, epsilon);
  if (static_cast<double>(T) < floor) {
    std::ostringstream os;
    os << "hypercube instance requires T >= 4^((1+eps)/eps) d^2 = " << floor << ", got T = " << T;
    throw DomainError(os.str());
  }
  return hypercube_pair_instance_with_delta(d, hypercube_delta(d, T, epsilon), theta_index, epsilon);
}

std::size_t grouped_block_size(std::size_t d, std::size_t n) {
  if (n < 2) throw DomainError("grouped instance: n must be >= 2");
  const double target = static_cast<double>(d) / std::log2(static_cast<double>(n));
  for (std::size_t m = 4; m <= std::max<std::size_t>(d, 4); ++m) {
    const double md = static_cast<double>(m);
    if (md / std::log2(md) >= target) return m;
  }
  throw DomainError("grouped instance: no block size m in [4, d] satisfies m / log2 m >= d / log2 n");
}

BernoulliRewardInstance grouped_finite_instance(std::size_t d, std::size_t n, std::uint64_t T,
                                                std::uint64_t theta_index, double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw DomainError("epsilon must lie in (0, 1]");
  const double n_max = std::ldexp(1.0, static_cast<int>(d / 4));
  if (static_cast<double>(n) < static_cast<double>(d) || static_cast<double>(n) > n_max) {
    std::ostringstream os;
    os << "grouped instance requires n in [d, 2^floor(d/4)] = [" << d << ", " << n_max << "], got n = " << n;
    throw DomainError(os.str());
  }
  const double t_floor = std::pow(4.0, (1.0 + epsilon) / epsilon) *
                         std::pow(static_cast<double>(d), (1.0 + epsilon) / epsilon);
  if (static_cast<double>(T) < t_floor) {
    std::ostringstream os;
    os << "grouped instance requires T >= 4^((1+eps)/eps) d^((1+eps)/eps) = " << t_floor << ", got T = " << T;
    throw DomainError(os.str());
  }
  const std::size_t m = grouped_block_size(d, n);
  const std::size_t blocks = d / m;
  if (static_cast<double>(blocks) * std::log2(static_cast<double>(m)) > std::log2(static_cast<double>(n)) + 1e-12) {
    throw DomainError("grouped instance: action count m^(d/m) exceeds n");
  }
  double count_d = std::pow(static_cast<double>(m), static_cast<double>(blocks));
  if (count_d > static_cast<double>(kMaxActions)) throw DomainError("grouped instance: action set too large");
  const auto count = static_cast<std::size_t>(std::llround(count_d));
  if (theta_index >= count) throw DomainError("grouped instance: theta_index out of range");

  const double k = static_cast<double>(blocks);
  const double delta = 0.125 * std::pow(k, (epsilon - 1.0) / (1.0 + epsilon)) *
                       std::pow(static_cast<double>(T) / static_cast<double>(m), -epsilon / (1.0 + epsilon));
  if (delta > 1.0 / (4.0 * static_cast<double>(d))) throw DomainError("grouped instance: Delta exceeds 1/(4d)");

  const auto dim = static_cast<Eigen::Index>(d);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(dim);
  std::uint64_t code = theta_index;
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t hot = code % m;
    code /= m;
    for (std::size_t j = 0; j < m; ++j) {
      theta(static_cast<Eigen::Index>(b * m + j)) = j == hot ? 2.0 * delta : delta;
    }
  }
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(count), dim);
  for (std::size_t a = 0; a < count; ++a) {
    std::size_t digits = a;
    for (std::size_t b = 0; b < blocks; ++b) {
      rows(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b * m + digits % m)) = 1.0;
      digits /= m;
    }
  }
  const double gamma = 2.0 * k * delta;
  return BernoulliRewardInstance(HardFlavor::grouped_finite, std::move(theta),
                                 ActionSet(std::move(rows), std::sqrt(k)), epsilon, delta, gamma);
}

double unit_ball_delta(std::size_t d, std::uint64_t T, double epsilon) {
  return std::pow(24.0, -1.0 / (1.0 + epsilon)) *
         std::pow(static_cast<double>(d), (3.0 * epsilon - 1.0) / (2.0 * (1.0 + epsilon))) *
         std::pow(288.0 * static_cast<double>(T), -epsilon / (1.0 + epsilon));
}

BernoulliRewardInstance unit_ball_instance(std::size_t d, std::uint64_t T, const std::vector<int>& theta_signs,
                                           double epsilon, std::size_t sphere_points, std::uint64_t seed) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw DomainError("epsilon must lie in (0, 1]");
  if (d < 1) throw DomainError("unit ball instance: d must be >= 1");
  if (static_cast<double>(T) < static_cast<double>(d) * static_cast<double>(d)) {
    throw DomainError("unit ball instance requires T >= d^2");
  }
  if (theta_signs.size() != d) throw DomainError("unit ball instance: one sign per coordinate required");
  const double delta = unit_ball_delta(d, T, epsilon);
  const double rd = std::sqrt(static_cast<double>(d));
  if (delta > 1.0 / (24.0 * rd)) throw DomainError("unit ball instance: Delta exceeds 1/(24 sqrt d)");

  const auto dim = static_cast<Eigen::Index>(d);
  Eigen::VectorXd theta(dim);
  for (std::size_t i = 0; i < d; ++i) {
    if (theta_signs[i] != 1 && theta_signs[i] != -1) throw DomainError("unit ball instance: signs must be +-1");
    theta(static_cast<Eigen::Index>(i)) = delta * theta_signs[i];
  }
  const ActionSet sphere = make_action_set(SphereRandom{sphere_points}, d, seed);
  const Eigen::Index extra = 2 * dim + 2;
  Eigen::MatrixXd rows(sphere.vectors().rows() + extra, dim);
  rows.topRows(sphere.vectors().rows()) = sphere.vectors();
  Eigen::Index r = sphere.vectors().rows();
  for (Eigen::Index i = 0; i < dim; ++i) {
    rows.row(r++) = Eigen::VectorXd::Unit(dim, i).transpose();
    rows.row(r++) = -Eigen::VectorXd::Unit(dim, i).transpose();
  }
  rows.row(r++) = theta.transpose() / theta.norm();
  rows.row(r++) = -theta.transpose() / theta.norm();
  const double gamma = 24.0 * rd * delta;
  return BernoulliRewardInstance(HardFlavor::unit_ball, std::move(theta), ActionSet(std::move(rows)), epsilon, delta,
                                 gamma);
}

ActionSet make_action_set(const ActionSetKind& kind, std::size_t d, std::uint64_t seed) {
  if (d < 1) throw DomainError("make_action_set: d must be >= 1");
  const auto dim = static_cast<Eigen::Index>(d);
  Rng rng(seed);
  if (std::holds_alternative<SimplexBasis>(kind)) {
    return ActionSet(Eigen::MatrixXd::Identity(dim, dim));
  }
  if (std::holds_alternative<SignedBasis>(kind)) {
    Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(2 * dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
      rows(2 * i, i) = 1.0;
      rows(2 * i + 1, i) = -1.0;
    }
    return ActionSet(std::move(rows));
  }
  if (const auto* grid = std::get_if<LpBallGrid>(&kind)) {
    if (grid->points_per_axis < 2) throw DomainError("lp ball grid: at least 2 points per axis");
    if (!(grid->p >= 1.0) || !(grid->r > 0.0)) throw DomainError("lp ball grid: need p >= 1 and r > 0");
    const double total = std::pow(static_cast<double>(grid->points_per_axis), static_cast<double>(d));
    if (total > static_cast<double>(kMaxActions)) throw DomainError("lp ball grid: too many grid points");
    const std::size_t k = grid->points_per_axis;
    std::vector<Eigen::VectorXd> kept;
    const auto n_total = static_cast<std::size_t>(std::llround(total));
    Eigen::VectorXd x(dim);
    for (std::size_t code = 0; code < n_total; ++code) {
      std::size_t c = code;
      for (Eigen::Index i = 0; i < dim; ++i) {
        x(i) = -grid->r + 2.0 * grid->r * static_cast<double>(c % k) / static_cast<double>(k - 1);
        c /= k;
      }
      if (x.lpNorm<Eigen::Infinity>() == 0.0) continue;
      const double norm = std::pow(x.array().abs().pow(grid->p).sum(), 1.0 / grid->p);
      if (norm <= grid->r * (1.0 + 1e-12)) kept.push_back(x);
    }
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(kept.size()), dim);
    double radius = grid->r;
    for (std::size_t i = 0; i < kept.size(); ++i) {
      rows.row(static_cast<Eigen::Index>(i)) = kept[i].transpose();
      radius = std::max(radius, kept[i].norm());
    }
    return ActionSet(std::move(rows), radius);
  }
  if (const auto* sphere = std::get_if<SphereRandom>(&kind)) {
    if (sphere->count < 1) throw DomainError("sphere sample: count must be >= 1");
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(sphere->count), dim);
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      for (;;) {
        for (Eigen::Index j = 0; j < dim; ++j) rows(i, j) = rng.normal();
        const double norm = rows.row(i).norm();
        if (norm > 1e-12) {
          rows.row(i) /= norm;
          break;
        }
      }
    }
    return ActionSet(std::move(rows));
  }
  if (const auto* cube = std::get_if<HypercubeRandom>(&kind)) {
    if (cube->count < 1) throw DomainError("hypercube sample: count must be >= 1");
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(cube->count), dim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      for (Eigen::Index j = 0; j < dim; ++j) rows(i, j) = scale * rng.uniform();
    }
    return ActionSet(std::move(rows));
  }
  const auto& explicit_rows = std::get<ExplicitActions>(kind).rows;
  if (explicit_rows.cols() != dim) throw DomainError("explicit action set: column count must equal d");
  double radius = 1.0;
  for (Eigen::Index i = 0; i < explicit_rows.rows(); ++i) radius = std::max(radius, explicit_rows.row(i).norm());
  return ActionSet(explicit_rows, radius);
}

}  // namespace htb
