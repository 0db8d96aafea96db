#include "htb/core.hpp"

#include <cmath>
#include <string>

#include "htb/errors.hpp"

namespace htb {

namespace {

std::vector<Label> iota_labels(Eigen::Index n) {
  std::vector<Label> labels(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i;
  return labels;
}

}  // namespace

ActionSet::ActionSet(Eigen::MatrixXd vectors, std::vector<Label> labels, double radius)
    : vectors_(std::move(vectors)), labels_(std::move(labels)), radius_(radius) {
  if (vectors_.rows() == 0) throw DomainError("action set must be non-empty");
  if (vectors_.cols() == 0) throw DomainError("action set dimension must be positive");
  if (static_cast<std::size_t>(vectors_.rows()) != labels_.size()) {
    throw DomainError("action set: one label per action vector required");
  }
  if (!(radius_ > 0.0)) throw DomainError("action set radius must be positive");
  if (!vectors_.allFinite()) throw DomainError("action set: non-finite coordinates");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    const double norm = vectors_.row(static_cast<Eigen::Index>(i)).norm();
    if (norm > radius_ * (1.0 + 1e-12)) {
      throw DomainError("action " + std::to_string(labels_[i]) + " has norm " + std::to_string(norm) +
                        " above the declared radius " + std::to_string(radius_));
    }
    if (!index_.emplace(labels_[i], i).second) {
      throw DomainError("duplicate action label " + std::to_string(labels_[i]));
    }
  }
}

ActionSet::ActionSet(Eigen::MatrixXd vectors, double radius)
    : ActionSet(vectors, iota_labels(vectors.rows()), radius) {}

std::size_t ActionSet::index_of(Label label) const {
  const auto it = index_.find(label);
  if (it == index_.end()) throw DomainError("unknown action label " + std::to_string(label));
  return it->second;
}

ActionSet ActionSet::subset(std::span<const std::size_t> indices) const {
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(indices.size()), vectors_.cols());
  std::vector<Label> labels;
  labels.reserve(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= size()) throw DomainError("action subset index out of range");
    rows.row(static_cast<Eigen::Index>(k)) = vectors_.row(static_cast<Eigen::Index>(indices[k]));
    labels.push_back(labels_[indices[k]]);
  }
  return ActionSet(std::move(rows), std::move(labels), radius_);
}

ActionSet ActionSet::subset_by_labels(std::span<const Label> labels) const {
  std::vector<std::size_t> indices;
  indices.reserve(labels.size());
  for (const Label l : labels) indices.push_back(index_of(l));
  return subset(indices);
}

void MomentParams::validate() const {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw DomainError("epsilon must lie in (0, 1]");
  if (!(upsilon >= 0.0) || !std::isfinite(upsilon)) throw DomainError("upsilon must be finite and >= 0");
  if (!(b > 0.0) || !std::isfinite(b)) throw DomainError("b must be finite and positive");
}

std::pair<std::size_t, double> Environment::best() const {
  const ActionSet& arms = actions();
  std::size_t best = 0;
  double value = mean_reward(0);
  for (std::size_t i = 1; i < arms.size(); ++i) {
    const double v = mean_reward(i);
    if (v > value || (v == value && arms.label(i) < arms.label(best))) {
      best = i;
      value = v;
    }
  }
  return {best, value};
}

LinearInstance::LinearInstance(Eigen::VectorXd theta_star, ActionSet actions, NoiseSpec noise, double b)
    : theta_(std::move(theta_star)), actions_(std::move(actions)), noise_(noise) {
  if (static_cast<std::size_t>(theta_.size()) != actions_.dim()) {
    throw DomainError("theta* dimension does not match the action set");
  }
  validate_noise(noise_);
  if (theta_.norm() > b * (1.0 + 1e-12)) {
    throw DomainError("||theta*||_2 = " + std::to_string(theta_.norm()) + " exceeds b = " + std::to_string(b));
  }
  const Eigen::VectorXd means = actions_.vectors() * theta_;
  if (means.cwiseAbs().maxCoeff() > 1.0 + 1e-12) {
    throw DomainError("mean rewards must satisfy max_a |<a, theta*>| <= 1");
  }
  means_.assign(means.data(), means.data() + means.size());
}

double LinearInstance::sample_reward(std::size_t index, Rng& rng) const {
  return means_[index] + sample_noise(noise_, rng);
}

BestAction best_action(const LinearInstance& instance) {
  const auto [index, value] = instance.best();
  return {instance.actions().label(index), value};
}

double pseudo_regret(const LinearInstance& instance, std::span<const Label> action_labels) {
  const double best = best_action(instance).value;
  double total = 0.0;
  for (const Label l : action_labels) {
    total += best - instance.mean_reward(instance.actions().index_of(l));
  }
  return total;
}

RegretTracker::RegretTracker(const Environment& env, RunRecord& record)
    : env_(env), record_(record), best_value_(env.best().second) {
  if (record_.checkpoint_stride == 0) record_.checkpoint_stride = 1;
}

double RegretTracker::pull(std::size_t index, int phase, Rng& rng) {
  const double reward = env_.sample_reward(index, rng);
  const double gap = best_value_ - env_.mean_reward(index);
  const Label label = env_.actions().label(index);
  record_.cumulative_regret += gap;
  ++record_.rounds_played;
  ++record_.pulls[label];
  const std::uint64_t t = record_.rounds_played;
  if (t % record_.checkpoint_stride == 0 || t == record_.horizon) {
    record_.rounds.push_back({t, phase, label, reward, gap, record_.cumulative_regret});
  }
  return reward;
}

}  // namespace htb
