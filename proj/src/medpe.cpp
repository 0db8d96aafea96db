#include "htb/medpe.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "htb/errors.hpp"

namespace htb {

namespace {

constexpr double kMaxExactInteger = 9007199254740992.0;  // 2^53

template <class F>
auto in_phase(int ell, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const SingularityError& e) {
    throw SingularityError("phase " + std::to_string(ell) + ": " + e.what(), e.deficient_dimension());
  } catch (const NumericError& e) {
    throw NumericError("phase " + std::to_string(ell) + ": " + e.what());
  } catch (const DomainError& e) {
    throw DomainError("phase " + std::to_string(ell) + ": " + e.what());
  }
}

}  // namespace

void MedPeConfig::validate() const {
  moment.validate();
  if (T < 1) throw DomainError("horizon T must be >= 1");
  if (gamma && (!(*gamma >= 0.0) || !std::isfinite(*gamma))) throw DomainError("gamma must be finite and >= 0");
  if (beta && (!(*beta >= 0.0) || !std::isfinite(*beta))) throw DomainError("beta must be finite and >= 0");
  if (!(design_tol >= 0.0)) throw DomainError("design tolerance must be >= 0");
  if (!(budget_scale > 0.0) || !std::isfinite(budget_scale)) throw DomainError("budget scale must be positive");
  if (checkpoint_stride < 1) throw DomainError("checkpoint stride must be >= 1");
}

double MedPeConfig::resolved_gamma() const {
  if (gamma) return *gamma;
  const double e = moment.epsilon;
  return std::pow(static_cast<double>(T), -2.0 * e / (1.0 + e));
}

double MedPeConfig::resolved_beta() const { return beta ? *beta : 1.0; }

MedPeConfig MedPeConfig::simplex_preset(const MomentParams& moment, std::uint64_t T, std::size_t d) {
  MedPeConfig cfg;
  cfg.moment = moment;
  cfg.T = T;
  cfg.beta = std::pow(static_cast<double>(d), (moment.epsilon - 1.0) / 2.0);
  cfg.gamma = 1.0 / static_cast<double>(T);
  return cfg;
}

double phase_budget_real(const MedPeConfig& cfg, double eps_ell, double m_value, int ell, std::size_t n_active) {
  if (!(eps_ell > 0.0)) throw DomainError("phase accuracy must be positive");
  if (!(m_value >= 0.0)) throw DomainError("design value must be >= 0");
  if (ell < 1) throw DomainError("phase index must be >= 1");
  if (n_active < 1) throw DomainError("active set must be non-empty");
  const double e = cfg.moment.epsilon;
  const double log_term =
      std::log(2.0 * static_cast<double>(ell) * static_cast<double>(ell) * static_cast<double>(n_active) *
               static_cast<double>(cfg.T));
  return cfg.budget_scale * std::pow(32.0, (1.0 + e) / e) * std::pow(1.0 + cfg.moment.upsilon, 1.0 / e) *
         std::pow(eps_ell, -(1.0 + e) / e) * std::pow(m_value, 1.0 / e) * log_term;
}

std::uint64_t phase_budget(const MedPeConfig& cfg, double eps_ell, double m_value, int ell, std::size_t n_active) {
  const double raw = phase_budget_real(cfg, eps_ell, m_value, ell, n_active);
  if (m_value == 0.0) return 1;
  if (!std::isfinite(raw) || raw > kMaxExactInteger) return cfg.T;
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(raw)));
}

std::vector<std::size_t> surviving_positions(const Eigen::VectorXd& values, double eps_ell) {
  if (values.size() == 0) return {};
  const double cutoff = values.maxCoeff() - 4.0 * eps_ell;
  std::vector<std::size_t> keep;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values(i) >= cutoff) keep.push_back(static_cast<std::size_t>(i));
  }
  return keep;
}

ActionSet eliminate(const ActionSet& active, const Eigen::VectorXd& theta_hat, double eps_ell) {
  if (static_cast<std::size_t>(theta_hat.size()) != active.dim()) {
    throw DomainError("theta_hat dimension does not match the action set");
  }
  const Eigen::VectorXd values = active.vectors() * theta_hat;
  return active.subset(surviving_positions(values, eps_ell));
}

std::unique_ptr<QuadraticFormOracle> LinearGeometry::oracle(std::span<const std::size_t> active) const {
  return std::make_unique<LinearFormOracle>(fit_features(active));
}

Eigen::MatrixXd LinearGeometry::fit_features(std::span<const std::size_t> active) const {
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(active.size()), arms_.vectors().cols());
  for (std::size_t k = 0; k < active.size(); ++k) {
    rows.row(static_cast<Eigen::Index>(k)) = arms_.vectors().row(static_cast<Eigen::Index>(active[k]));
  }
  return rows;
}

RunRecord run_phased_elimination(const Environment& env, const PhaseGeometry& geometry, const MedPeConfig& cfg,
                                 std::uint64_t seed, const std::string& algorithm, const PhaseObserver& observer) {
  cfg.validate();
  const ActionSet& arms = env.actions();
  const double eps = cfg.moment.epsilon;
  const double gamma = cfg.resolved_gamma();
  const double beta = cfg.resolved_beta();
  const std::size_t fw_iters = cfg.design_iters > 0 ? cfg.design_iters : default_design_iters(geometry.dimension());

  RunRecord record;
  record.algorithm = algorithm;
  record.seed = seed;
  record.horizon = cfg.T;
  record.checkpoint_stride = cfg.checkpoint_stride;
  RegretTracker tracker(env, record);
  Rng action_rng(split_seed(seed, 1));
  Rng reward_rng(split_seed(seed, 2));

  std::vector<std::size_t> active(arms.size());
  for (std::size_t i = 0; i < active.size(); ++i) active[i] = i;

  int ell = 1;
  std::vector<std::uint32_t> drawn;
  std::vector<double> rewards;
  std::vector<double> samples;
  while (tracker.t() < cfg.T && active.size() > 1) {
    PhaseState state;
    state.ell = ell;
    state.active = active;
    state.eps_ell = std::ldexp(1.0, -ell);
    state.t_used = tracker.t();
    const std::size_t n = active.size();

    in_phase(ell, [&] {
      const auto oracle = geometry.oracle(active);
      Eigen::VectorXd w = g_optimal_weights(*oracle, gamma, fw_iters, cfg.design_tol).weights;
      if (cfg.refine_design) {
        RefineOptions options;
        options.max_iters = cfg.refine_iters;
        w = minimize_moment_weights(*oracle, gamma, beta, eps, w, options).weights;
      }
      w = prune_weights(w);
      const Eigen::MatrixXd q = oracle->forms(w, gamma);
      state.design = w;
      state.design_value = moment_value(q, w, beta, eps).value;
      state.tau_ell = phase_budget(cfg, state.eps_ell, state.design_value, ell, n);

      // Inverse-CDF sampling over the design's support.
      std::vector<std::size_t> support;
      std::vector<double> cdf;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (w(static_cast<Eigen::Index>(i)) <= 0.0) continue;
        acc += w(static_cast<Eigen::Index>(i));
        support.push_back(i);
        cdf.push_back(acc);
      }
      const std::uint64_t rounds = std::min<std::uint64_t>(state.tau_ell, cfg.T - tracker.t());
      drawn.assign(rounds, 0);
      rewards.assign(rounds, 0.0);
      for (std::uint64_t s = 0; s < rounds; ++s) {
        const double u = action_rng.uniform() * acc;
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        if (it == cdf.end()) --it;
        const std::size_t pos = support[static_cast<std::size_t>(it - cdf.begin())];
        drawn[s] = static_cast<std::uint32_t>(pos);
        rewards[s] = tracker.pull(active[pos], ell, reward_rng);
      }

      const double delta = 1.0 / (2.0 * ell * ell * static_cast<double>(cfg.T) * static_cast<double>(n));
      TruncationConfig trunc;
      trunc.u = 4.0 * (1.0 + cfg.moment.upsilon) * std::max(state.design_value, 1e-300);
      trunc.epsilon = eps;
      trunc.delta = delta;
      state.estimates.resize(static_cast<Eigen::Index>(n));
      samples.resize(rounds);
      for (std::size_t a = 0; a < n; ++a) {
        for (std::uint64_t s = 0; s < rounds; ++s) {
          samples[s] = q(static_cast<Eigen::Index>(a), drawn[s]) * rewards[s];
        }
        state.estimates(static_cast<Eigen::Index>(a)) = cfg.estimator == MeanEstimator::truncated_mean
                                                            ? truncated_mean(samples, trunc)
                                                            : median_of_means(samples, delta);
      }

      const Eigen::MatrixXd features = geometry.fit_features(active);
      const FitResult fit = min_distance_fit(features, state.estimates);
      state.fitted = features * fit.theta;
      state.survivors = surviving_positions(state.fitted, state.eps_ell);

      PhaseSummary summary;
      summary.ell = ell;
      summary.active_before = n;
      summary.active_after = state.survivors.size();
      summary.accuracy = state.eps_ell;
      summary.budget = state.tau_ell;
      summary.rounds = rounds;
      summary.design_value = state.design_value;
      record.phases.push_back(summary);
    });

    if (observer) observer(state);
    std::vector<std::size_t> next;
    next.reserve(state.survivors.size());
    for (const std::size_t pos : state.survivors) next.push_back(active[pos]);
    active = std::move(next);
    ++ell;
  }

  while (tracker.t() < cfg.T) {
    in_phase(ell, [&] { tracker.pull(active.front(), ell, reward_rng); });
  }
  for (const std::size_t i : active) record.final_active.push_back(arms.label(i));
  return record;
}

RunRecord run_medpe(const Environment& env, const MedPeConfig& cfg, std::uint64_t seed,
                    const PhaseObserver& observer) {
  const LinearGeometry geometry(env.actions());
  return run_phased_elimination(env, geometry, cfg, seed, "medpe", observer);
}

}  // namespace htb
