#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "htb/errors.hpp"
#include "htb/medpe.hpp"
#include "htb/noise.hpp"

using namespace htb;

namespace {

MedPeConfig config(double eps, double upsilon, std::uint64_t T) {
  MedPeConfig cfg;
  cfg.moment = {eps, upsilon, 1.0};
  cfg.T = T;
  return cfg;
}

ActionSet basis(Eigen::Index d) { return ActionSet(Eigen::MatrixXd::Identity(d, d)); }

}  // namespace

TEST_CASE("phase budget examples") {
  const auto cfg = config(1.0, 0.0, 1024);
  CHECK(phase_budget_real(cfg, 0.5, 1.0, 1, 2) == doctest::Approx(1024.0 * 4.0 * std::log(4096.0)).epsilon(1e-14));
  CHECK(phase_budget(cfg, 0.5, 1.0, 1, 2) == 34070);
  CHECK(phase_budget(cfg, 0.5, 0.0, 1, 2) == 1);
  CHECK(phase_budget_real(cfg, 0.5, 2.0, 1, 2) == doctest::Approx(2.0 * phase_budget_real(cfg, 0.5, 1.0, 1, 2)).epsilon(1e-14));
}

TEST_CASE("phase budget saturates instead of overflowing") {
  const auto cfg = config(1e-3, 1.0, 5000);
  CHECK(phase_budget(cfg, 0.5, 2.0, 1, 4) == 5000);
  const auto scaled = [] {
    auto c = config(1.0, 0.0, 1024);
    c.budget_scale = 0.5;
    return c;
  }();
  CHECK(phase_budget_real(scaled, 0.5, 1.0, 1, 2) == doctest::Approx(512.0 * 4.0 * std::log(4096.0)));
}

TEST_CASE("phase budgets grow across phases when M does not decrease") {
  for (const double eps : {0.3, 0.5, 1.0}) {
    const auto cfg = config(eps, 1.0, 1000000);
    for (int ell = 1; ell < 6; ++ell) {
      const double e = std::ldexp(1.0, -ell);
      CHECK(phase_budget_real(cfg, e / 2, 1.3, ell + 1, 4) > phase_budget_real(cfg, e, 1.3, ell, 5));
    }
  }
}

TEST_CASE("config defaults and presets") {
  const auto cfg = config(0.5, 1.0, 1000);
  CHECK(cfg.resolved_gamma() == doctest::Approx(std::pow(1000.0, -2.0 / 3.0)));
  CHECK(cfg.resolved_beta() == 1.0);
  const auto s = MedPeConfig::simplex_preset({0.5, 1.0, 1.0}, 1000, 16);
  CHECK(s.resolved_gamma() == doctest::Approx(1e-3));
  CHECK(s.resolved_beta() == doctest::Approx(std::pow(16.0, -0.25)));
  auto bad = config(0.5, 1.0, 0);
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("elimination examples") {
  Eigen::MatrixXd x(3, 1);
  x << 1.0, 0.9, 0.5;
  const ActionSet arms(x, {1, 2, 3});
  const ActionSet kept = eliminate(arms, Eigen::VectorXd::Constant(1, 1.0), 0.1);
  CHECK(kept.labels() == std::vector<Label>{1, 2});
  CHECK(eliminate(ActionSet(Eigen::MatrixXd::Constant(3, 1, 0.5)), Eigen::VectorXd::Constant(1, 1.0), 0.01).size() == 3);
  CHECK(eliminate(arms, Eigen::VectorXd::Constant(1, 1.0), 0.125).size() == 3);
  CHECK(surviving_positions(Eigen::Vector3d(0.2, 0.9, -1.0), 0.1) == std::vector<std::size_t>{1});
}

TEST_CASE("single arm: zero regret and every round pulls it") {
  Eigen::MatrixXd one(1, 2);
  one << 0.6, 0.8;
  const LinearInstance inst(Eigen::Vector2d(0.5, 0.1), ActionSet(one), CenteredParetoNoise{2.0, 1.0});
  const auto rec = run_medpe(inst, config(0.5, 2.1, 5000), 1);
  CHECK(rec.cumulative_regret == 0.0);
  CHECK(rec.rounds_played == 5000);
  CHECK(rec.pulls.at(0) == 5000);
}

TEST_CASE("zero-noise two-arm replay") {
  const std::uint64_t T = 10000000;
  const LinearInstance inst(Eigen::Vector2d(1.0, 0.0), basis(2), ZeroNoise{});
  auto cfg = config(1.0, 0.0, T);
  cfg.checkpoint_stride = T;
  std::vector<PhaseState> phases;
  const auto rec = run_medpe(inst, cfg, 3, [&](const PhaseState& s) { phases.push_back(s); });
  // phase 2 sits on the tie 4 eps_2 == gap, so sampling error decides it
  REQUIRE(phases.size() >= 2);
  REQUIRE(phases.size() <= 3);
  CHECK(rec.rounds_played == T);

  // phase 1 keeps both arms since 4 * 1/2 exceeds the gap
  CHECK(phases[0].survivors.size() == 2);
  // estimates are exact for the zero-mean arm and nearly exact for the other
  CHECK(std::abs(phases[0].estimates(1)) < 1e-12);
  CHECK(phases[0].estimates(0) == doctest::Approx(1.0).epsilon(0.01));
  // by the end of phase 3 the suboptimal arm is gone
  CHECK(phases.back().survivors.size() == 1);
  CHECK(rec.final_active == std::vector<Label>{0});

  std::uint64_t e2_pulls = rec.pulls.count(1) ? rec.pulls.at(1) : 0;
  CHECK(rec.cumulative_regret == doctest::Approx(static_cast<double>(e2_pulls)));
  // all e2 pulls happen in phases 1 to 3
  std::uint64_t early = 0;
  for (const auto& p : phases) early += p.tau_ell;
  CHECK(e2_pulls <= early);
  CHECK(e2_pulls > 0);

  for (std::size_t k = 1; k < phases.size(); ++k) {
    CHECK(phases[k].active.size() <= phases[k - 1].active.size());
    CHECK(phases[k].eps_ell == std::ldexp(1.0, -phases[k].ell));
  }
}

TEST_CASE("zero noise: near-optimal arms survive every phase") {
  Eigen::MatrixXd x(4, 2);
  x << 1, 0, 0, 1, 0.8, 0.6, -1, 0;
  const LinearInstance inst(Eigen::Vector2d(0.9, 0.1), ActionSet(x), ZeroNoise{});
  auto cfg = config(1.0, 0.0, 2000000);
  cfg.budget_scale = 1e-3;
  cfg.checkpoint_stride = 2000000;
  const double best = best_action(inst).value;
  (void)run_medpe(inst, cfg, 9, [&](const PhaseState& s) {
    for (std::size_t i = 0; i < s.active.size(); ++i) {
      const double gap = best - inst.mean_reward(s.active[i]);
      const bool kept = std::find(s.survivors.begin(), s.survivors.end(), i) != s.survivors.end();
      if (gap < 2.0 * s.eps_ell) CHECK(kept);
    }
  });
}

TEST_CASE("runs are deterministic and consume exactly T rounds") {
  Eigen::MatrixXd x(5, 3);
  x << 1, 0, 0, 0, 1, 0, 0, 0, 1, -1, 0, 0, 0.6, 0.8, 0;
  const LinearInstance inst(Eigen::Vector3d(0.7, 0.2, -0.3), ActionSet(x), CenteredParetoNoise{2.0, 1.0});
  for (const double scale : {1.0, 1e-4}) {
    auto cfg = config(0.5, *noise_moment(CenteredParetoNoise{2.0, 1.0}, 0.5), 30000);
    cfg.budget_scale = scale;
    cfg.checkpoint_stride = 100;
    const auto a = run_medpe(inst, cfg, 42);
    const auto b = run_medpe(inst, cfg, 42);
    CHECK(a.rounds_played == 30000);
    std::uint64_t total = 0;
    for (const auto& [label, n] : a.pulls) total += n;
    CHECK(total == 30000);
    REQUIRE(a.rounds.size() == b.rounds.size());
    for (std::size_t k = 0; k < a.rounds.size(); ++k) {
      CHECK(a.rounds[k].action == b.rounds[k].action);
      CHECK(a.rounds[k].reward == b.rounds[k].reward);
      CHECK(a.rounds[k].cumulative_regret == b.rounds[k].cumulative_regret);
      if (k > 0) CHECK(a.rounds[k].cumulative_regret >= a.rounds[k - 1].cumulative_regret);
    }
    std::uint64_t phase_rounds = 0;
    for (const auto& p : a.phases) phase_rounds += p.rounds;
    CHECK(phase_rounds <= 30000);
  }
}

TEST_CASE("median of means estimator runs end to end") {
  const LinearInstance inst(Eigen::Vector2d(0.5, -0.5), basis(2), StudentTNoise{3.0});
  auto cfg = config(1.0, 3.0, 20000);
  cfg.estimator = MeanEstimator::median_of_means;
  cfg.budget_scale = 1e-3;
  cfg.checkpoint_stride = 20000;
  const auto rec = run_medpe(inst, cfg, 5);
  CHECK(rec.rounds_played == 20000);
  CHECK(std::find(rec.final_active.begin(), rec.final_active.end(), 0) != rec.final_active.end());
}
