#include <doctest.h>

#include <cmath>
#include <vector>

#include "htb/core.hpp"
#include "htb/errors.hpp"
#include "htb/noise.hpp"
#include "htb/rng.hpp"

using namespace htb;

namespace {

ActionSet basis2() { return ActionSet(Eigen::MatrixXd::Identity(2, 2)); }

LinearInstance two_arm(double t0, double t1) {
  return LinearInstance(Eigen::Vector2d(t0, t1), basis2(), ZeroNoise{});
}

}  // namespace

TEST_CASE("action set keeps labels through subsets") {
  Eigen::MatrixXd x(3, 2);
  x << 1, 0, 0, 1, 0.6, 0.8;
  const ActionSet a(x, {10, 20, 30});
  const std::vector<std::size_t> pick{2, 0};
  const ActionSet s = a.subset(pick);
  CHECK(s.size() == 2);
  CHECK(s.label(0) == 30);
  CHECK(s.label(1) == 10);
  CHECK(s.vector(0)(1) == doctest::Approx(0.8));
  CHECK(s.index_of(10) == 1);
  const std::vector<Label> by_label{20};
  CHECK(a.subset_by_labels(by_label).vector(0)(1) == 1.0);
  CHECK_THROWS_AS((void)a.index_of(99), DomainError);
}

TEST_CASE("action set rejects invalid input") {
  CHECK_THROWS_AS(ActionSet(Eigen::MatrixXd(0, 2)), DomainError);
  Eigen::MatrixXd x(2, 2);
  x << 1, 0, 0, 1;
  CHECK_THROWS_AS(ActionSet(x, {1, 1}), DomainError);
  CHECK_THROWS_AS(ActionSet(2.0 * x), DomainError);
  CHECK_NOTHROW(ActionSet(2.0 * x, 2.0));
}

TEST_CASE("moment params") {
  CHECK_NOTHROW((MomentParams{0.5, 1.0, 1.0}.validate()));
  CHECK_NOTHROW((MomentParams{1.0, 0.0, 1.0}.validate()));
  CHECK_THROWS_AS((MomentParams{0.0, 1.0, 1.0}.validate()), DomainError);
  CHECK_THROWS_AS((MomentParams{1.5, 1.0, 1.0}.validate()), DomainError);
  CHECK_THROWS_AS((MomentParams{1.0, -1.0, 1.0}.validate()), DomainError);
  CHECK_THROWS_AS((MomentParams{1.0, 1.0, 0.0}.validate()), DomainError);
}

TEST_CASE("linear instance enforces its bounds") {
  CHECK_THROWS_AS(LinearInstance(Eigen::Vector2d(1.5, 0.0), basis2(), ZeroNoise{}, 2.0), DomainError);
  CHECK_THROWS_AS(LinearInstance(Eigen::Vector2d(0.8, 0.8), basis2(), ZeroNoise{}, 1.0), DomainError);
  CHECK_THROWS_AS(LinearInstance(Eigen::Vector3d(0.1, 0.1, 0.1), basis2(), ZeroNoise{}), DomainError);
}

TEST_CASE("best action examples") {
  const auto b = best_action(two_arm(1.0, 0.0));
  CHECK(b.label == 0);
  CHECK(b.value == 1.0);

  const auto tie = best_action(two_arm(0.0, 0.0));
  CHECK(tie.label == 0);
  CHECK(tie.value == 0.0);

  Eigen::MatrixXd x(3, 2);
  x << 1, 0, 0, 1, 1 / std::sqrt(2.0), 1 / std::sqrt(2.0);
  const LinearInstance inst(Eigen::Vector2d(0.3, -0.2), ActionSet(x), ZeroNoise{});
  const auto c = best_action(inst);
  CHECK(c.label == 0);
  CHECK(c.value == doctest::Approx(0.3));
}

TEST_CASE("ties go to the smallest label, not the first row") {
  Eigen::MatrixXd x(2, 2);
  x << 1, 0, 0, 1;
  const LinearInstance inst(Eigen::Vector2d(0.5, 0.5), ActionSet(x, {7, 3}), ZeroNoise{});
  CHECK(best_action(inst).label == 3);
}

TEST_CASE("pseudo regret examples") {
  const auto inst = two_arm(1.0, 0.0);
  const std::vector<Label> best{0, 0, 0};
  CHECK(pseudo_regret(inst, best) == 0.0);
  CHECK(pseudo_regret(inst, std::vector<Label>{}) == 0.0);
  const std::vector<Label> seq{1, 1, 0};
  CHECK(pseudo_regret(inst, seq) == doctest::Approx(2.0));
  const std::vector<Label> bad{5};
  CHECK_THROWS_AS((void)pseudo_regret(inst, bad), DomainError);
}

TEST_CASE("pseudo regret is additive and relabeling invariant") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd x(4, 3);
    for (Eigen::Index i = 0; i < 4; ++i) {
      for (Eigen::Index j = 0; j < 3; ++j) x(i, j) = rng.normal();
      x.row(i).normalize();
    }
    Eigen::Vector3d theta(rng.normal(), rng.normal(), rng.normal());
    theta = 0.9 * theta.normalized();
    const LinearInstance inst(theta, ActionSet(x), ZeroNoise{});
    const LinearInstance relabeled(theta, ActionSet(x, {40, 30, 20, 10}), ZeroNoise{});
    std::vector<Label> a;
    std::vector<Label> b;
    for (int k = 0; k < 7; ++k) a.push_back(static_cast<Label>(rng.uniform() * 4) % 4);
    for (int k = 0; k < 5; ++k) b.push_back(static_cast<Label>(rng.uniform() * 4) % 4);
    std::vector<Label> ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    CHECK(pseudo_regret(inst, ab) == doctest::Approx(pseudo_regret(inst, a) + pseudo_regret(inst, b)).epsilon(1e-12));
    std::vector<Label> mapped;
    for (const Label l : ab) mapped.push_back(40 - 10 * l);
    CHECK(pseudo_regret(relabeled, mapped) == doctest::Approx(pseudo_regret(inst, ab)).epsilon(1e-12));
    const double best = best_action(inst).value;
    for (Eigen::Index i = 0; i < 4; ++i) CHECK(best >= x.row(i).dot(theta));
  }
}

TEST_CASE("regret tracker logs checkpoints and the final round") {
  const auto inst = two_arm(1.0, 0.0);
  RunRecord record;
  record.horizon = 10;
  record.checkpoint_stride = 4;
  RegretTracker tracker(inst, record);
  Rng rng(1);
  for (int t = 0; t < 10; ++t) (void)tracker.pull(t % 2, 1, rng);
  REQUIRE(record.rounds.size() == 3);
  CHECK(record.rounds[0].t == 4);
  CHECK(record.rounds[1].t == 8);
  CHECK(record.rounds[2].t == 10);
  CHECK(record.cumulative_regret == doctest::Approx(5.0));
  CHECK(record.pulls.at(0) == 5);
  CHECK(record.pulls.at(1) == 5);
  for (std::size_t k = 1; k < record.rounds.size(); ++k) {
    CHECK(record.rounds[k].cumulative_regret >= record.rounds[k - 1].cumulative_regret);
  }
}

TEST_CASE("run seeds depend on every coordinate") {
  const auto s = derive_run_seed(1, "medpe", 10, 0);
  CHECK(s == derive_run_seed(1, "medpe", 10, 0));
  CHECK(s != derive_run_seed(2, "medpe", 10, 0));
  CHECK(s != derive_run_seed(1, "crtm_style_ucb", 10, 0));
  CHECK(s != derive_run_seed(1, "medpe", 20, 0));
  CHECK(s != derive_run_seed(1, "medpe", 10, 1));
}

TEST_CASE("rng streams are reproducible and uniform draws lie in [0, 1)") {
  Rng a(42);
  Rng b(42);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    CHECK(u == b.uniform());
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}
