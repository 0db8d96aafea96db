#include <doctest.h>

#include <cmath>
#include <vector>

#include "htb/errors.hpp"
#include "htb/estimators.hpp"
#include "htb/linprog.hpp"
#include "htb/rng.hpp"

using namespace htb;

TEST_CASE("truncated mean examples") {
  const std::vector<double> a{1, 2, 3};
  CHECK(truncated_mean(a, {1e6, 1.0, 0.05}) == doctest::Approx(2.0));

  const std::vector<double> b{1, 3, 1, 3};
  const TruncationConfig cfg{1.0, 1.0, std::exp(-1.0)};
  CHECK(cfg.threshold(4) == doctest::Approx(2.0));
  CHECK(truncated_mean(b, cfg) == doctest::Approx(0.5));

  const std::vector<double> z(9, 0.0);
  CHECK(truncated_mean(z, {1.0, 0.5, 0.1}) == 0.0);
}

TEST_CASE("truncated mean errors") {
  CHECK_THROWS_AS((void)truncated_mean(std::vector<double>{}, {1.0, 1.0, 0.1}), DomainError);
  const std::vector<double> x{1.0};
  CHECK_THROWS_AS((void)truncated_mean(x, {1.0, 1.0, 0.0}), DomainError);
  CHECK_THROWS_AS((void)truncated_mean(x, {1.0, 1.0, 1.0}), DomainError);
  CHECK_THROWS_AS((void)truncated_mean(x, {0.0, 1.0, 0.5}), DomainError);
}

TEST_CASE("truncated mean properties") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 50);
    std::vector<double> xs(n);
    for (auto& x : xs) x = 10.0 * rng.normal();
    const TruncationConfig cfg{0.1 + 20.0 * rng.uniform(), 0.2 + 0.8 * rng.uniform(), 0.01 + 0.5 * rng.uniform()};
    const double thr = cfg.threshold(n);
    const double tm = truncated_mean(xs, cfg);
    CHECK(std::abs(tm) <= thr + 1e-12);
    double mx = 0.0;
    double sum = 0.0;
    for (const double x : xs) {
      mx = std::max(mx, std::abs(x));
      sum += x;
    }
    if (mx <= thr) CHECK(tm == doctest::Approx(sum / static_cast<double>(n)).epsilon(1e-12));
  }
}

TEST_CASE("median of means examples") {
  const std::vector<double> a{1, 2, 3};
  CHECK(median_of_means(a, 0.99) == doctest::Approx(2.0));

  // k = ceil(8 ln(1/delta)) = 3 with ln(1/delta) = 0.3
  const std::vector<double> b{0, 0, 0, 0, 100, 100};
  CHECK(median_of_means(b, std::exp(-0.3)) == 0.0);

  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const double c = rng.normal();
    const std::vector<double> cs(1 + static_cast<std::size_t>(rng.uniform() * 40), c);
    CHECK(median_of_means(cs, 0.001 + rng.uniform() * 0.9) == doctest::Approx(c).epsilon(1e-14));
  }
  CHECK_THROWS_AS((void)median_of_means(std::vector<double>{}, 0.1), DomainError);
}

TEST_CASE("ips samples examples") {
  const Eigen::Vector2d e1(1.0, 0.0);
  Eigen::MatrixXd draws(1, 2);
  draws << 1, 0;
  const std::vector<double> y1{2.0};
  CHECK(ips_samples(e1, Eigen::Matrix2d::Identity(), draws, y1) == std::vector<double>{2.0});

  Eigen::MatrixXd d2(2, 2);
  d2 << 1, 0, 0, 1;
  const std::vector<double> y2{1.5, 7.0};
  const auto s = ips_samples(e1, 2.0 * Eigen::Matrix2d::Identity(), d2, y2);
  CHECK(s[0] == doctest::Approx(3.0));
  CHECK(s[1] == 0.0);

  const std::vector<double> zeros{0.0, 0.0};
  for (const double v : ips_samples(Eigen::Vector2d(0.3, -0.7), Eigen::Matrix2d::Identity(), d2, zeros)) {
    CHECK(v == 0.0);
  }
  CHECK_THROWS_AS((void)ips_samples(Eigen::Vector3d(1, 0, 0), Eigen::Matrix2d::Identity(), d2, y2), DomainError);
  const std::vector<double> y_short{1.0};
  CHECK_THROWS_AS((void)ips_samples(e1, Eigen::Matrix2d::Identity(), d2, y_short), DomainError);
}

TEST_CASE("min distance fit examples") {
  ArmEstimates w;
  w.values = {{0, 0.3}, {1, -0.2}};
  const auto fit = min_distance_fit(ActionSet(Eigen::MatrixXd::Identity(2, 2)), w);
  CHECK(fit.theta(0) == doctest::Approx(0.3));
  CHECK(fit.theta(1) == doctest::Approx(-0.2));
  CHECK(fit.objective <= 1.0000001e-9);

  Eigen::MatrixXd one(1, 2);
  one << 1, 0;
  const auto single = min_distance_fit(one, Eigen::VectorXd::Constant(1, 0.5));
  CHECK(single.theta(0) == doctest::Approx(0.5));
  CHECK(std::abs(single.theta(1)) < 1e-9);
  CHECK(single.objective <= 1.0000001e-9);

  Eigen::MatrixXd pm(2, 1);
  pm << 1, -1;
  const auto sym = min_distance_fit(pm, Eigen::Vector2d(1.0, 0.0));
  CHECK(sym.theta(0) == doctest::Approx(0.5));
  CHECK(sym.objective == doctest::Approx(0.5));
}

TEST_CASE("min distance fit properties") {
  Rng rng(17);
  for (int trial = 0; trial < 60; ++trial) {
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.uniform() * 4);
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.uniform() * 8);
    Eigen::MatrixXd g(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) g(i, j) = rng.normal();
    }
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i) w(i) = rng.normal();
    const auto fit = min_distance_fit(g, w);
    const double achieved = (g * fit.theta - w).cwiseAbs().maxCoeff();
    CHECK(fit.objective == doctest::Approx(achieved).epsilon(1e-7));
    CHECK(fit.objective <= w.cwiseAbs().maxCoeff() + 1e-9);

    // no perturbation of theta improves the worst residual
    for (int k = 0; k < 20; ++k) {
      Eigen::VectorXd step(d);
      for (Eigen::Index j = 0; j < d; ++j) step(j) = 1e-3 * rng.normal();
      CHECK((g * (fit.theta + step) - w).cwiseAbs().maxCoeff() >= fit.objective - 1e-9);
    }

    Eigen::VectorXd v(d);
    for (Eigen::Index j = 0; j < d; ++j) v(j) = rng.normal();
    const auto shifted = min_distance_fit(g, w + g * v);
    CHECK(shifted.objective == doctest::Approx(fit.objective).epsilon(1e-7));
    CHECK((g * (shifted.theta - v) - w).cwiseAbs().maxCoeff() <= fit.objective + 1e-7);
  }
}

TEST_CASE("lp solver on a textbook problem") {
  // max 3x + 5y  s.t. x <= 4, 2y <= 12, 3x + 2y <= 18
  Eigen::MatrixXd a(3, 2);
  a << 1, 0, 0, 2, 3, 2;
  const auto sol = solve_lp(Eigen::Vector2d(-3, -5), a, Eigen::Vector3d(4, 12, 18));
  CHECK(sol.objective == doctest::Approx(-36.0));
  CHECK(sol.x(0) == doctest::Approx(2.0));
  CHECK(sol.x(1) == doctest::Approx(6.0));
}

TEST_CASE("lp solver handles negative right-hand sides and reports infeasibility") {
  // min x + y  s.t. x + y >= 2
  Eigen::MatrixXd a(1, 2);
  a << -1, -1;
  const auto sol = solve_lp(Eigen::Vector2d(1, 1), a, Eigen::VectorXd::Constant(1, -2.0));
  CHECK(sol.objective == doctest::Approx(2.0));

  Eigen::MatrixXd inf(2, 1);
  inf << 1, -1;
  CHECK_THROWS_AS((void)solve_lp(Eigen::VectorXd::Constant(1, 1.0), inf, Eigen::Vector2d(1, -2)), DomainError);
  Eigen::MatrixXd unb(1, 1);
  unb << -1;
  CHECK_THROWS_AS((void)solve_lp(Eigen::VectorXd::Constant(1, -1.0), unb, Eigen::VectorXd::Constant(1, 0.0)),
                  DomainError);
}

TEST_CASE("min norm point projects onto a half-space") {
  Eigen::MatrixXd h(1, 2);
  h << -1, -1;
  const Eigen::VectorXd x = min_norm_point(h, Eigen::VectorXd::Constant(1, -2.0), Eigen::Vector2d(3, 3));
  CHECK(x(0) == doctest::Approx(1.0));
  CHECK(x(1) == doctest::Approx(1.0));
}

TEST_CASE("estimator names round trip") {
  CHECK(parse_estimator(to_string(MeanEstimator::truncated_mean)) == MeanEstimator::truncated_mean);
  CHECK(parse_estimator(to_string(MeanEstimator::median_of_means)) == MeanEstimator::median_of_means);
  CHECK_THROWS((void)parse_estimator("catoni"));
}
