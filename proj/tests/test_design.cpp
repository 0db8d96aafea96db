#include <doctest.h>

#include <cmath>
#include <vector>

#include "htb/design.hpp"
#include "htb/environments.hpp"
#include "htb/errors.hpp"
#include "htb/rng.hpp"

using namespace htb;

namespace {

ActionSet basis(std::size_t d) { return ActionSet(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d))); }

ActionSet random_sphere(std::size_t n, std::size_t d, Rng& rng) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.normal();
    x.row(i).normalize();
  }
  return ActionSet(x);
}

// Brute-force objective straight from the definition.
double brute_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& w, double gamma, double beta, double eps) {
  const Eigen::Index d = x.cols();
  Eigen::MatrixXd a = gamma * Eigen::MatrixXd::Identity(d, d);
  for (Eigen::Index i = 0; i < x.rows(); ++i) a += w(i) * x.row(i).transpose() * x.row(i);
  const Eigen::MatrixXd inv = a.inverse();
  double best = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double m = 0.0;
    for (Eigen::Index k = 0; k < x.rows(); ++k) {
      m += w(k) * std::pow(std::abs(x.row(i).dot(inv * x.row(k).transpose())), 1.0 + eps);
    }
    const double norm = std::sqrt(x.row(i).dot(inv * x.row(i).transpose()));
    best = std::max(best, m + std::pow(beta * norm, 1.0 + eps));
  }
  return best;
}

}  // namespace

TEST_CASE("design validation") {
  CHECK_NOTHROW(Design::uniform(4).validate(4));
  CHECK_THROWS_AS(Design::uniform(4).validate(3), DomainError);
  CHECK_THROWS_AS((Design{Eigen::Vector2d(0.7, 0.4)}.validate(2)), DomainError);
  CHECK_THROWS_AS((Design{Eigen::Vector2d(1.1, -0.1)}.validate(2)), DomainError);
  CHECK(Design::point_mass(3, 1).weights(1) == 1.0);
}

TEST_CASE("regularized gram examples") {
  const DesignProblem p{basis(2), 0.0, 0.0, 1.0};
  const auto g = regularized_gram(p, Design::uniform(2));
  CHECK(g.matrix.isApprox(0.5 * Eigen::Matrix2d::Identity()));
  CHECK(g.inverse.isApprox(2.0 * Eigen::Matrix2d::Identity()));

  const DesignProblem q{basis(2), 1.0, 0.0, 1.0};
  CHECK(regularized_gram(q, Design::point_mass(2, 0)).matrix.isApprox(Eigen::Vector2d(2, 1).asDiagonal().toDenseMatrix()));

  Eigen::MatrixXd e1(1, 2);
  e1 << 1, 0;
  const DesignProblem s{ActionSet(e1), 0.0, 0.0, 1.0};
  try {
    (void)regularized_gram(s, Design::uniform(1));
    FAIL("expected a singularity error");
  } catch (const SingularityError& e) {
    CHECK(e.deficient_dimension() == 1);
  }
}

TEST_CASE("moment objective examples") {
  const DesignProblem p{basis(2), 0.0, 0.0, 1.0};
  CHECK(moment_objective(p, Design::uniform(2)) == doctest::Approx(2.0).epsilon(1e-14));

  const DesignProblem q{basis(2), 0.0, 1.0, 0.5};
  CHECK(moment_objective(q, Design::uniform(2)) == doctest::Approx(3.096006392880524).epsilon(1e-14));

  double prev = 1e300;
  for (const double gamma : {0.01, 0.1, 1.0, 10.0, 100.0, 1e4}) {
    const DesignProblem r{basis(3), gamma, 0.0, 0.7};
    const double v = moment_objective(r, Design::uniform(3));
    CHECK(v < prev);
    prev = v;
  }
  CHECK(prev < 1e-3);
}

TEST_CASE("moment objective matches a brute-force oracle") {
  Rng rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t d = 1 + static_cast<std::size_t>(rng.uniform() * 4);
    const std::size_t n = d + static_cast<std::size_t>(rng.uniform() * 5);
    const ActionSet arms = random_sphere(n, d, rng);
    Eigen::VectorXd w(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = 0.05 + rng.uniform();
    w /= w.sum();
    const double gamma = rng.uniform() < 0.3 ? 0.0 : rng.uniform();
    const double beta = rng.uniform() * 2.0;
    const double eps = 0.1 + 0.9 * rng.uniform();
    const DesignProblem p{arms, gamma, beta, eps};
    CHECK(moment_objective(p, Design{w}) ==
          doctest::Approx(brute_objective(arms.vectors(), w, gamma, beta, eps)).epsilon(1e-9));
  }
}

TEST_CASE("moment objective properties") {
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t d = 2 + static_cast<std::size_t>(rng.uniform() * 3);
    const std::size_t n = d + 3;
    const ActionSet arms = random_sphere(n, d, rng);
    Eigen::VectorXd w(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = 0.05 + rng.uniform();
    w /= w.sum();

    // eps = 1, beta = 0, gamma = 0: the G-optimal value itself
    const DesignProblem p{arms, 0.0, 0.0, 1.0};
    const auto g = regularized_gram(p, Design{w});
    const double gmax = (arms.vectors() * g.inverse).cwiseProduct(arms.vectors()).rowwise().sum().maxCoeff();
    CHECK(moment_objective(p, Design{w}) == doctest::Approx(gmax).epsilon(1e-10));
    const DesignProblem pg{arms, 0.3, 0.0, 1.0};
    const auto gg = regularized_gram(pg, Design{w});
    const double gmax_reg = (arms.vectors() * gg.inverse).cwiseProduct(arms.vectors()).rowwise().sum().maxCoeff();
    CHECK(moment_objective(pg, Design{w}) <= gmax_reg + 1e-12);

    // permutation invariance
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = (i + 2) % n;
    const ActionSet permuted = arms.subset(perm);
    Eigen::VectorXd wp(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) wp(static_cast<Eigen::Index>(i)) = w(static_cast<Eigen::Index>(perm[i]));
    const DesignProblem a{arms, 0.1, 1.0, 0.5};
    const DesignProblem b{permuted, 0.1, 1.0, 0.5};
    CHECK(moment_objective(a, Design{w}) == doctest::Approx(moment_objective(b, Design{wp})).epsilon(1e-12));
  }
}

TEST_CASE("g-optimal design examples") {
  for (const std::size_t d : {2u, 3u, 6u}) {
    const Design g = g_optimal_design(basis(d), 0.0, 1000, 1e-9);
    for (Eigen::Index i = 0; i < g.weights.size(); ++i) {
      CHECK(g.weights(i) == doctest::Approx(1.0 / static_cast<double>(d)).epsilon(1e-6));
    }
    const DesignProblem p{basis(d), 0.0, 0.0, 1.0};
    CHECK(moment_objective(p, g) == doctest::Approx(static_cast<double>(d)).epsilon(1e-6));
  }

  Eigen::MatrixXd one(1, 1);
  one << 1.0;
  const Design single = g_optimal_design(ActionSet(one), 0.0, 10);
  CHECK(single.weights(0) == 1.0);

  Eigen::MatrixXd dup(3, 2);
  dup << 1, 0, 1, 0, 0, 1;
  const Design gd = g_optimal_design(ActionSet(dup, {0, 1, 2}, 1.0), 0.0, 5000, 1e-9);
  CHECK(gd.weights(0) + gd.weights(1) == doctest::Approx(0.5).epsilon(1e-6));
  const DesignProblem pd{ActionSet(dup, {0, 1, 2}, 1.0), 0.0, 0.0, 1.0};
  CHECK(moment_objective(pd, gd) == doctest::Approx(2.0).epsilon(1e-6));

  Eigen::MatrixXd flat(2, 2);
  flat << 1, 0, -1, 0;
  CHECK_THROWS_AS((void)g_optimal_design(ActionSet(flat), 0.0, 10), SingularityError);
}

TEST_CASE("g-optimal design on the 2-simplex beats a brute-force grid") {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const ActionSet arms = random_sphere(3, 2, rng);
    const Design g = g_optimal_design(arms, 0.0, 5000, 1e-10);
    const DesignProblem p{arms, 0.0, 0.0, 1.0};
    const double fw = moment_objective(p, g);
    double grid_best = 1e300;
    for (int i = 1; i < 200; ++i) {
      for (int j = 1; i + j < 200; ++j) {
        const Eigen::Vector3d w(i / 200.0, j / 200.0, (200 - i - j) / 200.0);
        grid_best = std::min(grid_best, brute_objective(arms.vectors(), w, 0.0, 0.0, 1.0));
      }
    }
    CHECK(fw <= grid_best + 1e-9);
    CHECK(fw == doctest::Approx(2.0).epsilon(1e-6));
  }
}

TEST_CASE("kiefer-wolfowitz: optimal g-value equals d") {
  Rng rng(9);
  for (const std::size_t d : {2u, 4u, 7u}) {
    const ActionSet arms = random_sphere(3 * d, d, rng);
    const LinearFormOracle oracle(arms.vectors());
    const auto r = g_optimal_weights(oracle, 0.0, 100000, 1e-9);
    CHECK(r.converged);
    CHECK(r.max_norm == doctest::Approx(static_cast<double>(d)).epsilon(1e-7));
    CHECK(r.mean_norm == doctest::Approx(static_cast<double>(d)).epsilon(1e-9));
  }
}

TEST_CASE("default design iteration count") {
  CHECK(default_design_iters(1) == static_cast<std::size_t>(std::ceil(10.0 * std::log(std::log(3.0)))));
  CHECK(default_design_iters(10) == static_cast<std::size_t>(std::ceil(100.0 * std::log(std::log(10.0)))));
}

TEST_CASE("refinement never worsens the warm start") {
  Rng rng(13);
  for (int trial = 0; trial < 15; ++trial) {
    const std::size_t d = 2 + static_cast<std::size_t>(rng.uniform() * 4);
    const ActionSet arms = random_sphere(2 * d + 1, d, rng);
    const double eps = 0.2 + 0.8 * rng.uniform();
    const DesignProblem p{arms, 1e-3, 1.0, eps};
    const Design init = g_optimal_design(arms, p.gamma, default_design_iters(d));
    const Design out = minimize_moment_objective(p, init, 200, 1e-6);
    CHECK_NOTHROW(out.validate(arms.size()));
    CHECK(moment_objective(p, out) <= moment_objective(p, init) + 1e-12);
  }
}

TEST_CASE("refinement examples") {
  const DesignProblem p{basis(4), 0.0, 0.0, 1.0};
  CHECK(moment_objective(p, minimize_moment_objective(p, Design::uniform(4), 200, 1e-6)) <= 4.0 + 1e-9);

  Eigen::MatrixXd one(1, 2);
  one << 0.6, 0.8;
  const DesignProblem s{ActionSet(one), 0.1, 1.0, 0.5};
  CHECK(minimize_moment_objective(s, Design::uniform(1), 50, 1e-6).weights(0) == 1.0);

  for (const double eps : {0.2, 0.5, 1.0}) {
    const std::size_t d = 5;
    const DesignProblem q{basis(d), 0.0, 0.0, eps};
    const Design out = minimize_moment_objective(q, Design::uniform(d), 100, 1e-6);
    CHECK(moment_objective(q, out) <= std::pow(static_cast<double>(d), eps) + 1e-9);
  }
}

TEST_CASE("simplex projection") {
  const Eigen::VectorXd p = project_to_simplex(Eigen::Vector3d(0.5, 0.5, 0.5));
  CHECK(p.isApprox(Eigen::Vector3d::Constant(1.0 / 3.0)));
  const Eigen::VectorXd q = project_to_simplex(Eigen::Vector3d(2.0, 0.0, -1.0));
  CHECK(q.isApprox(Eigen::Vector3d(1.0, 0.0, 0.0)));
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    Eigen::VectorXd v(6);
    for (Eigen::Index i = 0; i < 6; ++i) v(i) = 3.0 * rng.normal();
    const Eigen::VectorXd w = project_to_simplex(v);
    CHECK(w.minCoeff() >= 0.0);
    CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-12));
    // optimality: no other simplex point nearer
    for (int k = 0; k < 10; ++k) {
      Eigen::VectorXd u(6);
      for (Eigen::Index i = 0; i < 6; ++i) u(i) = rng.uniform();
      u /= u.sum();
      CHECK((u - v).norm() >= (w - v).norm() - 1e-12);
    }
  }
  const Eigen::VectorXd pruned = prune_weights(Eigen::Vector3d(0.5, 1e-17, 0.5));
  CHECK(pruned(1) == 0.0);
  CHECK(pruned.sum() == doctest::Approx(1.0));
}

TEST_CASE("special case designs") {
  const auto s = special_case_design(SpecialCase::simplex, 3);
  CHECK(s.support.size() == 3);
  CHECK(s.design.weights.isApprox(Eigen::Vector3d::Constant(1.0 / 3.0)));

  const auto l = special_case_design(SpecialCase::lp_ball, 2, 0.5);
  CHECK(l.support.vector(1).isApprox(Eigen::Vector2d(0.0, 0.5)));
  const DesignProblem p{l.support, 0.0, 0.0, 1.0};
  CHECK(regularized_gram(p, l.design).matrix.isApprox(0.125 * Eigen::Matrix2d::Identity()));

  const auto one = special_case_design(SpecialCase::simplex, 1);
  CHECK(one.design.weights(0) == 1.0);
  CHECK_THROWS_AS((void)special_case_design(SpecialCase::lp_ball, 2, 0.0), DomainError);
}

TEST_CASE("simplex uniform design bounds the moment term at random simplex points") {
  Rng rng(31);
  for (std::size_t d = 1; d <= 8; ++d) {
    for (const double eps : {0.1, 0.5, 0.9, 1.0}) {
      Eigen::MatrixXd x(static_cast<Eigen::Index>(d + 20), static_cast<Eigen::Index>(d));
      x.topRows(static_cast<Eigen::Index>(d)) = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
      for (Eigen::Index i = static_cast<Eigen::Index>(d); i < x.rows(); ++i) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < x.cols(); ++j) s += (x(i, j) = -std::log(rng.uniform_open()));
        x.row(i) /= s;
      }
      Eigen::VectorXd w = Eigen::VectorXd::Zero(x.rows());
      w.head(static_cast<Eigen::Index>(d)).setConstant(1.0 / static_cast<double>(d));
      const DesignProblem p{ActionSet(x), 0.0, 0.0, eps};
      CHECK(moment_objective(p, Design{w}) <= std::pow(static_cast<double>(d), eps) * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("design bound on random spanning sets") {
  Rng rng(77);
  for (const std::size_t d : {2u, 3u, 5u}) {
    for (const double eps : {0.5, 1.0}) {
      const double T = 1e5;
      const double gamma = std::pow(T, -2.0 * eps / (1.0 + eps));
      const ActionSet arms = random_sphere(3 * d, d, rng);
      const LinearFormOracle oracle(arms.vectors());
      const auto g = g_optimal_weights(oracle, gamma, 100000, 1e-9);
      const DesignProblem p{arms, gamma, 1.0, eps};
      CHECK(moment_objective(p, Design{g.weights}) <= 2.0 * std::pow(static_cast<double>(d), (1.0 + eps) / 2.0));
    }
  }
}
