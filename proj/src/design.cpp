#include "htb/design.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "htb/errors.hpp"

namespace htb {

namespace {

std::size_t count_below(const Eigen::VectorXd& eigenvalues, double cutoff) {
  return static_cast<std::size_t>((eigenvalues.array() < cutoff).count());
}

Eigen::MatrixXd gram_of(const Eigen::MatrixXd& x, const Eigen::VectorXd& w, double gamma) {
  Eigen::MatrixXd a = x.transpose() * w.asDiagonal() * x;
  a.diagonal().array() += gamma;
  return a;
}

// Cholesky factor of A(w); singular matrices raise with the size of the null space.
Eigen::LLT<Eigen::MatrixXd> factor_gram(const Eigen::MatrixXd& a, double gamma) {
  if (gamma == 0.0) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
    const std::size_t deficient = count_below(es.eigenvalues(), 1e-12);
    if (deficient > 0) {
      throw SingularityError("design gram matrix is singular with gamma = 0", deficient);
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
    throw SingularityError("design gram matrix is not positive definite",
                           std::max<std::size_t>(1, count_below(es.eigenvalues(), 1e-12)));
  }
  return llt;
}

}  // namespace

void Design::validate(std::size_t n) const {
  if (static_cast<std::size_t>(weights.size()) != n) {
    throw DomainError("design has " + std::to_string(weights.size()) + " weights for " + std::to_string(n) + " arms");
  }
  if (!weights.allFinite() || (weights.array() < 0.0).any()) throw DomainError("design weights must be >= 0");
  if (std::abs(weights.sum() - 1.0) > 1e-12) throw DomainError("design weights must sum to 1");
}

Design Design::uniform(std::size_t n) {
  if (n == 0) throw DomainError("design over an empty set");
  return {Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n))};
}

Design Design::point_mass(std::size_t n, std::size_t index) {
  if (index >= n) throw DomainError("point mass index out of range");
  Design out{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))};
  out.weights(static_cast<Eigen::Index>(index)) = 1.0;
  return out;
}

void DesignProblem::validate() const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw DomainError("gamma must be finite and >= 0");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw DomainError("beta must be finite and >= 0");
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw DomainError("epsilon must lie in (0, 1]");
}

Eigen::VectorXd QuadraticFormOracle::norms(const Eigen::VectorXd& w, double gamma) const {
  return forms(w, gamma).diagonal();
}

LinearFormOracle::LinearFormOracle(Eigen::MatrixXd arms) : x_(std::move(arms)) {
  if (x_.rows() == 0 || x_.cols() == 0) throw DomainError("quadratic form oracle over an empty arm set");
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x_.transpose() * x_, Eigen::EigenvaluesOnly);
  const double top = es.eigenvalues().maxCoeff();
  span_ = top > 0.0 ? static_cast<std::size_t>((es.eigenvalues().array() > 1e-10 * top).count()) : 0;
}

Eigen::MatrixXd LinearFormOracle::whitened(const Eigen::VectorXd& w, double gamma) const {
  if (w.size() != x_.rows()) throw DomainError("weight vector length does not match the arm count");
  const auto llt = factor_gram(gram_of(x_, w, gamma), gamma);
  return llt.matrixL().solve(x_.transpose());
}

Eigen::MatrixXd LinearFormOracle::forms(const Eigen::VectorXd& w, double gamma) const {
  const Eigen::MatrixXd b = whitened(w, gamma);
  return b.transpose() * b;
}

Eigen::VectorXd LinearFormOracle::norms(const Eigen::VectorXd& w, double gamma) const {
  return whitened(w, gamma).colwise().squaredNorm().transpose();
}

GramResult regularized_gram(const DesignProblem& problem, const Design& lambda) {
  problem.validate();
  lambda.validate(problem.arms.size());
  GramResult out;
  out.matrix = gram_of(problem.arms.vectors(), lambda.weights, problem.gamma);
  const auto llt = factor_gram(out.matrix, problem.gamma);
  out.inverse = llt.solve(Eigen::MatrixXd::Identity(out.matrix.rows(), out.matrix.cols()));
  return out;
}

MomentValue moment_value(const Eigen::MatrixXd& q, const Eigen::VectorXd& w, double beta, double epsilon) {
  const double p = 1.0 + epsilon;
  const double bp = std::pow(beta, p);
  std::vector<Eigen::Index> support;
  for (Eigen::Index x = 0; x < w.size(); ++x) {
    if (w(x) > 0.0) support.push_back(x);
  }
  MomentValue out{-1.0, 0};
  for (Eigen::Index a = 0; a < q.rows(); ++a) {
    double moment = 0.0;
    for (const Eigen::Index x : support) moment += w(x) * std::pow(std::abs(q(a, x)), p);
    const double value = moment + bp * std::pow(std::max(q(a, a), 0.0), p / 2.0);
    if (value > out.value) out = {value, static_cast<std::size_t>(a)};
  }
  return out;
}

double moment_objective(const DesignProblem& problem, const Design& lambda) {
  problem.validate();
  lambda.validate(problem.arms.size());
  const LinearFormOracle oracle(problem.arms.vectors());
  return moment_value(oracle.forms(lambda.weights, problem.gamma), lambda.weights, problem.beta, problem.epsilon)
      .value;
}

std::size_t default_design_iters(std::size_t d) {
  const double dd = static_cast<double>(std::max<std::size_t>(d, 3));
  return static_cast<std::size_t>(std::ceil(10.0 * static_cast<double>(d) * std::log(std::log(dd))));
}

GOptimalResult g_optimal_weights(const QuadraticFormOracle& oracle, double gamma, std::size_t max_iters, double tol) {
  if (!(gamma >= 0.0)) throw DomainError("gamma must be >= 0");
  if (!(tol >= 0.0)) throw DomainError("design tolerance must be >= 0");
  const std::size_t n = oracle.size();
  GOptimalResult out;
  out.weights = Design::uniform(n).weights;
  Eigen::VectorXd& w = out.weights;
  for (;;) {
    const Eigen::VectorXd g = oracle.norms(w, gamma);
    const double gbar = w.dot(g);
    Eigen::Index up = 0;
    const double gmax = g.maxCoeff(&up);
    out.max_norm = gmax;
    out.mean_norm = gbar;
    if (gmax <= (1.0 + tol) * gbar) {
      out.converged = true;
      break;
    }
    if (out.iterations >= max_iters) break;
    ++out.iterations;

    Eigen::Index down = -1;
    std::size_t support = 0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      if (w(i) <= 0.0) continue;
      ++support;
      if (down < 0 || g(i) < g(down)) down = i;
    }
    const double forward_gap = gmax - gbar;
    const double away_gap = gbar - g(down);
    if (support <= 1 || forward_gap >= away_gap) {
      double alpha = gmax > 1.0 ? (gmax - gbar) / (gbar * (gmax - 1.0))
                                : 1.0 / static_cast<double>(out.iterations + 1);
      alpha = std::clamp(alpha, 0.0, 1.0);
      w *= 1.0 - alpha;
      w(up) += alpha;
    } else {
      const double wd = w(down);
      const double alpha_max = wd / (1.0 - wd);
      double alpha = g(down) > 1.0 ? (gbar - g(down)) / (gbar * (g(down) - 1.0)) : alpha_max;
      alpha = std::clamp(alpha, 0.0, alpha_max);
      w *= 1.0 + alpha;
      w(down) -= alpha;
      if (alpha == alpha_max || w(down) < 0.0) w(down) = 0.0;
    }
    w /= w.sum();
  }
  return out;
}

Design g_optimal_design(const ActionSet& arms, double gamma, std::size_t max_iters, double tol) {
  const LinearFormOracle oracle(arms.vectors());
  return {g_optimal_weights(oracle, gamma, max_iters, tol).weights};
}

Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v) {
  const Eigen::Index n = v.size();
  if (n == 0) throw DomainError("projection onto an empty simplex");
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    cumulative += u[static_cast<std::size_t>(j)];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[static_cast<std::size_t>(j)] - candidate > 0.0) theta = candidate;
  }
  Eigen::VectorXd out = (v.array() - theta).cwiseMax(0.0);
  return out / out.sum();
}

Eigen::VectorXd prune_weights(const Eigen::VectorXd& w, double floor) {
  Eigen::VectorXd out = (w.array() < floor).select(0.0, w);
  const double total = out.sum();
  if (!(total > 0.0)) throw DomainError("design has no weight above the pruning floor");
  return out / total;
}

RefineResult minimize_moment_weights(const QuadraticFormOracle& oracle, double gamma, double beta, double epsilon,
                                     const Eigen::VectorXd& init, const RefineOptions& options) {
  Design{init}.validate(oracle.size());
  const double p = 1.0 + epsilon;
  const double bp = std::pow(beta, p);

  Eigen::VectorXd w = init;
  Eigen::MatrixXd q = oracle.forms(w, gamma);
  MomentValue current = moment_value(q, w, beta, epsilon);

  RefineResult out;
  out.weights = w;
  out.value = current.value;
  out.initial_value = current.value;

  double c = options.step;
  std::size_t stale = 0;
  for (std::size_t k = 1; k <= options.max_iters; ++k) {
    out.iterations = k;
    const auto a = static_cast<Eigen::Index>(current.argmax);
    // Subgradient of the maximizing arm's term; dQ_{a x'} / dw_x = -Q_{ax} Q_{x x'}.
    Eigen::VectorXd r(w.size());
    for (Eigen::Index x = 0; x < w.size(); ++x) {
      const double v = q(a, x);
      r(x) = w(x) == 0.0 ? 0.0 : w(x) * p * std::pow(std::abs(v), p - 1.0) * (v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0));
    }
    const Eigen::VectorXd qr = q * r;
    Eigen::VectorXd grad(w.size());
    const double qaa = q(a, a);
    const double norm_coef = (bp > 0.0 && qaa > 0.0) ? bp * (p / 2.0) * std::pow(qaa, p / 2.0 - 1.0) : 0.0;
    for (Eigen::Index x = 0; x < w.size(); ++x) {
      const double qax = q(a, x);
      grad(x) = std::pow(std::abs(qax), p) - qax * qr(x) - norm_coef * qax * qax;
    }
    const double gnorm = grad.norm();
    if (!(gnorm > 0.0) || !std::isfinite(gnorm)) break;

    const Eigen::VectorXd candidate =
        project_to_simplex(w - (c / std::sqrt(static_cast<double>(k))) * (grad / gnorm));
    Eigen::MatrixXd q_next;
    try {
      q_next = oracle.forms(candidate, gamma);
    } catch (const SingularityError&) {
      c *= 0.5;
      if (++stale >= options.patience) break;
      continue;
    }
    w = candidate;
    q = std::move(q_next);
    current = moment_value(q, w, beta, epsilon);
    if (current.value < out.value) {
      const bool significant = current.value < out.value * (1.0 - options.tol);
      out.value = current.value;
      out.weights = w;
      stale = significant ? 0 : stale + 1;
    } else {
      ++stale;
    }
    if (stale >= options.patience) break;
  }
  return out;
}

Design minimize_moment_objective(const DesignProblem& problem, const Design& init, std::size_t max_iters, double tol) {
  problem.validate();
  init.validate(problem.arms.size());
  const LinearFormOracle oracle(problem.arms.vectors());
  RefineOptions options;
  options.max_iters = max_iters;
  options.tol = tol;
  return {minimize_moment_weights(oracle, problem.gamma, problem.beta, problem.epsilon, init.weights, options).weights};
}

SpecialDesign special_case_design(SpecialCase kind, std::size_t d, double r) {
  if (d == 0) throw DomainError("special_case_design: d must be >= 1");
  const double scale = kind == SpecialCase::simplex ? 1.0 : r;
  if (!(scale > 0.0)) throw DomainError("special_case_design: r must be positive");
  const auto dd = static_cast<Eigen::Index>(d);
  return {ActionSet(scale * Eigen::MatrixXd::Identity(dd, dd), std::max(scale, 1.0)), Design::uniform(d)};
}

}  // namespace htb
