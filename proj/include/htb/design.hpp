#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <memory>

#include "htb/core.hpp"

namespace htb {

/// Probability vector over the rows of an ActionSet, in row order.
struct Design {
  Eigen::VectorXd weights;

  /// Entries >= 0 summing to 1 within 1e-12; `n` is the expected length.
  void validate(std::size_t n) const;
  [[nodiscard]] static Design uniform(std::size_t n);
  [[nodiscard]] static Design point_mass(std::size_t n, std::size_t index);
};

struct DesignProblem {
  ActionSet arms;
  double gamma = 0.0;
  double beta = 1.0;
  double epsilon = 1.0;

  void validate() const;
};

/// Supplies Q(w)_{ij} = a_i' A(w)^{-1} a_j with A(w) = gamma I + sum_k w_k a_k a_k'
/// for a fixed list of arms, either from explicit coordinates or from a kernel.
class QuadraticFormOracle {
 public:
  virtual ~QuadraticFormOracle() = default;
  [[nodiscard]] virtual std::size_t size() const = 0;
  /// Dimension of the span of the arms (numerical rank, relative cutoff 1e-10).
  [[nodiscard]] virtual std::size_t span_dimension() const = 0;
  /// Full n x n matrix. Throws SingularityError when A(w) is not positive definite.
  [[nodiscard]] virtual Eigen::MatrixXd forms(const Eigen::VectorXd& w, double gamma) const = 0;
  /// Diagonal of `forms`.
  [[nodiscard]] virtual Eigen::VectorXd norms(const Eigen::VectorXd& w, double gamma) const;
};

class LinearFormOracle final : public QuadraticFormOracle {
 public:
  /// One arm per row.
  explicit LinearFormOracle(Eigen::MatrixXd arms);

  [[nodiscard]] std::size_t size() const override { return static_cast<std::size_t>(x_.rows()); }
  [[nodiscard]] std::size_t span_dimension() const override { return span_; }
  [[nodiscard]] Eigen::MatrixXd forms(const Eigen::VectorXd& w, double gamma) const override;
  [[nodiscard]] Eigen::VectorXd norms(const Eigen::VectorXd& w, double gamma) const override;

 private:
  // L^{-1} X' for the Cholesky factor L of A(w).
  [[nodiscard]] Eigen::MatrixXd whitened(const Eigen::VectorXd& w, double gamma) const;

  Eigen::MatrixXd x_;
  std::size_t span_;
};

struct GramResult {
  Eigen::MatrixXd matrix;
  Eigen::MatrixXd inverse;
};

/// A = gamma I + sum_i lambda_i a_i a_i' and its inverse.
[[nodiscard]] GramResult regularized_gram(const DesignProblem& problem, const Design& lambda);

struct MomentValue {
  double value = 0.0;
  std::size_t argmax = 0;  // row of the maximizing arm
};

/// max_a sum_x w_x |Q_ax|^(1+eps) + beta^(1+eps) Q_aa^((1+eps)/2), from a precomputed Q.
[[nodiscard]] MomentValue moment_value(const Eigen::MatrixXd& q, const Eigen::VectorXd& w, double beta,
                                       double epsilon);

[[nodiscard]] double moment_objective(const DesignProblem& problem, const Design& lambda);

/// ceil(10 d ln ln max(d, 3)).
[[nodiscard]] std::size_t default_design_iters(std::size_t d);

struct GOptimalResult {
  Eigen::VectorXd weights;
  double max_norm = 0.0;   // max_a ||a||^2_{A^{-1}}
  double mean_norm = 0.0;  // sum_a w_a ||a||^2_{A^{-1}}
  std::size_t iterations = 0;
  bool converged = false;
};

/// Frank-Wolfe with away steps on the regularized D-optimal criterion, from
/// the uniform design. Stops once max_a ||a||^2 <= (1 + tol) sum_a w_a ||a||^2.
[[nodiscard]] GOptimalResult g_optimal_weights(const QuadraticFormOracle& oracle, double gamma,
                                               std::size_t max_iters, double tol);

[[nodiscard]] Design g_optimal_design(const ActionSet& arms, double gamma, std::size_t max_iters, double tol = 0.05);

struct RefineOptions {
  std::size_t max_iters = 200;
  double tol = 1e-6;
  double step = 0.1;       // c in the c / sqrt(k) schedule
  std::size_t patience = 20;
};

struct RefineResult {
  Eigen::VectorXd weights;
  double value = 0.0;
  double initial_value = 0.0;
  std::size_t iterations = 0;
};

/// Projected subgradient descent of the moment objective over the simplex,
/// keeping the best iterate.
[[nodiscard]] RefineResult minimize_moment_weights(const QuadraticFormOracle& oracle, double gamma, double beta,
                                                   double epsilon, const Eigen::VectorXd& init,
                                                   const RefineOptions& options);

[[nodiscard]] Design minimize_moment_objective(const DesignProblem& problem, const Design& init,
                                               std::size_t max_iters, double tol);

/// Euclidean projection onto the probability simplex.
[[nodiscard]] Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v);

/// Zeroes weights below `floor` and renormalizes.
[[nodiscard]] Eigen::VectorXd prune_weights(const Eigen::VectorXd& w, double floor = 1e-15);

enum class SpecialCase { simplex, lp_ball };

struct SpecialDesign {
  ActionSet support;
  Design design;
};

/// Uniform design over {e_i} (simplex) or {r e_i} (lp_ball).
[[nodiscard]] SpecialDesign special_case_design(SpecialCase kind, std::size_t d, double r = 1.0);

}  // namespace htb
