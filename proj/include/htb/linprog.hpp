#pragma once

#include <Eigen/Dense>
#include <cstddef>

namespace htb {

struct LpSolution {
  Eigen::VectorXd x;
  double objective = 0.0;
  std::size_t iterations = 0;
};

/// min c'x  s.t.  A x <= b,  x >= 0.
/// Dense two-phase tableau simplex. Dantzig pricing, switching to Bland's rule
/// after a run of degenerate pivots. Throws DomainError when infeasible or
/// unbounded and NumericError when the pivot budget is exhausted.
[[nodiscard]] LpSolution solve_lp(const Eigen::VectorXd& c, const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                  double tol = 1e-9);

/// min ||x||_2  s.t.  H x <= h, starting from a feasible x0.
/// Primal active-set method with identity Hessian.
[[nodiscard]] Eigen::VectorXd min_norm_point(const Eigen::MatrixXd& H, const Eigen::VectorXd& h,
                                             const Eigen::VectorXd& x0, double tol = 1e-9);

}  // namespace htb
