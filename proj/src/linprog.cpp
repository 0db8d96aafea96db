#include "htb/linprog.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "htb/errors.hpp"

namespace htb {

namespace {

class Tableau {
 public:
  Tableau(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double tol) : m_(A.rows()), n_(A.cols()), tol_(tol) {
    std::vector<Eigen::Index> negative;
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (b(i) < 0.0) negative.push_back(i);
    }
    n_art_ = static_cast<Eigen::Index>(negative.size());
    cols_ = n_ + m_ + n_art_;
    t_ = Eigen::MatrixXd::Zero(m_ + 1, cols_ + 1);
    basis_.assign(static_cast<std::size_t>(m_), 0);
    Eigen::Index art = 0;
    for (Eigen::Index i = 0; i < m_; ++i) {
      const double sign = b(i) < 0.0 ? -1.0 : 1.0;
      t_.row(i).head(n_) = sign * A.row(i);
      t_(i, n_ + i) = sign;
      t_(i, cols_) = sign * b(i);
      if (sign < 0.0) {
        t_(i, n_ + m_ + art) = 1.0;
        basis_[static_cast<std::size_t>(i)] = n_ + m_ + art;
        ++art;
      } else {
        basis_[static_cast<std::size_t>(i)] = n_ + i;
      }
    }
  }

  // Phase 1: minimize the sum of artificials. Returns the residual infeasibility.
  double phase_one(std::size_t& iterations, std::size_t max_iters) {
    if (n_art_ == 0) return 0.0;
    t_.row(m_).setZero();
    t_.row(m_).segment(n_ + m_, n_art_).setOnes();
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (is_artificial(basis_[static_cast<std::size_t>(i)])) t_.row(m_) -= t_.row(i);
    }
    run(iterations, max_iters, cols_);
    const double infeasibility = -t_(m_, cols_);
    // Drive remaining (zero-level) artificials out of the basis.
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (!is_artificial(basis_[static_cast<std::size_t>(i)])) continue;
      Eigen::Index best = -1;
      double best_abs = tol_;
      for (Eigen::Index j = 0; j < n_ + m_; ++j) {
        if (std::abs(t_(i, j)) > best_abs) {
          best_abs = std::abs(t_(i, j));
          best = j;
        }
      }
      if (best >= 0) pivot(i, best);
    }
    return infeasibility;
  }

  void phase_two(const Eigen::VectorXd& c, std::size_t& iterations, std::size_t max_iters) {
    t_.row(m_).setZero();
    t_.row(m_).head(n_) = c.transpose();
    for (Eigen::Index i = 0; i < m_; ++i) {
      const Eigen::Index bj = basis_[static_cast<std::size_t>(i)];
      const double cost = bj < n_ ? c(bj) : 0.0;
      if (cost != 0.0) t_.row(m_) -= cost * t_.row(i);
    }
    run(iterations, max_iters, n_ + m_);
  }

  [[nodiscard]] Eigen::VectorXd solution() const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n_);
    for (Eigen::Index i = 0; i < m_; ++i) {
      const Eigen::Index bj = basis_[static_cast<std::size_t>(i)];
      if (bj < n_) x(bj) = t_(i, cols_);
    }
    return x;
  }

 private:
  [[nodiscard]] bool is_artificial(Eigen::Index j) const { return j >= n_ + m_; }

  void pivot(Eigen::Index r, Eigen::Index j) {
    t_.row(r) /= t_(r, j);
    for (Eigen::Index i = 0; i <= m_; ++i) {
      if (i != r && t_(i, j) != 0.0) t_.row(i) -= t_(i, j) * t_.row(r);
    }
    basis_[static_cast<std::size_t>(r)] = j;
  }

  // Simplex iterations over columns [0, allowed).
  void run(std::size_t& iterations, std::size_t max_iters, Eigen::Index allowed) {
    bool bland = false;
    int degenerate_run = 0;
    for (;;) {
      Eigen::Index enter = -1;
      double most_negative = -tol_;
      for (Eigen::Index j = 0; j < allowed; ++j) {
        const double rc = t_(m_, j);
        if (rc < most_negative) {
          enter = j;
          if (bland) break;
          most_negative = rc;
        }
      }
      if (enter < 0) return;
      Eigen::Index leave = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < m_; ++i) {
        const double a = t_(i, enter);
        if (a <= tol_) continue;
        const double ratio = std::max(t_(i, cols_), 0.0) / a;
        if (ratio < best_ratio - tol_ ||
            (std::abs(ratio - best_ratio) <= tol_ && leave >= 0 &&
             basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)])) {
          best_ratio = std::min(ratio, best_ratio);
          leave = i;
        }
      }
      if (leave < 0) throw DomainError("linear program is unbounded");
      if (++iterations > max_iters) {
        std::ostringstream os;
        os << "simplex did not converge within " << max_iters << " pivots (" << m_ << " rows, " << n_
           << " structural columns, pricing " << (bland ? "bland" : "dantzig") << ")";
        throw NumericError(os.str());
      }
      if (best_ratio <= tol_) {
        if (++degenerate_run > 50) bland = true;
      } else {
        degenerate_run = 0;
      }
      pivot(leave, enter);
    }
  }

  Eigen::Index m_;
  Eigen::Index n_;
  Eigen::Index n_art_ = 0;
  Eigen::Index cols_ = 0;
  double tol_;
  Eigen::MatrixXd t_;
  std::vector<Eigen::Index> basis_;
};

}  // namespace

LpSolution solve_lp(const Eigen::VectorXd& c, const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double tol) {
  if (A.cols() != c.size() || A.rows() != b.size()) throw DomainError("solve_lp: dimension mismatch");
  if (!A.allFinite() || !b.allFinite() || !c.allFinite()) throw DomainError("solve_lp: non-finite input");
  Tableau tab(A, b, tol);
  LpSolution out;
  const std::size_t max_iters = 100 * static_cast<std::size_t>(A.rows() + A.cols()) + 1000;
  const double infeasibility = tab.phase_one(out.iterations, max_iters);
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  if (infeasibility > tol * scale * static_cast<double>(std::max<Eigen::Index>(1, A.rows()))) {
    throw DomainError("linear program is infeasible");
  }
  tab.phase_two(c, out.iterations, max_iters);
  out.x = tab.solution();
  out.objective = c.dot(out.x);
  return out;
}

Eigen::VectorXd min_norm_point(const Eigen::MatrixXd& H, const Eigen::VectorXd& h, const Eigen::VectorXd& x0,
                               double tol) {
  const Eigen::Index m = H.rows();
  const Eigen::Index n = H.cols();
  if (h.size() != m || x0.size() != n) throw DomainError("min_norm_point: dimension mismatch");
  Eigen::VectorXd x = x0;
  std::vector<Eigen::Index> work;
  std::vector<char> in_work(static_cast<std::size_t>(m), 0);
  const std::size_t max_iters = 20 * static_cast<std::size_t>(m + n) + 100;

  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    Eigen::MatrixXd hw(static_cast<Eigen::Index>(work.size()), n);
    for (std::size_t k = 0; k < work.size(); ++k) hw.row(static_cast<Eigen::Index>(k)) = H.row(work[k]);

    Eigen::VectorXd p = -x;
    if (!work.empty()) {
      const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(hw.transpose());
      const Eigen::Index rank = qr.rank();
      const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, rank);
      p = -(x - q * (q.transpose() * x));
    }

    if (p.norm() <= tol * std::max(1.0, x.norm())) {
      if (work.empty()) return x;
      const Eigen::VectorXd mu = hw.transpose().colPivHouseholderQr().solve(-x);
      Eigen::Index worst = 0;
      const double min_mu = mu.minCoeff(&worst);
      if (min_mu >= -tol) return x;
      in_work[static_cast<std::size_t>(work[static_cast<std::size_t>(worst)])] = 0;
      work.erase(work.begin() + worst);
      continue;
    }

    double alpha = 1.0;
    Eigen::Index block = -1;
    const double pnorm = p.norm();
    for (Eigen::Index j = 0; j < m; ++j) {
      if (in_work[static_cast<std::size_t>(j)]) continue;
      const double hp = H.row(j).dot(p);
      if (hp <= 1e-12 * H.row(j).norm() * pnorm) continue;
      const double step = std::max(0.0, (h(j) - H.row(j).dot(x)) / hp);
      if (step < alpha) {
        alpha = step;
        block = j;
      }
    }
    x += alpha * p;
    if (block >= 0) {
      work.push_back(block);
      in_work[static_cast<std::size_t>(block)] = 1;
    }
  }
  std::ostringstream os;
  os << "min-norm active-set solve did not converge within " << max_iters << " iterations (" << m
     << " constraints, dimension " << n << ", working set " << work.size() << ")";
  throw NumericError(os.str());
}

}  // namespace htb
