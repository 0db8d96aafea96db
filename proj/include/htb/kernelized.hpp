#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>

#include "htb/core.hpp"
#include "htb/design.hpp"
#include "htb/medpe.hpp"
#include "htb/noise.hpp"

namespace htb {

enum class KernelKind { matern, linear, rbf };

struct KernelSpec {
  KernelKind kind = KernelKind::matern;
  double nu = 2.5;
  double length = 1.0;

  void validate() const;
  [[nodiscard]] std::string describe() const;
  [[nodiscard]] static KernelSpec matern(double nu, double length) { return {KernelKind::matern, nu, length}; }
  [[nodiscard]] static KernelSpec linear() { return {KernelKind::linear, 0.0, 1.0}; }
  [[nodiscard]] static KernelSpec rbf(double length) { return {KernelKind::rbf, 0.0, length}; }
};

/// Parses "linear", "rbf:L", "matern:NU,L".
[[nodiscard]] KernelSpec parse_kernel(const std::string& text);

/// Matern correlation at distance r; closed forms for nu in {1/2, 3/2, 5/2}.
[[nodiscard]] double matern_correlation(double nu, double length, double r);

[[nodiscard]] double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& y);

/// K(x_i, y_j) over the rows of x and y.
[[nodiscard]] Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

/// Support of a design with its kernel Gram matrix (K_lambda)_ij = sqrt(l_i l_j) K(x_i, x_j)
/// and a factorization of K_lambda + gamma I.
class KernelDesignCache {
 public:
  /// `points` holds one candidate per row; zero-weight rows are dropped.
  KernelDesignCache(KernelSpec spec, const Eigen::MatrixXd& points, const Eigen::VectorXd& weights, double gamma);

  [[nodiscard]] const KernelSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] const Eigen::MatrixXd& support() const noexcept { return support_; }
  [[nodiscard]] const Eigen::VectorXd& weights() const noexcept { return weights_; }
  [[nodiscard]] const Eigen::MatrixXd& k_lambda() const noexcept { return k_lambda_; }
  [[nodiscard]] double gamma() const noexcept { return gamma_; }

  /// (sqrt(l_i) K(x_i, psi))_i.
  [[nodiscard]] Eigen::VectorXd k_vector(const Eigen::VectorXd& psi) const;
  /// gamma^{-1} K(psi, rho) - gamma^{-1} k(psi)' (K_lambda + gamma I)^{-1} k(rho).
  [[nodiscard]] double quadratic_form(const Eigen::VectorXd& psi, const Eigen::VectorXd& rho) const;

 private:
  KernelSpec spec_;
  Eigen::MatrixXd support_;
  Eigen::VectorXd weights_;
  Eigen::MatrixXd k_lambda_;
  Eigen::LLT<Eigen::MatrixXd> factor_;
  double gamma_;
};

/// phi(psi)' A(lambda)^{-1} phi(rho) for the design held in `cache`.
[[nodiscard]] double kernel_quadratic_form(const KernelDesignCache& cache, double gamma, const Eigen::VectorXd& psi,
                                           const Eigen::VectorXd& rho);

/// Quadratic forms from a kernel matrix over a fixed list of arms.
class KernelFormOracle final : public QuadraticFormOracle {
 public:
  explicit KernelFormOracle(Eigen::MatrixXd gram);

  [[nodiscard]] std::size_t size() const override { return static_cast<std::size_t>(k_.rows()); }
  [[nodiscard]] std::size_t span_dimension() const override { return span_; }
  /// Requires gamma > 0.
  [[nodiscard]] Eigen::MatrixXd forms(const Eigen::VectorXd& w, double gamma) const override;

 private:
  Eigen::MatrixXd k_;
  std::size_t span_;
};

/// Rows F with F F' = K, from the eigenvectors of K with eigenvalue above
/// 1e-12 times the largest.
[[nodiscard]] Eigen::MatrixXd kernel_features(const Eigen::MatrixXd& gram);

/// f(x) = sum_j c_j K(z_j, x).
struct RkhsFunction {
  Eigen::MatrixXd anchors;
  Eigen::VectorXd coefficients;

  [[nodiscard]] double operator()(const KernelSpec& spec, const Eigen::VectorXd& x) const;
  /// sqrt(c' K_zz c).
  [[nodiscard]] double rkhs_norm(const KernelSpec& spec) const;
};

class KernelEnvironment final : public Environment {
 public:
  /// Checks max |f| <= 1 over the domain points.
  KernelEnvironment(ActionSet domain, RkhsFunction f, KernelSpec spec, NoiseSpec noise);

  [[nodiscard]] const ActionSet& actions() const override { return domain_; }
  [[nodiscard]] double mean_reward(std::size_t index) const override { return means_[index]; }
  double sample_reward(std::size_t index, Rng& rng) const override;

  [[nodiscard]] const KernelSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] const RkhsFunction& function() const noexcept { return f_; }

 private:
  ActionSet domain_;
  RkhsFunction f_;
  KernelSpec spec_;
  NoiseSpec noise_;
  std::vector<double> means_;
};

/// Phase geometry served entirely by kernel evaluations.
class KernelGeometry final : public PhaseGeometry {
 public:
  KernelGeometry(const ActionSet& domain, const KernelSpec& spec);
  [[nodiscard]] std::unique_ptr<QuadraticFormOracle> oracle(std::span<const std::size_t> active) const override;
  [[nodiscard]] Eigen::MatrixXd fit_features(std::span<const std::size_t> active) const override;
  [[nodiscard]] std::size_t dimension() const override { return rank_; }

 private:
  [[nodiscard]] Eigen::MatrixXd restrict(std::span<const std::size_t> active) const;

  Eigen::MatrixXd gram_;
  std::size_t rank_;
};

[[nodiscard]] RunRecord run_kernel_medpe(const KernelEnvironment& env, const MedPeConfig& cfg, std::uint64_t seed,
                                         const PhaseObserver& observer = {});

[[nodiscard]] RunRecord run_kernel_medpe(const ActionSet& domain_points, const RkhsFunction& f_star,
                                         const KernelSpec& spec, const NoiseSpec& noise, const MedPeConfig& cfg,
                                         std::uint64_t seed);

struct MaternBound {
  double exponent = 0.0;  // eps d / (2 nu + d)
  double shape = 0.0;     // T^exponent
};

[[nodiscard]] MaternBound matern_design_bound(double nu, std::size_t d, double epsilon, double T);

/// Moment objective of the design MED-PE would use on `domain` at horizon T
/// (gamma = T^(-2 eps/(1+eps)), beta = 1).
[[nodiscard]] double kernel_design_value(const KernelSpec& spec, const ActionSet& domain, double epsilon, double T,
                                         std::size_t design_iters = 0, double design_tol = 0.05);

}  // namespace htb
