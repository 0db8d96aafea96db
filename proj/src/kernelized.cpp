#include "htb/kernelized.hpp"

#include <cmath>
#include <sstream>

#include "htb/errors.hpp"

namespace htb {

namespace {

std::size_t numerical_rank(const Eigen::VectorXd& eigenvalues) {
  const double top = eigenvalues.maxCoeff();
  if (!(top > 0.0)) return 0;
  return static_cast<std::size_t>((eigenvalues.array() > 1e-10 * top).count());
}

}  // namespace

void KernelSpec::validate() const {
  if (!(length > 0.0) || !std::isfinite(length)) throw DomainError("kernel length scale must be positive");
  if (kind == KernelKind::matern && (!(nu > 0.0) || !std::isfinite(nu))) {
    throw DomainError("matern smoothness nu must be positive");
  }
}

std::string KernelSpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind) {
    case KernelKind::linear: os << "linear"; break;
    case KernelKind::rbf: os << "rbf:" << length; break;
    case KernelKind::matern: os << "matern:" << nu << ',' << length; break;
  }
  return os.str();
}

KernelSpec parse_kernel(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string args = colon == std::string::npos ? std::string{} : text.substr(colon + 1);
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw DomainError("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw DomainError("kernel spec '" + text + "': cannot parse number '" + s + "'");
    }
  };
  KernelSpec spec;
  if (kind == "linear") {
    spec = KernelSpec::linear();
  } else if (kind == "rbf") {
    spec = KernelSpec::rbf(args.empty() ? 1.0 : number(args));
  } else if (kind == "matern") {
    spec = KernelSpec::matern(2.5, 1.0);
    if (!args.empty()) {
      const auto comma = args.find(',');
      spec.nu = number(args.substr(0, comma));
      if (comma != std::string::npos) spec.length = number(args.substr(comma + 1));
    }
  } else {
    throw DomainError("unknown kernel kind '" + kind + "'");
  }
  spec.validate();
  return spec;
}

double matern_correlation(double nu, double length, double r) {
  if (!(nu > 0.0) || !(length > 0.0)) throw DomainError("matern: nu and length must be positive");
  if (r < 0.0) throw DomainError("matern: distance must be >= 0");
  const double s = r / length;
  if (nu == 0.5) return std::exp(-s);
  if (nu == 1.5) {
    const double z = std::sqrt(3.0) * s;
    return (1.0 + z) * std::exp(-z);
  }
  if (nu == 2.5) {
    const double z = std::sqrt(5.0) * s;
    return (1.0 + z + z * z / 3.0) * std::exp(-z);
  }
  const double z = std::sqrt(2.0 * nu) * s;
  if (z < 1e-12) return 1.0;
  if (z > 700.0) return 0.0;
  const double log_pref = (1.0 - nu) * std::log(2.0) - std::lgamma(nu) + nu * std::log(z);
  return std::exp(log_pref) * std::cyl_bessel_k(nu, z);
}

double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  spec.validate();
  if (x.size() != y.size()) throw DomainError("kernel_eval: dimension mismatch");
  switch (spec.kind) {
    case KernelKind::linear: return x.dot(y);
    case KernelKind::rbf: return std::exp(-(x - y).squaredNorm() / (2.0 * spec.length * spec.length));
    case KernelKind::matern: return matern_correlation(spec.nu, spec.length, (x - y).norm());
  }
  return 0.0;
}

Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  spec.validate();
  if (x.cols() != y.cols()) throw DomainError("kernel_matrix: dimension mismatch");
  if (spec.kind == KernelKind::linear) return x * y.transpose();
  Eigen::MatrixXd k(x.rows(), y.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < y.rows(); ++j) k(i, j) = kernel_eval(spec, x.row(i).transpose(), y.row(j).transpose());
  }
  return k;
}

KernelDesignCache::KernelDesignCache(KernelSpec spec, const Eigen::MatrixXd& points, const Eigen::VectorXd& weights,
                                     double gamma)
    : spec_(spec), gamma_(gamma) {
  spec_.validate();
  if (!(gamma > 0.0)) throw DomainError("kernel design cache requires gamma > 0");
  if (points.rows() != weights.size()) throw DomainError("kernel design cache: one weight per point required");
  Design{weights}.validate(static_cast<std::size_t>(weights.size()));
  const Eigen::Index s = (weights.array() > 0.0).count();
  support_.resize(s, points.cols());
  weights_.resize(s);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    if (weights(i) <= 0.0) continue;
    support_.row(k) = points.row(i);
    weights_(k) = weights(i);
    ++k;
  }
  const Eigen::VectorXd root = weights_.cwiseSqrt();
  k_lambda_ = root.asDiagonal() * kernel_matrix(spec_, support_, support_) * root.asDiagonal();
  Eigen::MatrixXd shifted = k_lambda_;
  shifted.diagonal().array() += gamma_;
  factor_.compute(shifted);
  if (factor_.info() != Eigen::Success) throw NumericError("kernel design cache: factorization of K_lambda + gamma I failed");
}

Eigen::VectorXd KernelDesignCache::k_vector(const Eigen::VectorXd& psi) const {
  Eigen::VectorXd out(support_.rows());
  for (Eigen::Index i = 0; i < support_.rows(); ++i) {
    out(i) = std::sqrt(weights_(i)) * kernel_eval(spec_, support_.row(i).transpose(), psi);
  }
  return out;
}

double KernelDesignCache::quadratic_form(const Eigen::VectorXd& psi, const Eigen::VectorXd& rho) const {
  const Eigen::VectorXd kr = k_vector(rho);
  return (kernel_eval(spec_, psi, rho) - k_vector(psi).dot(factor_.solve(kr))) / gamma_;
}

double kernel_quadratic_form(const KernelDesignCache& cache, double gamma, const Eigen::VectorXd& psi,
                             const Eigen::VectorXd& rho) {
  if (gamma != cache.gamma()) throw DomainError("kernel_quadratic_form: gamma differs from the cached factorization");
  return cache.quadratic_form(psi, rho);
}

KernelFormOracle::KernelFormOracle(Eigen::MatrixXd gram) : k_(std::move(gram)) {
  if (k_.rows() == 0 || k_.rows() != k_.cols()) throw DomainError("kernel oracle needs a square non-empty Gram matrix");
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k_, Eigen::EigenvaluesOnly);
  span_ = numerical_rank(es.eigenvalues());
}

Eigen::MatrixXd KernelFormOracle::forms(const Eigen::VectorXd& w, double gamma) const {
  if (!(gamma > 0.0)) throw DomainError("kernel quadratic forms require gamma > 0");
  if (w.size() != k_.rows()) throw DomainError("weight vector length does not match the arm count");
  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w(i) > 0.0) support.push_back(i);
  }
  const auto s = static_cast<Eigen::Index>(support.size());
  // Rows sqrt(w_i) K(x_i, .) over the support.
  Eigen::MatrixXd dk(s, k_.cols());
  for (Eigen::Index r = 0; r < s; ++r) dk.row(r) = std::sqrt(w(support[static_cast<std::size_t>(r)])) * k_.row(support[static_cast<std::size_t>(r)]);
  Eigen::MatrixXd k_lambda(s, s);
  for (Eigen::Index r = 0; r < s; ++r) {
    for (Eigen::Index c = 0; c < s; ++c) {
      k_lambda(r, c) = dk(r, support[static_cast<std::size_t>(c)]) * std::sqrt(w(support[static_cast<std::size_t>(c)]));
    }
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (k_lambda + k_lambda.transpose()));
  const Eigen::VectorXd scale = (es.eigenvalues().cwiseMax(0.0).array() + gamma).rsqrt();
  const Eigen::MatrixXd m = scale.asDiagonal() * (es.eigenvectors().transpose() * dk);
  return (k_ - m.transpose() * m) / gamma;
}

Eigen::MatrixXd kernel_features(const Eigen::MatrixXd& gram) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (gram + gram.transpose()));
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double top = ev.maxCoeff();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = ev.size() - 1; i >= 0; --i) {
    if (top > 0.0 && ev(i) > 1e-12 * top) keep.push_back(i);
  }
  if (keep.empty()) return Eigen::MatrixXd::Zero(gram.rows(), 1);
  Eigen::MatrixXd f(gram.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    f.col(static_cast<Eigen::Index>(c)) = es.eigenvectors().col(keep[c]) * std::sqrt(ev(keep[c]));
  }
  return f;
}

double RkhsFunction::operator()(const KernelSpec& spec, const Eigen::VectorXd& x) const {
  double out = 0.0;
  for (Eigen::Index j = 0; j < anchors.rows(); ++j) out += coefficients(j) * kernel_eval(spec, anchors.row(j).transpose(), x);
  return out;
}

double RkhsFunction::rkhs_norm(const KernelSpec& spec) const {
  const double sq = coefficients.dot(kernel_matrix(spec, anchors, anchors) * coefficients);
  return std::sqrt(std::max(sq, 0.0));
}

KernelEnvironment::KernelEnvironment(ActionSet domain, RkhsFunction f, KernelSpec spec, NoiseSpec noise)
    : domain_(std::move(domain)), f_(std::move(f)), spec_(spec), noise_(noise) {
  spec_.validate();
  validate_noise(noise_);
  if (f_.anchors.rows() != f_.coefficients.size()) throw DomainError("rkhs function: one coefficient per anchor");
  if (f_.anchors.rows() > 0 && static_cast<std::size_t>(f_.anchors.cols()) != domain_.dim()) {
    throw DomainError("rkhs function anchors do not match the domain dimension");
  }
  for (std::size_t i = 0; i < domain_.size(); ++i) {
    const double v = f_.anchors.rows() == 0 ? 0.0 : f_(spec_, domain_.vector(i));
    if (std::abs(v) > 1.0 + 1e-12) throw DomainError("mean function must satisfy max |f| <= 1 on the domain");
    means_.push_back(v);
  }
}

double KernelEnvironment::sample_reward(std::size_t index, Rng& rng) const {
  return means_[index] + sample_noise(noise_, rng);
}

KernelGeometry::KernelGeometry(const ActionSet& domain, const KernelSpec& spec)
    : gram_(kernel_matrix(spec, domain.vectors(), domain.vectors())) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram_, Eigen::EigenvaluesOnly);
  rank_ = std::max<std::size_t>(1, numerical_rank(es.eigenvalues()));
}

Eigen::MatrixXd KernelGeometry::restrict(std::span<const std::size_t> active) const {
  const auto n = static_cast<Eigen::Index>(active.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      k(i, j) = gram_(static_cast<Eigen::Index>(active[static_cast<std::size_t>(i)]),
                      static_cast<Eigen::Index>(active[static_cast<std::size_t>(j)]));
    }
  }
  return k;
}

std::unique_ptr<QuadraticFormOracle> KernelGeometry::oracle(std::span<const std::size_t> active) const {
  return std::make_unique<KernelFormOracle>(restrict(active));
}

Eigen::MatrixXd KernelGeometry::fit_features(std::span<const std::size_t> active) const {
  return kernel_features(restrict(active));
}

RunRecord run_kernel_medpe(const KernelEnvironment& env, const MedPeConfig& cfg, std::uint64_t seed,
                           const PhaseObserver& observer) {
  const KernelGeometry geometry(env.actions(), env.spec());
  return run_phased_elimination(env, geometry, cfg, seed, "kernel-medpe", observer);
}

RunRecord run_kernel_medpe(const ActionSet& domain_points, const RkhsFunction& f_star, const KernelSpec& spec,
                           const NoiseSpec& noise, const MedPeConfig& cfg, std::uint64_t seed) {
  const KernelEnvironment env(domain_points, f_star, spec, noise);
  return run_kernel_medpe(env, cfg, seed);
}

MaternBound matern_design_bound(double nu, std::size_t d, double epsilon, double T) {
  if (!(nu > 0.0) || d < 1 || !(epsilon > 0.0) || !(T > 0.0)) throw DomainError("matern_design_bound: inputs must be positive");
  MaternBound out;
  out.exponent = epsilon * static_cast<double>(d) / (2.0 * nu + static_cast<double>(d));
  out.shape = std::pow(T, out.exponent);
  return out;
}

double kernel_design_value(const KernelSpec& spec, const ActionSet& domain, double epsilon, double T,
                           std::size_t design_iters, double design_tol) {
  const KernelFormOracle oracle(kernel_matrix(spec, domain.vectors(), domain.vectors()));
  const double gamma = std::pow(T, -2.0 * epsilon / (1.0 + epsilon));
  const std::size_t iters = design_iters > 0 ? design_iters : default_design_iters(oracle.span_dimension());
  Eigen::VectorXd w = g_optimal_weights(oracle, gamma, iters, design_tol).weights;
  w = minimize_moment_weights(oracle, gamma, 1.0, epsilon, w, RefineOptions{}).weights;
  w = prune_weights(w);
  return moment_value(oracle.forms(w, gamma), w, 1.0, epsilon).value;
}

}  // namespace htb
