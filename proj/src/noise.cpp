#include "htb/noise.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <sstream>

#include "htb/errors.hpp"

namespace htb {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

double pareto_central_moment(const CenteredParetoNoise& p, double order) {
  const double mean = p.sigma / (p.alpha - 1.0);
  auto density = [&](double x) {
    return p.alpha / p.sigma * std::pow(1.0 + x / p.sigma, -p.alpha - 1.0);
  };
  auto head = [&](double x) { return std::pow(std::abs(x - mean), order) * density(x); };
  auto tail = [&](double s) { return std::pow(s, order) * density(mean + s); };
  const double left = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(head, 0.0, mean, 15, 1e-13);
  boost::math::quadrature::exp_sinh<double> integrator;
  const double right = integrator.integrate(tail, 0.0, std::numeric_limits<double>::infinity(), 1e-12);
  return left + right;
}

}  // namespace

void validate_noise(const NoiseSpec& spec) {
  std::visit(Overloaded{
                 [](const ZeroNoise&) {},
                 [](const GaussianNoise& g) {
                   if (!(g.sigma >= 0.0) || !std::isfinite(g.sigma)) {
                     throw DomainError("gaussian noise: sigma must be finite and >= 0");
                   }
                 },
                 [](const StudentTNoise& t) {
                   if (!(t.df > 1.0)) throw DomainError("student_t noise: df must exceed 1 for a finite mean");
                 },
                 [](const CenteredParetoNoise& p) {
                   if (!(p.alpha > 1.0)) throw DomainError("centered pareto noise: alpha must exceed 1");
                   if (!(p.sigma > 0.0)) throw DomainError("centered pareto noise: sigma must be positive");
                 },
             },
             spec);
}

double sample_noise(const NoiseSpec& spec, Rng& rng) {
  return std::visit(
      Overloaded{
          [](const ZeroNoise&) { return 0.0; },
          [&](const GaussianNoise& g) { return g.sigma * rng.normal(); },
          [&](const StudentTNoise& t) {
            if (!(t.df > 1.0)) throw DomainError("student_t noise: df must exceed 1 for a finite mean");
            // Bailey's polar method.
            for (;;) {
              const double u = 2.0 * rng.uniform() - 1.0;
              const double v = 2.0 * rng.uniform() - 1.0;
              const double w = u * u + v * v;
              if (w > 1.0 || w == 0.0) continue;
              return u * std::sqrt(t.df * (std::pow(w, -2.0 / t.df) - 1.0) / w);
            }
          },
          [&](const CenteredParetoNoise& p) {
            if (!(p.alpha > 1.0)) throw DomainError("centered pareto noise: alpha must exceed 1");
            // Inverse survival function of (1 + x/sigma)^(-alpha).
            const double draw = p.sigma * (std::pow(rng.uniform_open(), -1.0 / p.alpha) - 1.0);
            return draw - p.sigma / (p.alpha - 1.0);
          },
      },
      spec);
}

std::optional<double> noise_moment(const NoiseSpec& spec, double epsilon) {
  const double order = 1.0 + epsilon;
  return std::visit(
      Overloaded{
          [](const ZeroNoise&) -> std::optional<double> { return 0.0; },
          [&](const GaussianNoise& g) -> std::optional<double> {
            return std::pow(g.sigma, order) * std::pow(2.0, order / 2.0) *
                   std::tgamma((order + 1.0) / 2.0) / std::sqrt(std::numbers::pi);
          },
          [&](const StudentTNoise& t) -> std::optional<double> {
            if (!(t.df > order)) return std::nullopt;
            return std::pow(t.df, order / 2.0) * std::tgamma((order + 1.0) / 2.0) *
                   std::tgamma((t.df - order) / 2.0) /
                   (std::sqrt(std::numbers::pi) * std::tgamma(t.df / 2.0));
          },
          [&](const CenteredParetoNoise& p) -> std::optional<double> {
            if (!(p.alpha > order)) return std::nullopt;
            return pareto_central_moment(p, order);
          },
      },
      spec);
}

std::string describe_noise(const NoiseSpec& spec) {
  std::ostringstream os;
  os.precision(17);
  std::visit(Overloaded{
                 [&](const ZeroNoise&) { os << "zero"; },
                 [&](const GaussianNoise& g) { os << "gaussian:" << g.sigma; },
                 [&](const StudentTNoise& t) { os << "student_t:" << t.df; },
                 [&](const CenteredParetoNoise& p) { os << "pareto:" << p.alpha << ',' << p.sigma; },
             },
             spec);
  return os.str();
}

NoiseSpec parse_noise(const std::string& text) {
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
      throw DomainError("noise spec '" + text + "': cannot parse number '" + s + "'");
    }
  };
  NoiseSpec spec;
  if (kind == "zero") {
    spec = ZeroNoise{};
  } else if (kind == "gaussian") {
    spec = GaussianNoise{args.empty() ? 1.0 : number(args)};
  } else if (kind == "student_t") {
    spec = StudentTNoise{args.empty() ? 3.0 : number(args)};
  } else if (kind == "pareto") {
    CenteredParetoNoise p;
    if (!args.empty()) {
      const auto comma = args.find(',');
      p.alpha = number(args.substr(0, comma));
      if (comma != std::string::npos) p.sigma = number(args.substr(comma + 1));
    }
    spec = p;
  } else {
    throw DomainError("unknown noise kind '" + kind + "'");
  }
  validate_noise(spec);
  return spec;
}

}  // namespace htb
