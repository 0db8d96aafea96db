#pragma once

#include <optional>
#include <string>
#include <variant>

#include "htb/rng.hpp"

namespace htb {

struct ZeroNoise {};

struct GaussianNoise {
  double sigma = 1.0;
};

struct StudentTNoise {
  double df = 3.0;
};

/// Pareto II (Lomax) with shape alpha and scale sigma, shifted by its mean
/// sigma / (alpha - 1) so that draws are zero mean. Requires alpha > 1.
struct CenteredParetoNoise {
  double alpha = 2.0;
  double sigma = 1.0;
};

using NoiseSpec = std::variant<ZeroNoise, GaussianNoise, StudentTNoise, CenteredParetoNoise>;

/// Throws DomainError for parameters without a finite mean.
void validate_noise(const NoiseSpec& spec);

double sample_noise(const NoiseSpec& spec, Rng& rng);

/// Certified E|eta|^(1+epsilon); nullopt when the moment is infinite.
[[nodiscard]] std::optional<double> noise_moment(const NoiseSpec& spec, double epsilon);

[[nodiscard]] std::string describe_noise(const NoiseSpec& spec);

/// Parses "zero", "gaussian:SIGMA", "student_t:DF", "pareto:ALPHA,SIGMA".
[[nodiscard]] NoiseSpec parse_noise(const std::string& text);

}  // namespace htb
