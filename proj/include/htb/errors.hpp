#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace htb {

/// Precondition violated by the caller (bad parameter, unknown label, empty input).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical failure: solver non-convergence, factorization breakdown.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A regularized Gram matrix that is not numerically positive definite.
class SingularityError : public NumericError {
 public:
  SingularityError(const std::string& what, std::size_t deficient_dimension)
      : NumericError(what + " (deficient subspace dimension " +
                     std::to_string(deficient_dimension) + ")"),
        deficient_dimension_(deficient_dimension) {}

  [[nodiscard]] std::size_t deficient_dimension() const noexcept { return deficient_dimension_; }

 private:
  std::size_t deficient_dimension_;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace htb
