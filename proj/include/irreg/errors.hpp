#ifndef IRREG_ERRORS_HPP
#define IRREG_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace irreg {

/// A specification or input violates a documented precondition.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine failed to reach its tolerance (quadrature, LP, ...).
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double residual = 0.0)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// No locally admissible polynomial exists for the requested band.
class InfeasibleFit : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace irreg

#endif  // IRREG_ERRORS_HPP
