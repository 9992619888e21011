#ifndef IRREG_QUADRATURE_HPP
#define IRREG_QUADRATURE_HPP

// Thin adaptive Gauss-Kronrod layer over Boost.Math. Adds breakpoint
// splitting (for integrands with kinks or boundary layers) and converts an
// unmet tolerance into a NumericalError carrying the residual estimate.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <string>
#include <vector>

#include "irreg/errors.hpp"

namespace irreg::quad {

struct Result {
  double value = 0.0;
  double error = 0.0;
};

struct Tolerance {
  double relative = 1e-10;
  double absolute = 1e-12;
  unsigned max_depth = 20;
};

/// Adaptive G7K15 over [a, b]. Throws NumericalError if the error estimate
/// exceeds max(absolute, relative * L1).
template <class F>
Result integrate(F&& f, double a, double b, Tolerance tol = {}) {
  if (a == b) return {};
  double error = 0.0;
  double l1 = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      f, a, b, tol.max_depth, tol.relative, &error, &l1);
  if (!std::isfinite(value) || error > std::max(tol.absolute, tol.relative * l1) * 10.0) {
    throw NumericalError("quadrature did not converge on [" + std::to_string(a) + ", " +
                             std::to_string(b) + "]",
                         error);
  }
  return {value, error};
}

/// Integrates over consecutive pieces of a sorted breakpoint list.
template <class F>
Result integrate_pieces(F&& f, const std::vector<double>& breaks, Tolerance tol = {}) {
  Result total;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (!(breaks[i + 1] > breaks[i])) continue;
    const Result piece = integrate(f, breaks[i], breaks[i + 1], tol);
    total.value += piece.value;
    total.error += piece.error;
  }
  return total;
}

/// Breakpoints a + scale * 2^j (j >= 0) up to b, plus the endpoints. Used for
/// integrands concentrated in a layer of width `scale` at the left end.
inline std::vector<double> geometric_breaks(double a, double b, double scale) {
  std::vector<double> out{a};
  for (double step = scale; a + step < b; step *= 2.0) out.push_back(a + step);
  out.push_back(b);
  return out;
}

/// Fixed 15-point Kronrod rule (no adaptivity). Exact for polynomials up to
/// degree 22; used for short subintervals inside hot loops.
template <class F>
double kronrod15(F&& f, double a, double b) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  const auto& x = GK::abscissa();
  const auto& w = GK::weights();
  const double c = 0.5 * (a + b);
  const double r = 0.5 * (b - a);
  double sum = w[0] * f(c);
  for (std::size_t i = 1; i < x.size(); ++i) {
    sum += w[i] * (f(c - r * x[i]) + f(c + r * x[i]));
  }
  return sum * r;
}

}  // namespace irreg::quad

#endif  // IRREG_QUADRATURE_HPP
