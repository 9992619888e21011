#ifndef IRREG_ESTIMATORS_HPP
#define IRREG_ESTIMATORS_HPP

// Locally admissible quadratic pilot estimator in both experiments.
//
// A fit on the window U_h works in the scaled basis
//   p(x) = b0 + b1 u + b2 u^2,   u = (x - c) / r,
// where c and r are centre and half-width of U_h. Feasibility of the band
// conditions is decided by minimizing the largest violation t over (b, t);
// among the polynomials attaining (up to a relative 1e-9) the optimal
// violation, the one with smallest |b| is returned.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "irreg/errors.hpp"
#include "irreg/lp.hpp"
#include "irreg/model.hpp"
#include "irreg/parallel.hpp"
#include "irreg/samplers.hpp"

namespace irreg {

struct Window {
  double lo = 0.0;
  double hi = 1.0;
  bool contains(double x) const { return x >= lo && x <= hi; }
};

/// U_h: [x0 - h, x0 + h], or [0, 2h] / [1 - 2h, 1] near the boundary.
inline Window window_for(double x0, double h) {
  if (!(h > 0.0 && h <= 0.5)) throw ValidationError("window_for: h must lie in (0, 1/2]");
  if (!(x0 >= 0.0 && x0 <= 1.0)) throw ValidationError("window_for: x0 must lie in [0, 1]");
  if (x0 < h) return {0.0, 2.0 * h};
  if (x0 > 1.0 - h) return {1.0 - 2.0 * h, 1.0};
  return {x0 - h, x0 + h};
}

/// p(x) = a0 + a1 (x - x0) + a2 (x - x0)^2 / 2 on its window.
struct LocalPolynomial {
  std::array<double, 3> coeffs{};
  double center = 0.0;
  Window window;

  double operator()(double x) const {
    const double dx = x - center;
    return coeffs[0] + coeffs[1] * dx + 0.5 * coeffs[2] * dx * dx;
  }
  double derivative(double x) const { return coeffs[1] + coeffs[2] * (x - center); }
};

struct PilotEstimate {
  std::vector<double> grid;  // sorted
  std::vector<double> values;
  std::vector<double> derivs;
  double bandwidth = 0.0;
  bool truncated = false;

  /// Position of x in the grid; x must be a grid point (to 1e-12).
  std::size_t index_of(double x) const {
    const auto it = std::lower_bound(grid.begin(), grid.end(), x - 1e-12);
    if (it == grid.end() || std::fabs(*it - x) > 1e-12) {
      throw ValidationError("PilotEstimate: " + std::to_string(x) + " is not a grid point");
    }
    return static_cast<std::size_t>(it - grid.begin());
  }
  double value_at(double x) const { return values[index_of(x)]; }
  double deriv_at(double x) const { return derivs[index_of(x)]; }

  /// theta and theta' tabulated on the grid (no estimation).
  static PilotEstimate oracle(const ParameterFunction& theta, std::vector<double> grid) {
    std::sort(grid.begin(), grid.end());
    PilotEstimate p;
    p.grid = std::move(grid);
    for (double x : p.grid) {
      p.values.push_back(theta.value(x));
      p.derivs.push_back(theta.first(x));
    }
    return p;
  }
};

namespace detail {

struct ScaledBasis {
  double c;
  double r;
  double u(double x) const { return (x - c) / r; }
};

inline LocalPolynomial to_local(const std::array<double, 3>& b, const ScaledBasis& s, double x0,
                                const Window& w) {
  // p(x) = b0 + b1 u + b2 u^2 with u = (x - c)/r; expand at x0.
  const double u0 = s.u(x0);
  LocalPolynomial p;
  p.center = x0;
  p.window = w;
  p.coeffs[0] = b[0] + b[1] * u0 + b[2] * u0 * u0;
  p.coeffs[1] = (b[1] + 2.0 * b[2] * u0) / s.r;
  p.coeffs[2] = 2.0 * b[2] / (s.r * s.r);
  return p;
}

// Chebyshev-type fit: minimize t over the polytope in (b0, b1, b2, t), then
// the min-norm b among near-optimal solutions. Rows are built by `rows`
// as (row over b, sign of t column, rhs); returns b and t*.
struct FitResult {
  std::array<double, 3> b{};
  double t = 0.0;
};

inline FitResult minimax_fit(const lp::Polytope& with_t) {
  const std::vector<double> cost{0.0, 0.0, 0.0, 1.0};
  const auto sol = lp::minimize(with_t, cost);
  const double t_star = sol.z[3];
  const double tau = 1e-9 * (1.0 + std::fabs(t_star));
  const double level = t_star + tau <= 0.0 ? t_star + tau : t_star;
  // Drop the t column: a.b + a_t * level <= rhs.
  lp::Polytope fixed(3);
  for (std::size_t j = 0; j < with_t.size(); ++j) {
    const auto row = with_t.row(j);
    if (row[0] == 0.0 && row[1] == 0.0 && row[2] == 0.0) continue;
    fixed.add({row[0], row[1], row[2]}, with_t.rhs(j) - row[3] * level);
  }
  std::vector<double> start{sol.z[0], sol.z[1], sol.z[2]};
  // Restore exact feasibility lost to rounding before the projection.
  const double viol = fixed.size() ? fixed.max_violation(start) : 0.0;
  std::vector<double> b = start;
  if (viol <= 1e-10 * (1.0 + std::fabs(level))) {
    lp::Polytope relaxed(3);
    for (std::size_t j = 0; j < fixed.size(); ++j) {
      relaxed.add(fixed.row(j), fixed.rhs(j) + std::max(0.0, viol));
    }
    b = lp::min_norm_point(relaxed, start, 1e-9);
  }
  return {{b[0], b[1], b[2]}, t_star};
}

}  // namespace detail

/// Locally admissible quadratic for the regression sample: a p with
/// |Y_j - p(x_j)| <= 1 + gamma h^{2+alpha} for all x_j in U_h.
inline LocalPolynomial admissible_fit_regression(const RegressionSample& sample, double x0, double h,
                                                 double gamma, double alpha = 1.0) {
  const Window w = window_for(x0, h);
  const detail::ScaledBasis s{0.5 * (w.lo + w.hi), 0.5 * (w.hi - w.lo)};
  const double band = 1.0 + gamma * std::pow(h, 2.0 + alpha);
  const auto first = std::lower_bound(sample.xs.begin(), sample.xs.end(), w.lo);
  const auto last = std::upper_bound(sample.xs.begin(), sample.xs.end(), w.hi);
  const auto lo = static_cast<std::size_t>(first - sample.xs.begin());
  const auto hi = static_cast<std::size_t>(last - sample.xs.begin());
  if (hi < lo + 3) throw ValidationError("admissible_fit_regression: fewer than 3 design points in U_h");

  lp::Polytope poly(4);
  double ymax = 0.0;
  for (std::size_t j = lo; j < hi; ++j) {
    const double u = s.u(sample.xs[j]);
    const double y = sample.ys[j];
    ymax = std::max(ymax, std::fabs(y));
    poly.add({-1.0, -u, -u * u, -1.0}, band - y);  // y - p - band <= t
    poly.add({1.0, u, u * u, -1.0}, band + y);     // p - y - band <= t
  }
  const double box = 1e6 * (1.0 + ymax);
  for (std::size_t i = 0; i < 3; ++i) {
    std::array<double, 4> e{};
    e[i] = 1.0;
    poly.add(e, box);
    e[i] = -1.0;
    poly.add(e, box);
  }
  const auto fit = detail::minimax_fit(poly);
  if (fit.t > 0.0) {
    throw InfeasibleFit("no locally admissible polynomial at x0 = " + std::to_string(x0), fit.t);
  }
  const LocalPolynomial p = detail::to_local(fit.b, s, x0, w);
  const double tol = 1e-9 * (1.0 + ymax);
  for (std::size_t j = lo; j < hi; ++j) {
    if (std::fabs(sample.ys[j] - p(sample.xs[j])) > band + tol) {
      throw InfeasibleFit("admissibility re-check failed at x0 = " + std::to_string(x0),
                          std::fabs(sample.ys[j] - p(sample.xs[j])) - band);
    }
  }
  return p;
}

/// Locally admissible quadratic for the point-process pair: no X1 point in
/// U_h above p + gamma h^{2+alpha}, no X2 point below p - gamma h^{2+alpha}.
/// If `x1` is null (one-sided model) the fit maximizes the window integral
/// of p subject to the X2 conditions.
inline LocalPolynomial admissible_fit_ppp(const PointProcessRealization* x1,
                                          const PointProcessRealization* x2, double x0, double h,
                                          double gamma, double alpha = 1.0) {
  const Window w = window_for(x0, h);
  const detail::ScaledBasis s{0.5 * (w.lo + w.hi), 0.5 * (w.hi - w.lo)};
  const double band = gamma * std::pow(h, 2.0 + alpha);
  double y_bound = 1.0;
  if (x1) y_bound = std::max(y_bound, x1->y_bound);
  if (x2) y_bound = std::max(y_bound, x2->y_bound);
  const double box = 4.0 * y_bound;

  if (x1 == nullptr) {
    lp::Polytope poly(3);
    if (x2) {
      for (const auto& pt : x2->points) {
        if (!w.contains(pt.x)) continue;
        const double u = s.u(pt.x);
        poly.add({1.0, u, u * u}, pt.y + band);
      }
    }
    for (std::size_t i = 0; i < 3; ++i) {
      std::array<double, 3> e{};
      e[i] = 1.0;
      poly.add(e, box);
      e[i] = -1.0;
      poly.add(e, box);
    }
    // maximize int_{-1}^{1} p du = 2 b0 + 2/3 b2
    const std::vector<double> cost{-2.0, 0.0, -2.0 / 3.0};
    const auto sol = lp::minimize(poly, cost);
    const double tau = 1e-9 * (1.0 + std::fabs(sol.objective));
    poly.add({cost[0], cost[1], cost[2]}, sol.objective + tau);
    const double viol = std::max(0.0, poly.max_violation(sol.z));
    lp::Polytope relaxed(3);
    for (std::size_t j = 0; j < poly.size(); ++j) relaxed.add(poly.row(j), poly.rhs(j) + viol);
    const auto b = lp::min_norm_point(relaxed, sol.z, 1e-9);
    const LocalPolynomial p = detail::to_local({b[0], b[1], b[2]}, s, x0, w);
    if (x2) {
      for (const auto& pt : x2->points) {
        if (w.contains(pt.x) && pt.y < p(pt.x) - band - 1e-9 * (1.0 + y_bound)) {
          throw InfeasibleFit("one-sided admissibility re-check failed", p(pt.x) - band - pt.y);
        }
      }
    }
    return p;
  }

  lp::Polytope poly(4);
  for (const auto& pt : x1->points) {
    if (!w.contains(pt.x)) continue;
    const double u = s.u(pt.x);
    poly.add({-1.0, -u, -u * u, -1.0}, band - pt.y);  // y - p - band <= t
  }
  if (x2) {
    for (const auto& pt : x2->points) {
      if (!w.contains(pt.x)) continue;
      const double u = s.u(pt.x);
      poly.add({1.0, u, u * u, -1.0}, band + pt.y);  // p - y - band <= t
    }
  }
  for (std::size_t i = 0; i < 3; ++i) {
    std::array<double, 4> e{};
    e[i] = 1.0;
    poly.add(e, box);
    e[i] = -1.0;
    poly.add(e, box);
  }
  poly.add({0.0, 0.0, 0.0, -1.0}, 2.0 * y_bound);  // t >= -2 y_bound
  const auto fit = detail::minimax_fit(poly);
  if (fit.t > 0.0) {
    throw InfeasibleFit("no locally admissible polynomial at x0 = " + std::to_string(x0), fit.t);
  }
  const LocalPolynomial p = detail::to_local(fit.b, s, x0, w);
  const double tol = 1e-9 * (1.0 + y_bound);
  for (const auto& pt : x1->points) {
    if (w.contains(pt.x) && pt.y > p(pt.x) + band + tol) {
      throw InfeasibleFit("admissibility re-check failed (X1)", pt.y - p(pt.x) - band);
    }
  }
  if (x2) {
    for (const auto& pt : x2->points) {
      if (w.contains(pt.x) && pt.y < p(pt.x) - band - tol) {
        throw InfeasibleFit("admissibility re-check failed (X2)", p(pt.x) - band - pt.y);
      }
    }
  }
  return p;
}

/// h = bandwidth_const * n^{-1/(3+alpha)}.
inline double pilot_bandwidth(double n, double alpha, double bandwidth_const) {
  if (!(n > 0.0)) throw ValidationError("pilot_bandwidth: n must be positive");
  if (!(bandwidth_const > 0.0)) throw ValidationError("pilot_bandwidth: constant must be positive");
  const double h = bandwidth_const * std::pow(n, -1.0 / (3.0 + alpha));
  if (h > 0.5) throw ValidationError("pilot_bandwidth: h = " + std::to_string(h) + " exceeds 1/2");
  return h;
}

struct PilotOptions {
  double bandwidth_const = 1.0;
  bool truncate = true;
  unsigned workers = 1;
};

namespace detail {

template <class Fit>
PilotEstimate run_pilot(std::vector<double> grid, double h, double c_theta, const PilotOptions& opt,
                        Fit&& fit) {
  std::sort(grid.begin(), grid.end());
  PilotEstimate est;
  est.grid = std::move(grid);
  est.bandwidth = h;
  est.values.assign(est.grid.size(), 0.0);
  est.derivs.assign(est.grid.size(), 0.0);
  parallel_for(
      est.grid.size(),
      [&](std::size_t i) {
        const LocalPolynomial p = fit(est.grid[i]);
        est.values[i] = p.coeffs[0];
        est.derivs[i] = p.coeffs[1];
      },
      opt.workers);
  if (opt.truncate) {
    const double cap = 4.0 * c_theta;
    for (std::size_t i = 0; i < est.grid.size(); ++i) {
      if (std::fabs(est.values[i]) > c_theta) {
        est.values[i] = std::clamp(est.values[i], -c_theta, c_theta);
        est.truncated = true;
      }
      if (std::fabs(est.derivs[i]) > cap) {
        est.derivs[i] = std::clamp(est.derivs[i], -cap, cap);
        est.truncated = true;
      }
    }
  }
  return est;
}

}  // namespace detail

/// Pilot estimate of theta and theta' on `grid` from a regression sample.
inline PilotEstimate pilot_estimate(const RegressionSample& sample, const ExperimentSpec& spec,
                                    std::vector<double> grid, const PilotOptions& opt = {}) {
  spec.validate();
  const double h = pilot_bandwidth(static_cast<double>(sample.n), spec.alpha, opt.bandwidth_const);
  const double gamma = holder_band(h, spec.c_theta);
  return detail::run_pilot(std::move(grid), h, spec.c_theta, opt, [&](double x0) {
    return admissible_fit_regression(sample, x0, h, gamma, spec.alpha);
  });
}

/// Pilot estimate from the point-process pair; x1 may be null (one-sided).
/// The bandwidth uses the sample-size scale recorded in the realizations.
inline PilotEstimate pilot_estimate(const PointProcessRealization* x1,
                                    const PointProcessRealization* x2, const ExperimentSpec& spec,
                                    std::vector<double> grid, const PilotOptions& opt = {}) {
  spec.validate();
  const double n = x1 ? x1->n : (x2 ? x2->n : 0.0);
  const double h = pilot_bandwidth(n, spec.alpha, opt.bandwidth_const);
  const double gamma = holder_band(h, spec.c_theta);
  return detail::run_pilot(std::move(grid), h, spec.c_theta, opt, [&](double x0) {
    return admissible_fit_ppp(x1, x2, x0, h, gamma, spec.alpha);
  });
}

}  // namespace irreg

#endif  // IRREG_ESTIMATORS_HPP
