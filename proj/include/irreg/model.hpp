#ifndef IRREG_MODEL_HPP
#define IRREG_MODEL_HPP

// Parameter space, deterministic design and error-density specification of
// the non-regular regression experiment, with numerical checks of the class
// constraints. All types are immutable value types once constructed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "irreg/errors.hpp"
#include "irreg/quadrature.hpp"
#include "irreg/random.hpp"

namespace irreg {

using RealFn = std::function<double(double)>;

enum class FamilyTag { polynomial, scaled_sinusoid, custom_grid, bump };

inline std::string to_string(FamilyTag tag) {
  switch (tag) {
    case FamilyTag::polynomial: return "polynomial";
    case FamilyTag::scaled_sinusoid: return "scaled-sinusoid";
    case FamilyTag::custom_grid: return "custom-grid";
    case FamilyTag::bump: return "bump";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Kernels for bump functions (support [-1/2, 1/2]).

/// A compactly supported kernel with exact value and first two derivatives.
struct Kernel {
  RealFn value;
  RealFn first;
  RealFn second;
  std::string name;

  /// K(u) = (1 - 4u^2)^4 on [-1/2, 1/2]; K(0) = 1, symmetric.
  static Kernel smooth_bump() {
    Kernel k;
    k.name = "smooth-bump";
    k.value = [](double u) {
      if (std::fabs(u) >= 0.5) return 0.0;
      const double g = 1.0 - 4.0 * u * u;
      return g * g * g * g;
    };
    k.first = [](double u) {
      if (std::fabs(u) >= 0.5) return 0.0;
      const double g = 1.0 - 4.0 * u * u;
      return 4.0 * g * g * g * (-8.0 * u);
    };
    k.second = [](double u) {
      if (std::fabs(u) >= 0.5) return 0.0;
      const double g = 1.0 - 4.0 * u * u;
      return 12.0 * g * g * 64.0 * u * u - 32.0 * g * g * g;
    };
    return k;
  }

  /// K(u) = u (1 - 4u^2)^4; K'(0) = 1, odd.
  static Kernel odd_bump() {
    Kernel k;
    k.name = "odd-bump";
    const Kernel b = smooth_bump();
    k.value = [b](double u) { return u * b.value(u); };
    k.first = [b](double u) { return b.value(u) + u * b.first(u); };
    k.second = [b](double u) { return 2.0 * b.first(u) + u * b.second(u); };
    return k;
  }

  /// K(u) = (1 - 4u^2)^4 (24u^2 - 1); K''(0) = 80.
  static Kernel curvature_bump() {
    Kernel k;
    k.name = "curvature-bump";
    const Kernel b = smooth_bump();
    k.value = [b](double u) { return b.value(u) * (24.0 * u * u - 1.0); };
    k.first = [b](double u) { return b.first(u) * (24.0 * u * u - 1.0) + b.value(u) * 48.0 * u; };
    k.second = [b](double u) {
      return b.second(u) * (24.0 * u * u - 1.0) + 2.0 * b.first(u) * 48.0 * u + b.value(u) * 48.0;
    };
    return k;
  }

  /// Returns this kernel multiplied by `factor`.
  Kernel scaled(double factor) const {
    Kernel k;
    k.name = name;
    k.value = [f = value, factor](double u) { return factor * f(u); };
    k.first = [f = first, factor](double u) { return factor * f(u); };
    k.second = [f = second, factor](double u) { return factor * f(u); };
    return k;
  }

  double derivative(int order, double u) const {
    switch (order) {
      case 0: return value(u);
      case 1: return first(u);
      case 2: return second(u);
      default: throw ValidationError("Kernel: derivatives above order 2 are not available");
    }
  }
};

// ---------------------------------------------------------------------------

/// An element theta of the parameter class, given as exact value and first
/// two derivatives together with its declared class constants.
struct ParameterFunction {
  RealFn value;
  RealFn first;
  RealFn second;
  double c_theta = 1.0;
  double alpha = 1.0;
  FamilyTag family = FamilyTag::polynomial;
  std::vector<double> params;  // family parameters, for serialization

  double operator()(double x) const { return value(x); }

  double derivative(int order, double x) const {
    switch (order) {
      case 0: return value(x);
      case 1: return first(x);
      case 2: return second(x);
      default: throw ValidationError("ParameterFunction: derivatives above order 2 are not available");
    }
  }

  /// theta(x) = sum_k coeffs[k] x^k, degree at most 3.
  static ParameterFunction polynomial(std::vector<double> coeffs, double c_theta, double alpha) {
    if (coeffs.empty() || coeffs.size() > 4) {
      throw ValidationError("polynomial family supports 1 to 4 coefficients");
    }
    coeffs.resize(4, 0.0);
    ParameterFunction f;
    f.value = [c = coeffs](double x) { return c[0] + x * (c[1] + x * (c[2] + x * c[3])); };
    f.first = [c = coeffs](double x) { return c[1] + x * (2.0 * c[2] + 3.0 * x * c[3]); };
    f.second = [c = coeffs](double x) { return 2.0 * c[2] + 6.0 * x * c[3]; };
    f.c_theta = c_theta;
    f.alpha = alpha;
    f.family = FamilyTag::polynomial;
    f.params = std::move(coeffs);
    return f;
  }

  /// theta(x) = amplitude * x * cos(omega * x).
  static ParameterFunction scaled_cosine(double amplitude, double omega, double c_theta,
                                         double alpha) {
    ParameterFunction f;
    const double c = amplitude;
    const double w = omega;
    f.value = [c, w](double x) { return c * x * std::cos(w * x); };
    f.first = [c, w](double x) { return c * (std::cos(w * x) - w * x * std::sin(w * x)); };
    f.second = [c, w](double x) {
      return -c * w * (2.0 * std::sin(w * x) + w * x * std::cos(w * x));
    };
    f.c_theta = c_theta;
    f.alpha = alpha;
    f.family = FamilyTag::scaled_sinusoid;
    f.params = {amplitude, omega};
    return f;
  }

  /// Piecewise constant on the uniform grid of values.size() cells (the
  /// block-constant "step-function mode"). Derivatives are zero.
  static ParameterFunction step(std::vector<double> values, double c_theta, double alpha = 1.0) {
    if (values.empty()) throw ValidationError("step family needs at least one cell value");
    ParameterFunction f;
    f.value = [v = values](double x) {
      const auto m = static_cast<double>(v.size());
      auto k = static_cast<std::ptrdiff_t>(std::floor(x * m));
      k = std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(v.size()) - 1);
      return v[static_cast<std::size_t>(k)];
    };
    f.first = [](double) { return 0.0; };
    f.second = [](double) { return 0.0; };
    f.c_theta = c_theta;
    f.alpha = alpha;
    f.family = FamilyTag::custom_grid;
    f.params = std::move(values);
    return f;
  }

  /// amplitude * K((x - center) / width).
  static ParameterFunction bump(const Kernel& kernel, double amplitude, double center,
                                double width, double c_theta, double alpha) {
    if (!(width > 0.0)) throw ValidationError("bump width must be positive");
    ParameterFunction f;
    f.value = [k = kernel.value, amplitude, center, width](double x) {
      return amplitude * k((x - center) / width);
    };
    f.first = [k = kernel.first, amplitude, center, width](double x) {
      return amplitude / width * k((x - center) / width);
    };
    f.second = [k = kernel.second, amplitude, center, width](double x) {
      return amplitude / (width * width) * k((x - center) / width);
    };
    f.c_theta = c_theta;
    f.alpha = alpha;
    f.family = FamilyTag::bump;
    f.params = {amplitude, center, width};
    return f;
  }

  static ParameterFunction zero(double c_theta = 1.0, double alpha = 1.0) {
    return polynomial({0.0}, c_theta, alpha);
  }
};

// ---------------------------------------------------------------------------

/// Design distribution F_D on [0, 1] with Lipschitz density bounded away
/// from zero.
struct DesignSpec {
  RealFn quantile;
  RealFn density;
  RealFn cdf;
  double lipschitz_const = 0.0;
  double density_lower = 1.0;
  double density_upper = 1.0;
  std::string name = "uniform";
  std::vector<double> params;

  static DesignSpec uniform() {
    DesignSpec d;
    d.quantile = [](double u) { return std::clamp(u, 0.0, 1.0); };
    d.density = [](double x) { return (x >= 0.0 && x <= 1.0) ? 1.0 : 0.0; };
    d.cdf = [](double x) { return std::clamp(x, 0.0, 1.0); };
    return d;
  }

  /// f_D(x) = (1 + slope x) / (1 + slope / 2), slope > -1.
  static DesignSpec linear(double slope) {
    if (!(slope > -1.0)) throw ValidationError("linear design needs slope > -1");
    if (slope == 0.0) return uniform();
    DesignSpec d;
    const double norm = 1.0 + 0.5 * slope;
    d.density = [slope, norm](double x) {
      return (x >= 0.0 && x <= 1.0) ? (1.0 + slope * x) / norm : 0.0;
    };
    d.cdf = [slope, norm](double x) {
      x = std::clamp(x, 0.0, 1.0);
      return (x + 0.5 * slope * x * x) / norm;
    };
    d.quantile = [slope, norm](double u) {
      u = std::clamp(u, 0.0, 1.0);
      if (u == 1.0) return 1.0;
      // Root of slope/2 x^2 + x - u norm = 0, written without cancellation.
      const double c = u * norm;
      return 2.0 * c / (1.0 + std::sqrt(1.0 + 2.0 * slope * c));
    };
    d.lipschitz_const = std::fabs(slope) / norm;
    d.density_lower = std::min(1.0, 1.0 + slope) / norm;
    d.density_upper = std::max(1.0, 1.0 + slope) / norm;
    d.name = "linear";
    d.params = {slope};
    return d;
  }

  /// integral of f_D over [a, b] (clipped to [0, 1]).
  double mass(double a, double b) const { return cdf(b) - cdf(a); }
};

// ---------------------------------------------------------------------------

/// Error density f_eps = 1_[-1,1] * phi with jumps phi(-1), phi(1) at the
/// support endpoints. phi is extended to the real line by constants.
struct ErrorDensity {
  RealFn phi_inner;  // phi on [-1, 1]
  double jump_left = 0.5;
  double jump_right = 0.5;
  double lipschitz_const = 0.5;  // C_eps: Lipschitz constant plus sup of phi
  bool one_sided = false;
  std::string name = "uniform";
  std::vector<double> params;

  /// phi(t), constant outside [-1, 1].
  double phi(double t) const { return phi_inner(std::clamp(t, -1.0, 1.0)); }

  /// f_eps(t): zero outside [-1, 1].
  double density(double t) const { return (t < -1.0 || t > 1.0) ? 0.0 : phi_inner(t); }

  /// Total jump size J = f_eps(-1) + f_eps(1).
  double total_jump() const { return jump_left + jump_right; }

  static ErrorDensity uniform() {
    ErrorDensity e;
    e.phi_inner = [](double) { return 0.5; };
    return e;
  }

  /// phi(t) = (1 + beta t) / 2 for beta in [-1, 1). beta = -1 gives the
  /// one-sided density with phi(1) = 0.
  static ErrorDensity linear(double beta) {
    if (!(beta >= -1.0 && beta < 1.0)) throw ValidationError("linear error density needs beta in [-1, 1)");
    if (beta == 0.0) return uniform();
    ErrorDensity e;
    e.phi_inner = [beta](double t) { return 0.5 * (1.0 + beta * t); };
    e.jump_left = 0.5 * (1.0 - beta);
    e.jump_right = 0.5 * (1.0 + beta);
    e.lipschitz_const = 0.5 * std::fabs(beta) + 0.5 * (1.0 + std::fabs(beta));
    e.one_sided = beta == -1.0;
    e.name = "linear";
    e.params = {beta};
    return e;
  }

  /// phi(t) = 1/4 + 3 t^2 / 4: jumps of size one at both endpoints.
  static ErrorDensity u_shaped() {
    ErrorDensity e;
    e.phi_inner = [](double t) { return 0.25 + 0.75 * t * t; };
    e.jump_left = 1.0;
    e.jump_right = 1.0;
    e.lipschitz_const = 1.5 + 1.0;
    e.name = "u-shaped";
    return e;
  }
};

/// Everything that defines experiment A_n except the parameter theta.
struct ExperimentSpec {
  DesignSpec design = DesignSpec::uniform();
  ErrorDensity error = ErrorDensity::uniform();
  std::size_t n = 100;
  double c_theta = 1.0;
  double alpha = 1.0;

  /// Height bound of the observation rectangle S = [0,1] x [-y_bound, y_bound].
  double y_bound() const { return c_theta + 1.0; }

  void validate() const {
    if (!(c_theta >= 0.0)) throw ValidationError("C_Theta must be nonnegative");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in (0, 1]");
  }

  /// Canonical text used for the spec hash in output headers.
  std::string canonical() const {
    std::string out = "design=" + design.name;
    for (double p : design.params) out += ":" + std::to_string(p);
    out += ";error=" + error.name;
    for (double p : error.params) out += ":" + std::to_string(p);
    out += ";n=" + std::to_string(n) + ";c_theta=" + std::to_string(c_theta) +
           ";alpha=" + std::to_string(alpha);
    return out;
  }

  std::uint64_t hash() const { return fnv1a64(canonical()); }
};

// ---------------------------------------------------------------------------
// Operations.

/// Deterministic quantile design x_j = F_D^{-1}((j-1)/(n-1)), j = 1..n.
inline std::vector<double> design_points(std::size_t n, const DesignSpec& design) {
  if (n < 2) throw ValidationError("design_points: n must be at least 2");
  std::vector<double> xs(n);
  const double denom = static_cast<double>(n - 1);
  for (std::size_t j = 0; j < n; ++j) xs[j] = design.quantile(static_cast<double>(j) / denom);
  for (std::size_t j = 1; j < n; ++j) {
    if (xs[j] < xs[j - 1]) throw ValidationError("design_points: quantile map is not monotone");
  }
  return xs;
}

/// Band constant gamma_h of the locally admissible polynomials. Uses the
/// explicit Taylor-remainder bound 2 C_Theta, which does not depend on h.
inline double holder_band(double h, double c_theta) {
  if (!(h > 0.0 && h <= 0.5)) throw ValidationError("holder_band: h must lie in (0, 1/2]");
  if (!(c_theta >= 0.0)) throw ValidationError("holder_band: C_Theta must be nonnegative");
  return 2.0 * c_theta;
}

struct CheckResult {
  std::string invariant;
  bool pass = true;
  double worst_value = 0.0;  // worst observed statistic
  double limit = 0.0;        // allowed bound
  double worst_x = 0.0;      // grid location of the worst case
};

struct ValidationReport {
  std::vector<CheckResult> checks;

  bool pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
  }

  const CheckResult* find(const std::string& name) const {
    for (const auto& c : checks) {
      if (c.invariant == name) return &c;
    }
    return nullptr;
  }
};

/// Checks the class constraints of theta on a uniform grid: sup bounds on
/// theta and theta'', the Hoelder condition on theta'' (all lags on a 1000
/// point subgrid plus short lags on the full grid) and agreement of the
/// supplied derivatives with central differences.
inline ValidationReport validate_parameter(const ParameterFunction& theta,
                                           std::size_t grid_size = 10000,
                                           double rel_tol = 1e-6) {
  if (grid_size < 100) throw ValidationError("validate_parameter: grid_size must be >= 100");
  ValidationReport report;
  const double c = theta.c_theta;
  const double slack = 1.0 + rel_tol;
  const std::size_t g = grid_size;
  std::vector<double> xs(g + 1), v(g + 1), d1(g + 1), d2(g + 1);
  for (std::size_t i = 0; i <= g; ++i) {
    xs[i] = static_cast<double>(i) / static_cast<double>(g);
    v[i] = theta.value(xs[i]);
    d1[i] = theta.first(xs[i]);
    d2[i] = theta.second(xs[i]);
  }

  auto sup_check = [&](const std::string& name, const std::vector<double>& vals) {
    CheckResult r{name, true, 0.0, c, 0.0};
    for (std::size_t i = 0; i <= g; ++i) {
      if (std::fabs(vals[i]) > r.worst_value) {
        r.worst_value = std::fabs(vals[i]);
        r.worst_x = xs[i];
      }
    }
    r.pass = r.worst_value <= c * slack + rel_tol;
    report.checks.push_back(r);
  };
  sup_check("sup_abs_theta", v);
  sup_check("sup_abs_second_derivative", d2);

  {
    CheckResult r{"holder_second_derivative", true, 0.0, c, 0.0};
    auto visit = [&](std::size_t i, std::size_t j) {
      const double dx = xs[j] - xs[i];
      const double ratio = std::fabs(d2[j] - d2[i]) / std::pow(dx, theta.alpha);
      if (ratio > r.worst_value) {
        r.worst_value = ratio;
        r.worst_x = xs[i];
      }
    };
    for (std::size_t i = 0; i <= g; ++i) {
      for (std::size_t lag = 1; lag <= 32 && i + lag <= g; ++lag) visit(i, i + lag);
    }
    const std::size_t stride = std::max<std::size_t>(1, g / 1000);
    for (std::size_t i = 0; i <= g; i += stride) {
      for (std::size_t j = i + stride; j <= g; j += stride) visit(i, j);
    }
    r.pass = r.worst_value <= c * slack + rel_tol;
    report.checks.push_back(r);
  }

  {
    const double h1 = 1e-4;
    const double h2 = 1e-3;
    double scale1 = 1.0;
    double scale2 = 1.0;
    for (std::size_t i = 0; i <= g; ++i) {
      scale1 = std::max(scale1, std::fabs(d1[i]));
      scale2 = std::max(scale2, std::fabs(d2[i]));
    }
    CheckResult r1{"first_derivative_matches_differences", true, 0.0, 1e-5 * scale1, 0.0};
    CheckResult r2{"second_derivative_matches_differences", true, 0.0, 1e-3 * scale2, 0.0};
    for (std::size_t i = 0; i <= g; i += 10) {
      const double x = std::clamp(xs[i], h2, 1.0 - h2);
      const double fd1 = (theta.value(x + h1) - theta.value(x - h1)) / (2.0 * h1);
      const double fd2 =
          (theta.value(x + h2) - 2.0 * theta.value(x) + theta.value(x - h2)) / (h2 * h2);
      const double e1 = std::fabs(fd1 - theta.first(x));
      const double e2 = std::fabs(fd2 - theta.second(x));
      if (e1 > r1.worst_value) {
        r1.worst_value = e1;
        r1.worst_x = x;
      }
      if (e2 > r2.worst_value) {
        r2.worst_value = e2;
        r2.worst_x = x;
      }
    }
    r1.pass = r1.worst_value <= r1.limit;
    r2.pass = r2.worst_value <= r2.limit;
    report.checks.push_back(r1);
    report.checks.push_back(r2);
  }

  {
    CheckResult r{"alpha_in_range", theta.alpha > 0.0 && theta.alpha <= 1.0, theta.alpha, 1.0, 0.0};
    report.checks.push_back(r);
  }
  return report;
}

/// Smallest C such that theta satisfies the class constraints with C_Theta = C
/// on the validation grid (sup |theta|, sup |theta''|, Hoelder ratio).
inline double required_class_constant(const ParameterFunction& theta, std::size_t grid_size = 10000) {
  ParameterFunction probe = theta;
  probe.c_theta = 0.0;
  const ValidationReport r = validate_parameter(probe, grid_size);
  double need = 0.0;
  for (const char* name : {"sup_abs_theta", "sup_abs_second_derivative", "holder_second_derivative"}) {
    need = std::max(need, r.find(name)->worst_value);
  }
  return need;
}

/// Numerical checks of a design: density floor, CDF/quantile round trip,
/// monotone quantile and the gap bound d^{-1}/n <= x_{j+1}-x_j <= d/n.
inline ValidationReport validate_design(const DesignSpec& design, double gap_constant = 0.0,
                                        std::size_t n_for_gaps = 1001, std::size_t grid = 10000) {
  ValidationReport report;
  CheckResult floor{"density_lower_bound", true, std::numeric_limits<double>::infinity(),
                    design.density_lower, 0.0};
  CheckResult round{"quantile_roundtrip", true, 0.0, 1e-9, 0.0};
  CheckResult mono{"quantile_monotone", true, 0.0, 0.0, 0.0};
  double prev = -1.0;
  for (std::size_t i = 0; i <= grid; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(grid);
    const double f = design.density(x);
    if (f < floor.worst_value) {
      floor.worst_value = f;
      floor.worst_x = x;
    }
    const double err = std::fabs(design.quantile(design.cdf(x)) - x);
    if (err > round.worst_value) {
      round.worst_value = err;
      round.worst_x = x;
    }
    const double q = design.quantile(x);
    if (q < prev) {
      mono.pass = false;
      mono.worst_x = x;
    }
    prev = q;
  }
  floor.pass = floor.worst_value >= design.density_lower * (1.0 - 1e-12) && floor.worst_value > 0.0;
  round.pass = round.worst_value <= round.limit;
  report.checks.push_back(floor);
  report.checks.push_back(round);
  report.checks.push_back(mono);
  if (gap_constant > 0.0) {
    const auto xs = design_points(n_for_gaps, design);
    const double n = static_cast<double>(n_for_gaps);
    CheckResult gaps{"design_gap_bound", true, 0.0, gap_constant, 0.0};
    for (std::size_t j = 0; j + 1 < xs.size(); ++j) {
      const double scaled = (xs[j + 1] - xs[j]) * n;
      const double worst = std::max(scaled, 1.0 / scaled);
      if (worst > gaps.worst_value) {
        gaps.worst_value = worst;
        gaps.worst_x = xs[j];
      }
    }
    gaps.pass = gaps.worst_value <= gap_constant;
    report.checks.push_back(gaps);
  }
  return report;
}

/// Numerical checks of an error density: unit mass, C_eps bound and the
/// jump conventions.
inline ValidationReport validate_error(const ErrorDensity& err, std::size_t grid = 10000) {
  ValidationReport report;
  const double mass =
      quad::integrate([&](double t) { return err.phi_inner(t); }, -1.0, 1.0, {1e-13, 1e-15}).value;
  report.checks.push_back({"unit_mass", std::fabs(mass - 1.0) <= 1e-8, mass, 1.0, 0.0});

  double sup = 0.0;
  double lip = 0.0;
  double lowest = std::numeric_limits<double>::infinity();
  double prev = err.phi_inner(-1.0);
  for (std::size_t i = 0; i <= grid; ++i) {
    const double t = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(grid);
    const double p = err.phi_inner(t);
    sup = std::max(sup, std::fabs(p));
    lowest = std::min(lowest, p);
    if (i > 0) lip = std::max(lip, std::fabs(p - prev) * static_cast<double>(grid) / 2.0);
    prev = p;
  }
  report.checks.push_back({"c_eps_bound", sup + lip <= err.lipschitz_const * (1.0 + 1e-9),
                           sup + lip, err.lipschitz_const, 0.0});
  const bool jumps_ok = err.one_sided
                            ? (err.jump_left > 0.0 && err.jump_right == 0.0)
                            : (err.jump_left > 0.0 && err.jump_right > 0.0 && lowest > 0.0);
  report.checks.push_back({"jump_convention", jumps_ok, lowest, 0.0, 0.0});
  const bool jumps_match = std::fabs(err.phi_inner(-1.0) - err.jump_left) <= 1e-12 &&
                           std::fabs(err.phi_inner(1.0) - err.jump_right) <= 1e-12;
  report.checks.push_back({"jump_values_match_phi", jumps_match, err.phi_inner(1.0), err.jump_right, 1.0});
  return report;
}

}  // namespace irreg

#endif  // IRREG_MODEL_HPP
