#ifndef IRREG_METRICS_HPP
#define IRREG_METRICS_HPP

// Distances between experiments' laws and the quantitative checks built on
// them: Hellinger distances of Poisson processes, exponential and
// block-extreme approximations, extreme-value laws, the lower-bound pair,
// the counterexample test and Monte Carlo rate studies.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "irreg/equivalence.hpp"
#include "irreg/errors.hpp"
#include "irreg/estimators.hpp"
#include "irreg/model.hpp"
#include "irreg/parallel.hpp"
#include "irreg/quadrature.hpp"
#include "irreg/random.hpp"
#include "irreg/samplers.hpp"

namespace irreg {

enum class DistanceKind { hellinger_sq, ks, tv_bound };
enum class DistanceMethod { closed_form, quadrature, monte_carlo };

inline std::string to_string(DistanceKind k) {
  switch (k) {
    case DistanceKind::hellinger_sq: return "hellinger_sq";
    case DistanceKind::ks: return "ks";
    case DistanceKind::tv_bound: return "tv_bound";
  }
  return "unknown";
}

inline std::string to_string(DistanceMethod m) {
  switch (m) {
    case DistanceMethod::closed_form: return "closed_form";
    case DistanceMethod::quadrature: return "quadrature";
    case DistanceMethod::monte_carlo: return "monte_carlo";
  }
  return "unknown";
}

struct DistanceReport {
  DistanceKind kind = DistanceKind::hellinger_sq;
  double value = 0.0;
  DistanceMethod method = DistanceMethod::closed_form;
  double error_estimate = 0.0;
  std::uint64_t inputs_hash = 0;
};

namespace detail {

inline std::uint64_t hash_doubles(std::string_view label, std::initializer_list<double> xs) {
  std::uint64_t h = fnv1a64(label);
  for (double x : xs) h = splitmix64(h ^ std::bit_cast<std::uint64_t>(x));
  return h;
}

/// Sign changes of f on a uniform grid of [a, b], refined by bisection.
template <class F>
std::vector<double> roots(F&& f, double a, double b, std::size_t grid = 4096) {
  std::vector<double> out;
  double x0 = a;
  double f0 = f(a);
  for (std::size_t i = 1; i <= grid; ++i) {
    const double x1 = a + (b - a) * static_cast<double>(i) / static_cast<double>(grid);
    const double f1 = f(x1);
    if ((f0 < 0.0 && f1 > 0.0) || (f0 > 0.0 && f1 < 0.0)) {
      double lo = x0, hi = x1, flo = f0;
      for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::fabs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      out.push_back(0.5 * (lo + hi));
    }
    x0 = x1;
    f0 = f1;
  }
  return out;
}

inline std::vector<double> sorted_breaks(std::vector<double> pts, double a, double b) {
  pts.push_back(a);
  pts.push_back(b);
  std::vector<double> out;
  for (double p : pts) {
    if (p >= a && p <= b) out.push_back(p);
  }
  std::sort(out.begin(), out.end());
  // Merge breaks closer than rounding noise; keep the outer endpoints.
  const double eps = 1e-12 * std::max(1.0, b - a);
  std::vector<double> merged{out.front()};
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i] - merged.back() > eps) {
      merged.push_back(out[i]);
    } else if (i + 1 == out.size()) {
      merged.back() = out[i];
    }
  }
  if (merged.size() == 1) merged.push_back(b);
  return merged;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Hellinger distances of Poisson processes.

/// integral of (sqrt(lambda1) - sqrt(lambda2))^2 over the plane, reduced to
/// one dimension: at fixed x both intensities are constant on intervals.
inline quad::Result hellinger_integral(const IntensityFunction& l1, const IntensityFunction& l2) {
  const double a = std::min(l1.x_lo, l2.x_lo);
  const double b = std::max(l1.x_hi, l2.x_hi);
  auto parts = [&](double x) {
    const double v1 = l1.scale * l1.profile(x);
    const double v2 = l2.scale * l2.profile(x);
    auto [lo1, hi1] = l1.section(x);
    auto [lo2, hi2] = l2.section(x);
    const bool on1 = v1 > 0.0 && hi1 > lo1;
    const bool on2 = v2 > 0.0 && hi2 > lo2;
    // Lengths of E1 \ E2, E2 \ E1 and E1 n E2 from endpoint differences.
    auto minus = [](double alo, double ahi, double blo, double bhi) {
      return std::max(0.0, std::min(ahi, blo) - alo) + std::max(0.0, ahi - std::max(alo, bhi));
    };
    const double only1 = on1 ? (on2 ? minus(lo1, hi1, lo2, hi2) : hi1 - lo1) : 0.0;
    const double only2 = on2 ? (on1 ? minus(lo2, hi2, lo1, hi1) : hi2 - lo2) : 0.0;
    const double both = (on1 && on2) ? std::max(0.0, std::min(hi1, hi2) - std::max(lo1, lo2)) : 0.0;
    const double d = std::sqrt(v1) - std::sqrt(v2);
    return v1 * only1 + v2 * only2 + d * d * both;
  };
  std::vector<double> pts = l1.breaks;
  pts.insert(pts.end(), l2.breaks.begin(), l2.breaks.end());
  for (double x : {l1.x_lo, l1.x_hi, l2.x_lo, l2.x_hi}) pts.push_back(x);
  auto lo = [](const IntensityFunction& l, double x) { return l.section(x).first; };
  auto hi = [](const IntensityFunction& l, double x) { return l.section(x).second; };
  const std::pair<int, int> pairs[] = {{0, 2}, {1, 3}, {0, 3}, {1, 2}, {0, 1}, {2, 3}};
  auto endpoint = [&](int which, double x) {
    const IntensityFunction& l = which < 2 ? l1 : l2;
    return which % 2 == 0 ? lo(l, x) : hi(l, x);
  };
  for (auto [p, q] : pairs) {
    const auto r = detail::roots([&](double x) { return endpoint(p, x) - endpoint(q, x); }, a, b);
    pts.insert(pts.end(), r.begin(), r.end());
  }
  // Absolute floor: rounding level of the integrand's magnitude.
  const double floor = 1e-15 * (l1.scale + l2.scale) * std::max(l1.y_bound, l2.y_bound) * (b - a);
  return quad::integrate_pieces(parts, detail::sorted_breaks(std::move(pts), a, b), {1e-10, floor});
}

/// H^2 between the laws of Poisson processes with intensities l1 and l2:
/// 2 (1 - exp(-int (sqrt l1 - sqrt l2)^2 / 2)).
inline DistanceReport hellinger_ppp(const IntensityFunction& l1, const IntensityFunction& l2) {
  if (l1.y_bound != l2.y_bound) throw ValidationError("hellinger_ppp: intensities live on different domains");
  const auto r = hellinger_integral(l1, l2);
  DistanceReport out;
  out.kind = DistanceKind::hellinger_sq;
  out.method = DistanceMethod::quadrature;
  out.value = -2.0 * std::expm1(-r.value / 2.0);
  out.error_estimate = std::exp(-r.value / 2.0) * r.error;
  out.inputs_hash = detail::hash_doubles("hellinger_ppp", {l1.mass(), l2.mass(), r.value});
  return out;
}

/// H^2 between the laws of two independent pairs (X1, X2) and (X1', X2'):
/// the exponent adds over the components.
inline DistanceReport hellinger_ppp_pair(const IntensityFunction& a1, const IntensityFunction& a2,
                                         const IntensityFunction& b1, const IntensityFunction& b2) {
  const auto r1 = hellinger_integral(a1, b1);
  const auto r2 = hellinger_integral(a2, b2);
  const double total = r1.value + r2.value;
  DistanceReport out;
  out.method = DistanceMethod::quadrature;
  out.value = -2.0 * std::expm1(-total / 2.0);
  out.error_estimate = std::exp(-total / 2.0) * (r1.error + r2.error);
  out.inputs_hash = detail::hash_doubles("hellinger_ppp_pair", {r1.value, r2.value});
  return out;
}

/// integral of |theta1 - theta2| f_D over [0, 1], split at the crossings.
inline quad::Result l1_distance(const ParameterFunction& t1, const ParameterFunction& t2,
                                const DesignSpec& design) {
  auto diff = [&](double x) { return t1.value(x) - t2.value(x); };
  auto pts = detail::roots(diff, 0.0, 1.0);
  for (const auto* t : {&t1, &t2}) {
    if (t->family == FamilyTag::custom_grid) {
      for (std::size_t k = 1; k < t->params.size(); ++k) {
        pts.push_back(static_cast<double>(k) / static_cast<double>(t->params.size()));
      }
    } else if (t->family == FamilyTag::bump) {
      pts.push_back(t->params[1] - t->params[2] / 2);
      pts.push_back(t->params[1]);
      pts.push_back(t->params[1] + t->params[2] / 2);
    }
  }
  return quad::integrate_pieces([&](double x) { return std::fabs(diff(x)) * design.density(x); },
                                detail::sorted_breaks(std::move(pts), 0.0, 1.0), {1e-7, 1e-300});
}

/// 2 (1 - exp(-(n/2) J int |theta1 - theta2| f_D)).
inline DistanceReport hellinger_boundary_closed_form(const ParameterFunction& t1, const ParameterFunction& t2,
                                                     double n, double total_jump, const DesignSpec& design) {
  if (!(total_jump > 0.0)) throw ValidationError("hellinger_boundary_closed_form: J must be positive");
  const auto r = l1_distance(t1, t2, design);
  const double e = 0.5 * n * total_jump * r.value;
  DistanceReport out;
  out.method = DistanceMethod::closed_form;
  out.value = -2.0 * std::expm1(-e);
  out.error_estimate = 0.5 * n * total_jump * r.error;
  out.inputs_hash = detail::hash_doubles("hellinger_boundary", {n, total_jump, r.value});
  return out;
}

/// Gap between the exact boundary intensities and their block-constant
/// versions (f_D replaced by m int_{I_k} f_D on each block).
inline DistanceReport hellinger_block_profile(const ParameterFunction& theta, const ExperimentSpec& spec,
                                              double n, std::size_t m) {
  const auto [l1, l2] = boundary_intensities(theta, spec, n);
  double total = 0.0, err = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double a = static_cast<double>(k) / static_cast<double>(m);
    const double b = static_cast<double>(k + 1) / static_cast<double>(m);
    const double level = spec.design.mass(a, b) * static_cast<double>(m);
    for (const auto* l : {&l1, &l2}) {
      IntensityFunction exact = *l;
      exact.x_lo = a;
      exact.x_hi = b;
      IntensityFunction block = exact;
      block.design.reset();
      block.profile_constant = level;
      const auto r = hellinger_integral(exact, block);
      total += r.value;
      err += r.error;
    }
  }
  DistanceReport out;
  out.method = DistanceMethod::quadrature;
  out.value = -2.0 * std::expm1(-total / 2.0);
  out.error_estimate = err;
  out.inputs_hash = detail::hash_doubles("hellinger_block_profile", {n, static_cast<double>(m), total});
  return out;
}

// ---------------------------------------------------------------------------
// Exponential approximations.

/// H^2 between exponential densities with rates mu1, mu2:
/// 2 (mu1 - mu2)^2 / ((mu1 + mu2) (sqrt mu1 + sqrt mu2)^2).
inline double hellinger_exponential(double mu1, double mu2) {
  if (!(mu1 > 0.0) || !(mu2 > 0.0)) throw ValidationError("hellinger_exponential: rates must be positive");
  const double d = mu1 - mu2;
  const double s = std::sqrt(mu1) + std::sqrt(mu2);
  return 2.0 * d * d / ((mu1 + mu2) * s * s);
}

/// P(E1/mu1 + E2/mu2 > t) for independent unit exponentials.
inline double hypoexponential_tail(double mu1, double mu2, double t) {
  if (std::fabs(mu1 - mu2) <= 1e-9 * std::max(mu1, mu2)) {
    const double mu = 0.5 * (mu1 + mu2);
    return std::exp(-mu * t) * (1.0 + mu * t);
  }
  return (mu2 * std::exp(-mu1 * t) - mu1 * std::exp(-mu2 * t)) / (mu2 - mu1);
}

/// H^2 between the exact joint law of (min, max) of l i.i.d. draws from
/// f_W(w) = phi(w - delta0) on [delta0 - 1, delta0 + 1] and the product of
/// exponentials with rates (l - 2) f_W(delta0 -+ 1) anchored at the support
/// endpoints. In coordinates u = min - (delta0 - 1), v = (delta0 + 1) - max
/// the exact law lives on the triangle u + v <= 2; the surrogate's mass
/// beyond it enters in closed form. Because f_W is located at delta0, the
/// value does not depend on delta0 except through rounding.
inline DistanceReport block_extreme_hellinger(std::size_t l, const ErrorDensity& shape, double delta0) {
  if (l < 3) throw ValidationError("block_extreme_hellinger: l must be at least 3");
  const double lo = delta0 - 1.0;
  const double hi = delta0 + 1.0;
  const double norm = quad::integrate([&](double t) { return shape.phi_inner(t); }, -1.0, 1.0, {1e-14, 1e-16}).value;
  auto f = [&](double w) { return shape.phi_inner(std::clamp(w - delta0, -1.0, 1.0)) / norm; };
  const double fl = f(lo);
  const double fh = f(hi);
  if (!(fl > 0.0) || !(fh > 0.0)) throw ValidationError("block_extreme_hellinger: f_W must be positive at both ends");
  const double L = static_cast<double>(l);
  const double mu1 = (L - 2.0) * fl;
  const double mu2 = (L - 2.0) * fh;
  const double lead = std::log(L) + std::log(L - 1.0);

  // A(u) = int_lo^{lo+u} f, B(v) = int_{hi-v}^{hi} f on short pieces.
  auto cdf_left = [&](double u) {
    double s = 0.0;
    const double step = 0.125;
    double a = 0.0;
    while (a < u) {
      const double b = std::min(u, a + step);
      s += quad::kronrod15([&](double t) { return f(lo + t); }, a, b);
      a = b;
    }
    return s;
  };
  auto cdf_right = [&](double v) {
    double s = 0.0;
    const double step = 0.125;
    double a = 0.0;
    while (a < v) {
      const double b = std::min(v, a + step);
      s += quad::kronrod15([&](double t) { return f(hi - t); }, a, b);
      a = b;
    }
    return s;
  };

  auto integrate_triangle = [&](double scale) {
    const auto ub = quad::geometric_breaks(0.0, 2.0, scale);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < ub.size(); ++i) {
      total += quad::kronrod15(
          [&](double u) {
            const double au = cdf_left(u);
            const double fu = f(lo + u);
            const double vmax = 2.0 - u;
            if (!(vmax > 0.0)) return 0.0;
            const auto vb = quad::geometric_breaks(0.0, vmax, scale);
            double inner = 0.0;
            for (std::size_t j = 0; j + 1 < vb.size(); ++j) {
              inner += quad::kronrod15(
                  [&](double v) {
                    const double rest = 1.0 - au - cdf_right(v);
                    double exact = 0.0;
                    if (rest > 0.0) {
                      exact = std::exp(0.5 * (lead + std::log(fu) + std::log(f(hi - v)) +
                                              (L - 2.0) * std::log(rest)));
                    }
                    const double surrogate = std::sqrt(mu1 * mu2) * std::exp(-0.5 * (mu1 * u + mu2 * v));
                    const double d = exact - surrogate;
                    return d * d;
                  },
                  vb[j], vb[j + 1]);
            }
            return inner;
          },
          ub[i], ub[i + 1]);
    }
    return total;
  };

  const double scale = 0.25 / (L * std::max(fl, fh));
  const double coarse = integrate_triangle(2.0 * scale);
  const double fine = integrate_triangle(scale);
  DistanceReport out;
  out.method = DistanceMethod::quadrature;
  out.value = std::clamp(fine + hypoexponential_tail(mu1, mu2, 2.0), 0.0, 2.0);
  out.error_estimate = std::fabs(fine - coarse);
  out.inputs_hash = detail::hash_doubles("block_extreme_hellinger", {L, delta0, norm});
  if (out.error_estimate > 1e-7 && out.error_estimate > 1e-3 * out.value) {
    throw NumericalError("block_extreme_hellinger: quadrature did not settle", out.error_estimate);
  }
  return out;
}

/// H^2 between the minimum of I uniforms on [0, 1] and an exponential with
/// rate I; in t = I x the integrand is ((1 - t/I)^{(I-1)/2} - e^{-t/2})^2.
inline DistanceReport univariate_extreme_hellinger(std::size_t count) {
  if (count < 2) throw ValidationError("univariate_extreme_hellinger: need at least 2 draws");
  const double I = static_cast<double>(count);
  auto integrand = [&](double t) {
    const double a = 0.5 * (I - 1.0) * std::log1p(-t / I);
    const double b = -0.5 * t;
    const double d = std::exp(b) * std::expm1(a - b);
    return d * d;
  };
  const auto r = quad::integrate_pieces(integrand, quad::geometric_breaks(0.0, I, 0.5), {1e-10, 1e-300});
  DistanceReport out;
  out.method = DistanceMethod::quadrature;
  out.value = r.value + std::exp(-I);  // exponential mass beyond x = 1
  out.error_estimate = r.error;
  out.inputs_hash = detail::hash_doubles("univariate_extreme_hellinger", {I});
  return out;
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov.

/// sup |F_emp - F| for a sample against a CDF (continuous part).
template <class Cdf>
double ks_statistic(std::vector<double> xs, Cdf&& cdf) {
  if (xs.empty()) throw ValidationError("ks_statistic: empty sample");
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

inline double ks_uniform(std::vector<double> us) {
  return ks_statistic(std::move(us), [](double u) { return std::clamp(u, 0.0, 1.0); });
}

/// Asymptotic critical value of the one-sample KS statistic at level 1%.
inline double ks_critical_value_1pct(std::size_t n) {
  return 1.628 / std::sqrt(static_cast<double>(n));
}

// ---------------------------------------------------------------------------
// Extreme-value law of block extremes of the boundary processes.

struct ExtremeLawReport {
  DistanceReport ks;
  std::size_t samples = 0;
  std::size_t atoms = 0;              // blocks without points
  double atom_fraction = 0.0;
  double expected_atom_mass = 0.0;    // mean closed-form atom probability
  std::vector<double> pit;            // pooled probability-integral transforms
};

/// Pools, over realizations and blocks, the transforms F_k(X_{l,k}) with
/// F_k(x) = exp(-(theta(xi_k) - x) rho_k phi(1)) (and the mirrored law for
/// upper processes), rho_k = n int_{I_k} f_D with n the realization's scale.
/// Empty strips give the atom at the domain bound, transformed by F_k(atom).
inline ExtremeLawReport extreme_law_check(const std::vector<PointProcessRealization>& realizations,
                                          const ParameterFunction& theta, std::size_t m,
                                          const ExperimentSpec& spec) {
  if (m == 0) throw ValidationError("extreme_law_check: m must be positive");
  ExtremeLawReport rep;
  const double md = static_cast<double>(m);
  for (const auto& x : realizations) {
    const bool lower = x.tag == ProcessTag::X1_lower_region || x.tag == ProcessTag::X_l;
    const bool upper = x.tag == ProcessTag::X2_upper_region || x.tag == ProcessTag::X_u;
    if (!lower && !upper) throw ValidationError("extreme_law_check: realization has no side tag");
    const double jump = lower ? spec.error.jump_right : spec.error.jump_left;
    std::vector<double> ext(m, lower ? -std::numeric_limits<double>::infinity()
                                     : std::numeric_limits<double>::infinity());
    for (const auto& p : x.points) {
      const auto k = std::min(static_cast<std::size_t>(std::max(0.0, std::floor(p.x * md))), m - 1);
      ext[k] = lower ? std::max(ext[k], p.y) : std::min(ext[k], p.y);
    }
    for (std::size_t k = 0; k < m; ++k) {
      const double a = static_cast<double>(k) / md;
      const double b = static_cast<double>(k + 1) / md;
      const double t = theta.value((static_cast<double>(k) + 0.5) / md);
      const double rate = x.n * spec.design.mass(a, b) * jump;
      const bool empty = !std::isfinite(ext[k]);
      double u;
      if (lower) {
        const double v = empty ? -x.y_bound : ext[k];
        u = std::exp(-std::max(0.0, t - v) * rate);
        rep.expected_atom_mass += std::exp(-(t + x.y_bound) * rate);
      } else {
        const double v = empty ? x.y_bound : ext[k];
        u = -std::expm1(-std::max(0.0, v - t) * rate);
        rep.expected_atom_mass += std::exp(-(x.y_bound - t) * rate);
      }
      rep.atoms += empty;
      rep.pit.push_back(u);
    }
  }
  rep.samples = rep.pit.size();
  if (rep.samples == 0) throw ValidationError("extreme_law_check: no blocks");
  rep.atom_fraction = static_cast<double>(rep.atoms) / static_cast<double>(rep.samples);
  rep.expected_atom_mass /= static_cast<double>(rep.samples);
  rep.ks.kind = DistanceKind::ks;
  rep.ks.method = DistanceMethod::monte_carlo;
  rep.ks.value = ks_uniform(rep.pit);
  rep.ks.error_estimate = ks_critical_value_1pct(rep.samples);
  rep.ks.inputs_hash = detail::hash_doubles("extreme_law_check", {static_cast<double>(rep.samples), rep.ks.value});
  return rep;
}

/// P[X_{l,k} <= x] = exp(-(theta_k - x) rho phi(1)) for x <= theta_k.
inline double extreme_law_cdf(double theta_k, double x, double rate) {
  return x >= theta_k ? 1.0 : std::exp(-(theta_k - x) * rate);
}

// ---------------------------------------------------------------------------
// Lower-bound construction.

/// Hoelder seminorm sup |g^{(r)}(x) - g^{(r)}(y)| / |x - y|^{s - r} on
/// [-1/2, 1/2], r the largest integer strictly below s.
inline double kernel_holder_seminorm(const Kernel& k, double s, std::size_t grid = 1500) {
  if (!(s > 0.0 && s <= 3.0)) throw ValidationError("kernel smoothness s must lie in (0, 3]");
  const int r = static_cast<int>(std::ceil(s)) - 1;
  const double beta = s - r;
  std::vector<double> xs(grid + 1), g(grid + 1);
  for (std::size_t i = 0; i <= grid; ++i) {
    xs[i] = -0.5 + static_cast<double>(i) / static_cast<double>(grid);
    g[i] = k.derivative(r, xs[i]);
  }
  double worst = 0.0;
  for (std::size_t i = 0; i <= grid; ++i) {
    for (std::size_t j = i + 1; j <= grid; ++j) {
      worst = std::max(worst, std::fabs(g[j] - g[i]) / std::pow(xs[j] - xs[i], beta));
    }
  }
  return worst;
}

/// The built-in kernel for derivative order k, scaled into Theta_{s,1}.
inline Kernel lower_bound_kernel(int k, double s) {
  Kernel base;
  switch (k) {
    case 0: base = Kernel::smooth_bump(); break;
    case 1: base = Kernel::odd_bump(); break;
    case 2: base = Kernel::curvature_bump(); break;
    default: throw ValidationError("lower_bound_kernel: k must be 0, 1 or 2");
  }
  const double semi = kernel_holder_seminorm(base, s);
  return base.scaled(1.0 / (semi * (1.0 + 1e-6)));
}

struct LowerBoundPair {
  ParameterFunction theta1;
  ParameterFunction theta2;
  double h = 0.0;
  double separation = 0.0;
  double separation_formula = 0.0;
  double hellinger = 0.0;  // H, not squared
};

/// theta1 = 0 and theta2 = L h^s K((x - x0)/h), h = (L n J f_D(x0))^{-1/(s+1)}.
inline LowerBoundPair lower_bound_pair(double s, double L, int k, double n, double J, const DesignSpec& design,
                                       double x0, const Kernel& kernel) {
  if (!(s > 0.0) || !(L > 0.0) || !(n > 0.0) || !(J > 0.0)) {
    throw ValidationError("lower_bound_pair: s, L, n and J must be positive");
  }
  if (k < 0 || static_cast<double>(k) >= s) throw ValidationError("lower_bound_pair: need 0 <= k < s");
  if (kernel_holder_seminorm(kernel, s, 300) > 1.0 + 1e-9) {
    throw ValidationError("lower_bound_pair: kernel is not in Theta_{s,1}");
  }
  const double k0 = kernel.derivative(k, 0.0);
  if (!(k0 > 0.0)) throw ValidationError("lower_bound_pair: kernel needs K^(k)(0) > 0");
  const double fd = design.density(x0);
  const double h = std::pow(L * n * J * fd, -1.0 / (s + 1.0));
  if (x0 - h / 2 < 0.0 || x0 + h / 2 > 1.0) {
    throw ValidationError("lower_bound_pair: bump support leaves [0, 1]; increase n");
  }
  LowerBoundPair out;
  out.h = h;
  const double amp = L * std::pow(h, s);
  out.theta1 = ParameterFunction::zero(amp, 1.0);
  out.theta2 = ParameterFunction::bump(kernel, amp, x0, h, L, 1.0);
  out.separation = std::fabs(amp * kernel.derivative(k, 0.0) / std::pow(h, k));
  out.separation_formula = k0 * std::pow(L, (k + 1.0) / (s + 1.0)) * std::pow(n * J * fd, -(s - k) / (s + 1.0));
  // int |theta2| f_D = amp h int |K(u)| f_D(x0 + h u) du, in the kernel's
  // coordinate to keep the quadrature well scaled for tiny h.
  auto integrand = [&](double u) { return std::fabs(kernel.value(u)) * design.density(x0 + h * u); };
  auto pts = detail::roots([&](double u) { return kernel.value(u); }, -0.5, 0.5);
  const double l1 = amp * h *
                    quad::integrate_pieces(integrand, detail::sorted_breaks(std::move(pts), -0.5, 0.5), {1e-9, 1e-300})
                        .value;
  out.hellinger = std::sqrt(-2.0 * std::expm1(-0.5 * n * J * l1));
  return out;
}

/// Smallest integer n such that the pair exists (support inside [0, 1]) and
/// H <= 1 at n and at n 2^j, j = 1..30.
inline double lower_bound_n0(double s, double L, int k, double J, const DesignSpec& design, double x0,
                             const Kernel& kernel) {
  auto ok = [&](double n) {
    try {
      return lower_bound_pair(s, L, k, n, J, design, x0, kernel).hellinger <= 1.0;
    } catch (const ValidationError&) {
      return false;
    }
  };
  double hi = 1.0;
  while (!ok(hi)) {
    hi *= 2.0;
    if (hi > 1e15) throw NumericalError("lower_bound_n0: no admissible n found");
  }
  double lo = hi / 2.0;
  if (hi == 1.0) lo = 0.0;
  while (hi - lo > 1.0) {
    const double mid = std::floor(0.5 * (lo + hi));
    (ok(mid) ? hi : lo) = mid;
  }
  for (int j = 1; j <= 30; ++j) {
    if (!ok(hi * std::pow(2.0, j))) throw NumericalError("lower_bound_n0: H exceeds 1 beyond the searched n0");
  }
  return hi;
}

// ---------------------------------------------------------------------------
// Counterexample for regularity one.

struct CounterexampleResult {
  double empirical_power = 0.0;
  double theory_power = 0.0;
  double limit_power = 0.0;   // 1 - exp(-2C/pi^2)
  double null_power = 0.0;    // P_0(T = 1), exactly zero
  double null_region_mass = 0.0;
  std::size_t reps = 0;
};

/// f_n(x) = C / (pi (n-1)) sin(pi (n-1) x).
inline ParameterFunction counterexample_function(double C, std::size_t n) {
  const double w = std::numbers::pi * static_cast<double>(n - 1);
  ParameterFunction f;
  f.value = [C, w](double x) { return C / w * std::sin(w * x); };
  f.first = [C, w](double x) { return C * std::cos(w * x); };
  f.second = [C, w](double x) { return -C * w * std::sin(w * x); };
  f.c_theta = C;
  f.alpha = 1.0;
  f.family = FamilyTag::scaled_sinusoid;
  f.params = {C, w};
  return f;
}

/// Power of T_n = 1{X1 has a point above 0 or X2 a point below 0} under
/// theta = f_n in the point-process experiment with uniform design and
/// f(-1) = f(1) = 1. Only the strip |y| <= C/(pi(n-1)) can decide T_n, and
/// by the restriction property of Poisson processes simulating the
/// processes there is exact.
inline CounterexampleResult counterexample_power(double C, std::size_t n, std::size_t reps, std::uint64_t seed,
                                                 unsigned workers = 1) {
  if (!(C > 0.0)) throw ValidationError("counterexample_power: C must be positive");
  if (n < 2) throw ValidationError("counterexample_power: n must be at least 2");
  if (reps < 1000) throw ValidationError("counterexample_power: reps must be at least 1000");
  ExperimentSpec spec;
  spec.error = ErrorDensity::u_shaped();
  spec.n = n;
  spec.c_theta = C;
  const auto theta = counterexample_function(C, n);
  const double nd = static_cast<double>(n);
  const double strip = C / (std::numbers::pi * (nd - 1.0));

  // Closed form: each of the n-1 humps has area 2C / (pi^2 (n-1)^2).
  const double hump = 2.0 * C / (std::numbers::pi * std::numbers::pi * (nd - 1.0) * (nd - 1.0));
  const double positive = std::ceil((nd - 1.0) / 2.0) * hump;
  const double negative = std::floor((nd - 1.0) / 2.0) * hump;
  CounterexampleResult res;
  res.reps = reps;
  res.theory_power = -std::expm1(-nd * (spec.error.jump_right * positive + spec.error.jump_left * negative));
  res.limit_power = -std::expm1(-2.0 * C / (std::numbers::pi * std::numbers::pi));

  // Homogeneous processes on the strip, thinned to the regions below and
  // above the curve (uniform design, so the profile is constant).
  const double box = strip * (1.0 + 1e-9);
  const double mass1 = nd * spec.error.jump_right * 2.0 * box;
  const double mass2 = nd * spec.error.jump_left * 2.0 * box;
  std::vector<char> hit(reps, 0);
  parallel_for(
      reps,
      [&](std::size_t r) {
        RandomStream rng(derive_seed(seed, "counterexample", r));
        bool t = false;
        for (const auto& [mass, lower] : {std::pair{mass1, true}, std::pair{mass2, false}}) {
          const auto count = rng.poisson(mass);
          for (std::uint64_t i = 0; i < count; ++i) {
            const double x = rng.uniform();
            const double y = rng.uniform(-box, box);
            const double c = theta.value(x);
            if (lower && y <= c && y > 0.0) t = true;
            if (!lower && y >= c && y < 0.0) t = true;
          }
        }
        hit[r] = t;
      },
      workers);
  double count = 0.0;
  for (char h : hit) count += h;
  res.empirical_power = count / static_cast<double>(reps);

  // Under theta = 0 the test regions {0 < y <= theta} and {theta <= y < 0}
  // are empty sets, so T_n = 0 surely.
  const auto zero = ParameterFunction::zero(C);
  auto [z1, z2] = boundary_intensities(zero, spec, nd);
  z1.y_bound = z2.y_bound = strip;
  z1.region = RegionKind::band;
  z1.band_lo = 0.0;
  z1.band_hi = 0.0;
  z2.region = RegionKind::band;
  z2.band_lo = 0.0;
  z2.band_hi = 0.0;
  res.null_region_mass = z1.mass() + z2.mass();
  res.null_power = res.null_region_mass == 0.0 ? 0.0 : -std::expm1(-res.null_region_mass);
  return res;
}

// ---------------------------------------------------------------------------
// Rate studies.

struct RateStudyResult {
  std::vector<double> ns;
  std::vector<double> risks;
  std::vector<double> risk_se;
  double slope = 0.0;
  double slope_se = 0.0;
  double theory_slope = 0.0;
  bool degenerate = false;
  std::vector<std::string> warnings;
};

/// Weighted least-squares slope of log(risk) on log(n), weights from the
/// delta-method variance (se / risk)^2 of log(risk).
inline RateStudyResult fit_rate(std::vector<double> ns, std::vector<double> risks, std::vector<double> ses,
                                double theory_slope) {
  if (ns.size() != risks.size() || ns.size() != ses.size()) throw ValidationError("fit_rate: size mismatch");
  if (ns.size() < 3) throw ValidationError("fit_rate: need at least 3 sample sizes");
  for (double r : risks) {
    if (!(r > 0.0)) throw ValidationError("fit_rate: risks must be positive");
  }
  RateStudyResult out;
  out.ns = std::move(ns);
  out.risks = std::move(risks);
  out.risk_se = std::move(ses);
  out.theory_slope = theory_slope;
  const auto [mn, mx] = std::minmax_element(out.risks.begin(), out.risks.end());
  if (*mx - *mn <= 1e-15 * *mx) {
    out.slope = 0.0;
    out.slope_se = std::numeric_limits<double>::infinity();
    out.degenerate = true;
    out.warnings.push_back("all risks equal; slope is not identified");
    return out;
  }
  const std::size_t k = out.ns.size();
  std::vector<double> w(k, 1.0);
  bool weighted = true;
  for (std::size_t i = 0; i < k; ++i) {
    const double rel = out.risk_se[i] / out.risks[i];
    if (!(rel > 0.0)) weighted = false;
    w[i] = rel > 0.0 ? 1.0 / (rel * rel) : 1.0;
  }
  if (!weighted) std::fill(w.begin(), w.end(), 1.0);
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sw += w[i];
    sx += w[i] * std::log(out.ns[i]);
    sy += w[i] * std::log(out.risks[i]);
  }
  const double mxl = sx / sw;
  const double myl = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double dx = std::log(out.ns[i]) - mxl;
    sxx += w[i] * dx * dx;
    sxy += w[i] * dx * (std::log(out.risks[i]) - myl);
  }
  out.slope = sxy / sxx;
  if (weighted) {
    out.slope_se = std::sqrt(1.0 / sxx);
  } else {
    double rss = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double e = std::log(out.risks[i]) - myl - out.slope * (std::log(out.ns[i]) - mxl);
      rss += e * e;
    }
    out.slope_se = k > 2 ? std::sqrt(rss / static_cast<double>(k - 2) / sxx) : std::numeric_limits<double>::infinity();
  }
  return out;
}

enum class Experiment { regression, point_process };

struct RateStudyConfig {
  std::vector<std::size_t> ns{500, 2000, 8000};
  std::size_t reps = 200;
  std::uint64_t seed = 1;
  double x0 = 0.5;
  Experiment experiment = Experiment::regression;
  double bandwidth_const = 1.0;
  unsigned workers = 1;
};

struct PointwiseRateStudy {
  RateStudyResult value;       // E |theta_hat(x0) - theta(x0)|^2
  RateStudyResult derivative;  // E |theta_hat'(x0) - theta'(x0)|^2
};

/// Monte Carlo pointwise risks of the pilot estimator at x0 over the sample
/// sizes, with fitted log-log slopes against the theoretical exponents
/// -2(2+alpha)/(3+alpha) and -2(1+alpha)/(3+alpha). Sample sizes at which
/// the fit is infeasible are dropped with a warning. In the point-process
/// experiment only the strip over U_h is simulated (the fit is local).
inline PointwiseRateStudy rate_study(const ParameterFunction& theta, const ExperimentSpec& base,
                                     const RateStudyConfig& cfg) {
  base.validate();
  if (cfg.ns.size() < 3) throw ValidationError("rate_study: need at least 3 sample sizes");
  const double alpha = base.alpha;
  std::vector<double> ns, rv, sv, rd, sd;
  std::vector<std::string> warnings;
  for (std::size_t n : cfg.ns) {
    ExperimentSpec spec = base;
    spec.n = n;
    std::vector<double> ev(cfg.reps), ed(cfg.reps);
    try {
      const double nd = static_cast<double>(n);
      const double h = pilot_bandwidth(nd, alpha, cfg.bandwidth_const);
      const double gamma = holder_band(h, spec.c_theta);
      const Window w = window_for(cfg.x0, h);
      auto [l1, l2] = boundary_intensities(theta, spec, nd);
      for (auto* l : {&l1, &l2}) {
        l->x_lo = w.lo;
        l->x_hi = w.hi;
      }
      const std::optional<ErrorSampler> sampler =
          cfg.experiment == Experiment::regression ? std::optional<ErrorSampler>(spec.error) : std::nullopt;
      parallel_for(
          cfg.reps,
          [&](std::size_t r) {
            LocalPolynomial p;
            if (cfg.experiment == Experiment::regression) {
              const auto s = sample_regression(theta, spec, derive_seed(cfg.seed, "rate-regression-" + std::to_string(n), r),
                                               &*sampler);
              p = admissible_fit_regression(s, cfg.x0, h, gamma, alpha);
            } else {
              auto a = sample_ppp(l1, derive_seed(cfg.seed, "rate-x1-" + std::to_string(n), r),
                                  ProcessTag::X1_lower_region, nd);
              auto b = sample_ppp(l2, derive_seed(cfg.seed, "rate-x2-" + std::to_string(n), r),
                                  ProcessTag::X2_upper_region, nd);
              const bool one_sided = spec.error.one_sided;
              p = admissible_fit_ppp(one_sided ? nullptr : &a, &b, cfg.x0, h, gamma, alpha);
            }
            const double e = p.coeffs[0] - theta.value(cfg.x0);
            const double d = p.coeffs[1] - theta.first(cfg.x0);
            ev[r] = e * e;
            ed[r] = d * d;
          },
          cfg.workers);
    } catch (const NumericalError& e) {
      warnings.push_back("n = " + std::to_string(n) + " dropped: " + e.what());
      continue;
    } catch (const ValidationError& e) {
      warnings.push_back("n = " + std::to_string(n) + " dropped: " + e.what());
      continue;
    }
    auto summarize = [&](const std::vector<double>& v, std::vector<double>& risk, std::vector<double>& se) {
      double m = 0.0;
      for (double x : v) m += x;
      m /= static_cast<double>(v.size());
      double var = 0.0;
      for (double x : v) var += (x - m) * (x - m);
      var /= static_cast<double>(v.size() > 1 ? v.size() - 1 : 1);
      risk.push_back(m);
      se.push_back(std::sqrt(var / static_cast<double>(v.size())));
    };
    ns.push_back(static_cast<double>(n));
    summarize(ev, rv, sv);
    summarize(ed, rd, sd);
  }
  if (ns.size() < 3) {
    throw ValidationError("rate_study: fewer than 3 sample sizes survived");
  }
  PointwiseRateStudy out;
  out.value = fit_rate(ns, rv, sv, -2.0 * (2.0 + alpha) / (3.0 + alpha));
  out.derivative = fit_rate(ns, rd, sd, -2.0 * (1.0 + alpha) / (3.0 + alpha));
  out.value.warnings.insert(out.value.warnings.end(), warnings.begin(), warnings.end());
  out.derivative.warnings.insert(out.derivative.warnings.end(), warnings.begin(), warnings.end());
  return out;
}

/// Lower-bound exponent of the pointwise loss for the k-th derivative over
/// Hoelder smoothness s: -(s - k)/(s + 1) (squared loss: twice that).
inline double lower_bound_exponent(double s, int k) { return -(s - k) / (s + 1.0); }

}  // namespace irreg

#endif  // IRREG_METRICS_HPP
