#ifndef IRREG_SAMPLERS_HPP
#define IRREG_SAMPLERS_HPP

// Realizations of the regression experiment and of the boundary-intensity
// Poisson point processes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "irreg/errors.hpp"
#include "irreg/model.hpp"
#include "irreg/quadrature.hpp"
#include "irreg/random.hpp"

namespace irreg {

// ---------------------------------------------------------------------------
// Error draws.

/// Inverse-CDF table for an error density: 2^14 cells on [-1, 1], cell
/// masses by a 15-point Kronrod rule, linear interpolation inside a cell.
class ErrorSampler {
 public:
  static constexpr std::size_t kCells = std::size_t{1} << 14;

  explicit ErrorSampler(const ErrorDensity& err) : cdf_(kCells + 1, 0.0) {
    const double w = 2.0 / static_cast<double>(kCells);
    for (std::size_t i = 0; i < kCells; ++i) {
      const double a = -1.0 + w * static_cast<double>(i);
      cdf_[i + 1] = cdf_[i] + quad::kronrod15([&](double t) { return err.phi_inner(t); }, a, a + w);
    }
    const double total = cdf_.back();
    if (!(total > 0.0)) throw ValidationError("ErrorSampler: density has no mass");
    for (double& c : cdf_) c /= total;
    cdf_.back() = 1.0;
  }

  /// Quantile of the tabulated law at u in [0, 1].
  double quantile(double u) const {
    if (u <= 0.0) return -1.0;
    if (u >= 1.0) return 1.0;
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    const auto i = static_cast<std::size_t>(it - cdf_.begin()) - 1;
    const double lo = cdf_[i];
    const double hi = cdf_[i + 1];
    const double w = 2.0 / static_cast<double>(kCells);
    const double frac = hi > lo ? (u - lo) / (hi - lo) : 0.0;
    return std::clamp(-1.0 + w * (static_cast<double>(i) + frac), -1.0, 1.0);
  }

  /// Tabulated CDF at t.
  double cdf(double t) const {
    if (t <= -1.0) return 0.0;
    if (t >= 1.0) return 1.0;
    const double pos = (t + 1.0) / 2.0 * static_cast<double>(kCells);
    const auto i = std::min(static_cast<std::size_t>(pos), kCells - 1);
    const double frac = pos - static_cast<double>(i);
    return cdf_[i] + frac * (cdf_[i + 1] - cdf_[i]);
  }

  double draw(RandomStream& rng) const { return quantile(rng.uniform()); }

 private:
  std::vector<double> cdf_;
};

/// One draw from the error density.
inline double sample_error(const ErrorSampler& sampler, RandomStream& rng) {
  return sampler.draw(rng);
}

// ---------------------------------------------------------------------------
// Regression experiment.

struct RegressionSample {
  std::vector<double> xs;
  std::vector<double> ys;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::uint64_t spec_ref = 0;
};

/// Y_j = theta(x_j) + eps_j on the quantile design.
inline RegressionSample sample_regression(const ParameterFunction& theta, const ExperimentSpec& spec,
                                          std::uint64_t seed,
                                          const ErrorSampler* sampler = nullptr) {
  spec.validate();
  if (theta.c_theta != spec.c_theta) {
    throw ValidationError("sample_regression: theta and spec declare different C_Theta");
  }
  RegressionSample s;
  s.n = spec.n;
  s.seed = seed;
  s.spec_ref = spec.hash();
  s.xs = design_points(spec.n, spec.design);
  s.ys.resize(spec.n);
  std::optional<ErrorSampler> local;
  if (sampler == nullptr) sampler = &local.emplace(spec.error);
  RandomStream rng(seed);
  for (std::size_t j = 0; j < spec.n; ++j) {
    const double t = theta.value(s.xs[j]);
    if (!(std::fabs(t) <= spec.c_theta * (1.0 + 1e-9))) {
      throw ValidationError("sample_regression: |theta| exceeds C_Theta at x = " +
                            std::to_string(s.xs[j]));
    }
    s.ys[j] = t + sampler->draw(rng);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Point processes.

enum class ProcessTag { X1_lower_region, X2_upper_region, X_l, X_u, other };

inline std::string to_string(ProcessTag tag) {
  switch (tag) {
    case ProcessTag::X1_lower_region: return "X1";
    case ProcessTag::X2_upper_region: return "X2";
    case ProcessTag::X_l: return "Xl";
    case ProcessTag::X_u: return "Xu";
    case ProcessTag::other: return "other";
  }
  return "other";
}

inline ProcessTag process_tag_from_string(const std::string& s) {
  if (s == "X1") return ProcessTag::X1_lower_region;
  if (s == "X2") return ProcessTag::X2_upper_region;
  if (s == "Xl") return ProcessTag::X_l;
  if (s == "Xu") return ProcessTag::X_u;
  if (s == "other") return ProcessTag::other;
  throw ValidationError("unknown process tag '" + s + "'");
}

struct Point {
  double x = 0.0;
  double y = 0.0;
  int pass = 0;          // pipeline pass (1 or 2), 0 outside the pipeline
  bool extreme = false;  // deterministic block-extreme point of the randomization
};

struct PointProcessRealization {
  std::vector<Point> points;
  ProcessTag tag = ProcessTag::other;
  double intensity_mass = 0.0;
  std::uint64_t seed = 0;
  double n = 0.0;        // sample-size scale the intensity was built with
  double y_bound = 1.0;  // S = [0,1] x [-y_bound, y_bound]

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
};

enum class RegionKind { below_curve, above_curve, below_line, above_line, band };

/// lambda(x, y) = scale * g(x) * 1{lower(x) <= y <= upper(x)}, restricted to
/// x in [x_lo, x_hi] and |y| <= y_bound. The x-profile g is either the
/// design density or a constant.
struct IntensityFunction {
  RegionKind region = RegionKind::band;
  double scale = 1.0;
  double y_bound = 1.0;
  double x_lo = 0.0;
  double x_hi = 1.0;

  // x-profile
  std::optional<DesignSpec> design;  // g = f_D if set
  double profile_constant = 1.0;     // g = profile_constant otherwise

  // region data
  RealFn curve;                // below/above curve
  double level = 0.0;          // tilted line: level + slope (x - pivot)
  double slope = 0.0;
  double pivot = 0.0;
  double band_lo = 0.0;
  double band_hi = 1.0;

  std::vector<double> breaks;  // kinks/jumps of the integrand in x

  double profile(double x) const {
    if (x < x_lo || x > x_hi) return 0.0;
    return design ? design->density(x) : profile_constant;
  }

  /// Vertical section {y : lower <= y <= upper} at x (may be empty).
  std::pair<double, double> section(double x) const {
    double lo = -y_bound;
    double hi = y_bound;
    switch (region) {
      case RegionKind::below_curve: hi = curve(x); break;
      case RegionKind::above_curve: lo = curve(x); break;
      case RegionKind::below_line: hi = level + slope * (x - pivot); break;
      case RegionKind::above_line: lo = level + slope * (x - pivot); break;
      case RegionKind::band:
        lo = band_lo;
        hi = band_hi;
        break;
    }
    return {std::max(lo, -y_bound), std::min(hi, y_bound)};
  }

  bool contains(double x, double y) const {
    if (x < x_lo || x > x_hi) return false;
    const auto [lo, hi] = section(x);
    return y >= lo && y <= hi;
  }

  double operator()(double x, double y) const {
    return contains(x, y) ? scale * profile(x) : 0.0;
  }

  /// integral of lambda over the plane, by quadrature in x.
  double mass() const {
    if (!(scale > 0.0) || !(x_hi > x_lo)) return 0.0;
    if (!std::isfinite(y_bound)) throw ValidationError("IntensityFunction: unbounded region");
    auto integrand = [&](double x) {
      const auto [lo, hi] = section(x);
      return profile(x) * std::max(0.0, hi - lo);
    };
    std::vector<double> pts{x_lo};
    for (double b : breaks) {
      if (b > x_lo && b < x_hi) pts.push_back(b);
    }
    if (region == RegionKind::below_line || region == RegionKind::above_line) {
      // Kinks where the line leaves the y-range.
      if (slope != 0.0) {
        for (double yb : {-y_bound, y_bound}) {
          const double xc = pivot + (yb - level) / slope;
          if (xc > x_lo && xc < x_hi) pts.push_back(xc);
        }
      }
    }
    pts.push_back(x_hi);
    std::sort(pts.begin(), pts.end());
    return scale * quad::integrate_pieces(integrand, pts, {1e-12, 1e-13}).value;
  }

  // Builders ---------------------------------------------------------------

  static IntensityFunction boundary(const ParameterFunction& theta, const DesignSpec& design,
                                    bool lower, double scale, double y_bound) {
    IntensityFunction f;
    f.region = lower ? RegionKind::below_curve : RegionKind::above_curve;
    f.scale = scale;
    f.y_bound = y_bound;
    f.design = design;
    f.curve = theta.value;
    if (theta.family == FamilyTag::custom_grid) {
      const std::size_t cells = theta.params.size();
      for (std::size_t k = 1; k < cells; ++k) {
        f.breaks.push_back(static_cast<double>(k) / static_cast<double>(cells));
      }
    } else if (theta.family == FamilyTag::bump && theta.params.size() == 3) {
      f.breaks = {theta.params[1] - theta.params[2] / 2, theta.params[1],
                  theta.params[1] + theta.params[2] / 2};
    }
    return f;
  }

  static IntensityFunction band_region(double y_lo, double y_hi, double scale, double y_bound,
                                       std::optional<DesignSpec> design = std::nullopt) {
    IntensityFunction f;
    f.region = RegionKind::band;
    f.band_lo = y_lo;
    f.band_hi = y_hi;
    f.scale = scale;
    f.y_bound = y_bound;
    f.design = std::move(design);
    return f;
  }

  /// Region below (or above) the line level + slope (x - pivot) over
  /// [x_lo, x_hi], with constant x-profile.
  static IntensityFunction tilted(bool below, double level, double slope, double pivot,
                                  double x_lo, double x_hi, double profile_constant, double scale,
                                  double y_bound) {
    IntensityFunction f;
    f.region = below ? RegionKind::below_line : RegionKind::above_line;
    f.level = level;
    f.slope = slope;
    f.pivot = pivot;
    f.x_lo = x_lo;
    f.x_hi = x_hi;
    f.profile_constant = profile_constant;
    f.scale = scale;
    f.y_bound = y_bound;
    return f;
  }
};

/// The two intensities of the point process experiment for theta:
/// lambda_1 below the curve with scale n f(1), lambda_2 above with n f(-1).
inline std::pair<IntensityFunction, IntensityFunction> boundary_intensities(
    const ParameterFunction& theta, const ExperimentSpec& spec, double n_scale) {
  const double yb = spec.y_bound();
  return {IntensityFunction::boundary(theta, spec.design, true, n_scale * spec.error.jump_right, yb),
          IntensityFunction::boundary(theta, spec.design, false, n_scale * spec.error.jump_left, yb)};
}

namespace detail {

// x ~ g restricted to [lam.x_lo, lam.x_hi].
inline double draw_profile_x(const IntensityFunction& lam, RandomStream& rng) {
  if (lam.design) {
    const double a = lam.design->cdf(lam.x_lo);
    const double b = lam.design->cdf(lam.x_hi);
    return std::clamp(lam.design->quantile(a + (b - a) * rng.uniform()), lam.x_lo, lam.x_hi);
  }
  return lam.x_lo + (lam.x_hi - lam.x_lo) * rng.uniform();
}

// Vertical bounding interval of the region over [x_lo, x_hi].
inline std::pair<double, double> region_box(const IntensityFunction& lam) {
  double lo = -lam.y_bound;
  double hi = lam.y_bound;
  if (lam.region == RegionKind::band) {
    lo = std::max(lo, lam.band_lo);
    hi = std::min(hi, lam.band_hi);
  } else if (lam.region == RegionKind::below_line || lam.region == RegionKind::above_line) {
    const double a = lam.level + lam.slope * (lam.x_lo - lam.pivot);
    const double b = lam.level + lam.slope * (lam.x_hi - lam.pivot);
    if (lam.region == RegionKind::below_line) {
      hi = std::min(hi, std::max(a, b));
    } else {
      lo = std::max(lo, std::min(a, b));
    }
  }
  return {lo, hi};
}

}  // namespace detail

/// Two-stage sampler: N ~ Poisson(mass), then N i.i.d. points from
/// lambda / mass by rejection from the bounding box of the region.
inline PointProcessRealization sample_ppp(const IntensityFunction& lam, std::uint64_t seed,
                                          ProcessTag tag = ProcessTag::other, double n_scale = 0.0) {
  if (!std::isfinite(lam.y_bound)) throw ValidationError("sample_ppp: unbounded region");
  PointProcessRealization out;
  out.tag = tag;
  out.seed = seed;
  out.n = n_scale;
  out.y_bound = lam.y_bound;
  const double mass = lam.mass();
  out.intensity_mass = std::max(0.0, mass);
  if (!(mass > 0.0)) return out;
  RandomStream rng(seed);
  const auto count = rng.poisson(mass);
  const auto [lo, hi] = detail::region_box(lam);
  if (!(hi > lo)) return out;
  out.points.reserve(count);
  std::size_t attempts = 0;
  const std::size_t limit = 1000000 + 10000 * count;
  while (out.points.size() < count) {
    if (++attempts > limit) throw NumericalError("sample_ppp: rejection sampler stalled");
    const double x = detail::draw_profile_x(lam, rng);
    const double y = lo + (hi - lo) * rng.uniform();
    if (lam.contains(x, y)) out.points.push_back({x, y});
  }
  return out;
}

enum class Side { lower, upper };

/// Sequential construction of X_1 (lower) or X_2 (upper):
/// y_k = theta(x_k) -/+ Gamma_k / (n f(+-1)), x_k i.i.d. f_D, Gamma_k the
/// partial sums of unit exponentials; points leaving S are discarded.
inline PointProcessRealization sample_ppp_sequential(const ParameterFunction& theta,
                                                     const ExperimentSpec& spec, Side side,
                                                     std::uint64_t seed,
                                                     std::optional<double> n_scale = std::nullopt) {
  const double n = n_scale.value_or(static_cast<double>(spec.n));
  const double jump = side == Side::lower ? spec.error.jump_right : spec.error.jump_left;
  const double rate = n * jump;
  PointProcessRealization out;
  out.tag = side == Side::lower ? ProcessTag::X1_lower_region : ProcessTag::X2_upper_region;
  out.seed = seed;
  out.n = n;
  out.y_bound = spec.y_bound();
  if (!(rate > 0.0)) return out;
  const auto lam = IntensityFunction::boundary(theta, spec.design, side == Side::lower, rate, out.y_bound);
  out.intensity_mass = lam.mass();
  RandomStream rng(seed);
  const double depth_limit = 2.0 * out.y_bound;
  double gamma = 0.0;
  for (;;) {
    gamma += rng.exponential();
    const double depth = gamma / rate;
    if (depth > depth_limit) break;
    const double x = spec.design.quantile(rng.uniform());
    const double t = theta.value(x);
    const double y = side == Side::lower ? t - depth : t + depth;
    if (y >= -out.y_bound && y <= out.y_bound) out.points.push_back({x, y});
  }
  return out;
}

}  // namespace irreg

#endif  // IRREG_SAMPLERS_HPP
