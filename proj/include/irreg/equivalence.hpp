#ifndef IRREG_EQUIVALENCE_HPP
#define IRREG_EQUIVALENCE_HPP

// Forward map from a regression sample to a pair of Poisson point processes:
// split, localize with a pilot, block extremes, randomization, and the
// second pass on the other half with superposition of the outputs.

#include <algorithm>
#include <bit>
#include <limits>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "irreg/errors.hpp"
#include "irreg/estimators.hpp"
#include "irreg/model.hpp"
#include "irreg/parallel.hpp"
#include "irreg/random.hpp"
#include "irreg/samplers.hpp"

namespace irreg {

// ---------------------------------------------------------------------------
// Exactly invertible shifts.

/// v - c stored as the rounded difference plus its exact rounding error
/// (Knuth's TwoSum), so that v is recovered bit for bit.
struct ShiftedValues {
  std::vector<double> value;
  std::vector<double> carry;
};

namespace detail {

inline std::pair<double, double> two_sum(double a, double b) {
  const double s = a + b;
  const double bb = s - a;
  const double err = (a - (s - bb)) + (b - bb);
  return {s, err};
}

}  // namespace detail

/// value[i] + carry[i] == v[i] - c[i] exactly.
inline ShiftedValues shift_exact(const std::vector<double>& v, const std::vector<double>& c) {
  ShiftedValues out;
  out.value.resize(v.size());
  out.carry.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto [s, e] = detail::two_sum(v[i], -c[i]);
    out.value[i] = s;
    out.carry[i] = v[i] == 0.0 ? v[i] : e;  // a zero carries its sign
  }
  return out;
}

/// Inverse of shift_exact.
inline std::vector<double> unshift_exact(const ShiftedValues& z, const std::vector<double>& c) {
  std::vector<double> v(z.value.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto [s, e] = detail::two_sum(z.value[i], c[i]);
    v[i] = s + (e + z.carry[i]);
    if (v[i] == 0.0) v[i] = std::copysign(0.0, z.carry[i]);
  }
  return v;
}

// ---------------------------------------------------------------------------
// Blocks.

/// m = ceil(n^{2/3 - min(alpha/2, 1/8)}).
inline std::size_t default_block_count(std::size_t n, double alpha) {
  const double expo = 2.0 / 3.0 - std::min(alpha / 2.0, 0.125);
  return static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(n), expo) - 1e-9));
}

struct BlockPartition {
  std::size_t m = 0;
  std::vector<std::size_t> index_map;         // point index -> block
  std::vector<std::size_t> block_counts;      // l_k
  std::vector<std::size_t> first_index;       // j(k), or SIZE_MAX if empty

  double left(std::size_t k) const { return static_cast<double>(k) / static_cast<double>(m); }
  double right(std::size_t k) const { return static_cast<double>(k + 1) / static_cast<double>(m); }
  double center(std::size_t k) const { return (static_cast<double>(k) + 0.5) / static_cast<double>(m); }

  std::vector<double> centers() const {
    std::vector<double> c(m);
    for (std::size_t k = 0; k < m; ++k) c[k] = center(k);
    return c;
  }

  /// I_k = [k/m, (k+1)/m), the last block closed.
  std::size_t block_of(double x) const {
    const auto k = static_cast<std::size_t>(std::max(0.0, std::floor(x * static_cast<double>(m))));
    return std::min(k, m - 1);
  }

  /// Partition of [0, 1] into m blocks, indexing the points xs.
  static BlockPartition make(const std::vector<double>& xs, std::size_t m) {
    if (m == 0) throw ValidationError("BlockPartition: m must be at least 1");
    BlockPartition p;
    p.m = m;
    p.index_map.resize(xs.size());
    p.block_counts.assign(m, 0);
    p.first_index.assign(m, static_cast<std::size_t>(-1));
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const std::size_t k = p.block_of(xs[i]);
      p.index_map[i] = k;
      if (p.block_counts[k]++ == 0) p.first_index[k] = i;
    }
    return p;
  }
};

struct BlockStatistics {
  std::vector<double> s;             // block minima of the localized residuals
  std::vector<double> S;             // block maxima
  std::vector<double> s_recentered;  // s + theta_hat(xi) + 1
  std::vector<double> S_recentered;  // S + theta_hat(xi) - 1
  ShiftedValues s_shift;             // exact recentering record
  ShiftedValues S_shift;
  std::uint64_t pilot_ref = 0;
};

// ---------------------------------------------------------------------------
// Steps.

/// Odd-indexed (1-based) observations and even-indexed observations.
inline std::pair<RegressionSample, RegressionSample> split_sample(const RegressionSample& sample) {
  if (sample.n % 2 != 0) throw ValidationError("split_sample: n must be even");
  RegressionSample a, b;
  for (auto* h : {&a, &b}) {
    h->n = sample.n / 2;
    h->seed = sample.seed;
    h->spec_ref = sample.spec_ref;
    h->xs.reserve(h->n);
    h->ys.reserve(h->n);
  }
  for (std::size_t j = 0; j < sample.n; ++j) {
    auto& h = j % 2 == 0 ? a : b;
    h.xs.push_back(sample.xs[j]);
    h.ys.push_back(sample.ys[j]);
  }
  return {a, b};
}

/// Inverse of split_sample.
inline RegressionSample merge_sample(const RegressionSample& a, const RegressionSample& b) {
  if (a.n != b.n) throw ValidationError("merge_sample: halves differ in size");
  RegressionSample s;
  s.n = a.n + b.n;
  s.seed = a.seed;
  s.spec_ref = a.spec_ref;
  for (std::size_t i = 0; i < a.n; ++i) {
    s.xs.push_back(a.xs[i]);
    s.ys.push_back(a.ys[i]);
    s.xs.push_back(b.xs[i]);
    s.ys.push_back(b.ys[i]);
  }
  return s;
}

namespace detail {

inline std::vector<double> localization_shift(const std::vector<double>& xs, const PilotEstimate& pilot,
                                              const BlockPartition& partition) {
  std::vector<double> c(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double xi = partition.center(partition.index_map[i]);
    const std::size_t g = pilot.index_of(xi);
    c[i] = pilot.values[g] + pilot.derivs[g] * (xs[i] - xi);
  }
  return c;
}

}  // namespace detail

/// Zbar_j = Y_j - theta_hat(xi_j) - theta_hat'(xi_j) (x_j - xi_j).
inline ShiftedValues localize(const RegressionSample& half, const PilotEstimate& pilot,
                              const BlockPartition& partition) {
  if (partition.index_map.size() != half.n) {
    throw ValidationError("localize: partition does not index this sample");
  }
  return shift_exact(half.ys, detail::localization_shift(half.xs, pilot, partition));
}

/// Inverse of localize.
inline RegressionSample undo_localize(const ShiftedValues& residuals, const RegressionSample& half,
                                      const PilotEstimate& pilot, const BlockPartition& partition) {
  RegressionSample out = half;
  out.ys = unshift_exact(residuals, detail::localization_shift(half.xs, pilot, partition));
  return out;
}

inline std::uint64_t pilot_fingerprint(const PilotEstimate& pilot) {
  std::uint64_t h = fnv1a64("pilot");
  auto mix = [&](double v) {
    h = splitmix64(h ^ std::bit_cast<std::uint64_t>(v));
  };
  for (std::size_t i = 0; i < pilot.grid.size(); ++i) {
    mix(pilot.grid[i]);
    mix(pilot.values[i]);
    mix(pilot.derivs[i]);
  }
  return h;
}

/// Blockwise minima and maxima of the residuals and their recentered
/// versions s'' = s + theta_hat(xi) + 1, S'' = S + theta_hat(xi) - 1.
inline BlockStatistics block_extremes(const std::vector<double>& residuals, const BlockPartition& partition,
                                      const PilotEstimate& pilot) {
  if (residuals.size() != partition.index_map.size()) {
    throw ValidationError("block_extremes: residuals and partition differ in size");
  }
  const std::size_t m = partition.m;
  BlockStatistics st;
  st.s.assign(m, std::numeric_limits<double>::infinity());
  st.S.assign(m, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    const std::size_t k = partition.index_map[i];
    st.s[k] = std::min(st.s[k], residuals[i]);
    st.S[k] = std::max(st.S[k], residuals[i]);
  }
  for (std::size_t k = 0; k < m; ++k) {
    if (partition.block_counts[k] == 0) {
      throw ValidationError("block_extremes: block " + std::to_string(k) + " is empty (m too large for n)");
    }
  }
  std::vector<double> down(m), up(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double t = pilot.value_at(partition.center(k));
    down[k] = -(t + 1.0);  // s'' = s - down
    up[k] = -(t - 1.0);
  }
  st.s_shift = shift_exact(st.s, down);
  st.S_shift = shift_exact(st.S, up);
  st.s_recentered = st.s_shift.value;
  st.S_recentered = st.S_shift.value;
  st.pilot_ref = pilot_fingerprint(pilot);
  return st;
}

/// Recovers (s, S) from the recentered extremes; the pilot must match.
inline std::pair<std::vector<double>, std::vector<double>> undo_recentering(
    const BlockStatistics& st, const BlockPartition& partition, const PilotEstimate& pilot) {
  if (pilot_fingerprint(pilot) != st.pilot_ref) {
    throw ValidationError("undo_recentering: pilot does not match the statistics");
  }
  std::vector<double> down(partition.m), up(partition.m);
  for (std::size_t k = 0; k < partition.m; ++k) {
    const double t = pilot.value_at(partition.center(k));
    down[k] = -(t + 1.0);
    up[k] = -(t - 1.0);
  }
  return {unshift_exact(st.s_shift, down), unshift_exact(st.S_shift, up)};
}

/// Step (5): per block, one point at the recentered extreme on the tilted
/// line through (xi_k, S''_k) with slope theta_hat'(xi_k), at x drawn from
/// f_D restricted to I_k, plus an independent Poisson cloud below (X_l) or
/// above (X_u) that line with intensity n_half f(+-1) m int_{I_k} f_D.
/// Points outside S are discarded.
inline std::pair<PointProcessRealization, PointProcessRealization> randomize_to_ppp(
    const BlockStatistics& stats, const PilotEstimate& pilot, const BlockPartition& partition,
    const ExperimentSpec& spec, double n_half, std::uint64_t seed, int pass = 0, unsigned workers = 1) {
  const std::size_t m = stats.S_recentered.size();
  PointProcessRealization xl, xu;
  xl.tag = ProcessTag::X_l;
  xu.tag = ProcessTag::X_u;
  for (auto* x : {&xl, &xu}) {
    x->seed = seed;
    x->n = n_half;
    x->y_bound = spec.y_bound();
  }
  if (m == 0) return {xl, xu};
  if (partition.m != m) throw ValidationError("randomize_to_ppp: partition and statistics differ in m");

  struct BlockOut {
    std::vector<Point> lower, upper;
    double mass_l = 0.0, mass_u = 0.0;
  };
  std::vector<BlockOut> out(m);
  const double yb = spec.y_bound();
  const double md = static_cast<double>(m);
  parallel_for(
      m,
      [&](std::size_t k) {
        const double a = partition.left(k);
        const double b = partition.right(k);
        const double xi = partition.center(k);
        const double slope = pilot.deriv_at(xi);
        const double block_mass = spec.design.mass(a, b);
        RandomStream rng(derive_seed(seed, "extreme", k));
        auto draw_x = [&] {
          const double fa = spec.design.cdf(a);
          return std::clamp(spec.design.quantile(fa + block_mass * rng.uniform()), a, b);
        };
        auto inside = [&](const Point& p) { return p.y >= -yb && p.y <= yb; };
        BlockOut& o = out[k];

        const double xl_x = draw_x();
        const Point top{xl_x, stats.S_recentered[k] + slope * (xl_x - xi), pass, true};
        if (inside(top)) o.lower.push_back(top);
        const auto lam_l = IntensityFunction::tilted(true, stats.S_recentered[k], slope, xi, a, b,
                                                     md * block_mass, n_half * spec.error.jump_right, yb);
        auto cloud_l = sample_ppp(lam_l, derive_seed(seed, "cloud-l", k));
        o.mass_l = cloud_l.intensity_mass;
        for (auto& p : cloud_l.points) {
          p.pass = pass;
          o.lower.push_back(p);
        }

        const double xu_x = draw_x();
        const Point bottom{xu_x, stats.s_recentered[k] + slope * (xu_x - xi), pass, true};
        if (inside(bottom)) o.upper.push_back(bottom);
        const auto lam_u = IntensityFunction::tilted(false, stats.s_recentered[k], slope, xi, a, b,
                                                     md * block_mass, n_half * spec.error.jump_left, yb);
        auto cloud_u = sample_ppp(lam_u, derive_seed(seed, "cloud-u", k));
        o.mass_u = cloud_u.intensity_mass;
        for (auto& p : cloud_u.points) {
          p.pass = pass;
          o.upper.push_back(p);
        }
      },
      workers);
  for (const auto& o : out) {
    xl.points.insert(xl.points.end(), o.lower.begin(), o.lower.end());
    xu.points.insert(xu.points.end(), o.upper.begin(), o.upper.end());
    xl.intensity_mass += o.mass_l;
    xu.intensity_mass += o.mass_u;
  }
  return {xl, xu};
}

// ---------------------------------------------------------------------------
// Thinning and superposition.

/// Each point goes to the first output with probability p, independently.
inline std::pair<PointProcessRealization, PointProcessRealization> thin_ppp(
    const PointProcessRealization& x, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("thin_ppp: p must lie in [0, 1]");
  PointProcessRealization a, b;
  for (auto* r : {&a, &b}) {
    r->tag = x.tag;
    r->seed = seed;
    r->y_bound = x.y_bound;
  }
  a.n = p * x.n;
  b.n = (1.0 - p) * x.n;
  a.intensity_mass = p * x.intensity_mass;
  b.intensity_mass = (1.0 - p) * x.intensity_mass;
  RandomStream rng(seed);
  for (const auto& pt : x.points) (rng.uniform() < p ? a : b).points.push_back(pt);
  return {a, b};
}

/// Union of the point multisets; masses and sample-size scales add.
inline PointProcessRealization superpose(const PointProcessRealization& a, const PointProcessRealization& b) {
  if (a.y_bound != b.y_bound) throw ValidationError("superpose: realizations live on different domains");
  PointProcessRealization out;
  out.tag = a.tag == b.tag ? a.tag : ProcessTag::other;
  out.seed = a.seed;
  out.y_bound = a.y_bound;
  out.n = a.n + b.n;
  out.intensity_mass = a.intensity_mass + b.intensity_mass;
  out.points.reserve(a.size() + b.size());
  out.points.insert(out.points.end(), a.points.begin(), a.points.end());
  out.points.insert(out.points.end(), b.points.begin(), b.points.end());
  return out;
}

// ---------------------------------------------------------------------------
// Full pipeline.

struct TransformOptions {
  std::optional<std::size_t> m;         // default_block_count if unset
  double bandwidth_const = 1.0;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  /// Oracle mode: pilot values and slopes supplied directly (tabulated at
  /// the block centres) instead of being estimated.
  std::optional<PilotEstimate> oracle_pilot;
};

struct PilotSummary {
  double bandwidth = 0.0;
  bool truncated = false;
  bool oracle = false;
  double mean_value = 0.0;
  double mean_abs_deriv = 0.0;
};

struct TransformResult {
  PointProcessRealization x1;
  PointProcessRealization x2;
  std::size_t m = 0;
  std::uint64_t seed_pass1 = 0;
  std::uint64_t seed_pass2 = 0;
  PilotSummary pilot1;
  PilotSummary pilot2;
};

namespace detail {

inline PilotSummary summarize(const PilotEstimate& p, bool oracle) {
  PilotSummary s;
  s.bandwidth = p.bandwidth;
  s.truncated = p.truncated;
  s.oracle = oracle;
  for (std::size_t i = 0; i < p.grid.size(); ++i) {
    s.mean_value += p.values[i];
    s.mean_abs_deriv += std::fabs(p.derivs[i]);
  }
  if (!p.grid.empty()) {
    s.mean_value /= static_cast<double>(p.grid.size());
    s.mean_abs_deriv /= static_cast<double>(p.grid.size());
  }
  return s;
}

}  // namespace detail

/// Regression sample -> (X1, X2). Reads theta only through the sample.
inline TransformResult forward_transform(const RegressionSample& sample, const ExperimentSpec& spec,
                                         const TransformOptions& opt = {}) {
  spec.validate();
  const auto [half_a, half_b] = split_sample(sample);
  const std::size_t m = opt.m.value_or(default_block_count(sample.n, spec.alpha));
  const double n_half = static_cast<double>(sample.n) / 2.0;
  TransformResult res;
  res.m = m;
  res.seed_pass1 = derive_seed(opt.seed, "pass", 1);
  res.seed_pass2 = derive_seed(opt.seed, "pass", 2);

  const auto part_a = BlockPartition::make(half_a.xs, m);
  const auto part_b = BlockPartition::make(half_b.xs, m);
  const auto centers = part_a.centers();
  PilotOptions popt;
  popt.bandwidth_const = opt.bandwidth_const;
  popt.workers = opt.workers;

  // Pass 1: pilot from the even half, transform the odd half.
  ExperimentSpec half_spec = spec;
  half_spec.n = half_b.n;
  const PilotEstimate pilot1 = opt.oracle_pilot ? *opt.oracle_pilot : pilot_estimate(half_b, half_spec, centers, popt);
  const auto z1 = localize(half_a, pilot1, part_a);
  const auto st1 = block_extremes(z1.value, part_a, pilot1);
  auto [xl, xu] = randomize_to_ppp(st1, pilot1, part_a, spec, n_half, res.seed_pass1, 1, opt.workers);

  // Pass 2: pilot from the pass-1 processes, transform the even half.
  const PilotEstimate pilot2 = opt.oracle_pilot ? *opt.oracle_pilot : pilot_estimate(&xl, &xu, spec, centers, popt);
  const auto z2 = localize(half_b, pilot2, part_b);
  const auto st2 = block_extremes(z2.value, part_b, pilot2);
  auto [xl2, xu2] = randomize_to_ppp(st2, pilot2, part_b, spec, n_half, res.seed_pass2, 2, opt.workers);

  res.x1 = superpose(xl, xl2);
  res.x2 = superpose(xu, xu2);
  res.x1.tag = ProcessTag::X1_lower_region;
  res.x2.tag = ProcessTag::X2_upper_region;
  res.x1.seed = res.x2.seed = opt.seed;
  res.pilot1 = detail::summarize(pilot1, opt.oracle_pilot.has_value());
  res.pilot2 = detail::summarize(pilot2, opt.oracle_pilot.has_value());
  return res;
}

}  // namespace irreg

#endif  // IRREG_EQUIVALENCE_HPP
