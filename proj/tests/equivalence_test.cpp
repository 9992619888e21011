#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "irreg/equivalence.hpp"
#include "test_support.hpp"

using namespace irreg;

namespace {

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

PilotEstimate flat_pilot(std::size_t m, double value, double deriv) {
  PilotEstimate p;
  for (std::size_t k = 0; k < m; ++k) {
    p.grid.push_back((static_cast<double>(k) + 0.5) / static_cast<double>(m));
    p.values.push_back(value);
    p.derivs.push_back(deriv);
  }
  return p;
}

}  // namespace

TEST(SplitSample, IndexParity) {
  RegressionSample s;
  s.n = 4;
  s.xs = {0.0, 1.0 / 3, 2.0 / 3, 1.0};
  s.ys = {10, 11, 12, 13};
  const auto [a, b] = split_sample(s);
  EXPECT_EQ(a.ys, (std::vector<double>{10, 12}));
  EXPECT_EQ(b.ys, (std::vector<double>{11, 13}));
  EXPECT_EQ(a.n, 2u);
  const auto merged = merge_sample(a, b);
  EXPECT_TRUE(bitwise_equal(merged.xs, s.xs));
  EXPECT_TRUE(bitwise_equal(merged.ys, s.ys));
}

TEST(SplitSample, RoundTripOnRandomSample) {
  ExperimentSpec spec;
  spec.n = 1000;
  const auto s = sample_regression(ParameterFunction::polynomial({0.1, 0.2}, 1.0, 1.0), spec, 5);
  const auto [a, b] = split_sample(s);
  const auto m = merge_sample(a, b);
  EXPECT_TRUE(bitwise_equal(m.xs, s.xs));
  EXPECT_TRUE(bitwise_equal(m.ys, s.ys));
}

TEST(SplitSample, OddNRejected) {
  RegressionSample s;
  s.n = 5;
  s.xs.assign(5, 0.0);
  s.ys.assign(5, 0.0);
  EXPECT_THROW(split_sample(s), ValidationError);
}

TEST(ExactShift, RoundTripIsBitwise) {
  RandomStream rng(1);
  std::vector<double> v, c;
  for (int i = 0; i < 200000; ++i) {
    const double scale = std::pow(10.0, rng.uniform(-25.0, 3.0));
    v.push_back(rng.uniform(-1.0, 1.0) * scale);
    c.push_back(rng.uniform(-3.0, 3.0) * std::pow(10.0, rng.uniform(-20.0, 2.0)));
  }
  v.insert(v.end(), {0.0, -0.0, 1e-300, 5e-324, 1.0, 0.1});
  c.insert(c.end(), {0.5, 1e-300, 0.3, 0.7, 1.0 - 1e-16, 0.1});
  const auto z = shift_exact(v, c);
  EXPECT_TRUE(bitwise_equal(unshift_exact(z, c), v));
}

TEST(Localize, ZeroPilotIsIdentity) {
  ExperimentSpec spec;
  spec.n = 200;
  const auto s = sample_regression(ParameterFunction::zero(1.0), spec, 3);
  const auto part = BlockPartition::make(s.xs, 10);
  const auto z = localize(s, flat_pilot(10, 0.0, 0.0), part);
  EXPECT_TRUE(bitwise_equal(z.value, s.ys));
}

TEST(Localize, ExactPilotLeavesTaylorRemainder) {
  const double c = 1.0;
  const auto theta = ParameterFunction::polynomial({0.1, 0.4, 0.5 * c}, c, 1.0);
  ExperimentSpec spec;
  spec.n = 400;
  const auto s = sample_regression(theta, spec, 4);
  const std::size_t m = 8;
  const auto part = BlockPartition::make(s.xs, m);
  const auto pilot = PilotEstimate::oracle(theta, part.centers());
  // Recover the errors from a second draw with theta = 0 and the same seed.
  const auto noise = sample_regression(ParameterFunction::zero(c), spec, 4);
  const auto z = localize(s, pilot, part);
  for (std::size_t j = 0; j < s.n; ++j) {
    const double remainder = z.value[j] - noise.ys[j];
    EXPECT_LE(std::fabs(remainder), c / (2.0 * 4.0 * m * m) + 1e-12);
  }
}

TEST(Localize, UndoIsBitwise) {
  const auto theta = ParameterFunction::scaled_cosine(0.3, 10.0, 320.0, 1.0);
  ExperimentSpec spec;
  spec.n = 3000;
  spec.c_theta = 320.0;
  const auto s = sample_regression(theta, spec, 9);
  const auto part = BlockPartition::make(s.xs, 37);
  const auto pilot = PilotEstimate::oracle(theta, part.centers());
  const auto z = localize(s, pilot, part);
  EXPECT_TRUE(bitwise_equal(undo_localize(z, s, pilot, part).ys, s.ys));
}

TEST(BlockPartition, CountsAndCenters) {
  const auto xs = design_points(1001, DesignSpec::linear(1.0));
  std::vector<double> odd;
  for (std::size_t j = 0; j < xs.size(); j += 2) odd.push_back(xs[j]);
  const std::size_t m = 20;
  const auto part = BlockPartition::make(odd, m);
  std::size_t total = 0;
  for (std::size_t k = 0; k < m; ++k) {
    total += part.block_counts[k];
    // min_k l_k >= floor(n / (d 2m)) with d = 2.1
    EXPECT_GE(part.block_counts[k], static_cast<std::size_t>(1001.0 / (2.1 * 2.0 * m)));
    EXPECT_DOUBLE_EQ(part.center(k), (k + 0.5) / m);
    EXPECT_EQ(part.index_map[part.first_index[k]], k);
  }
  EXPECT_EQ(total, odd.size());
  EXPECT_EQ(part.block_of(1.0), m - 1);
  EXPECT_EQ(part.block_of(0.05), 1u);
}

TEST(BlockPartition, DefaultBlockCount) {
  // m = ceil(n^{2/3 - 1/8}) for alpha = 1; ceil(n^{2/3 - alpha/2}) for small alpha.
  EXPECT_EQ(default_block_count(10000, 1.0), static_cast<std::size_t>(std::ceil(std::pow(1e4, 2.0 / 3 - 0.125))));
  EXPECT_EQ(default_block_count(10000, 0.1), static_cast<std::size_t>(std::ceil(std::pow(1e4, 2.0 / 3 - 0.05))));
}

TEST(BlockExtremes, SingleBlock) {
  BlockPartition part = BlockPartition::make({0.1, 0.5, 0.9}, 1);
  const auto st = block_extremes({0.3, -0.7, 0.1}, part, flat_pilot(1, 0.0, 0.0));
  EXPECT_EQ(st.s[0], -0.7);
  EXPECT_EQ(st.S[0], 0.3);
  EXPECT_DOUBLE_EQ(st.s_recentered[0], -0.7 + 1.0);
  EXPECT_DOUBLE_EQ(st.S_recentered[0], 0.3 - 1.0);
}

TEST(BlockExtremes, RecenteringInvertsExactly) {
  ExperimentSpec spec;
  spec.n = 2000;
  const auto theta = ParameterFunction::polynomial({0.3, -0.2, 0.4}, 1.0, 1.0);
  const auto s = sample_regression(theta, spec, 12);
  const auto part = BlockPartition::make(s.xs, 25);
  const auto pilot = PilotEstimate::oracle(theta, part.centers());
  const auto z = localize(s, pilot, part);
  const auto st = block_extremes(z.value, part, pilot);
  const auto [lo, hi] = undo_recentering(st, part, pilot);
  EXPECT_TRUE(bitwise_equal(lo, st.s));
  EXPECT_TRUE(bitwise_equal(hi, st.S));
  for (std::size_t k = 0; k < part.m; ++k) EXPECT_LE(st.s[k], st.S[k]);
  EXPECT_THROW(undo_recentering(st, part, flat_pilot(25, 0.0, 0.0)), ValidationError);
}

TEST(BlockExtremes, UpperGapIsApproximatelyExponential) {
  // theta = 0, exact pilot, uniform errors, l_k = 200: 1 - S_k ~ Exp(100).
  ExperimentSpec spec;
  spec.n = 20000;
  std::vector<double> gaps;
  for (int r = 0; r < 100; ++r) {
    const auto s = sample_regression(ParameterFunction::zero(1.0), spec, derive_seed(4, "gap", r));
    const auto part = BlockPartition::make(s.xs, 100);
    ASSERT_EQ(part.block_counts[0], 200u);
    const auto z = localize(s, flat_pilot(100, 0.0, 0.0), part);
    const auto st = block_extremes(z.value, part, flat_pilot(100, 0.0, 0.0));
    for (double S : st.S) gaps.push_back(1.0 - S);
  }
  ASSERT_EQ(gaps.size(), 10000u);
  EXPECT_LT(testsupport::ks_statistic(gaps, [](double t) { return 1.0 - std::exp(-100.0 * t); }), 0.03);
}

TEST(BlockExtremes, EmptyBlockRejected) {
  const auto part = BlockPartition::make({0.1, 0.2, 0.3}, 10);
  EXPECT_THROW(block_extremes({0.0, 0.0, 0.0}, part, flat_pilot(10, 0.0, 0.0)), ValidationError);
}

TEST(Randomize, CloudCountMatchesMass) {
  // One block [0, 1/4) of a 4-block partition, S'' = 0.2, slope 0.8, uniform
  // design, n_half = 200, f(1) = 1/2, y_bound = 2.
  ExperimentSpec spec;
  const std::size_t m = 4;
  const auto part = BlockPartition::make({0.1, 0.3, 0.6, 0.9}, m);
  BlockStatistics st;
  st.S_recentered.assign(m, 0.2);
  st.s_recentered.assign(m, -0.2);
  const auto pilot = flat_pilot(m, 0.0, 0.8);
  // Oracle: mass below the line over [0, 1/4] is 200 * 1/2 * (m * 1/4) * int (0.2 + 0.8 (x - 1/8) + 2) dx.
  const double mass = 200.0 * 0.5 * 1.0 * (0.25 * 2.2);
  const int reps = 100000;
  double sum = 0.0;
  int extremes = 0;
  for (int r = 0; r < reps; ++r) {
    const auto [xl, xu] = randomize_to_ppp(st, pilot, part, spec, 200.0, derive_seed(6, "rand", r));
    for (const auto& p : xl.points) {
      if (p.x < 0.25) {
        sum += p.extreme ? 0.0 : 1.0;
        extremes += p.extreme;
      }
    }
  }
  EXPECT_EQ(extremes, reps);
  EXPECT_NEAR(sum / reps, mass, 3.0 * std::sqrt(mass / reps));
}

TEST(Randomize, FlatLineVoidProbability) {
  ExperimentSpec spec;
  const std::size_t m = 5;
  const auto part = BlockPartition::make({0.1, 0.3, 0.5, 0.7, 0.9}, m);
  BlockStatistics st;
  st.S_recentered.assign(m, 0.0);
  st.s_recentered.assign(m, 0.0);
  const auto pilot = flat_pilot(m, 0.0, 0.0);
  // Box [0.42, 0.5] x [-0.5, -0.2] in block 2: mass 100 * 1/2 * 1 * 0.08 * 0.3 = 1.2.
  const int reps = 20000;
  int voids = 0;
  for (int r = 0; r < reps; ++r) {
    const auto [xl, xu] = randomize_to_ppp(st, pilot, part, spec, 100.0, derive_seed(7, "void", r));
    bool hit = false;
    for (const auto& p : xl.points) hit = hit || (p.x >= 0.42 && p.x <= 0.5 && p.y >= -0.5 && p.y <= -0.2);
    voids += !hit;
  }
  const double p0 = std::exp(-1.2);
  EXPECT_NEAR(static_cast<double>(voids) / reps, p0, 3.0 * std::sqrt(p0 * (1 - p0) / reps));
}

TEST(Randomize, BlocksAreUncorrelated) {
  ExperimentSpec spec;
  spec.n = 2000;
  const auto theta = ParameterFunction::polynomial({0.0, 0.3}, 1.0, 1.0);
  const int reps = 2000;
  std::vector<double> a(reps), b(reps);
  for (int r = 0; r < reps; ++r) {
    const auto s = sample_regression(theta, spec, derive_seed(8, "s", r));
    TransformOptions opt;
    opt.m = 20;
    opt.seed = derive_seed(8, "t", r);
    opt.oracle_pilot = PilotEstimate::oracle(theta, BlockPartition::make({}, 20).centers());
    const auto res = forward_transform(s, spec, opt);
    double ca = 0.0, cb = 0.0;
    for (const auto& p : res.x1.points) {
      ca += p.x < 0.05;
      cb += p.x >= 0.05 && p.x < 0.1;
    }
    a[r] = ca;
    b[r] = cb;
  }
  const double ma = testsupport::mean(a), mb = testsupport::mean(b);
  double cov = 0.0;
  for (int r = 0; r < reps; ++r) cov += (a[r] - ma) * (b[r] - mb);
  cov /= reps - 1;
  EXPECT_LT(std::fabs(cov / std::sqrt(testsupport::variance(a) * testsupport::variance(b))),
            3.0 / std::sqrt(static_cast<double>(reps)));
}

TEST(Randomize, EmptyStatisticsGiveEmptyPair) {
  ExperimentSpec spec;
  const auto [xl, xu] = randomize_to_ppp(BlockStatistics{}, PilotEstimate{}, BlockPartition{}, spec, 10.0, 1);
  EXPECT_TRUE(xl.empty());
  EXPECT_TRUE(xu.empty());
}

TEST(ForwardTransform, EstimatedPilotOutputHugsBoundary) {
  ExperimentSpec spec;
  spec.n = 10000;
  const auto theta = ParameterFunction::polynomial({0.1, 0.3, -0.4}, 1.0, 1.0);
  const auto [l1, l2] = boundary_intensities(theta, spec, 10000.0);
  const double thr = std::pow(1e4, -0.7);
  double above = 0.0, total = 0.0, count1 = 0.0, count2 = 0.0;
  const int reps = 8;
  for (int r = 0; r < reps; ++r) {
    const auto s = sample_regression(theta, spec, derive_seed(9, "s", r));
    TransformOptions opt;
    opt.seed = derive_seed(9, "t", r);
    const auto res = forward_transform(s, spec, opt);
    for (const auto& p : res.x1.points) {
      ASSERT_LE(std::fabs(p.y), spec.y_bound());
      above += p.y > theta(p.x) + thr;
      total += 1.0;
    }
    for (const auto& p : res.x2.points) ASSERT_LE(std::fabs(p.y), spec.y_bound());
    count1 += static_cast<double>(res.x1.size());
    count2 += static_cast<double>(res.x2.size());
  }
  EXPECT_LT(above / total, 0.01);
  EXPECT_NEAR(count1 / reps / l1.mass(), 1.0, 0.05);
  EXPECT_NEAR(count2 / reps / l2.mass(), 1.0, 0.05);
}

TEST(ForwardTransform, Deterministic) {
  ExperimentSpec spec;
  spec.n = 1000;
  const auto s = sample_regression(ParameterFunction::polynomial({0.2, -0.1}, 1.0, 1.0), spec, 2);
  TransformOptions opt;
  opt.seed = 5;
  const auto a = forward_transform(s, spec, opt);
  const auto b = forward_transform(s, spec, opt);
  ASSERT_EQ(a.x1.size(), b.x1.size());
  ASSERT_EQ(a.x2.size(), b.x2.size());
  for (std::size_t i = 0; i < a.x1.size(); ++i) {
    EXPECT_EQ(a.x1.points[i].x, b.x1.points[i].x);
    EXPECT_EQ(a.x1.points[i].y, b.x1.points[i].y);
  }
  EXPECT_EQ(a.m, default_block_count(1000, 1.0));
}

TEST(ForwardTransform, OddSampleRejected) {
  ExperimentSpec spec;
  spec.n = 101;
  const auto s = sample_regression(ParameterFunction::zero(1.0), spec, 2);
  EXPECT_THROW(forward_transform(s, spec), ValidationError);
}

TEST(Thinning, HalvesArePoisson) {
  const auto lam = IntensityFunction::band_region(0.0, 1.0, 40.0, 1.0);
  std::vector<long> ca, cb;
  for (int r = 0; r < 10000; ++r) {
    const auto x = sample_ppp(lam, derive_seed(10, "x", r));
    const auto [a, b] = thin_ppp(x, 0.5, derive_seed(10, "thin", r));
    ASSERT_EQ(a.size() + b.size(), x.size());
    ca.push_back(static_cast<long>(a.size()));
    cb.push_back(static_cast<long>(b.size()));
  }
  EXPECT_GT(testsupport::poisson_gof_pvalue(ca, 20.0), 0.01);
  EXPECT_GT(testsupport::poisson_gof_pvalue(cb, 20.0), 0.01);
}

TEST(Thinning, FullProbabilityAndConservation) {
  const auto lam = IntensityFunction::band_region(0.0, 1.0, 30.0, 1.0);
  const auto x = sample_ppp(lam, 3);
  const auto [a, b] = thin_ppp(x, 1.0, 4);
  EXPECT_EQ(a.size(), x.size());
  EXPECT_TRUE(b.empty());
  const auto [c, d] = thin_ppp(x, 0.3, 5);
  const auto back = superpose(c, d);
  auto key = [](const Point& p) { return std::make_pair(p.x, p.y); };
  std::vector<std::pair<double, double>> u, v;
  for (const auto& p : x.points) u.push_back(key(p));
  for (const auto& p : back.points) v.push_back(key(p));
  std::sort(u.begin(), u.end());
  std::sort(v.begin(), v.end());
  EXPECT_EQ(u, v);
  EXPECT_DOUBLE_EQ(back.intensity_mass, x.intensity_mass);
  EXPECT_THROW(thin_ppp(x, 1.5, 1), ValidationError);
}

TEST(Superpose, CountsArePoissonOfSum) {
  const auto la = IntensityFunction::band_region(0.0, 1.0, 3.0, 1.0);
  const auto lb = IntensityFunction::band_region(-1.0, 0.0, 5.0, 1.0);
  std::vector<long> counts;
  for (int r = 0; r < 10000; ++r) {
    const auto s = superpose(sample_ppp(la, derive_seed(11, "a", r)), sample_ppp(lb, derive_seed(11, "b", r)));
    EXPECT_DOUBLE_EQ(s.intensity_mass, 8.0);
    counts.push_back(static_cast<long>(s.size()));
  }
  EXPECT_GT(testsupport::poisson_gof_pvalue(counts, 8.0), 0.01);
}

TEST(Superpose, IdentityCommutativityDomains) {
  const auto lam = IntensityFunction::band_region(0.0, 1.0, 10.0, 1.0);
  const auto x = sample_ppp(lam, 1);
  const auto y = sample_ppp(lam, 2);
  PointProcessRealization empty;
  empty.y_bound = 1.0;
  const auto xe = superpose(x, empty);
  ASSERT_EQ(xe.size(), x.size());
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(xe.points[i].y, x.points[i].y);
  auto sorted = [](const PointProcessRealization& r) {
    std::vector<std::pair<double, double>> v;
    for (const auto& p : r.points) v.emplace_back(p.x, p.y);
    std::sort(v.begin(), v.end());
    return v;
  };
  EXPECT_EQ(sorted(superpose(x, y)), sorted(superpose(y, x)));
  PointProcessRealization other;
  other.y_bound = 2.0;
  EXPECT_THROW(superpose(x, other), ValidationError);
}
