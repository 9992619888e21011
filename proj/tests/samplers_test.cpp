#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "irreg/samplers.hpp"
#include "test_support.hpp"

using namespace irreg;

TEST(ErrorSampler, UniformIsAffineInverse) {
  const ErrorSampler s(ErrorDensity::uniform());
  for (double u : {0.0, 0.1, 0.25, 0.5, 0.77, 0.999}) EXPECT_NEAR(s.quantile(u), 2 * u - 1, 1e-12);
}

TEST(ErrorSampler, FirstMomentMatchesQuadrature) {
  for (const auto& e : {ErrorDensity::uniform(), ErrorDensity::linear(0.6), ErrorDensity::u_shaped()}) {
    const ErrorSampler s(e);
    RandomStream rng(17);
    double sum = 0.0;
    const int draws = 1000000;
    for (int i = 0; i < draws; ++i) sum += sample_error(s, rng);
    const double moment = testsupport::simpson([&](double t) { return t * e.density(t); }, -1, 1);
    EXPECT_NEAR(sum / draws, moment, 0.004) << e.name;
  }
}

TEST(ErrorSampler, OneSidedKs) {
  const ErrorSampler s(ErrorDensity::linear(-1.0));
  RandomStream rng(23);
  std::vector<double> xs(1000000);
  for (auto& x : xs) {
    x = s.draw(rng);
    ASSERT_GE(x, -1.0);
    ASSERT_LE(x, 1.0);
  }
  // phi(t) = (1 - t) / 2: F(t) = (t + 1)/2 - (t^2 - 1)/4.
  const double d = testsupport::ks_statistic(xs, [](double t) { return (t + 1) / 2 - (t * t - 1) / 4; });
  EXPECT_LT(d, 0.002);
}

TEST(SampleRegression, ZeroThetaWithinSupport) {
  ExperimentSpec spec;
  spec.n = 100;
  const auto s = sample_regression(ParameterFunction::zero(1.0), spec, 1);
  ASSERT_EQ(s.ys.size(), 100u);
  for (double y : s.ys) {
    EXPECT_GE(y, -1.0);
    EXPECT_LE(y, 1.0);
  }
  EXPECT_EQ(s.xs, design_points(100, spec.design));
}

TEST(SampleRegression, WaveFunctionResidualsAreUniform) {
  ExperimentSpec spec;
  spec.n = 100;
  spec.c_theta = 320.0;
  const auto theta = ParameterFunction::scaled_cosine(0.3, 10.0, 320.0, 1.0);
  const auto s = sample_regression(theta, spec, 2024);
  std::vector<double> res(s.n);
  for (std::size_t j = 0; j < s.n; ++j) {
    res[j] = s.ys[j] - theta(s.xs[j]);
    ASSERT_LE(std::fabs(res[j]), 1.0);
  }
  EXPECT_LT(testsupport::ks_statistic(res, [](double t) { return (t + 1) / 2; }), 0.14);
}

TEST(SampleRegression, Deterministic) {
  ExperimentSpec spec;
  spec.n = 64;
  const auto theta = ParameterFunction::polynomial({0.1, 0.2, -0.3}, 1.0, 1.0);
  const auto a = sample_regression(theta, spec, 99);
  const auto b = sample_regression(theta, spec, 99);
  EXPECT_EQ(a.ys, b.ys);
  const auto c = sample_regression(theta, spec, 100);
  EXPECT_NE(a.ys, c.ys);
}

TEST(SampleRegression, RejectsOutOfClassTheta) {
  ExperimentSpec spec;
  spec.n = 10;
  EXPECT_THROW(sample_regression(ParameterFunction::polynomial({2.0}, 1.0, 1.0), spec, 1), ValidationError);
  EXPECT_THROW(sample_regression(ParameterFunction::zero(2.0), spec, 1), ValidationError);
}

TEST(SamplePpp, BandCountIsPoisson) {
  const auto lam = IntensityFunction::band_region(0.0, 1.0, 4.0, 1.0);
  EXPECT_NEAR(lam.mass(), 4.0, 1e-12);
  std::vector<double> counts;
  const int reps = 100000;
  for (int r = 0; r < reps; ++r) {
    counts.push_back(static_cast<double>(sample_ppp(lam, derive_seed(5, "band", r)).size()));
  }
  EXPECT_NEAR(testsupport::mean(counts), 4.0, 0.02);
  EXPECT_NEAR(testsupport::variance(counts), 4.0, 0.06);
}

TEST(SamplePpp, LowerBoundaryIntensityMass) {
  ExperimentSpec spec;
  spec.n = 100;
  const auto [l1, l2] = boundary_intensities(ParameterFunction::zero(1.0), spec, 100.0);
  EXPECT_NEAR(l1.mass(), 100.0, 1e-9);
  EXPECT_NEAR(l2.mass(), 100.0, 1e-9);
  const auto x1 = sample_ppp(l1, 3, ProcessTag::X1_lower_region);
  EXPECT_DOUBLE_EQ(x1.intensity_mass, l1.mass());
  for (const auto& p : x1.points) {
    EXPECT_LE(p.y, 0.0);
    EXPECT_GE(p.y, -2.0);
  }
}

TEST(SamplePpp, ZeroMassGivesEmpty) {
  const auto lam = IntensityFunction::band_region(-2.0, -2.0, 10.0, 2.0);
  const auto r = sample_ppp(lam, 1);
  EXPECT_TRUE(r.empty());
  EXPECT_EQ(r.intensity_mass, 0.0);
}

TEST(SamplePpp, UnboundedRegionThrows) {
  auto lam = IntensityFunction::band_region(0.0, 1.0, 1.0, std::numeric_limits<double>::infinity());
  EXPECT_THROW(sample_ppp(lam, 1), ValidationError);
}

TEST(SamplePpp, VoidProbabilityAndIndependence) {
  // lambda_1 of a linear theta; test box B = [0.2,0.4] x [-0.6,-0.3] lies
  // below the curve, so its mass is 100 f(1) * 0.2 * 0.3 = 3.
  ExperimentSpec spec;
  const auto theta = ParameterFunction::polynomial({0.0, 0.5}, 1.0, 1.0);
  const auto [l1, l2] = boundary_intensities(theta, spec, 100.0);
  const int reps = 20000;
  int voids = 0;
  std::vector<double> a(reps), b(reps);
  for (int r = 0; r < reps; ++r) {
    const auto x = sample_ppp(l1, derive_seed(8, "void", r));
    int in_b = 0, in_c = 0;
    for (const auto& p : x.points) {
      if (p.x >= 0.2 && p.x <= 0.4 && p.y >= -0.6 && p.y <= -0.3) ++in_b;
      if (p.x >= 0.6 && p.x <= 0.9 && p.y >= -1.5 && p.y <= -1.0) ++in_c;
    }
    voids += in_b == 0;
    a[r] = in_b;
    b[r] = in_c;
  }
  const double p0 = std::exp(-3.0);
  EXPECT_NEAR(static_cast<double>(voids) / reps, p0, 3 * std::sqrt(p0 * (1 - p0) / reps));
  const double ma = testsupport::mean(a), mb = testsupport::mean(b);
  double cov = 0.0;
  for (int r = 0; r < reps; ++r) cov += (a[r] - ma) * (b[r] - mb);
  cov /= reps - 1;
  const double corr = cov / std::sqrt(testsupport::variance(a) * testsupport::variance(b));
  EXPECT_LT(std::fabs(corr), 3.0 / std::sqrt(static_cast<double>(reps)));
}

TEST(SamplePpp, SequentialMatchesRejection) {
  ExperimentSpec spec;
  spec.n = 200;
  spec.design = DesignSpec::linear(1.0);
  const auto theta = ParameterFunction::polynomial({0.2, -0.4, 0.3}, 1.0, 1.0);
  const auto [l1, l2] = boundary_intensities(theta, spec, 200.0);
  std::vector<long> seq, rej;
  const int reps = 1000;
  auto count_box = [](const PointProcessRealization& x) {
    long c = 0;
    for (const auto& p : x.points) c += (p.x >= 0.3 && p.x <= 0.6 && p.y >= -0.2 && p.y <= 0.3);
    return c;
  };
  for (int r = 0; r < reps; ++r) {
    const auto a = sample_ppp_sequential(theta, spec, Side::upper, derive_seed(1, "seq", r));
    const auto b = sample_ppp(l2, derive_seed(1, "rej", r));
    for (const auto& p : a.points) ASSERT_GE(p.y, theta(p.x) - 1e-12);
    seq.push_back(count_box(a));
    rej.push_back(count_box(b));
  }
  EXPECT_GT(testsupport::two_sample_count_pvalue(seq, rej), 0.01);
}

TEST(SamplePpp, SequentialBlockMaximumLaw) {
  // theta = 0, n f(1) = 100: the supremum of y over the block [0, 0.1] has
  // P[sup <= y] = exp(-100 * 0.1 * (0 - y)).
  ExperimentSpec spec;
  spec.error = ErrorDensity::u_shaped();  // f(1) = 1
  const auto theta = ParameterFunction::zero(1.0);
  std::vector<double> pit;
  for (int r = 0; r < 4000; ++r) {
    const auto x = sample_ppp_sequential(theta, spec, Side::lower, derive_seed(2, "max", r), 100.0);
    double sup = -2.0;
    for (const auto& p : x.points) {
      if (p.x < 0.1) sup = std::max(sup, p.y);
    }
    pit.push_back(std::exp(-10.0 * (0.0 - sup)));
  }
  EXPECT_LT(testsupport::ks_statistic(pit, [](double u) { return u; }), 1.63 / std::sqrt(4000.0));
}

TEST(SamplePpp, SequentialZeroScaleIsEmpty) {
  ExperimentSpec spec;
  spec.n = 0;
  EXPECT_TRUE(sample_ppp_sequential(ParameterFunction::zero(1.0), spec, Side::lower, 1).empty());
}

TEST(SamplePpp, Deterministic) {
  ExperimentSpec spec;
  const auto [l1, l2] = boundary_intensities(ParameterFunction::zero(1.0), spec, 50.0);
  const auto a = sample_ppp(l1, 77);
  const auto b = sample_ppp(l1, 77);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.points[i].x, b.points[i].x);
    EXPECT_EQ(a.points[i].y, b.points[i].y);
  }
}
