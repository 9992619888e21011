#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "irreg/estimators.hpp"

using namespace irreg;

namespace {

RegressionSample regression(const ParameterFunction& theta, std::size_t n, std::uint64_t seed) {
  ExperimentSpec spec;
  spec.n = n;
  spec.c_theta = theta.c_theta;
  return sample_regression(theta, spec, seed);
}

double max_abs_residual(const RegressionSample& s, const LocalPolynomial& p) {
  double worst = 0.0;
  for (std::size_t j = 0; j < s.n; ++j) {
    if (p.window.contains(s.xs[j])) worst = std::max(worst, std::fabs(s.ys[j] - p(s.xs[j])));
  }
  return worst;
}

}  // namespace

TEST(Window, InteriorAndBoundaryForms) {
  const auto a = window_for(0.5, 0.1);
  EXPECT_DOUBLE_EQ(a.lo, 0.4);
  EXPECT_DOUBLE_EQ(a.hi, 0.6);
  const auto b = window_for(0.05, 0.1);
  EXPECT_DOUBLE_EQ(b.lo, 0.0);
  EXPECT_DOUBLE_EQ(b.hi, 0.2);
  const auto c = window_for(0.97, 0.1);
  EXPECT_DOUBLE_EQ(c.lo, 0.8);
  EXPECT_DOUBLE_EQ(c.hi, 1.0);
  EXPECT_THROW(window_for(0.5, 0.7), ValidationError);
}

TEST(LocalPolynomialForm, Evaluation) {
  LocalPolynomial p;
  p.coeffs = {1.0, 2.0, 4.0};
  p.center = 0.5;
  EXPECT_DOUBLE_EQ(p(0.5), 1.0);
  EXPECT_DOUBLE_EQ(p(1.0), 1.0 + 1.0 + 0.5);
  EXPECT_DOUBLE_EQ(p.derivative(1.0), 4.0);
}

TEST(AdmissibleFitRegression, QuadraticThetaIsWithinBand) {
  const auto theta = ParameterFunction::polynomial({0.2, -0.5, 0.8}, 1.0, 1.0);
  const auto s = regression(theta, 400, 3);
  const double h = 0.15;
  const double gamma = holder_band(h, 1.0);
  for (double x0 : {0.05, 0.3, 0.5, 0.9}) {
    const auto p = admissible_fit_regression(s, x0, h, gamma);
    EXPECT_LE(max_abs_residual(s, p), 1.0 + gamma * std::pow(h, 3.0) + 1e-9);
    // theta itself is admissible, so the optimal violation is below the band.
    EXPECT_NEAR(p(x0), theta(x0), 0.1);
  }
}

TEST(AdmissibleFitRegression, ZeroThetaRate) {
  // |p(x0)| <= 10 n^{-3/4} in at least 95% of replicates (n = 2000, h = n^{-1/4}).
  const std::size_t n = 2000;
  const double h = std::pow(static_cast<double>(n), -0.25);
  const double gamma = holder_band(h, 1.0);
  int hits = 0;
  for (int r = 0; r < 200; ++r) {
    const auto s = regression(ParameterFunction::zero(1.0), n, derive_seed(10, "zero", r));
    const auto p = admissible_fit_regression(s, 0.5, h, gamma);
    hits += std::fabs(p(0.5)) <= 10.0 * std::pow(static_cast<double>(n), -0.75);
  }
  EXPECT_GE(hits, 190);
}

TEST(AdmissibleFitRegression, TooFewPointsThrows) {
  const auto s = regression(ParameterFunction::zero(1.0), 11, 1);
  EXPECT_THROW(admissible_fit_regression(s, 0.5, 0.05, 2.0), ValidationError);
}

TEST(AdmissibleFitRegression, CorruptedDataIsInfeasible) {
  auto s = regression(ParameterFunction::zero(1.0), 200, 1);
  s.ys[100] = 5.0;  // x = 0.5025
  EXPECT_THROW(admissible_fit_regression(s, 0.5, 0.05, 2.0), InfeasibleFit);
}

TEST(AdmissibleFitRegression, FeasibilityIsMonotoneInGamma) {
  const auto theta = ParameterFunction::scaled_cosine(0.3, 10.0, 320.0, 1.0);
  const auto s = regression(theta, 1000, 8);
  const double h = 0.1;
  const auto p = admissible_fit_regression(s, 0.4, h, 2.0);
  for (double g : {4.0, 40.0, 640.0}) {
    EXPECT_LE(max_abs_residual(s, p), 1.0 + g * std::pow(h, 3.0));
    EXPECT_NO_THROW(admissible_fit_regression(s, 0.4, h, g));
  }
}

TEST(AdmissibleFitRegression, DependsOnlyOnWindow) {
  auto s = regression(ParameterFunction::polynomial({0.0, 0.3}, 1.0, 1.0), 500, 4);
  const auto p = admissible_fit_regression(s, 0.5, 0.1, 2.0);
  for (std::size_t j = 0; j < s.n; ++j) {
    if (!p.window.contains(s.xs[j])) s.ys[j] = -s.ys[j] + 0.25;
  }
  const auto q = admissible_fit_regression(s, 0.5, 0.1, 2.0);
  EXPECT_EQ(p.coeffs, q.coeffs);
}

TEST(AdmissibleFitRegression, BoundaryWindowUsesOnlyItsPoints) {
  auto s = regression(ParameterFunction::zero(1.0), 500, 6);
  const auto p = admissible_fit_regression(s, 0.02, 0.1, 2.0);
  EXPECT_DOUBLE_EQ(p.window.lo, 0.0);
  EXPECT_DOUBLE_EQ(p.window.hi, 0.2);
  for (std::size_t j = 0; j < s.n; ++j) {
    if (s.xs[j] > 0.2) s.ys[j] = 0.9;
  }
  EXPECT_EQ(admissible_fit_regression(s, 0.02, 0.1, 2.0).coeffs, p.coeffs);
}

TEST(AdmissibleFitPpp, EmptyRealizationsGiveZero) {
  PointProcessRealization a, b;
  a.tag = ProcessTag::X1_lower_region;
  b.tag = ProcessTag::X2_upper_region;
  const auto p = admissible_fit_ppp(&a, &b, 0.5, 0.1, 2.0);
  for (double c : p.coeffs) EXPECT_NEAR(c, 0.0, 1e-12);
}

TEST(AdmissibleFitPpp, RespectsBothSides) {
  ExperimentSpec spec;
  const auto theta = ParameterFunction::polynomial({0.1, 0.4, -0.6}, 1.0, 1.0);
  const auto [l1, l2] = boundary_intensities(theta, spec, 2000.0);
  auto x1 = sample_ppp(l1, 1, ProcessTag::X1_lower_region, 2000.0);
  auto x2 = sample_ppp(l2, 2, ProcessTag::X2_upper_region, 2000.0);
  const double h = 0.12;
  const double band = 2.0 * std::pow(h, 3.0);
  const auto p = admissible_fit_ppp(&x1, &x2, 0.5, h, 2.0);
  for (const auto& pt : x1.points) {
    if (p.window.contains(pt.x)) {
      EXPECT_LE(pt.y, p(pt.x) + band + 1e-12);
    }
  }
  for (const auto& pt : x2.points) {
    if (p.window.contains(pt.x)) {
      EXPECT_GE(pt.y, p(pt.x) - band - 1e-12);
    }
  }
  EXPECT_NEAR(p(0.5), theta(0.5), 0.01);
}

TEST(AdmissibleFitPpp, ZeroThetaRate) {
  const double n = 2000.0;
  const double h = 0.5 * std::pow(n, -0.25);
  ExperimentSpec spec;
  const auto theta = ParameterFunction::zero(1.0);
  int hits = 0;
  for (int r = 0; r < 200; ++r) {
    auto [l1, l2] = boundary_intensities(theta, spec, n);
    l1.x_lo = l2.x_lo = 0.5 - h;
    l1.x_hi = l2.x_hi = 0.5 + h;
    const auto a = sample_ppp(l1, derive_seed(3, "a", r));
    const auto b = sample_ppp(l2, derive_seed(3, "b", r));
    const auto p = admissible_fit_ppp(&a, &b, 0.5, h, 2.0);
    hits += std::fabs(p(0.5)) <= 10.0 * std::pow(n, -0.75);
  }
  EXPECT_GE(hits, 190);
}

TEST(AdmissibleFitPpp, OneSidedStaysBelowUpperCloud) {
  ExperimentSpec spec;
  spec.error = ErrorDensity::linear(-1.0);  // f(1) = 0, f(-1) = 1
  const auto theta = ParameterFunction::polynomial({-0.2, 0.3}, 1.0, 1.0);
  const auto x2 = sample_ppp_sequential(theta, spec, Side::upper, 5, 4000.0);
  const double h = 0.1;
  const auto p = admissible_fit_ppp(nullptr, &x2, 0.5, h, 2.0);
  const double band = 2.0 * std::pow(h, 3.0);
  for (const auto& pt : x2.points) {
    if (p.window.contains(pt.x)) {
      EXPECT_GE(pt.y, p(pt.x) - band - 1e-12);
    }
  }
  // The frontier fit hugs the lower edge of the cloud.
  EXPECT_NEAR(p(0.5), theta(0.5), 0.05);
}

TEST(PilotEstimate, TruncatesOutOfClassValues) {
  ExperimentSpec spec;
  spec.n = 200;
  RegressionSample s;
  s.n = 200;
  s.xs = design_points(200, spec.design);
  s.ys.assign(200, 3.0);
  const auto est = pilot_estimate(s, spec, {0.25, 0.5, 0.75});
  EXPECT_TRUE(est.truncated);
  for (double v : est.values) EXPECT_EQ(v, 1.0);
  PilotOptions raw;
  raw.truncate = false;
  const auto untruncated = pilot_estimate(s, spec, {0.5}, raw);
  EXPECT_FALSE(untruncated.truncated);
  EXPECT_NEAR(untruncated.values[0], 3.0, 1e-6);
}

TEST(PilotEstimate, GridLookupAndBandwidth) {
  const auto theta = ParameterFunction::polynomial({0.1, 0.2}, 1.0, 1.0);
  const auto s = regression(theta, 1000, 7);
  ExperimentSpec spec;
  spec.n = 1000;
  PilotOptions opt;
  opt.bandwidth_const = 0.8;
  opt.workers = 2;
  const auto est = pilot_estimate(s, spec, {0.75, 0.25, 0.5}, opt);
  EXPECT_DOUBLE_EQ(est.bandwidth, 0.8 * std::pow(1000.0, -0.25));
  EXPECT_EQ(est.grid, (std::vector<double>{0.25, 0.5, 0.75}));
  EXPECT_NEAR(est.value_at(0.5), theta(0.5), 0.05);
  EXPECT_NEAR(est.deriv_at(0.5), 0.2, 1.0);
  EXPECT_THROW(est.value_at(0.4), ValidationError);
  EXPECT_FALSE(est.truncated);
}

TEST(PilotEstimate, OracleTabulatesTheta) {
  const auto theta = ParameterFunction::scaled_cosine(0.3, 10.0, 320.0, 1.0);
  const auto est = PilotEstimate::oracle(theta, {0.1, 0.6});
  EXPECT_EQ(est.value_at(0.6), theta(0.6));
  EXPECT_EQ(est.deriv_at(0.1), theta.first(0.1));
}

TEST(PilotEstimate, BandwidthAboveHalfIsRejected) {
  EXPECT_THROW(pilot_bandwidth(4.0, 1.0, 1.0), ValidationError);
  EXPECT_NO_THROW(pilot_bandwidth(16.0, 1.0, 1.0));
}
