// Copyright 2026 The ipa Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ipa/core.hpp"

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "ipa/rng.hpp"

namespace ipa {
namespace {

DiscreteDistribution Dist(std::vector<double> p) {
  return DiscreteDistribution(std::move(p));
}

// Brute-force Renyi divergence straight from the definition, without the
// log-space path used by the library. Valid while alpha and the ratios stay
// small enough not to overflow; used as an independent cross-check.
double NaiveRenyi(const std::vector<double>& p, const std::vector<double>& q,
                  double alpha) {
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    sum += std::pow(p[i], alpha) * std::pow(q[i], 1.0 - alpha);
  }
  return std::log(sum) / (alpha - 1.0);
}

// Ternary search for the minimum of a unimodal function on [lo, hi].
template <typename F>
double MinimizeUnimodal(F f, double lo, double hi) {
  for (int i = 0; i < 300; ++i) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (f(m1) < f(m2)) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  return f(0.5 * (lo + hi));
}

DiscreteDistribution RandomDistribution(Rng& rng, std::size_t size) {
  std::vector<double> w(size);
  double sum = 0.0;
  for (double& x : w) {
    x = 0.05 + rng.uniform();
    sum += x;
  }
  for (double& x : w) x /= sum;
  // Re-normalize exactly enough for the constructor's 1e-12 check.
  double s2 = 0.0;
  for (double x : w) s2 += x;
  w.back() += 1.0 - s2;
  return DiscreteDistribution(w);
}

TEST(DiscreteDistributionTest, ValidatesNormalizationAndSign) {
  EXPECT_NO_THROW(Dist({0.25, 0.75}));
  EXPECT_THROW(Dist({}), InvariantError);
  EXPECT_THROW(Dist({0.5, 0.6}), InvariantError);
  EXPECT_THROW(Dist({-0.1, 1.1}), InvariantError);
  EXPECT_THROW(Dist({0.5, std::nan("")}), InvariantError);
}

TEST(RenyiOrderTest, RejectsOrdersBelowOne) {
  EXPECT_NO_THROW(RenyiOrder(1.0));
  EXPECT_NO_THROW(RenyiOrder(256.0));
  EXPECT_THROW(RenyiOrder(0.99), ParameterError);
  EXPECT_THROW(RenyiOrder(std::nan("")), ParameterError);
}

TEST(RenyiDivergenceTest, IdenticalDistributionsHaveZeroDivergence) {
  const auto p = Dist({0.2, 0.3, 0.5});
  for (double alpha : {1.0, 1.5, 2.0, 8.0, 64.0, 256.0}) {
    EXPECT_LE(renyi_divergence(p, p, RenyiOrder(alpha)), 1e-12) << alpha;
  }
}

TEST(RenyiDivergenceTest, MatchesHandComputedBinaryExample) {
  // sum p^2/q = 0.75^2/0.25 + 0.25^2/0.75 = 7/3.
  const auto p = Dist({0.75, 0.25});
  const auto q = Dist({0.25, 0.75});
  EXPECT_NEAR(renyi_divergence(p, q, RenyiOrder(2.0)),
              0.8472978603872037, 1e-15);
  // Point mass against uniform: sum p^2/q = 2.
  EXPECT_NEAR(renyi_divergence(Dist({1.0, 0.0}), Dist({0.5, 0.5}),
                               RenyiOrder(2.0)),
              std::log(2.0), 1e-15);
}

TEST(RenyiDivergenceTest, KlLimitAtOrderOne) {
  const auto p = Dist({0.75, 0.25});
  const auto q = Dist({0.25, 0.75});
  // KL(p||q) = 0.75 log 3 + 0.25 log(1/3) = 0.5 log 3.
  EXPECT_NEAR(renyi_divergence(p, q, RenyiOrder(1.0)),
              0.5493061443340549, 1e-15);
}

TEST(RenyiDivergenceTest, AbsoluteContinuityFailureIsInfiniteSentinel) {
  const auto point = Dist({1.0, 0.0});
  const auto uniform = Dist({0.5, 0.5});
  EXPECT_FALSE(is_infinite_divergence(
      renyi_divergence(point, uniform, RenyiOrder(2.0))));
  EXPECT_TRUE(is_infinite_divergence(
      renyi_divergence(uniform, point, RenyiOrder(2.0))));
  EXPECT_TRUE(is_infinite_divergence(
      renyi_divergence(uniform, point, RenyiOrder(1.0))));
  EXPECT_EQ(renyi_divergence(uniform, point, RenyiOrder(2.0)),
            kInfiniteDivergence);
}

TEST(RenyiDivergenceTest, MismatchedSupportsAreRejected) {
  EXPECT_THROW(
      renyi_divergence(Dist({0.5, 0.5}), Dist({0.3, 0.3, 0.4}),
                       RenyiOrder(2.0)),
      DimensionError);
}

TEST(RenyiDivergenceTest, AgreesWithNaiveFormulaOnRandomInputs) {
  Rng rng(20260814);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = RandomDistribution(rng, 5);
    const auto q = RandomDistribution(rng, 5);
    for (double alpha : {1.5, 2.0, 4.0, 8.0}) {
      EXPECT_NEAR(renyi_divergence(p, q, RenyiOrder(alpha)),
                  NaiveRenyi(p.probs(), q.probs(), alpha), 1e-12);
    }
  }
}

TEST(RenyiDivergenceTest, NondecreasingInOrder) {
  Rng rng(7);
  const std::vector<double> alphas = {1.0, 1.5, 2.0, 4.0, 8.0, 16.0};
  for (int trial = 0; trial < 40; ++trial) {
    const auto p = RandomDistribution(rng, 4);
    const auto q = RandomDistribution(rng, 4);
    double prev = -1.0;
    for (double alpha : alphas) {
      const double d = renyi_divergence(p, q, RenyiOrder(alpha));
      EXPECT_GE(d, prev - 1e-12) << "alpha=" << alpha;
      prev = d;
    }
  }
}

TEST(RenyiDivergenceTest, AdditiveOverProductDistributions) {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p1 = RandomDistribution(rng, 3);
    const auto p2 = RandomDistribution(rng, 4);
    const auto q1 = RandomDistribution(rng, 3);
    const auto q2 = RandomDistribution(rng, 4);
    std::vector<double> pp, qq;
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 4; ++j) {
        pp.push_back(p1[i] * p2[j]);
        qq.push_back(q1[i] * q2[j]);
      }
    }
    double psum = 0.0, qsum = 0.0;
    for (double x : pp) psum += x;
    for (double x : qq) qsum += x;
    pp.back() += 1.0 - psum;
    qq.back() += 1.0 - qsum;
    for (double alpha : {1.0, 2.0, 8.0}) {
      const double joint = renyi_divergence(DiscreteDistribution(pp),
                                            DiscreteDistribution(qq),
                                            RenyiOrder(alpha));
      const double split = renyi_divergence(p1, q1, RenyiOrder(alpha)) +
                           renyi_divergence(p2, q2, RenyiOrder(alpha));
      EXPECT_NEAR(joint, split, 1e-10);
    }
  }
}

TEST(SymmetricDivergenceTest, TakesTheLargerDirection) {
  const auto p = Dist({0.75, 0.25});
  const auto q = Dist({0.25, 0.75});
  EXPECT_NEAR(symmetric_renyi_divergence(p, q, RenyiOrder(2.0)),
              std::max(renyi_divergence(p, q, RenyiOrder(2.0)),
                       renyi_divergence(q, p, RenyiOrder(2.0))),
              0.0);
  EXPECT_TRUE(is_infinite_divergence(symmetric_renyi_divergence(
      Dist({1.0, 0.0}), Dist({0.5, 0.5}), RenyiOrder(2.0))));
  EXPECT_LE(symmetric_renyi_divergence(p, p, RenyiOrder(8.0)), 1e-12);
}

TEST(GaussianIndividualRdpTest, MatchesClosedForm) {
  // rho = alpha L^2 norm^2 / (2 sigma^2).
  EXPECT_DOUBLE_EQ(
      gaussian_individual_rdp(RenyiOrder(2.0), 1.0, 1.0, 1.0).rho, 1.0);
  EXPECT_DOUBLE_EQ(
      gaussian_individual_rdp(RenyiOrder(3.0), 1.0, 2.0, 2.0).rho, 1.5);
  EXPECT_DOUBLE_EQ(
      gaussian_individual_rdp(RenyiOrder(63.0), 1.0, 0.0, 170.0).rho, 0.0);
  EXPECT_THROW(gaussian_individual_rdp(RenyiOrder(2.0), 1.0, 1.0, 0.0),
               ParameterError);
  EXPECT_THROW(gaussian_individual_rdp(RenyiOrder(2.0), -1.0, 1.0, 1.0),
               ParameterError);
}

TEST(RdpToDpTest, MatchesHandComputedValues) {
  const DpPoint a = rdp_to_dp(RdpPoint(RenyiOrder(2.0), 0.5), std::exp(-2.0));
  EXPECT_NEAR(a.epsilon, 2.5, 1e-12);
  const DpPoint b = rdp_to_dp(RdpPoint(RenyiOrder(11.0), 0.0), std::exp(-10.0));
  EXPECT_NEAR(b.epsilon, 1.0, 1e-12);
  // 0.135 + log(1e5)/62.
  const DpPoint c = rdp_to_dp(RdpPoint(RenyiOrder(63.0), 0.135), 1e-5);
  EXPECT_NEAR(c.epsilon, 0.32069234620919723, 1e-12);
  EXPECT_GE(c.epsilon, 0.315);
  EXPECT_LE(c.epsilon, 0.325);
}

TEST(RdpToDpTest, RejectsOrderOneAndBadDelta) {
  EXPECT_THROW(rdp_to_dp(RdpPoint(RenyiOrder(1.0), 0.5), 1e-5),
               ParameterError);
  EXPECT_THROW(rdp_to_dp(RdpPoint(RenyiOrder(2.0), 0.5), 0.0), ParameterError);
  EXPECT_THROW(rdp_to_dp(RdpPoint(RenyiOrder(2.0), 0.5), 1.0), ParameterError);
}

TEST(RdpToDpTest, MonotoneInDeltaAndOrder) {
  // Larger delta -> smaller epsilon at fixed (alpha, rho).
  double prev = std::numeric_limits<double>::infinity();
  for (double delta : {1e-8, 1e-6, 1e-4, 1e-2}) {
    const double eps = rdp_to_dp(RdpPoint(RenyiOrder(4.0), 0.3), delta).epsilon;
    EXPECT_LT(eps, prev);
    prev = eps;
  }
  // Larger alpha -> smaller epsilon at fixed rho.
  prev = std::numeric_limits<double>::infinity();
  for (double alpha : {1.5, 2.0, 4.0, 16.0, 64.0}) {
    const double eps =
        rdp_to_dp(RdpPoint(RenyiOrder(alpha), 0.3), 1e-5).epsilon;
    EXPECT_LT(eps, prev);
    prev = eps;
  }
}

TEST(BestDpOverCurveTest, SingletonCurve) {
  RdpCurve curve;
  curve.insert(RdpPoint(RenyiOrder(2.0), 0.5));
  const BestDpResult res = best_dp_over_curve(curve, std::exp(-2.0));
  EXPECT_NEAR(res.point.epsilon, 2.5, 1e-12);
  EXPECT_DOUBLE_EQ(res.order, 2.0);
}

TEST(BestDpOverCurveTest, RejectsEmptyCurveAndOrderOne) {
  EXPECT_THROW(best_dp_over_curve(RdpCurve(), 1e-5), ParameterError);
  RdpCurve curve;
  curve.insert(RdpPoint(RenyiOrder(1.0), 0.0));
  EXPECT_THROW(best_dp_over_curve(curve, 1e-5), ParameterError);
}

TEST(BestDpOverCurveTest, TieBreaksToSmallestOrder) {
  // Build a two-point curve whose conversions are bit-identical. The second
  // rho is searched within a few ulps of the algebraic tie because the
  // conversion arithmetic rounds.
  const double delta = 1e-3;
  const double l = std::log(1.0 / delta);
  const double e2 = rdp_to_dp(RdpPoint(RenyiOrder(2.0), 1.0), delta).epsilon;
  const double base = e2 - l / 2.0;
  double rho3 = base;
  bool tie_found = false;
  for (int j = -4; j <= 4 && !tie_found; ++j) {
    double candidate = base;
    for (int s = 0; s < std::abs(j); ++s) {
      candidate = std::nextafter(candidate, j < 0 ? 0.0 : 100.0);
    }
    if (rdp_to_dp(RdpPoint(RenyiOrder(3.0), candidate), delta).epsilon == e2) {
      rho3 = candidate;
      tie_found = true;
    }
  }
  ASSERT_TRUE(tie_found);
  RdpCurve curve;
  curve.insert(RdpPoint(RenyiOrder(2.0), 1.0));
  curve.insert(RdpPoint(RenyiOrder(3.0), rho3));
  EXPECT_DOUBLE_EQ(best_dp_over_curve(curve, delta).order, 2.0);
}

TEST(BestDpOverCurveTest, GaussianCompositionCrossChecks) {
  const auto grid = default_alpha_grid();
  // sigma = 170, k = 104.
  const BestDpResult a = best_dp_over_curve(
      RdpCurve::linear(104.0 / (2.0 * 170.0 * 170.0), grid), 1e-5);
  EXPECT_GE(a.point.epsilon, 0.29);
  EXPECT_LE(a.point.epsilon, 0.31);
  // sigma = 130, k = 180; analytic minimizer sits near alpha = 47.5.
  const BestDpResult b = best_dp_over_curve(
      RdpCurve::linear(180.0 / (2.0 * 130.0 * 130.0), grid), 1e-5);
  EXPECT_GE(b.point.epsilon, 0.49);
  EXPECT_LE(b.point.epsilon, 0.51);
  EXPECT_NEAR(b.order, 47.0, 1.5);
  // sigma = 455.34, k = 800.
  const BestDpResult c = best_dp_over_curve(
      RdpCurve::linear(800.0 / (2.0 * 455.34 * 455.34), grid), 1e-5);
  EXPECT_GE(c.point.epsilon, 0.295);
  EXPECT_LE(c.point.epsilon, 0.305);
}

TEST(ZcdpBudgetTest, MatchesClosedFormFixtures) {
  // (eps, delta) = (1, e^-1): B = 3 - 2 sqrt(2).
  EXPECT_NEAR(zcdp_budget_for_dp(1.0, std::exp(-1.0)),
              3.0 - 2.0 * std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(zcdp_budget_for_dp(1.0, 1e-5), 0.0208199383395355, 1e-12);
  EXPECT_DOUBLE_EQ(zcdp_budget_for_dp(0.0, 1e-5), 0.0);
  EXPECT_THROW(zcdp_budget_for_dp(-1.0, 1e-5), ParameterError);
  EXPECT_THROW(zcdp_budget_for_dp(1.0, 0.0), ParameterError);
}

TEST(ZcdpBudgetTest, RoundTripsThroughNumericMinimization) {
  // For B = zcdp_budget_for_dp(eps, delta), minimizing the conversion
  // alpha*B + log(1/delta)/(alpha-1) over alpha must recover eps.
  for (double eps : {0.1, 0.5, 1.0, 3.0}) {
    for (double delta : {1e-3, 1e-5, 1e-8}) {
      const double b = zcdp_budget_for_dp(eps, delta);
      const double l = std::log(1.0 / delta);
      const double recovered = MinimizeUnimodal(
          [&](double alpha) { return alpha * b + l / (alpha - 1.0); }, 1.0001,
          1e7);
      EXPECT_NEAR(recovered, eps, 1e-9) << "eps=" << eps << " delta=" << delta;
    }
  }
}

TEST(DefaultAlphaGridTest, CoversQuarterUnitAndGeometricRanges) {
  const auto grid = default_alpha_grid();
  EXPECT_TRUE(std::is_sorted(grid.begin(), grid.end()));
  EXPECT_EQ(std::adjacent_find(grid.begin(), grid.end()), grid.end());
  for (double a : grid) EXPECT_GT(a, 1.0);
  EXPECT_NE(std::find(grid.begin(), grid.end(), 1.25), grid.end());
  EXPECT_NE(std::find(grid.begin(), grid.end(), 63.0), grid.end());
  EXPECT_NE(std::find(grid.begin(), grid.end(), 128.0), grid.end());
  EXPECT_DOUBLE_EQ(grid.back(), 256.0);
}

TEST(LogSumExpTest, StableForLargeMagnitudes) {
  EXPECT_NEAR(log_sum_exp({1000.0, 1000.0}), 1000.0 + std::log(2.0), 1e-12);
  EXPECT_NEAR(log_sum_exp({-1000.0, -1000.0}), -1000.0 + std::log(2.0), 1e-12);
  EXPECT_EQ(log_sum_exp({}), -std::numeric_limits<double>::infinity());
}

}  // namespace
}  // namespace ipa
