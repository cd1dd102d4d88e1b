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

#include "ipa/query_engine.hpp"

#include <cmath>
#include <cstddef>
#include <vector>

#include "gtest/gtest.h"
#include "ipa/core.hpp"
#include "ipa/error.hpp"
#include "ipa/rng.hpp"

namespace ipa {
namespace {

TEST(QuerySessionTest, HandSimulatedActiveSetSchedule) {
  // alpha = 2, sigma = 1, B = 2 puts the squared-query-mass budget
  // 2 B sigma^2 / alpha at exactly 2. Point 0 asks q = 1 every round and
  // survives rounds 1-2; point 1 asks q = 0.5 and survives through round 8.
  QuerySession session(2, RenyiOrder(2.0), 2.0, 1.0, 7u);
  Rng twin(7u);  // replays the session's noise stream

  const std::vector<double> q = {1.0, 0.5};
  for (int round = 1; round <= 10; ++round) {
    const QueryAnswer answer = session.answer_query(q);
    const double noise = twin.gaussian(1.0);

    double expected_sum = 0.0;
    if (round <= 2) expected_sum += 1.0;
    if (round <= 8) expected_sum += 0.5;
    const std::size_t expected_active =
        (round <= 2 ? 1u : 0u) + (round <= 8 ? 1u : 0u);

    EXPECT_EQ(answer.active_count, expected_active) << "round " << round;
    EXPECT_EQ(answer.answer, expected_sum + noise) << "round " << round;
    // In particular the third answer is 0.5 plus noise: only point 1 is
    // still being counted.
    if (round == 3) {
      EXPECT_EQ(answer.answer, 0.5 + noise);
    }
  }
  EXPECT_FALSE(session.ledger().is_active(0));
  EXPECT_FALSE(session.ledger().is_active(1));
}

TEST(QuerySessionTest, ZeroQueryConsumesNoBudget) {
  QuerySession session(3, RenyiOrder(2.0), 0.25, 1.0, 11u);
  Rng twin(11u);
  for (int round = 0; round < 20; ++round) {
    const QueryAnswer answer = session.answer_query({0.0, 0.0, 0.0});
    EXPECT_EQ(answer.active_count, 3u);
    EXPECT_EQ(answer.answer, twin.gaussian(1.0));  // pure noise
  }
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_TRUE(session.ledger().is_active(i));
    EXPECT_DOUBLE_EQ(session.ledger().cumulative(i), 0.0);
  }
}

TEST(QuerySessionTest, UnitQueriesLastExactlyTheWarmupRoundCount) {
  // rho per unit query is alpha / (2 sigma^2) = 0.25; with B = 2.1 the
  // warm-up count is floor(8.4) = 8.
  QuerySession session(1, RenyiOrder(2.0), 2.1, 2.0, 3u);
  EXPECT_EQ(session.universal_warmup_rounds(), 8u);
  int active_rounds = 0;
  for (int round = 0; round < 12; ++round) {
    if (session.answer_query({1.0}).active_count == 1) ++active_rounds;
  }
  EXPECT_EQ(active_rounds, 8);

  // Exact boundary: B = 2 gives floor(8) = 8 affordable rounds as well,
  // with the eighth landing exactly on the budget.
  QuerySession boundary(1, RenyiOrder(2.0), 2.0, 2.0, 3u);
  EXPECT_EQ(boundary.universal_warmup_rounds(), 8u);
  active_rounds = 0;
  for (int round = 0; round < 12; ++round) {
    if (boundary.answer_query({1.0}).active_count == 1) ++active_rounds;
  }
  EXPECT_EQ(active_rounds, 8);
}

TEST(QuerySessionTest, NoExclusionBeforeWarmupOnRandomQueries) {
  Rng rng(555u);
  for (int trial = 0; trial < 50; ++trial) {
    const double alpha = 1.5 + 6.0 * rng.uniform();
    const double sigma = 0.5 + 2.0 * rng.uniform();
    const double budget = 0.2 + 2.0 * rng.uniform();
    const double ratio = 2.0 * budget * sigma * sigma / alpha;
    if (std::abs(ratio - std::round(ratio)) < 1e-6) continue;  // fp tie guard
    const std::size_t k0 =
        static_cast<std::size_t>(std::floor(ratio));
    if (k0 == 0 || k0 > 200) continue;

    QuerySession session(4, RenyiOrder(alpha), budget, sigma,
                         1000u + static_cast<std::uint64_t>(trial));
    ASSERT_EQ(session.universal_warmup_rounds(), k0);
    for (std::size_t round = 0; round < k0; ++round) {
      std::vector<double> q(4);
      for (double& v : q) v = rng.uniform();
      const QueryAnswer answer = session.answer_query(q);
      ASSERT_EQ(answer.active_count, 4u)
          << "trial " << trial << " round " << round << " of " << k0;
    }
  }
}

TEST(QuerySessionTest, LedgerSetMatchesClosedFormSquaredMassRule) {
  // Dyadic parameters make both bookkeeping routes exact: alpha = 2,
  // sigma = 0.5 gives rho = 4 q^2 and a squared-mass threshold of B / 4.
  const double budget = 1.5;
  const double threshold = budget / 4.0;
  QuerySession session(5, RenyiOrder(2.0), budget, 0.5, 99u);

  Rng rng(2718u);
  const std::vector<double> levels = {0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<double> mass(5, 0.0);   // running sum of q^2, closed form
  std::vector<bool> in_set(5, true);  // membership by first crossing

  for (int round = 0; round < 30; ++round) {
    std::vector<double> q(5);
    for (double& v : q) {
      v = levels[static_cast<std::size_t>(rng.uniform() * 5.0) % 5];
    }
    session.answer_query(q);
    for (std::size_t i = 0; i < 5; ++i) {
      if (in_set[i]) {
        mass[i] += q[i] * q[i];
        if (mass[i] > threshold) in_set[i] = false;
      }
      ASSERT_EQ(session.ledger().is_active(i), in_set[i])
          << "round " << round << " point " << i;
    }
  }
}

TEST(QuerySessionTest, AnswersAreSeededAndReproducible) {
  QuerySession a(2, RenyiOrder(2.0), 1.0, 1.5, 42u);
  QuerySession b(2, RenyiOrder(2.0), 1.0, 1.5, 42u);
  QuerySession c(2, RenyiOrder(2.0), 1.0, 1.5, 43u);
  bool any_difference = false;
  for (int round = 0; round < 10; ++round) {
    const std::vector<double> q = {0.5, 0.25};
    const double a_t = a.answer_query(q).answer;
    EXPECT_EQ(a_t, b.answer_query(q).answer);
    any_difference = any_difference || a_t != c.answer_query(q).answer;
  }
  EXPECT_TRUE(any_difference);
}

TEST(QuerySessionTest, RejectsOutOfRangeQueriesWithoutClipping) {
  QuerySession session(2, RenyiOrder(2.0), 1.0, 1.0, 1u);
  EXPECT_THROW(session.answer_query({1.1, 0.0}), ParameterError);
  EXPECT_THROW(session.answer_query({-0.01, 0.0}), ParameterError);
  EXPECT_THROW(
      session.answer_query({std::nan(""), 0.0}), ParameterError);
  EXPECT_THROW(session.answer_query({0.5}), DimensionError);
  EXPECT_THROW(QuerySession(2, RenyiOrder(2.0), 1.0, 0.0, 1u),
               ParameterError);
  // Failed rounds consume nothing.
  EXPECT_EQ(session.round(), 0u);
  EXPECT_EQ(session.answer_query({0.5, 0.5}).round, 0u);
}

TEST(AccuracyProbeTest, CoverageMatchesGaussianTail) {
  QuerySession session(3, RenyiOrder(2.0), 5.0, 2.0, 8u);
  const std::vector<double> q = {0.9, 0.1, 0.4};

  // delta = 0.05: threshold sqrt(2 ln 20) sigma covers ~98.6% of draws.
  const double cover_05 = accuracy_probe(session, q, 10000, 0.05);
  EXPECT_GE(cover_05, 0.94);

  // delta = 0.5: threshold sqrt(2 ln 2) sigma ~ 1.177 sigma covers ~76.1%.
  const double cover_50 = accuracy_probe(session, q, 20000, 0.5);
  EXPECT_NEAR(cover_50, 0.7609, 0.02);
}

TEST(AccuracyProbeTest, ZeroQueryHasSameCoverage) {
  QuerySession session(3, RenyiOrder(2.0), 5.0, 1.0, 8u);
  const double coverage =
      accuracy_probe(session, {0.0, 0.0, 0.0}, 20000, 0.5);
  EXPECT_NEAR(coverage, 0.7609, 0.02);
}

TEST(AccuracyProbeTest, ProbeIsReadOnly) {
  QuerySession probed(2, RenyiOrder(2.0), 1.0, 1.0, 123u);
  QuerySession control(2, RenyiOrder(2.0), 1.0, 1.0, 123u);
  accuracy_probe(probed, {0.5, 0.5}, 1000, 0.05);
  const std::vector<double> q = {0.25, 0.75};
  EXPECT_EQ(probed.answer_query(q).answer, control.answer_query(q).answer);
  EXPECT_EQ(probed.round(), 1u);
}

TEST(AccuracyProbeTest, RequiresEveryPointActive) {
  QuerySession session(1, RenyiOrder(2.0), 0.5, 1.0, 5u);
  session.answer_query({1.0});  // rho = 1 > 0.5: the point is excluded
  ASSERT_EQ(session.ledger().active_count(), 0u);
  EXPECT_THROW(accuracy_probe(session, {0.5}, 100, 0.05), StateError);
}

TEST(AccuracyProbeTest, ValidatesArguments) {
  QuerySession session(1, RenyiOrder(2.0), 1.0, 1.0, 5u);
  EXPECT_THROW(accuracy_probe(session, {0.5}, 0, 0.05), ParameterError);
  EXPECT_THROW(accuracy_probe(session, {0.5}, 10, 0.0), ParameterError);
  EXPECT_THROW(accuracy_probe(session, {0.5}, 10, 1.0), ParameterError);
  EXPECT_THROW(accuracy_probe(session, {0.5, 0.5}, 10, 0.05),
               DimensionError);
  EXPECT_THROW(accuracy_probe(session, {1.5}, 10, 0.05), ParameterError);
}

TEST(QueryDatasetTest, LinearQueryEvaluationValidatesRange) {
  QueryDataset dataset;
  dataset.point_ids = {0, 1};
  dataset.values = {{0.2, 0.4}, {0.5, 0.5}};

  const std::vector<double> q = evaluate_linear_query(dataset, {1.0, 1.0});
  ASSERT_EQ(q.size(), 2u);
  EXPECT_DOUBLE_EQ(q[0], 0.6);
  EXPECT_DOUBLE_EQ(q[1], 1.0);

  EXPECT_THROW(evaluate_linear_query(dataset, {2.0, 2.0}), ParameterError);
  EXPECT_THROW(evaluate_linear_query(dataset, {-1.0, 0.0}), ParameterError);
  EXPECT_THROW(evaluate_linear_query(dataset, {1.0}), DimensionError);
}

}  // namespace
}  // namespace ipa
