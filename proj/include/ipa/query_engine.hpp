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
//
// Adaptive answering of bounded linear queries with Gaussian noise under
// per-point accounting. Each round the caller supplies the per-point query
// values q_t(X_i) in [0, 1]; a point participating in a sum query answered
// with N(0, sigma^2) noise loses alpha * q^2 / (2 sigma^2), so the ledger
// keeps a point active exactly while its cumulative squared query mass
// stays within 2 B sigma^2 / alpha. Answers are released every round, even
// when the active set is empty (pure noise), so the output distribution
// never reveals an excluded point's value.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ipa/core.hpp"
#include "ipa/error.hpp"
#include "ipa/ledger.hpp"
#include "ipa/rng.hpp"

namespace ipa {

// Point-per-row feature storage for query workloads ingested from files.
struct QueryDataset {
  std::vector<std::size_t> point_ids;
  std::vector<std::vector<double>> values;

  std::size_t n_points() const { return values.size(); }
};

// Evaluates the linear query x -> <weights, x> on every point, validating
// that each evaluation lands in [0, 1]; the bound is an assumption of the
// accuracy guarantee, so out-of-range values are an error, never clipped.
inline std::vector<double> evaluate_linear_query(
    const QueryDataset& dataset, const std::vector<double>& weights) {
  std::vector<double> q_values;
  q_values.reserve(dataset.values.size());
  for (std::size_t i = 0; i < dataset.values.size(); ++i) {
    const std::vector<double>& row = dataset.values[i];
    if (row.size() != weights.size()) {
      throw DimensionError("evaluate_linear_query: point " +
                           std::to_string(i) + " has " +
                           std::to_string(row.size()) + " features, query has " +
                           std::to_string(weights.size()));
    }
    double value = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) value += weights[j] * row[j];
    if (!(value >= 0.0) || !(value <= 1.0)) {
      throw ParameterError("evaluate_linear_query: point " +
                           std::to_string(i) + " evaluates to " +
                           std::to_string(value) + ", outside [0, 1]");
    }
    q_values.push_back(value);
  }
  return q_values;
}

struct QueryAnswer {
  std::size_t round = 0;
  double answer = 0.0;
  std::size_t active_count = 0;
};

// One adaptive query-answering session over n points.
class QuerySession {
 public:
  QuerySession(std::size_t n_points, RenyiOrder order, double budget,
               double sigma, std::uint64_t seed)
      : ledger_(order, budget, n_points),
        sigma_(sigma),
        rng_(seed) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
      throw ParameterError("QuerySession: sigma must be > 0");
    }
  }

  // Answers one query round: charges alpha * q_i^2 / (2 sigma^2) per point,
  // drops points that can no longer afford their charge, and returns the sum
  // over the surviving active set plus one Gaussian draw.
  QueryAnswer answer_query(const std::vector<double>& q_values) {
    validate_query(q_values);
    const double alpha = ledger_.order().alpha;
    RoundProposal proposal;
    proposal.losses.reserve(q_values.size());
    for (const double q : q_values) {
      proposal.losses.push_back(alpha * q * q / (2.0 * sigma_ * sigma_));
    }
    const RoundPlan plan = ledger_.begin_round(proposal);

    double true_sum = 0.0;
    for (std::size_t i = 0; i < q_values.size(); ++i) {
      if (plan.active[i]) true_sum += q_values[i];
    }
    ledger_.commit_round(plan);

    QueryAnswer result;
    result.round = plan.round;
    result.active_count = plan.active_count();
    result.answer = true_sum + rng_.gaussian(sigma_);
    return result;
  }

  // Every point stays active for at least this many unit-bounded queries:
  // floor(2 B sigma^2 / alpha).
  std::size_t universal_warmup_rounds() const {
    const double k0 = std::floor(2.0 * ledger_.budget() * sigma_ * sigma_ /
                                 ledger_.order().alpha);
    return static_cast<std::size_t>(k0);
  }

  // The squared-query-mass budget 2 B sigma^2 / alpha from the active-set
  // rule, in the query domain.
  double norm_budget() const {
    return 2.0 * ledger_.budget() * sigma_ * sigma_ / ledger_.order().alpha;
  }

  const IndividualLedger& ledger() const { return ledger_; }
  double sigma() const { return sigma_; }
  RenyiOrder order() const { return ledger_.order(); }
  double budget() const { return ledger_.budget(); }
  std::size_t n_points() const { return ledger_.n_points(); }
  std::size_t round() const { return ledger_.round(); }
  const Rng& rng() const { return rng_; }

  // Restores a session from serialized parts.
  static QuerySession from_state(IndividualLedger ledger, double sigma,
                                 Rng rng) {
    return QuerySession(std::move(ledger), sigma, std::move(rng));
  }

 private:
  QuerySession(IndividualLedger ledger, double sigma, Rng rng)
      : ledger_(std::move(ledger)), sigma_(sigma), rng_(std::move(rng)) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
      throw ParameterError("QuerySession: sigma must be > 0");
    }
  }

  void validate_query(const std::vector<double>& q_values) const {
    if (q_values.size() != ledger_.n_points()) {
      throw DimensionError("answer_query: got " +
                           std::to_string(q_values.size()) + " values for " +
                           std::to_string(ledger_.n_points()) + " points");
    }
    for (std::size_t i = 0; i < q_values.size(); ++i) {
      if (!(q_values[i] >= 0.0) || !(q_values[i] <= 1.0)) {
        throw ParameterError("answer_query: q[" + std::to_string(i) + "] = " +
                             std::to_string(q_values[i]) +
                             " lies outside [0, 1]");
      }
    }
  }

  IndividualLedger ledger_;
  double sigma_;
  Rng rng_;
};

// Re-simulates one query answer n_trials times from a snapshot of the
// session and returns the fraction of answers within sqrt(2 ln(1/delta)) *
// sigma of the true sum. The bound only covers points that are still
// active, so probing a session that has already excluded someone is a
// precondition violation.
inline double accuracy_probe(const QuerySession& session,
                             const std::vector<double>& q_values,
                             std::size_t n_trials, double delta) {
  if (!(delta > 0.0) || !(delta < 1.0)) {
    throw ParameterError("accuracy_probe: delta must lie in (0, 1)");
  }
  if (n_trials == 0) {
    throw ParameterError("accuracy_probe: need at least one trial");
  }
  if (q_values.size() != session.n_points()) {
    throw DimensionError("accuracy_probe: query size mismatch");
  }
  if (session.ledger().active_count() != session.n_points()) {
    throw StateError(
        "accuracy_probe: accuracy bound requires every point active");
  }
  for (const double q : q_values) {
    if (!(q >= 0.0) || !(q <= 1.0)) {
      throw ParameterError("accuracy_probe: query value outside [0, 1]");
    }
  }

  double true_sum = 0.0;
  for (const double q : q_values) true_sum += q;

  const double threshold =
      std::sqrt(2.0 * std::log(1.0 / delta)) * session.sigma();
  Rng rng = session.rng();  // immutable snapshot: the session is untouched
  std::size_t within = 0;
  for (std::size_t t = 0; t < n_trials; ++t) {
    const double answer = true_sum + rng.gaussian(session.sigma());
    if (std::abs(answer - true_sum) <= threshold) ++within;
  }
  return static_cast<double>(within) / static_cast<double>(n_trials);
}

}  // namespace ipa
