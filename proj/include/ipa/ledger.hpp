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
// Per-data-point accounting under fully adaptive composition:
//
//  * IndividualLedger - one privacy filter per data point. Each round the
//    caller proposes per-point losses; points whose cumulative loss would
//    exceed the shared budget are excluded for good and their loss for the
//    round is zeroed (they contribute nothing, so they spend nothing).
//    Rounds follow a begin/commit protocol: begin_round only plans, commit
//    applies exactly one planned round.
//
//  * OdometerState - a running upper bound on realized loss, maintained in
//    increments of a discretization delta. The bound starts at delta; when
//    a segment of rounds overflows delta, the bound grows by delta and the
//    offending loss opens the next segment.
//
// Individual losses default to the data-point definition that takes a
// supremum over datasets containing the point; that is the only mode a
// filter may consume. Per-instance losses (measured on the realized run
// only) are observational: odometers accept them for measurement, filters
// reject them.

#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "ipa/core.hpp"
#include "ipa/error.hpp"

namespace ipa {

enum class AccountingMode {
  kIndividual,   // sup over datasets containing the point; filterable
  kPerInstance,  // realized-run measurement only; never filterable
};

// Per-point losses proposed for one round, indexed by point id.
struct RoundProposal {
  std::vector<double> losses;
};

// The outcome of begin_round: which points stay active this round and the
// losses that will actually be committed (zeroed for excluded points).
struct RoundPlan {
  std::size_t round = 0;             // ledger round the plan belongs to
  std::vector<bool> active;          // per point: active in this round
  RoundProposal committed;           // per point: loss actually charged
  std::size_t active_count() const {
    std::size_t n = 0;
    for (bool a : active) n += a ? 1 : 0;
    return n;
  }
};

// One privacy filter per data point with a shared order and budget.
class IndividualLedger {
 public:
  IndividualLedger(RenyiOrder order, double budget, std::size_t n_points,
                   AccountingMode mode = AccountingMode::kIndividual)
      : order_(order),
        budget_(budget),
        mode_(mode),
        cumulative_(n_points, 0.0),
        active_(n_points, true) {
    if (!std::isfinite(budget) || budget < 0.0) {
      throw ParameterError("IndividualLedger: budget must be finite and >= 0");
    }
    if (mode == AccountingMode::kPerInstance) {
      throw ParameterError(
          "IndividualLedger: per-instance losses are measurement-only and "
          "cannot drive a filter");
    }
  }

  // Plans one round. A point stays active iff it was active before and its
  // cumulative loss plus the proposed loss stays within budget (boundary
  // included). Does not mutate the ledger.
  RoundPlan begin_round(const RoundProposal& proposal) const {
    validate_proposal(proposal);
    RoundPlan plan;
    plan.round = round_;
    plan.active.resize(cumulative_.size());
    plan.committed.losses.assign(cumulative_.size(), 0.0);
    for (std::size_t i = 0; i < cumulative_.size(); ++i) {
      const bool stays =
          active_[i] && cumulative_[i] + proposal.losses[i] <= budget_;
      plan.active[i] = stays;
      plan.committed.losses[i] = stays ? proposal.losses[i] : 0.0;
    }
    return plan;
  }

  // Applies a plan produced by begin_round on the current state. Committing
  // twice, out of order, or with losses that violate the budget raises
  // StateError.
  void commit_round(const RoundPlan& plan) {
    if (plan.round != round_) {
      throw StateError("commit_round: plan is for round " +
                       std::to_string(plan.round) + " but ledger is at round " +
                       std::to_string(round_) +
                       " (commit without matching begin?)");
    }
    if (plan.active.size() != cumulative_.size() ||
        plan.committed.losses.size() != cumulative_.size()) {
      throw DimensionError("commit_round: plan size does not match ledger");
    }
    for (std::size_t i = 0; i < cumulative_.size(); ++i) {
      const double loss = plan.committed.losses[i];
      if (!std::isfinite(loss) || loss < 0.0) {
        throw StateError("commit_round: committed loss must be >= 0");
      }
      if (!plan.active[i] && loss != 0.0) {
        throw StateError("commit_round: inactive point carries nonzero loss");
      }
      if (plan.active[i] &&
          (!active_[i] || cumulative_[i] + loss > budget_)) {
        throw StateError("commit_round: plan does not fit the current state");
      }
    }
    for (std::size_t i = 0; i < cumulative_.size(); ++i) {
      cumulative_[i] += plan.committed.losses[i];
      active_[i] = plan.active[i];
    }
    ++round_;
  }

  RenyiOrder order() const { return order_; }
  double budget() const { return budget_; }
  AccountingMode mode() const { return mode_; }
  std::size_t n_points() const { return cumulative_.size(); }
  std::size_t round() const { return round_; }
  double cumulative(std::size_t i) const { return cumulative_.at(i); }
  bool is_active(std::size_t i) const { return active_.at(i); }
  const std::vector<double>& cumulative_losses() const { return cumulative_; }
  const std::vector<bool>& active_flags() const { return active_; }

  std::size_t active_count() const {
    std::size_t n = 0;
    for (bool a : active_) n += a ? 1 : 0;
    return n;
  }

  // Restores a previously serialized state.
  static IndividualLedger from_state(RenyiOrder order, double budget,
                                     AccountingMode mode,
                                     std::vector<double> cumulative,
                                     std::vector<bool> active,
                                     std::size_t round) {
    if (cumulative.size() != active.size()) {
      throw DimensionError("IndividualLedger::from_state: size mismatch");
    }
    IndividualLedger ledger(order, budget, cumulative.size(), mode);
    for (double c : cumulative) {
      if (!std::isfinite(c) || c < 0.0 || c > budget) {
        throw InvariantError(
            "IndividualLedger::from_state: cumulative loss outside [0, B]");
      }
    }
    ledger.cumulative_ = std::move(cumulative);
    ledger.active_ = std::move(active);
    ledger.round_ = round;
    return ledger;
  }

 private:
  void validate_proposal(const RoundProposal& proposal) const {
    if (proposal.losses.size() != cumulative_.size()) {
      throw DimensionError("begin_round: proposal has " +
                           std::to_string(proposal.losses.size()) +
                           " losses for " + std::to_string(cumulative_.size()) +
                           " points");
    }
    for (double loss : proposal.losses) {
      if (!std::isfinite(loss) || loss < 0.0) {
        throw ParameterError("begin_round: losses must be finite and >= 0");
      }
    }
  }

  RenyiOrder order_;
  double budget_;
  AccountingMode mode_;
  std::vector<double> cumulative_;
  std::vector<bool> active_;
  std::size_t round_ = 0;
};

// A discretized running bound on realized privacy loss. The bound only
// takes values m * delta, m >= 1, and always dominates the realized sum of
// committed losses.
struct OdometerState {
  explicit OdometerState(double d) : delta(d), bound(d) {
    if (!std::isfinite(d) || !(d > 0.0)) {
      throw ParameterError("OdometerState: delta must be finite and > 0");
    }
  }
  double delta;
  double bound;                  // current O_t, a multiple of delta
  double segment_consumed = 0.0; // loss accumulated in the open segment
  std::size_t round = 0;         // rounds processed
  std::size_t restart_round = 0; // round at which the open segment started
};

// Folds one per-round loss into the odometer. Losses must not exceed the
// discretization delta. When the open segment cannot absorb the loss, the
// bound grows by delta and the loss opens the next segment.
inline OdometerState odometer_update(const OdometerState& state, double rho) {
  if (!std::isfinite(rho) || rho < 0.0) {
    throw ParameterError("odometer_update: loss must be finite and >= 0");
  }
  if (rho > state.delta) {
    throw ParameterError("odometer_update: loss " + std::to_string(rho) +
                         " exceeds discretization delta " +
                         std::to_string(state.delta));
  }
  OdometerState next = state;
  next.round += 1;
  if (state.segment_consumed + rho > state.delta) {
    next.bound += state.delta;
    next.segment_consumed = rho;
    next.restart_round = next.round;
  } else {
    next.segment_consumed += rho;
  }
  return next;
}

// One odometer per data point with a shared discretization.
struct IndividualOdometers {
  IndividualOdometers(double delta, std::size_t n_points,
                      AccountingMode m = AccountingMode::kIndividual)
      : mode(m) {
    states.reserve(n_points);
    for (std::size_t i = 0; i < n_points; ++i) {
      states.emplace_back(delta);
    }
  }
  AccountingMode mode;
  std::vector<OdometerState> states;
};

// Applies one round of per-point losses; n = 0 rounds are a no-op.
inline IndividualOdometers individual_odometer_update(
    const IndividualOdometers& odometers, const RoundProposal& proposal) {
  if (proposal.losses.size() != odometers.states.size()) {
    throw DimensionError("individual_odometer_update: proposal has " +
                         std::to_string(proposal.losses.size()) +
                         " losses for " +
                         std::to_string(odometers.states.size()) + " points");
  }
  IndividualOdometers next = odometers;
  for (std::size_t i = 0; i < next.states.size(); ++i) {
    try {
      next.states[i] = odometer_update(next.states[i], proposal.losses[i]);
    } catch (const ParameterError& e) {
      throw ParameterError("individual_odometer_update: point " +
                           std::to_string(i) + ": " + e.what());
    }
  }
  return next;
}

}  // namespace ipa
