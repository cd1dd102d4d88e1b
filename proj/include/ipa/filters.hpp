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
// Privacy filters: stopping rules that keep a fully adaptive composition
// within a fixed privacy budget. A filter continues exactly while the
// committed losses plus the next proposed loss stay within budget; the
// comparison is an exact <= with no slack, so a proposal landing on the
// boundary is admitted and a rejected proposal leaves the state unchanged
// (the caller may retry with a smaller loss).

#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>

#include "ipa/core.hpp"
#include "ipa/error.hpp"

namespace ipa {

enum class FilterDecision { kContinue, kHalt };

// State of an RDP filter at a fixed order alpha and budget B (both in nats).
struct FilterState {
  FilterState(RenyiOrder o, double b) : order(o), budget(b) {
    if (!std::isfinite(b) || b < 0.0) {
      throw ParameterError("FilterState: budget must be finite and >= 0");
    }
  }
  RenyiOrder order;
  double budget;
  double consumed = 0.0;      // sum of committed per-round losses
  std::size_t history_len = 0;  // number of committed rounds
};

// Proposes the next per-round loss. On kContinue the returned state has the
// loss committed; on kHalt the returned state equals the input state.
inline std::pair<FilterDecision, FilterState> rdp_filter_check(
    const FilterState& state, double next_rho) {
  if (!std::isfinite(next_rho) || next_rho < 0.0) {
    throw ParameterError("rdp_filter_check: loss must be finite and >= 0, got " +
                         std::to_string(next_rho));
  }
  if (state.consumed + next_rho <= state.budget) {
    FilterState next = state;
    next.consumed += next_rho;
    next.history_len += 1;
    return {FilterDecision::kContinue, next};
  }
  return {FilterDecision::kHalt, state};
}

// State of an approximate-DP filter with budget (eps_budget, delta_budget).
// The stopping rule reduces to an RDP filter through zCDP: a round with
// per-round eps_t costs eps_t^2 / 2, and the filter continues exactly while
// the accumulated cost stays within zcdp_budget_for_dp(eps, delta).
struct DpFilterState {
  DpFilterState(double eps, double delta)
      : eps_budget(eps),
        delta_budget(delta),
        zcdp_budget(zcdp_budget_for_dp(eps, delta)) {}
  double eps_budget;
  double delta_budget;
  double zcdp_budget;
  double consumed_half_sq = 0.0;  // (1/2) * sum of committed eps_t^2
  std::size_t history_len = 0;
};

inline std::pair<FilterDecision, DpFilterState> dp_filter_check(
    const DpFilterState& state, double next_eps) {
  if (!std::isfinite(next_eps) || next_eps < 0.0) {
    throw ParameterError("dp_filter_check: eps must be finite and >= 0, got " +
                         std::to_string(next_eps));
  }
  const double cost = 0.5 * next_eps * next_eps;
  if (state.consumed_half_sq + cost <= state.zcdp_budget) {
    DpFilterState next = state;
    next.consumed_half_sq += cost;
    next.history_len += 1;
    return {FilterDecision::kContinue, next};
  }
  return {FilterDecision::kHalt, state};
}

// The approximate-DP cost of composing k rounds of fixed per-round eps at
// failure probability delta: (1/2) k eps^2 + eps sqrt(2 k log(1/delta)).
// A DP filter with this budget (and the same delta) matches classical
// fixed-rate composition.
inline double fixed_rate_equivalence(std::size_t k, double eps, double delta) {
  if (!std::isfinite(eps) || eps < 0.0) {
    throw ParameterError("fixed_rate_equivalence: eps must be >= 0");
  }
  if (!(delta > 0.0) || !(delta < 1.0)) {
    throw ParameterError("fixed_rate_equivalence: delta must lie in (0, 1)");
  }
  const double kd = static_cast<double>(k);
  return 0.5 * kd * eps * eps +
         eps * std::sqrt(2.0 * kd * std::log(1.0 / delta));
}

}  // namespace ipa
