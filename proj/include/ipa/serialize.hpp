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
// Versioned JSON snapshots for every piece of accounting state, including
// the RNG stream position, so a restored run replays bit for bit. Every
// snapshot is an envelope {schema_version, kind, state}; loading validates
// the version, the kind, and every state invariant before constructing the
// object.

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "ipa/core.hpp"
#include "ipa/error.hpp"
#include "ipa/filters.hpp"
#include "ipa/ledger.hpp"
#include "ipa/oracle.hpp"
#include "ipa/query_engine.hpp"
#include "ipa/rng.hpp"

namespace ipa {

inline constexpr int kSnapshotSchemaVersion = 1;

namespace internal {

inline const nlohmann::json& require_field(const nlohmann::json& j,
                                           const std::string& name) {
  const auto it = j.find(name);
  if (it == j.end()) {
    throw ParameterError("snapshot: missing field '" + name + "'");
  }
  return *it;
}

inline double get_number(const nlohmann::json& j, const std::string& name) {
  const nlohmann::json& field = require_field(j, name);
  if (!field.is_number()) {
    throw ParameterError("snapshot: field '" + name + "' must be a number");
  }
  return field.get<double>();
}

inline std::uint64_t get_count(const nlohmann::json& j,
                               const std::string& name) {
  const nlohmann::json& field = require_field(j, name);
  if (field.is_number_unsigned()) {
    return field.get<std::uint64_t>();
  }
  if (field.is_number_integer()) {
    const std::int64_t value = field.get<std::int64_t>();
    if (value >= 0) return static_cast<std::uint64_t>(value);
  }
  throw ParameterError("snapshot: field '" + name +
                       "' must be a non-negative integer");
}

inline std::string get_string(const nlohmann::json& j,
                              const std::string& name) {
  const nlohmann::json& field = require_field(j, name);
  if (!field.is_string()) {
    throw ParameterError("snapshot: field '" + name + "' must be a string");
  }
  return field.get<std::string>();
}

inline std::vector<double> get_number_array(const nlohmann::json& j,
                                            const std::string& name) {
  const nlohmann::json& field = require_field(j, name);
  if (!field.is_array()) {
    throw ParameterError("snapshot: field '" + name + "' must be an array");
  }
  std::vector<double> values;
  values.reserve(field.size());
  for (const nlohmann::json& entry : field) {
    if (!entry.is_number()) {
      throw ParameterError("snapshot: field '" + name +
                           "' must hold numbers");
    }
    values.push_back(entry.get<double>());
  }
  return values;
}

inline std::vector<bool> get_bool_array(const nlohmann::json& j,
                                        const std::string& name) {
  const nlohmann::json& field = require_field(j, name);
  if (!field.is_array()) {
    throw ParameterError("snapshot: field '" + name + "' must be an array");
  }
  std::vector<bool> values;
  values.reserve(field.size());
  for (const nlohmann::json& entry : field) {
    if (!entry.is_boolean()) {
      throw ParameterError("snapshot: field '" + name +
                           "' must hold booleans");
    }
    values.push_back(entry.get<bool>());
  }
  return values;
}

inline std::string mode_name(AccountingMode mode) {
  return mode == AccountingMode::kIndividual ? "individual" : "per_instance";
}

inline AccountingMode mode_from_name(const std::string& name) {
  if (name == "individual") return AccountingMode::kIndividual;
  if (name == "per_instance") return AccountingMode::kPerInstance;
  throw ParameterError("snapshot: unknown accounting mode '" + name + "'");
}

}  // namespace internal

inline nlohmann::json snapshot_envelope(const std::string& kind,
                                        nlohmann::json state) {
  nlohmann::json doc;
  doc["schema_version"] = kSnapshotSchemaVersion;
  doc["kind"] = kind;
  doc["state"] = std::move(state);
  return doc;
}

// Validates the envelope and returns the state payload.
inline const nlohmann::json& open_envelope(const nlohmann::json& doc,
                                           const std::string& kind) {
  const std::uint64_t version = internal::get_count(doc, "schema_version");
  if (version != static_cast<std::uint64_t>(kSnapshotSchemaVersion)) {
    throw ParameterError("snapshot: unsupported schema_version " +
                         std::to_string(version));
  }
  const std::string actual = internal::get_string(doc, "kind");
  if (actual != kind) {
    throw ParameterError("snapshot: expected kind '" + kind + "', found '" +
                         actual + "'");
  }
  return internal::require_field(doc, "state");
}

// ---------------------------------------------------------------------------
// RNG

inline nlohmann::json rng_to_json(const Rng& rng) {
  nlohmann::json j;
  j["seed"] = rng.seed();
  j["position"] = rng.position();
  return j;
}

inline Rng rng_from_json(const nlohmann::json& j) {
  return Rng::restore(internal::get_count(j, "seed"),
                      internal::get_count(j, "position"));
}

// ---------------------------------------------------------------------------
// RDP filter

inline nlohmann::json filter_state_to_json(const FilterState& state) {
  nlohmann::json inner;
  inner["order"] = state.order.alpha;
  inner["budget"] = state.budget;
  inner["consumed"] = state.consumed;
  inner["history_len"] = state.history_len;
  return snapshot_envelope("rdp_filter", std::move(inner));
}

inline FilterState filter_state_from_json(const nlohmann::json& doc) {
  const nlohmann::json& j = open_envelope(doc, "rdp_filter");
  FilterState state(RenyiOrder(internal::get_number(j, "order")),
                    internal::get_number(j, "budget"));
  state.consumed = internal::get_number(j, "consumed");
  state.history_len =
      static_cast<std::size_t>(internal::get_count(j, "history_len"));
  if (!(state.consumed >= 0.0) || state.consumed > state.budget) {
    throw InvariantError("snapshot: filter consumed outside [0, budget]");
  }
  return state;
}

// ---------------------------------------------------------------------------
// DP (eps, delta) filter

inline nlohmann::json dp_filter_state_to_json(const DpFilterState& state) {
  nlohmann::json inner;
  inner["eps_budget"] = state.eps_budget;
  inner["delta_budget"] = state.delta_budget;
  inner["consumed_half_sq"] = state.consumed_half_sq;
  inner["history_len"] = state.history_len;
  return snapshot_envelope("dp_filter", std::move(inner));
}

inline DpFilterState dp_filter_state_from_json(const nlohmann::json& doc) {
  const nlohmann::json& j = open_envelope(doc, "dp_filter");
  DpFilterState state(internal::get_number(j, "eps_budget"),
                      internal::get_number(j, "delta_budget"));
  state.consumed_half_sq = internal::get_number(j, "consumed_half_sq");
  state.history_len =
      static_cast<std::size_t>(internal::get_count(j, "history_len"));
  if (!(state.consumed_half_sq >= 0.0) ||
      state.consumed_half_sq > state.zcdp_budget) {
    throw InvariantError(
        "snapshot: dp filter consumption outside [0, zcdp budget]");
  }
  return state;
}

// ---------------------------------------------------------------------------
// Individual ledger

inline nlohmann::json ledger_to_json(const IndividualLedger& ledger) {
  nlohmann::json inner;
  inner["order"] = ledger.order().alpha;
  inner["budget"] = ledger.budget();
  inner["mode"] = internal::mode_name(ledger.mode());
  inner["cumulative"] = ledger.cumulative_losses();
  inner["active"] = ledger.active_flags();
  inner["round"] = ledger.round();
  return snapshot_envelope("individual_ledger", std::move(inner));
}

inline IndividualLedger ledger_from_json(const nlohmann::json& doc) {
  const nlohmann::json& j = open_envelope(doc, "individual_ledger");
  return IndividualLedger::from_state(
      RenyiOrder(internal::get_number(j, "order")),
      internal::get_number(j, "budget"),
      internal::mode_from_name(internal::get_string(j, "mode")),
      internal::get_number_array(j, "cumulative"),
      internal::get_bool_array(j, "active"),
      static_cast<std::size_t>(internal::get_count(j, "round")));
}

// ---------------------------------------------------------------------------
// Odometers

inline nlohmann::json odometer_state_to_inner_json(const OdometerState& state) {
  nlohmann::json j;
  j["delta"] = state.delta;
  j["bound"] = state.bound;
  j["segment_consumed"] = state.segment_consumed;
  j["round"] = state.round;
  j["restart_round"] = state.restart_round;
  return j;
}

inline OdometerState odometer_state_from_inner_json(const nlohmann::json& j) {
  OdometerState state(internal::get_number(j, "delta"));
  state.bound = internal::get_number(j, "bound");
  state.segment_consumed = internal::get_number(j, "segment_consumed");
  state.round = static_cast<std::size_t>(internal::get_count(j, "round"));
  state.restart_round =
      static_cast<std::size_t>(internal::get_count(j, "restart_round"));
  if (!(state.bound >= state.delta) ||
      !(state.segment_consumed >= 0.0) ||
      state.segment_consumed > state.delta ||
      state.restart_round > state.round) {
    throw InvariantError("snapshot: odometer state violates its invariants");
  }
  return state;
}

inline nlohmann::json odometer_state_to_json(const OdometerState& state) {
  return snapshot_envelope("odometer", odometer_state_to_inner_json(state));
}

inline OdometerState odometer_state_from_json(const nlohmann::json& doc) {
  return odometer_state_from_inner_json(open_envelope(doc, "odometer"));
}

inline nlohmann::json individual_odometers_to_json(
    const IndividualOdometers& odometers) {
  nlohmann::json inner;
  inner["mode"] = internal::mode_name(odometers.mode);
  nlohmann::json states = nlohmann::json::array();
  for (const OdometerState& state : odometers.states) {
    states.push_back(odometer_state_to_inner_json(state));
  }
  inner["states"] = std::move(states);
  return snapshot_envelope("individual_odometers", std::move(inner));
}

inline IndividualOdometers individual_odometers_from_json(
    const nlohmann::json& doc) {
  const nlohmann::json& j = open_envelope(doc, "individual_odometers");
  const nlohmann::json& states = internal::require_field(j, "states");
  if (!states.is_array() || states.empty()) {
    throw ParameterError("snapshot: 'states' must be a nonempty array");
  }
  const nlohmann::json& first = states.front();
  IndividualOdometers odometers(
      internal::get_number(first, "delta"), states.size(),
      internal::mode_from_name(internal::get_string(j, "mode")));
  for (std::size_t i = 0; i < states.size(); ++i) {
    odometers.states[i] = odometer_state_from_inner_json(states[i]);
    if (odometers.states[i].delta != odometers.states[0].delta) {
      throw InvariantError(
          "snapshot: individual odometers must share one delta");
    }
  }
  return odometers;
}

// ---------------------------------------------------------------------------
// Query session

inline nlohmann::json query_session_to_json(const QuerySession& session) {
  nlohmann::json inner;
  inner["sigma"] = session.sigma();
  inner["rng"] = rng_to_json(session.rng());
  inner["ledger"] = ledger_to_json(session.ledger());
  return snapshot_envelope("query_session", std::move(inner));
}

inline QuerySession query_session_from_json(const nlohmann::json& doc) {
  const nlohmann::json& j = open_envelope(doc, "query_session");
  return QuerySession::from_state(
      ledger_from_json(internal::require_field(j, "ledger")),
      internal::get_number(j, "sigma"),
      rng_from_json(internal::require_field(j, "rng")));
}

// ---------------------------------------------------------------------------
// Oracle validation report (write-only artifact)

inline nlohmann::json validation_report_to_json(
    const FilterValidationReport& report) {
  nlohmann::json j;
  j["valid"] = report.valid;
  j["alpha"] = report.alpha;
  j["budget"] = report.budget;
  j["max_divergence"] = report.max_divergence;
  j["min_slack"] = report.min_slack;
  j["pairs_checked"] = report.pairs_checked;
  j["violations"] = report.violations;
  return j;
}

}  // namespace ipa
