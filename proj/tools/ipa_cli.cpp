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
// Command-line front end for the accounting library. Subcommands:
//
//   convert   batch RDP/DP/zCDP parameter conversions        -> convert.csv
//   filter    run a loss stream through an RDP or DP filter  -> filter_decisions.csv
//   odometer  per-point running loss bounds for a stream     -> odometer_bounds.csv (+histogram)
//   queries   scripted adaptive query session                -> query_answers.csv (+summary)
//   gd        private gradient descent, plain or filtered    -> gd_trace.csv (+summary)
//   validate  exact small-instance checks of the guarantees  -> validate.json
//
// Every subcommand takes a JSON config (--config) with a schema_version
// field; `validate` runs with built-in defaults when no config is given.
// Artifacts land in --output-dir, the IPA_OUTPUT_DIR environment variable,
// or the working directory, in that order of preference. All configuration
// is validated and all computation finishes before the first artifact byte
// is written, so a failing run leaves no partial outputs.
//
// Exit codes: 0 success, 1 runtime/validation failure, 2 configuration
// error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ipa/core.hpp"
#include "ipa/data.hpp"
#include "ipa/dpgd.hpp"
#include "ipa/error.hpp"
#include "ipa/filters.hpp"
#include "ipa/io.hpp"
#include "ipa/ledger.hpp"
#include "ipa/oracle.hpp"
#include "ipa/query_engine.hpp"
#include "ipa/rng.hpp"
#include "ipa/serialize.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

using ipa::internal::get_count;
using ipa::internal::get_number;
using ipa::internal::get_number_array;
using ipa::internal::get_string;
using ipa::internal::require_field;

// ---------------------------------------------------------------------------
// Config plumbing

json load_config(const std::string& path) {
  std::ifstream file(path);
  if (!file) {
    throw ipa::ParameterError("config: cannot open '" + path + "'");
  }
  json config = json::parse(file);  // parse errors map to exit code 2
  if (!config.is_object()) {
    throw ipa::ParameterError("config: top level must be a JSON object");
  }
  const std::uint64_t version = get_count(config, "schema_version");
  if (version != static_cast<std::uint64_t>(ipa::kSnapshotSchemaVersion)) {
    throw ipa::ParameterError("config: unsupported schema_version " +
                              std::to_string(version));
  }
  return config;
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* name : allowed) {
      if (it.key() == name) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ipa::ParameterError("config: unknown key '" + it.key() + "' in " +
                                where);
    }
  }
}

double get_number_or(const json& j, const std::string& name, double fallback) {
  return j.contains(name) ? get_number(j, name) : fallback;
}

std::uint64_t get_count_or(const json& j, const std::string& name,
                           std::uint64_t fallback) {
  return j.contains(name) ? get_count(j, name) : fallback;
}

bool get_bool_or(const json& j, const std::string& name, bool fallback) {
  if (!j.contains(name)) return fallback;
  const json& field = j.at(name);
  if (!field.is_boolean()) {
    throw ipa::ParameterError("config: field '" + name +
                              "' must be a boolean");
  }
  return field.get<bool>();
}

json load_snapshot_file(const std::string& path) {
  std::ifstream file(path);
  if (!file) {
    throw ipa::ParameterError("snapshot: cannot open '" + path + "'");
  }
  return json::parse(file);
}

// ---------------------------------------------------------------------------
// Artifact plumbing

struct OutputDir {
  fs::path root;

  fs::path resolve(const std::string& name) const {
    const fs::path p(name);
    return p.is_absolute() ? p : root / p;
  }
};

OutputDir resolve_output_dir(const std::string& flag) {
  if (!flag.empty()) return {fs::path(flag)};
  const char* env = std::getenv("IPA_OUTPUT_DIR");
  if (env != nullptr && *env != '\0') return {fs::path(env)};
  return {fs::path(".")};
}

void write_json_file(const fs::path& path, const json& doc) {
  fs::create_directories(path.parent_path().empty() ? "."
                                                    : path.parent_path());
  std::ofstream file(path);
  if (!file) {
    throw ipa::ParameterError("artifact: cannot open '" + path.string() +
                              "' for writing");
  }
  file << doc.dump(2) << '\n';
  if (!file.good()) {
    throw ipa::ParameterError("artifact: write to '" + path.string() +
                              "' failed");
  }
}

void write_csv_file(const fs::path& path,
                    const std::vector<std::vector<std::string>>& rows) {
  fs::create_directories(path.parent_path().empty() ? "."
                                                    : path.parent_path());
  ipa::CsvWriter writer(path.string());
  for (const std::vector<std::string>& row : rows) writer.row(row);
  writer.close();
}

std::string fmt(double value) { return ipa::format_double(value); }

// ---------------------------------------------------------------------------
// convert

int run_convert(const json& config, const OutputDir& out) {
  check_keys(config, {"schema_version", "conversions"}, "convert config");
  const json& conversions = require_field(config, "conversions");
  if (!conversions.is_array() || conversions.empty()) {
    throw ipa::ParameterError(
        "config: 'conversions' must be a nonempty array");
  }

  std::vector<std::vector<std::string>> rows;
  rows.push_back({"index", "kind", "result", "best_alpha"});
  std::size_t index = 0;
  for (const json& entry : conversions) {
    const std::string kind = get_string(entry, "kind");
    std::string result;
    std::string best_alpha;
    if (kind == "rdp_to_dp") {
      check_keys(entry, {"kind", "alpha", "rho", "delta"}, "conversion");
      const ipa::RdpPoint point(ipa::RenyiOrder(get_number(entry, "alpha")),
                                get_number(entry, "rho"));
      result = fmt(ipa::rdp_to_dp(point, get_number(entry, "delta")).epsilon);
    } else if (kind == "best_dp") {
      check_keys(entry, {"kind", "slope", "steps", "sigma", "delta"},
                 "conversion");
      double slope = 0.0;
      if (entry.contains("slope")) {
        slope = get_number(entry, "slope");
      } else {
        const double sigma = get_number(entry, "sigma");
        slope = static_cast<double>(get_count(entry, "steps")) /
                (2.0 * sigma * sigma);
      }
      const ipa::BestDpResult best = ipa::best_dp_over_curve(
          ipa::RdpCurve::linear(slope, ipa::default_alpha_grid()),
          get_number(entry, "delta"));
      result = fmt(best.point.epsilon);
      best_alpha = fmt(best.order);
    } else if (kind == "zcdp_budget") {
      check_keys(entry, {"kind", "eps", "delta"}, "conversion");
      result = fmt(ipa::zcdp_budget_for_dp(get_number(entry, "eps"),
                                           get_number(entry, "delta")));
    } else if (kind == "fixed_rate") {
      check_keys(entry, {"kind", "steps", "eps", "delta"}, "conversion");
      result = fmt(ipa::fixed_rate_equivalence(
          static_cast<std::size_t>(get_count(entry, "steps")),
          get_number(entry, "eps"), get_number(entry, "delta")));
    } else {
      throw ipa::ParameterError("config: unknown conversion kind '" + kind +
                                "'");
    }
    rows.push_back({std::to_string(index), kind, result, best_alpha});
    ++index;
  }

  write_csv_file(out.resolve("convert.csv"), rows);
  return 0;
}

// ---------------------------------------------------------------------------
// filter

int run_filter(const json& config, const OutputDir& out) {
  check_keys(config,
             {"schema_version", "filter", "stream", "snapshot_in",
              "snapshot_out"},
             "filter config");
  const std::vector<double> stream = get_number_array(config, "stream");
  const bool from_snapshot = config.contains("snapshot_in");
  if (from_snapshot == config.contains("filter")) {
    throw ipa::ParameterError(
        "config: provide exactly one of 'filter' and 'snapshot_in'");
  }

  std::string type;
  json snapshot;
  if (from_snapshot) {
    snapshot = load_snapshot_file(get_string(config, "snapshot_in"));
    const std::string kind = get_string(snapshot, "kind");
    if (kind == "rdp_filter") {
      type = "rdp";
    } else if (kind == "dp_filter") {
      type = "dp";
    } else {
      throw ipa::ParameterError("snapshot: '" + kind +
                                "' is not a filter snapshot");
    }
  } else {
    const json& filter = require_field(config, "filter");
    type = get_string(filter, "type");
  }

  std::vector<std::vector<std::string>> rows;
  rows.push_back({"round", "loss", "decision", "consumed"});
  json final_snapshot;

  if (type == "rdp") {
    ipa::FilterState state = [&]() {
      if (from_snapshot) return ipa::filter_state_from_json(snapshot);
      const json& filter = config.at("filter");
      check_keys(filter, {"type", "alpha", "budget"}, "filter block");
      return ipa::FilterState(ipa::RenyiOrder(get_number(filter, "alpha")),
                              get_number(filter, "budget"));
    }();
    for (const double rho : stream) {
      const auto [decision, next] = ipa::rdp_filter_check(state, rho);
      const bool halt = decision == ipa::FilterDecision::kHalt;
      rows.push_back({std::to_string(state.history_len + 1), fmt(rho),
                      halt ? "halt" : "continue",
                      fmt(halt ? state.consumed : next.consumed)});
      if (halt) break;
      state = next;
    }
    final_snapshot = ipa::filter_state_to_json(state);
  } else if (type == "dp") {
    ipa::DpFilterState state = [&]() {
      if (from_snapshot) return ipa::dp_filter_state_from_json(snapshot);
      const json& filter = config.at("filter");
      check_keys(filter, {"type", "eps", "delta"}, "filter block");
      return ipa::DpFilterState(get_number(filter, "eps"),
                                get_number(filter, "delta"));
    }();
    for (const double eps : stream) {
      const auto [decision, next] = ipa::dp_filter_check(state, eps);
      const bool halt = decision == ipa::FilterDecision::kHalt;
      rows.push_back({std::to_string(state.history_len + 1), fmt(eps),
                      halt ? "halt" : "continue",
                      fmt(halt ? state.consumed_half_sq
                               : next.consumed_half_sq)});
      if (halt) break;
      state = next;
    }
    final_snapshot = ipa::dp_filter_state_to_json(state);
  } else {
    throw ipa::ParameterError("config: filter type must be 'rdp' or 'dp'");
  }

  write_csv_file(out.resolve("filter_decisions.csv"), rows);
  if (config.contains("snapshot_out")) {
    write_json_file(out.resolve(get_string(config, "snapshot_out")),
                    final_snapshot);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// odometer

int run_odometer(const json& config, const OutputDir& out) {
  check_keys(config,
             {"schema_version", "delta", "stream", "streams", "mode",
              "snapshot_in", "snapshot_out"},
             "odometer config");
  if (config.contains("stream") == config.contains("streams")) {
    throw ipa::ParameterError(
        "config: provide exactly one of 'stream' and 'streams'");
  }

  // Streams are per point: streams[i][t] is point i's loss in round t.
  std::vector<std::vector<double>> streams;
  if (config.contains("stream")) {
    streams.push_back(get_number_array(config, "stream"));
  } else {
    const json& array = require_field(config, "streams");
    if (!array.is_array() || array.empty()) {
      throw ipa::ParameterError("config: 'streams' must be a nonempty array");
    }
    for (std::size_t i = 0; i < array.size(); ++i) {
      const json wrapper = json{{"row", array[i]}};
      streams.push_back(get_number_array(wrapper, "row"));
      if (streams.back().size() != streams.front().size()) {
        throw ipa::ParameterError(
            "config: all per-point streams must have equal length");
      }
    }
  }
  const std::size_t n_points = streams.size();
  const std::size_t n_rounds = streams.front().size();
  if (n_rounds == 0) {
    throw ipa::ParameterError("config: streams must contain at least one round");
  }

  ipa::IndividualOdometers odometers = [&]() {
    if (config.contains("snapshot_in")) {
      if (config.contains("delta") || config.contains("mode")) {
        throw ipa::ParameterError(
            "config: 'delta' and 'mode' come from the snapshot when "
            "'snapshot_in' is set");
      }
      ipa::IndividualOdometers restored = ipa::individual_odometers_from_json(
          load_snapshot_file(get_string(config, "snapshot_in")));
      if (restored.states.size() != n_points) {
        throw ipa::ParameterError(
            "snapshot: odometer point count does not match the streams");
      }
      return restored;
    }
    const std::string mode_name =
        config.contains("mode") ? get_string(config, "mode") : "individual";
    return ipa::IndividualOdometers(get_number(config, "delta"), n_points,
                                    ipa::internal::mode_from_name(mode_name));
  }();

  std::vector<std::vector<std::string>> rows;
  rows.push_back({"round", "point_id", "loss", "bound"});
  for (std::size_t t = 0; t < n_rounds; ++t) {
    ipa::RoundProposal proposal;
    proposal.losses.reserve(n_points);
    for (std::size_t i = 0; i < n_points; ++i) {
      proposal.losses.push_back(streams[i][t]);
    }
    odometers = ipa::individual_odometer_update(odometers, proposal);
    for (std::size_t i = 0; i < n_points; ++i) {
      rows.push_back({std::to_string(odometers.states[i].round),
                      std::to_string(i), fmt(proposal.losses[i]),
                      fmt(odometers.states[i].bound)});
    }
  }

  // Histogram of final per-point bounds, in units of delta.
  std::map<double, std::size_t> histogram;
  for (const ipa::OdometerState& state : odometers.states) {
    histogram[state.bound] += 1;
  }
  std::vector<std::vector<std::string>> histogram_rows;
  histogram_rows.push_back({"bound", "points"});
  for (const auto& [bound, count] : histogram) {
    histogram_rows.push_back({fmt(bound), std::to_string(count)});
  }

  write_csv_file(out.resolve("odometer_bounds.csv"), rows);
  write_csv_file(out.resolve("odometer_histogram.csv"), histogram_rows);
  if (config.contains("snapshot_out")) {
    write_json_file(out.resolve(get_string(config, "snapshot_out")),
                    ipa::individual_odometers_to_json(odometers));
  }
  return 0;
}

// ---------------------------------------------------------------------------
// queries

int run_queries(const json& config, const OutputDir& out) {
  check_keys(config,
             {"schema_version", "n_points", "alpha", "budget", "sigma",
              "seed", "queries", "probe", "snapshot_in", "snapshot_out"},
             "queries config");
  const json& queries = require_field(config, "queries");
  if (!queries.is_array()) {
    throw ipa::ParameterError("config: 'queries' must be an array of rounds");
  }

  ipa::QuerySession session = [&]() {
    if (config.contains("snapshot_in")) {
      for (const char* key : {"n_points", "alpha", "budget", "sigma", "seed"}) {
        if (config.contains(key)) {
          throw ipa::ParameterError(std::string("config: '") + key +
                                    "' comes from the snapshot when "
                                    "'snapshot_in' is set");
        }
      }
      return ipa::query_session_from_json(
          load_snapshot_file(get_string(config, "snapshot_in")));
    }
    return ipa::QuerySession(
        static_cast<std::size_t>(get_count(config, "n_points")),
        ipa::RenyiOrder(get_number(config, "alpha")),
        get_number(config, "budget"), get_number(config, "sigma"),
        get_count(config, "seed"));
  }();

  json summary;
  summary["schema_version"] = ipa::kSnapshotSchemaVersion;
  summary["norm_budget"] = session.norm_budget();
  summary["universal_warmup_rounds"] = session.universal_warmup_rounds();

  // The accuracy probe re-simulates from the current state and must run
  // before the scripted rounds (its guarantee needs every point active).
  if (config.contains("probe")) {
    const json& probe = config.at("probe");
    check_keys(probe, {"query", "trials", "delta"}, "probe block");
    const json wrapper = json{{"query", require_field(probe, "query")}};
    const double coverage = ipa::accuracy_probe(
        session, get_number_array(wrapper, "query"),
        static_cast<std::size_t>(get_count(probe, "trials")),
        get_number(probe, "delta"));
    summary["probe_coverage"] = coverage;
    summary["probe_delta"] = get_number(probe, "delta");
  }

  std::vector<std::vector<std::string>> rows;
  rows.push_back({"round", "answer", "active_count"});
  for (const json& entry : queries) {
    const json wrapper = json{{"q", entry}};
    const ipa::QueryAnswer answer =
        session.answer_query(get_number_array(wrapper, "q"));
    rows.push_back({std::to_string(answer.round + 1), fmt(answer.answer),
                    std::to_string(answer.active_count)});
  }
  summary["rounds_run"] = queries.size();
  summary["final_active_count"] = session.ledger().active_count();

  write_csv_file(out.resolve("query_answers.csv"), rows);
  write_json_file(out.resolve("query_summary.json"), summary);
  if (config.contains("snapshot_out")) {
    write_json_file(out.resolve(get_string(config, "snapshot_out")),
                    ipa::query_session_to_json(session));
  }
  return 0;
}

// ---------------------------------------------------------------------------
// gd

ipa::Dataset load_gd_dataset(const json& dataset) {
  check_keys(dataset, {"path", "synthetic"}, "dataset block");
  if (dataset.contains("path") == dataset.contains("synthetic")) {
    throw ipa::ParameterError(
        "config: dataset needs exactly one of 'path' and 'synthetic'");
  }
  if (dataset.contains("path")) {
    return ipa::load_csv_dataset(get_string(dataset, "path"));
  }
  const json& synthetic = dataset.at("synthetic");
  check_keys(synthetic, {"n", "d", "separation", "seed"}, "synthetic block");
  return ipa::make_blobs(
      static_cast<std::size_t>(get_count(synthetic, "n")),
      static_cast<std::size_t>(get_count(synthetic, "d")),
      get_number(synthetic, "separation"), get_count(synthetic, "seed"));
}

int run_gd(const json& config, const OutputDir& out) {
  check_keys(config,
             {"schema_version", "mode", "dataset", "loss", "learning_rate",
              "sigma", "clip_c", "steps", "norm_budget", "seed", "delta",
              "zero_noise", "parallel", "test_fraction"},
             "gd config");

  const std::string mode_name = get_string(config, "mode");
  ipa::GdMode mode;
  if (mode_name == "plain") {
    mode = ipa::GdMode::kPlain;
  } else if (mode_name == "filtered") {
    mode = ipa::GdMode::kFiltered;
  } else {
    throw ipa::ParameterError("config: mode must be 'plain' or 'filtered'");
  }

  ipa::LossSpec loss;
  if (config.contains("loss")) {
    const json& block = config.at("loss");
    check_keys(block, {"kind", "regularization"}, "loss block");
    const std::string kind = get_string(block, "kind");
    if (kind == "logistic") {
      loss.kind = ipa::LossKind::kLogistic;
    } else if (kind == "squared") {
      loss.kind = ipa::LossKind::kSquared;
    } else {
      throw ipa::ParameterError("config: loss kind must be 'logistic' or "
                                "'squared'");
    }
    loss.regularization = get_number_or(block, "regularization", 0.0);
  }

  ipa::GdConfig gd;
  gd.learning_rate = get_number(config, "learning_rate");
  gd.sigma = get_number(config, "sigma");
  gd.clip_c = get_number(config, "clip_c");
  gd.steps = static_cast<std::size_t>(get_count(config, "steps"));
  gd.norm_budget = get_number_or(config, "norm_budget", 0.0);
  gd.seed = get_count_or(config, "seed", 0u);
  gd.zero_noise = get_bool_or(config, "zero_noise", false);
  gd.parallel = get_bool_or(config, "parallel", false);
  ipa::validate_gd_config(gd, mode);

  const double delta = get_number_or(config, "delta", 1e-5);
  const double test_fraction = get_number_or(config, "test_fraction", 0.0);

  const ipa::Dataset full = load_gd_dataset(require_field(config, "dataset"));
  const auto [train, test] = ipa::train_test_split(full, test_fraction);

  const ipa::GdTrace trace = ipa::run_private_gd(gd, train, loss, mode);

  std::vector<std::vector<std::string>> rows;
  rows.push_back({"round", "loss", "accuracy", "active_count", "max_spent"});
  for (const ipa::GdRound& round : trace.rounds) {
    rows.push_back({std::to_string(round.round),
                    fmt(ipa::mean_loss(loss, round.theta, train)),
                    fmt(ipa::classification_accuracy(loss, round.theta, train)),
                    std::to_string(round.active_count),
                    fmt(round.max_spent())});
  }

  const ipa::BestDpResult best =
      ipa::best_dp_over_curve(ipa::privacy_report(gd, mode), delta);

  json summary;
  summary["schema_version"] = ipa::kSnapshotSchemaVersion;
  summary["mode"] = mode_name;
  summary["rounds"] = trace.rounds.size();
  summary["aborted"] = trace.aborted;
  summary["diagnostic"] = trace.diagnostic;
  summary["delta"] = delta;
  summary["epsilon"] = best.point.epsilon;
  summary["best_alpha"] = best.order;
  summary["final_loss"] = ipa::mean_loss(loss, trace.theta_final, train);
  summary["final_accuracy"] =
      ipa::classification_accuracy(loss, trace.theta_final, train);
  if (test.n() > 0) {
    summary["test_loss"] = ipa::mean_loss(loss, trace.theta_final, test);
    summary["test_accuracy"] =
        ipa::classification_accuracy(loss, trace.theta_final, test);
  }
  summary["theta_final"] = trace.theta_final;

  write_csv_file(out.resolve("gd_trace.csv"), rows);
  write_json_file(out.resolve("gd_summary.json"), summary);

  if (trace.aborted) {
    std::cerr << "ipa gd: run aborted: " << trace.diagnostic << '\n';
    return 1;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// validate

int run_validate(const json& config, const OutputDir& out) {
  check_keys(config,
             {"schema_version", "seed", "trials", "individual_trials",
              "budgets", "alphas"},
             "validate config");
  const std::uint64_t seed = get_count_or(config, "seed", 1u);
  const std::size_t trials =
      static_cast<std::size_t>(get_count_or(config, "trials", 40u));
  const std::size_t individual_trials =
      static_cast<std::size_t>(get_count_or(config, "individual_trials", 25u));
  std::vector<double> budgets = {0.1, 0.5, 1.0};
  std::vector<double> alphas = {1.5, 2.0, 4.0, 8.0};
  if (config.contains("budgets")) budgets = get_number_array(config, "budgets");
  if (config.contains("alphas")) alphas = get_number_array(config, "alphas");
  if (budgets.empty() || alphas.empty()) {
    throw ipa::ParameterError("config: budgets and alphas must be nonempty");
  }

  std::size_t total_violations = 0;
  json checks;

  // Adaptive plans driven through the budget filter must compose within
  // budget, exactly.
  {
    ipa::Rng rng(seed);
    std::size_t cases = 0;
    std::size_t violations = 0;
    double min_slack = std::numeric_limits<double>::infinity();
    for (std::size_t trial = 0; trial < trials; ++trial) {
      const ipa::AdaptivePlan plan = ipa::random_adaptive_plan(rng);
      for (const double budget : budgets) {
        for (const double alpha : alphas) {
          const ipa::FilterValidationReport report =
              ipa::validate_filter_budget(plan, ipa::RenyiOrder(alpha),
                                          budget);
          ++cases;
          min_slack = std::min(min_slack, report.min_slack);
          if (!report.valid) ++violations;
        }
      }
    }
    checks["adaptive_filter"] = {{"cases", cases},
                                 {"violations", violations},
                                 {"min_slack", min_slack}};
    total_violations += violations;
  }

  // Per-point filtering must hold in both removal directions for every
  // point.
  {
    ipa::Rng rng(ipa::mix_seed(seed, 2u));
    std::size_t cases = 0;
    std::size_t violations = 0;
    double min_slack = std::numeric_limits<double>::infinity();
    for (std::size_t trial = 0; trial < individual_trials; ++trial) {
      const ipa::IndividualPlan plan = ipa::random_individual_plan(rng);
      for (const double budget : budgets) {
        for (const double alpha : alphas) {
          const ipa::IndividualValidationReport report =
              ipa::validate_individual_filter_budget(
                  plan, ipa::RenyiOrder(alpha), budget);
          ++cases;
          min_slack = std::min(min_slack, report.min_slack);
          if (!report.valid) ++violations;
        }
      }
    }
    checks["individual_filter"] = {{"cases", cases},
                                   {"violations", violations},
                                   {"min_slack", min_slack}};
    total_violations += violations;
  }

  // The pay-as-you-go bound must fail on adaptive two-round plans whenever
  // the first round actually leaks, and must hold in the degenerate case.
  {
    std::size_t instances = 0;
    std::size_t violations = 0;
    for (const double alpha : {1.5, 2.0, 4.0, 8.0, 16.0}) {
      for (const double bias : {0.6, 0.7, 0.8, 0.9}) {
        const ipa::OdometerWitness witness =
            ipa::odometer_counterexample(ipa::RenyiOrder(alpha), bias);
        ++instances;
        if (!witness.violated || witness.margin <= 1e-6) ++violations;
      }
      const ipa::OdometerWitness degenerate =
          ipa::odometer_counterexample(ipa::RenyiOrder(alpha), 0.5);
      ++instances;
      if (degenerate.violated) ++violations;
    }
    checks["odometer_counterexample"] = {{"instances", instances},
                                         {"violations", violations}};
    total_violations += violations;
  }

  // Quadrature over the Gaussian loss integrand must agree with the closed
  // form.
  {
    std::size_t points = 0;
    std::size_t violations = 0;
    double max_abs_error = 0.0;
    for (const double gap : {0.5, 1.0, 2.0}) {
      for (const double sigma : {0.5, 1.0, 2.0}) {
        for (const double alpha : {1.0, 2.0, 4.0, 8.0}) {
          const double numeric = ipa::numeric_gaussian_divergence(
              gap, 0.0, sigma, ipa::RenyiOrder(alpha));
          const double closed =
              ipa::gaussian_individual_rdp(ipa::RenyiOrder(alpha), 1.0, gap,
                                           sigma)
                  .rho;
          ++points;
          const double error = std::abs(numeric - closed);
          max_abs_error = std::max(max_abs_error, error);
          if (!(error <= 1e-6)) ++violations;
        }
      }
    }
    checks["gaussian_quadrature"] = {{"points", points},
                                     {"violations", violations},
                                     {"max_abs_error", max_abs_error}};
    total_violations += violations;
  }

  json report;
  report["schema_version"] = ipa::kSnapshotSchemaVersion;
  report["seed"] = seed;
  report["violations"] = total_violations;
  report["checks"] = checks;
  write_json_file(out.resolve("validate.json"), report);

  if (total_violations > 0) {
    std::cerr << "ipa validate: " << total_violations
              << " violation(s); see validate.json\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ipa: adaptive privacy accounting toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_flag;

  const std::vector<std::pair<std::string, std::string>> subcommands = {
      {"convert", "Batch RDP/DP/zCDP parameter conversions"},
      {"filter", "Run a loss stream through a privacy filter"},
      {"odometer", "Per-point running loss bounds for a stream"},
      {"queries", "Scripted adaptive query session"},
      {"gd", "Private gradient descent, plain or filtered"},
      {"validate", "Exact small-instance checks of the accounting guarantees"},
  };
  for (const auto& [name, description] : subcommands) {
    CLI::App* sub = app.add_subcommand(name, description);
    CLI::Option* config_opt =
        sub->add_option("--config", config_path, "JSON configuration file");
    if (name != "validate") config_opt->required();
    sub->add_option("--output-dir", output_flag,
                    "Artifact directory (default: $IPA_OUTPUT_DIR or '.')");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const OutputDir out = resolve_output_dir(output_flag);
    const std::string name = app.get_subcommands().front()->get_name();
    json config;
    if (!config_path.empty()) {
      config = load_config(config_path);
    } else {
      config = json{{"schema_version", ipa::kSnapshotSchemaVersion}};
    }
    if (name == "convert") return run_convert(config, out);
    if (name == "filter") return run_filter(config, out);
    if (name == "odometer") return run_odometer(config, out);
    if (name == "queries") return run_queries(config, out);
    if (name == "gd") return run_gd(config, out);
    if (name == "validate") return run_validate(config, out);
    std::cerr << "ipa: unknown subcommand '" << name << "'\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "ipa: configuration error: " << e.what() << '\n';
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "ipa: configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "ipa: failure: " << e.what() << '\n';
    return 1;
  }
}
