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
// Exact small-instance validation of the composition guarantees.
//
// Mechanisms here output symbols from a finite alphabet and may condition
// on the full history of previous outputs, so the joint distribution of an
// adaptive composition can be enumerated path by path with no sampling.
// Per-round losses are computed from the exact conditional moments of the
// likelihood ratio -- never from a closed form -- so adversarial plans
// cannot under-report what they spend. The filtered runs drive the real
// FilterState / IndividualLedger objects from this library; the claims
// being validated are therefore claims about the production code paths.
//
// Also provides the two-round construction showing that the naive running
// sum of realized losses is not a valid odometer, and a quadrature oracle
// for the Gaussian divergence closed form.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ipa/core.hpp"
#include "ipa/error.hpp"
#include "ipa/filters.hpp"
#include "ipa/ledger.hpp"
#include "ipa/rng.hpp"

namespace ipa {

inline constexpr std::size_t kMaxAlphabet = 16;
inline constexpr std::size_t kMaxRounds = 5;
inline constexpr double kBudgetCheckTolerance = 1e-9;

// One adaptive round: a distribution over a finite alphabet for every
// (history prefix, dataset id) pair.
class DiscreteMechanism {
 public:
  using Table = std::function<DiscreteDistribution(
      const std::vector<int>& prefix, std::size_t dataset_id)>;

  DiscreteMechanism(std::size_t alphabet_size, Table table)
      : alphabet_size_(alphabet_size), table_(std::move(table)) {
    if (alphabet_size_ < 1 || alphabet_size_ > kMaxAlphabet) {
      throw ParameterError("DiscreteMechanism: alphabet size must be in [1, " +
                           std::to_string(kMaxAlphabet) + "]");
    }
    if (!table_) {
      throw ParameterError("DiscreteMechanism: missing distribution table");
    }
  }

  std::size_t alphabet_size() const { return alphabet_size_; }

  DiscreteDistribution distribution(const std::vector<int>& prefix,
                                    std::size_t dataset_id) const {
    DiscreteDistribution dist = table_(prefix, dataset_id);
    if (dist.size() != alphabet_size_) {
      throw InvariantError(
          "DiscreteMechanism: table returned a distribution over " +
          std::to_string(dist.size()) + " symbols, expected " +
          std::to_string(alphabet_size_));
    }
    return dist;
  }

 private:
  std::size_t alphabet_size_;
  Table table_;
};

// A Renyi filter to wire into a plan: the composed run stops at the first
// round whose exact loss would push the running total past the budget.
struct PlanFilter {
  RenyiOrder order;
  double budget;
};

// An adaptive composition over a fixed list of rounds and dataset ids
// {0, ..., n_datasets-1}.
struct AdaptivePlan {
  std::size_t n_datasets = 2;
  std::vector<DiscreteMechanism> rounds;
  std::optional<PlanFilter> filter;
};

// Exact joint distribution over output sequences. With a filter wired in,
// paths that halt early are shorter than rounds().
struct PathTable {
  std::map<std::vector<int>, double> probabilities;

  double total() const {
    double sum = 0.0;
    for (const auto& [path, prob] : probabilities) sum += prob;
    return sum;
  }
};

namespace internal {

inline void validate_plan(const AdaptivePlan& plan) {
  if (plan.n_datasets < 1) {
    throw ParameterError("AdaptivePlan: need at least one dataset");
  }
  if (plan.rounds.empty()) {
    throw ParameterError("AdaptivePlan: need at least one round");
  }
  if (plan.rounds.size() > kMaxRounds) {
    throw ParameterError("AdaptivePlan: at most " +
                         std::to_string(kMaxRounds) + " rounds supported");
  }
  double paths = 1.0;
  for (const DiscreteMechanism& round : plan.rounds) {
    paths *= static_cast<double>(round.alphabet_size());
  }
  const double cap = std::pow(static_cast<double>(kMaxAlphabet),
                              static_cast<double>(kMaxRounds));
  if (paths > cap) {
    throw ParameterError("AdaptivePlan: path count exceeds enumeration cap");
  }
}

// The exact per-round loss at a given history: the largest conditional
// alpha-moment of the likelihood ratio over all ordered dataset pairs,
// which equals the largest pairwise directed divergence.
inline double exact_step_loss(const AdaptivePlan& plan, std::size_t round,
                              const std::vector<int>& prefix,
                              RenyiOrder order) {
  std::vector<DiscreteDistribution> dists;
  dists.reserve(plan.n_datasets);
  for (std::size_t d = 0; d < plan.n_datasets; ++d) {
    dists.push_back(plan.rounds[round].distribution(prefix, d));
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < dists.size(); ++i) {
    for (std::size_t j = 0; j < dists.size(); ++j) {
      if (i == j) continue;
      worst = std::max(worst, renyi_divergence(dists[i], dists[j], order));
    }
  }
  return worst;
}

}  // namespace internal

// Enumerates the exact output distribution of the plan on one dataset. The
// chain rule is applied literally: the probability of a path is the product
// of the conditional probabilities of its symbols.
inline PathTable exact_joint_distribution(const AdaptivePlan& plan,
                                          std::size_t dataset_id) {
  internal::validate_plan(plan);
  if (dataset_id >= plan.n_datasets) {
    throw ParameterError("exact_joint_distribution: dataset id out of range");
  }

  PathTable table;
  std::optional<FilterState> filter;
  if (plan.filter.has_value()) {
    filter.emplace(plan.filter->order, plan.filter->budget);
  }

  const std::function<void(std::vector<int>&, double,
                           const std::optional<FilterState>&)>
      walk = [&](std::vector<int>& prefix, double prob,
                 const std::optional<FilterState>& state) {
        const std::size_t round = prefix.size();
        if (round == plan.rounds.size()) {
          table.probabilities[prefix] += prob;
          return;
        }
        std::optional<FilterState> next_state = state;
        if (state.has_value()) {
          const double rho = internal::exact_step_loss(
              plan, round, prefix, plan.filter->order);
          auto [decision, next] = rdp_filter_check(*state, rho);
          if (decision == FilterDecision::kHalt) {
            // The composed run returns the prefix as its final output.
            table.probabilities[prefix] += prob;
            return;
          }
          next_state = next;
        }
        const DiscreteDistribution dist =
            plan.rounds[round].distribution(prefix, dataset_id);
        for (std::size_t a = 0; a < dist.size(); ++a) {
          prefix.push_back(static_cast<int>(a));
          walk(prefix, prob * dist[a], next_state);
          prefix.pop_back();
        }
      };

  std::vector<int> prefix;
  walk(prefix, 1.0, filter);

  const double total = table.total();
  if (std::abs(total - 1.0) > 1e-12) {
    throw InvariantError("exact_joint_distribution: path table sums to " +
                         std::to_string(total));
  }
  return table;
}

// Renyi divergence between two path tables over the union of their
// supports, reusing the discrete divergence from core.
inline double divergence_between_tables(const PathTable& p, const PathTable& q,
                                        RenyiOrder order) {
  std::map<std::vector<int>, std::pair<double, double>> joined;
  for (const auto& [path, prob] : p.probabilities) joined[path].first = prob;
  for (const auto& [path, prob] : q.probabilities) joined[path].second = prob;
  std::vector<double> ps;
  std::vector<double> qs;
  ps.reserve(joined.size());
  qs.reserve(joined.size());
  for (const auto& [path, probs] : joined) {
    ps.push_back(probs.first);
    qs.push_back(probs.second);
  }
  return renyi_divergence(DiscreteDistribution(ps), DiscreteDistribution(qs),
                          order);
}

// Exact divergence between the composed outputs on two datasets.
inline double exact_composed_divergence(const AdaptivePlan& plan,
                                        std::size_t dataset_s,
                                        std::size_t dataset_s_prime,
                                        RenyiOrder order) {
  const PathTable p = exact_joint_distribution(plan, dataset_s);
  const PathTable q = exact_joint_distribution(plan, dataset_s_prime);
  return divergence_between_tables(p, q, order);
}

inline double symmetric_composed_divergence(const AdaptivePlan& plan,
                                            std::size_t dataset_s,
                                            std::size_t dataset_s_prime,
                                            RenyiOrder order) {
  const PathTable p = exact_joint_distribution(plan, dataset_s);
  const PathTable q = exact_joint_distribution(plan, dataset_s_prime);
  return std::max(divergence_between_tables(p, q, order),
                  divergence_between_tables(q, p, order));
}

// Outcome of checking one plan against the composition guarantee.
struct FilterValidationReport {
  bool valid = true;
  double budget = 0.0;
  double alpha = 0.0;
  double max_divergence = 0.0;   // worst realized divergence over all pairs
  double min_slack = 0.0;        // budget - max_divergence
  std::size_t pairs_checked = 0;
  std::vector<std::string> violations;
};

namespace internal {

// Counter-witness detail for a violated pair: paths with their two
// probabilities and the running loss the filter accounted for them.
inline std::string describe_violation(const AdaptivePlan& plan,
                                      std::size_t dataset_s,
                                      std::size_t dataset_s_prime,
                                      RenyiOrder order, double budget,
                                      double divergence) {
  std::ostringstream out;
  out.precision(12);
  out << "D_" << order.alpha << "(A(" << dataset_s << ") || A("
      << dataset_s_prime << ")) = " << divergence << " > budget " << budget
      << " + " << kBudgetCheckTolerance << "; paths (path, p, q, sum rho):";
  const PathTable p = exact_joint_distribution(plan, dataset_s);
  const PathTable q = exact_joint_distribution(plan, dataset_s_prime);
  std::size_t shown = 0;
  for (const auto& [path, prob] : p.probabilities) {
    if (shown++ >= 8) {
      out << " ...";
      break;
    }
    double rho_sum = 0.0;
    std::vector<int> prefix;
    for (int symbol : path) {
      rho_sum += exact_step_loss(plan, prefix.size(), prefix, order);
      prefix.push_back(symbol);
    }
    const auto q_it = q.probabilities.find(path);
    const double q_prob =
        q_it == q.probabilities.end() ? 0.0 : q_it->second;
    out << " ([";
    for (std::size_t i = 0; i < path.size(); ++i) {
      out << (i ? "," : "") << path[i];
    }
    out << "], " << prob << ", " << q_prob << ", " << rho_sum << ")";
  }
  return out.str();
}

}  // namespace internal

// Wires the filter at (order, budget) into the plan and checks that the
// exact composed divergence stays within budget for every ordered dataset
// pair. This is the content of the composition guarantee, checked rather
// than assumed.
inline FilterValidationReport validate_filter_budget(AdaptivePlan plan,
                                                     RenyiOrder order,
                                                     double budget) {
  if (!std::isfinite(budget) || budget < 0.0) {
    throw ParameterError("validate_filter_budget: budget must be >= 0");
  }
  plan.filter = PlanFilter{order, budget};
  internal::validate_plan(plan);

  FilterValidationReport report;
  report.budget = budget;
  report.alpha = order.alpha;

  std::vector<PathTable> tables;
  tables.reserve(plan.n_datasets);
  for (std::size_t d = 0; d < plan.n_datasets; ++d) {
    tables.push_back(exact_joint_distribution(plan, d));
  }
  for (std::size_t i = 0; i < plan.n_datasets; ++i) {
    for (std::size_t j = 0; j < plan.n_datasets; ++j) {
      if (i == j) continue;
      const double divergence =
          divergence_between_tables(tables[i], tables[j], order);
      report.max_divergence = std::max(report.max_divergence, divergence);
      ++report.pairs_checked;
      if (divergence > budget + kBudgetCheckTolerance) {
        report.valid = false;
        report.violations.push_back(internal::describe_violation(
            plan, i, j, order, budget, divergence));
      }
    }
  }
  report.min_slack = report.budget - report.max_divergence;
  return report;
}

// ---------------------------------------------------------------------------
// Individual (per-data-point) filtered composition on small instances.
// ---------------------------------------------------------------------------

// One adaptive round whose output distribution depends on the history and
// on which points currently participate.
class ParticipationMechanism {
 public:
  using Table = std::function<DiscreteDistribution(
      const std::vector<int>& prefix, const std::vector<bool>& participating)>;

  ParticipationMechanism(std::size_t alphabet_size, Table table)
      : alphabet_size_(alphabet_size), table_(std::move(table)) {
    if (alphabet_size_ < 1 || alphabet_size_ > kMaxAlphabet) {
      throw ParameterError(
          "ParticipationMechanism: alphabet size must be in [1, " +
          std::to_string(kMaxAlphabet) + "]");
    }
    if (!table_) {
      throw ParameterError("ParticipationMechanism: missing table");
    }
  }

  std::size_t alphabet_size() const { return alphabet_size_; }

  DiscreteDistribution distribution(
      const std::vector<int>& prefix,
      const std::vector<bool>& participating) const {
    DiscreteDistribution dist = table_(prefix, participating);
    if (dist.size() != alphabet_size_) {
      throw InvariantError(
          "ParticipationMechanism: table returned a distribution over " +
          std::to_string(dist.size()) + " symbols, expected " +
          std::to_string(alphabet_size_));
    }
    return dist;
  }

 private:
  std::size_t alphabet_size_;
  Table table_;
};

// A per-point filtered composition: the per-point ledger excludes points as
// their exact cumulative losses reach the budget; excluded points stop
// participating, so they stop losing privacy.
struct IndividualPlan {
  std::size_t n_points = 2;
  std::vector<ParticipationMechanism> rounds;
};

struct IndividualValidationReport {
  bool valid = true;
  double budget = 0.0;
  double alpha = 0.0;
  double max_divergence = 0.0;  // worst over all points and both directions
  double min_slack = 0.0;
  std::size_t pairs_checked = 0;
  std::vector<std::string> violations;
};

namespace internal {

inline void validate_individual_plan(const IndividualPlan& plan) {
  if (plan.n_points < 1 || plan.n_points > 4) {
    throw ParameterError(
        "IndividualPlan: point count must be in [1, 4] for enumeration");
  }
  if (plan.rounds.empty() || plan.rounds.size() > kMaxRounds) {
    throw ParameterError("IndividualPlan: round count must be in [1, " +
                         std::to_string(kMaxRounds) + "]");
  }
  double paths = 1.0;
  for (const ParticipationMechanism& round : plan.rounds) {
    paths *= static_cast<double>(round.alphabet_size());
  }
  const double cap = std::pow(static_cast<double>(kMaxAlphabet),
                              static_cast<double>(kMaxRounds));
  if (paths > cap) {
    throw ParameterError("IndividualPlan: path count exceeds enumeration cap");
  }
}

inline std::vector<bool> without_point(std::vector<bool> mask,
                                       std::size_t drop) {
  mask[drop] = false;
  return mask;
}

}  // namespace internal

// Enumerates the joint output distributions of the individually filtered
// composition on the full dataset (table 0) and on each leave-one-out
// dataset (table 1+i). The ledger evolves identically across datasets
// because per-round losses are computed from the history alone; that is
// exactly the property that makes per-point filtering sound, and it is
// exercised here on the production IndividualLedger.
//
// With AccountingMode::kIndividual the per-point loss is the supremum over
// every dataset containing the point, i.e. over all participation masks
// inside the current active set. That supremum is what keeps the losses
// history-measurable; the kPerInstance variant charges only the divergence
// realized on the full dataset's active set and exists so callers can
// demonstrate that such accounting does NOT make a valid filter.
inline std::vector<PathTable> individual_filtered_distributions(
    const IndividualPlan& plan, RenyiOrder order, double budget,
    AccountingMode loss_mode = AccountingMode::kIndividual) {
  internal::validate_individual_plan(plan);
  if (!std::isfinite(budget) || budget < 0.0) {
    throw ParameterError(
        "individual_filtered_distributions: budget must be >= 0");
  }

  const std::size_t n = plan.n_points;
  std::vector<PathTable> tables(n + 1);

  const std::function<void(std::vector<int>&, const IndividualLedger&,
                           std::vector<double>&)>
      walk = [&](std::vector<int>& prefix, const IndividualLedger& ledger,
                 std::vector<double>& probs) {
        const std::size_t round = prefix.size();
        if (round == plan.rounds.size()) {
          for (std::size_t d = 0; d <= n; ++d) {
            tables[d].probabilities[prefix] += probs[d];
          }
          return;
        }
        const ParticipationMechanism& mech = plan.rounds[round];

        // Per-point losses from the exact one-step divergences between the
        // mechanism with and without the point, maximized over direction.
        const std::vector<bool> active = ledger.active_flags();
        RoundProposal proposal;
        proposal.losses.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
          if (!active[i]) continue;
          if (loss_mode == AccountingMode::kIndividual) {
            // Supremum over all participation masks within the active set
            // that contain the point.
            for (std::size_t bits = 0; bits < (std::size_t{1} << n); ++bits) {
              if (!((bits >> i) & 1u)) continue;
              std::vector<bool> mask(n);
              bool inside_active = true;
              for (std::size_t j = 0; j < n; ++j) {
                mask[j] = (bits >> j) & 1u;
                if (mask[j] && !active[j]) inside_active = false;
              }
              if (!inside_active) continue;
              proposal.losses[i] = std::max(
                  proposal.losses[i],
                  symmetric_renyi_divergence(
                      mech.distribution(prefix, mask),
                      mech.distribution(prefix,
                                        internal::without_point(mask, i)),
                      order));
            }
          } else {
            // Realized-run measurement only: the divergence on the current
            // active set. Not history-measurable; not a valid filter input.
            proposal.losses[i] = symmetric_renyi_divergence(
                mech.distribution(prefix, active),
                mech.distribution(prefix, internal::without_point(active, i)),
                order);
          }
        }

        RoundPlan round_plan = ledger.begin_round(proposal);
        IndividualLedger next = ledger;
        next.commit_round(round_plan);

        // Dataset 0 runs on the surviving active set; dataset 1+i runs on
        // the same set with point i removed.
        std::vector<DiscreteDistribution> dists;
        dists.reserve(n + 1);
        dists.push_back(mech.distribution(prefix, round_plan.active));
        for (std::size_t i = 0; i < n; ++i) {
          dists.push_back(mech.distribution(
              prefix, internal::without_point(round_plan.active, i)));
        }

        std::vector<double> next_probs(n + 1);
        for (std::size_t a = 0; a < mech.alphabet_size(); ++a) {
          for (std::size_t d = 0; d <= n; ++d) {
            next_probs[d] = probs[d] * dists[d][a];
          }
          prefix.push_back(static_cast<int>(a));
          walk(prefix, next, next_probs);
          prefix.pop_back();
        }
      };

  std::vector<int> prefix;
  std::vector<double> probs(n + 1, 1.0);
  IndividualLedger ledger(order, budget, n);
  walk(prefix, ledger, probs);

  for (std::size_t d = 0; d <= n; ++d) {
    const double total = tables[d].total();
    if (std::abs(total - 1.0) > 1e-12) {
      throw InvariantError(
          "individual_filtered_distributions: table sums to " +
          std::to_string(total));
    }
  }
  return tables;
}

// Checks the per-point guarantee: for every point, the divergence between
// the run on the full dataset and the run with that point removed stays
// within budget, in both directions.
inline IndividualValidationReport validate_individual_filter_budget(
    const IndividualPlan& plan, RenyiOrder order, double budget,
    AccountingMode loss_mode = AccountingMode::kIndividual) {
  const std::vector<PathTable> tables =
      individual_filtered_distributions(plan, order, budget, loss_mode);

  IndividualValidationReport report;
  report.budget = budget;
  report.alpha = order.alpha;
  for (std::size_t i = 0; i < plan.n_points; ++i) {
    const double forward =
        divergence_between_tables(tables[0], tables[1 + i], order);
    const double backward =
        divergence_between_tables(tables[1 + i], tables[0], order);
    for (const double divergence : {forward, backward}) {
      report.max_divergence = std::max(report.max_divergence, divergence);
      ++report.pairs_checked;
      if (divergence > budget + kBudgetCheckTolerance) {
        report.valid = false;
        std::ostringstream out;
        out.precision(12);
        out << "point " << i << ": divergence " << divergence << " > budget "
            << budget << " + " << kBudgetCheckTolerance;
        report.violations.push_back(out.str());
      }
    }
  }
  report.min_slack = report.budget - report.max_divergence;
  return report;
}

// ---------------------------------------------------------------------------
// Seeded adversarial plan generators for the fuzz suites.
// ---------------------------------------------------------------------------

namespace internal {

// A random distribution whose entries sum to 1 up to one final rounding
// correction. Cubing the raw weights produces occasional near-deterministic
// rows, which is what makes the plans adversarial: rare symbols carry large
// likelihood ratios.
inline DiscreteDistribution random_spiky_distribution(Rng& rng,
                                                      std::size_t size) {
  std::vector<double> weights(size);
  double total = 0.0;
  for (double& w : weights) {
    const double u = rng.uniform();
    w = u * u * u + 0.01;
    total += w;
  }
  for (double& w : weights) w /= total;
  double sum = 0.0;
  for (double w : weights) sum += w;
  std::size_t largest = 0;
  for (std::size_t i = 1; i < size; ++i) {
    if (weights[i] > weights[largest]) largest = i;
  }
  weights[largest] -= sum - 1.0;
  return DiscreteDistribution(weights);
}

}  // namespace internal

// Generates a random history-dependent plan with fully materialized tables,
// so repeated evaluation (across budgets and orders) sees identical
// distributions.
inline AdaptivePlan random_adaptive_plan(Rng& rng,
                                         std::size_t max_alphabet = 8,
                                         std::size_t max_rounds = 4,
                                         std::size_t n_datasets = 2) {
  if (max_alphabet < 2 || max_alphabet > kMaxAlphabet) {
    throw ParameterError("random_adaptive_plan: alphabet cap out of range");
  }
  if (max_rounds < 1 || max_rounds > kMaxRounds) {
    throw ParameterError("random_adaptive_plan: round cap out of range");
  }

  const std::size_t n_rounds =
      1 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(max_rounds)) %
          max_rounds;
  AdaptivePlan plan;
  plan.n_datasets = n_datasets;

  std::vector<std::size_t> alphabets(n_rounds);
  for (std::size_t r = 0; r < n_rounds; ++r) {
    alphabets[r] =
        2 + static_cast<std::size_t>(rng.uniform() *
                                     static_cast<double>(max_alphabet - 1)) %
                (max_alphabet - 1);
  }

  using PrefixTable =
      std::map<std::vector<int>, std::vector<DiscreteDistribution>>;
  std::vector<int> prefix;
  for (std::size_t r = 0; r < n_rounds; ++r) {
    auto table = std::make_shared<PrefixTable>();
    const std::function<void(std::vector<int>&, std::size_t)> fill =
        [&](std::vector<int>& p, std::size_t depth) {
          if (depth == r) {
            std::vector<DiscreteDistribution>& row = (*table)[p];
            row.reserve(n_datasets);
            for (std::size_t d = 0; d < n_datasets; ++d) {
              row.push_back(
                  internal::random_spiky_distribution(rng, alphabets[r]));
            }
            return;
          }
          for (std::size_t a = 0; a < alphabets[depth]; ++a) {
            p.push_back(static_cast<int>(a));
            fill(p, depth + 1);
            p.pop_back();
          }
        };
    fill(prefix, 0);
    plan.rounds.emplace_back(
        alphabets[r],
        [table](const std::vector<int>& p, std::size_t d) {
          const auto it = table->find(p);
          if (it == table->end()) {
            throw InvariantError("random plan: unknown prefix");
          }
          return it->second.at(d);
        });
  }
  return plan;
}

// Generates a random per-point plan whose distributions depend on the
// participation mask, for the individual-filter fuzz suite.
inline IndividualPlan random_individual_plan(Rng& rng,
                                             std::size_t n_points = 2,
                                             std::size_t max_alphabet = 4,
                                             std::size_t max_rounds = 3) {
  if (n_points < 1 || n_points > 4) {
    throw ParameterError("random_individual_plan: point count out of range");
  }
  if (max_alphabet < 2 || max_alphabet > kMaxAlphabet ||
      max_rounds < 1 || max_rounds > kMaxRounds) {
    throw ParameterError("random_individual_plan: caps out of range");
  }

  const std::size_t n_rounds =
      1 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(max_rounds)) %
          max_rounds;
  IndividualPlan plan;
  plan.n_points = n_points;

  std::vector<std::size_t> alphabets(n_rounds);
  for (std::size_t r = 0; r < n_rounds; ++r) {
    alphabets[r] =
        2 + static_cast<std::size_t>(rng.uniform() *
                                     static_cast<double>(max_alphabet - 1)) %
                (max_alphabet - 1);
  }

  // Tables keyed by (prefix, participation mask).
  using Key = std::pair<std::vector<int>, std::vector<bool>>;
  using PrefixTable = std::map<Key, DiscreteDistribution>;
  std::vector<int> prefix;
  for (std::size_t r = 0; r < n_rounds; ++r) {
    auto table = std::make_shared<PrefixTable>();
    const std::function<void(std::vector<int>&, std::size_t)> fill =
        [&](std::vector<int>& p, std::size_t depth) {
          if (depth == r) {
            const std::size_t n_masks = std::size_t{1} << n_points;
            for (std::size_t m = 0; m < n_masks; ++m) {
              std::vector<bool> mask(n_points);
              for (std::size_t i = 0; i < n_points; ++i) {
                mask[i] = (m >> i) & 1u;
              }
              table->emplace(
                  Key{p, mask},
                  internal::random_spiky_distribution(rng, alphabets[r]));
            }
            return;
          }
          for (std::size_t a = 0; a < alphabets[depth]; ++a) {
            p.push_back(static_cast<int>(a));
            fill(p, depth + 1);
            p.pop_back();
          }
        };
    fill(prefix, 0);
    plan.rounds.emplace_back(
        alphabets[r],
        [table](const std::vector<int>& p, const std::vector<bool>& mask) {
          const auto it = table->find({p, mask});
          if (it == table->end()) {
            throw InvariantError("random individual plan: unknown key");
          }
          return it->second;
        });
  }
  return plan;
}

// ---------------------------------------------------------------------------
// The two-round construction showing the running sum of realized losses is
// not a valid odometer.
// ---------------------------------------------------------------------------

// A witness that conditioning on the realized running sum rho_1 + rho_2
// does not bound the conditional loss moment by exp((alpha-1)(rho_1+rho_2)).
struct OdometerWitness {
  double alpha = 0.0;
  double rho1 = 0.0;          // first-round log-moment parameter
  double a1 = 0.0;            // realized first report at the witness
  double rho2 = 0.0;          // second-round parameter given a1 (== a1)
  double conditional_moment = 0.0;  // E[Loss | running sum] at the witness
  double claimed_moment = 0.0;      // exp((alpha-1)(rho1+rho2))
  double margin = 0.0;  // log-scale excess of conditional over claimed
  bool violated = false;
};

// Builds the two-round instance on a one-bit dataset: the first round
// reports one of two positive reals, and the second round is calibrated so
// that its exact one-step parameter equals the first report. Whenever the
// first round is non-degenerate (rho1 > 0), some realization of the first
// report certifies that the running sum understates the conditional loss.
inline OdometerWitness odometer_counterexample(RenyiOrder order,
                                               double first_round_bias = 0.75) {
  if (order.alpha <= 1.0) {
    throw ParameterError(
        "odometer_counterexample: requires an order greater than 1");
  }
  if (!(first_round_bias >= 0.5) || !(first_round_bias < 1.0)) {
    throw ParameterError(
        "odometer_counterexample: first-round bias must lie in [0.5, 1)");
  }
  const double alpha = order.alpha;

  // First round: dataset 1 reports each value with probability 1/2;
  // dataset 0 is biased. The output *values* are fixed below so that the
  // second round can match them exactly.
  const DiscreteDistribution p1({first_round_bias, 1.0 - first_round_bias});
  const DiscreteDistribution q1({0.5, 0.5});

  // Second round, one variant per first-round value: dataset 0 reports a
  // biased bit, dataset 1 a fair bit. Its exact one-step parameter is the
  // divergence between the two; the first-round output values are then
  // defined as exactly these achieved parameters, so rho_2 == a_1 holds by
  // construction.
  const double r_hi = 0.9;
  const double r_lo = 0.6;
  const DiscreteDistribution fair({0.5, 0.5});
  const double value_hi =
      renyi_divergence(DiscreteDistribution({r_hi, 1.0 - r_hi}), fair, order);
  const double value_lo =
      renyi_divergence(DiscreteDistribution({r_lo, 1.0 - r_lo}), fair, order);
  const std::vector<double> a1_values = {value_hi, value_lo};
  const std::vector<double> r2 = {r_hi, r_lo};

  // rho1 from its definition: the log of the exact first-round moment of
  // the likelihood ratio under dataset 1.
  double moment1 = 0.0;
  for (std::size_t k = 0; k < 2; ++k) {
    moment1 += q1[k] * std::pow(p1[k] / q1[k], alpha);
  }
  const double rho1 = std::log(moment1) / (alpha - 1.0);

  OdometerWitness witness;
  witness.alpha = alpha;
  witness.rho1 = rho1;

  // Scan the two realizations of a_1 and keep the largest conditional
  // excess as the witness.
  double best_margin = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < 2; ++k) {
    const double rho2 = a1_values[k];

    // E[Loss | rho_1 + rho_2] : the realized sum identifies a_1 (the two
    // values are distinct), so condition on a_1 = value_k and enumerate the
    // second round exactly under dataset 1.
    const DiscreteDistribution p2({r2[k], 1.0 - r2[k]});
    double conditional = 0.0;
    for (std::size_t a2 = 0; a2 < 2; ++a2) {
      const double joint_p = p1[k] * p2[a2];
      const double joint_q = q1[k] * fair[a2];
      conditional += fair[a2] * std::pow(joint_p / joint_q, alpha);
    }
    const double margin =
        std::log(conditional) / (alpha - 1.0) - (rho1 + rho2);
    if (margin > best_margin) {
      best_margin = margin;
      witness.a1 = a1_values[k];
      witness.rho2 = rho2;
      witness.conditional_moment = conditional;
      witness.claimed_moment = std::exp((alpha - 1.0) * (rho1 + rho2));
      witness.margin = margin;
    }
  }
  witness.violated = best_margin > 1e-12;
  return witness;
}

// ---------------------------------------------------------------------------
// Quadrature oracle for the Gaussian divergence closed form.
// ---------------------------------------------------------------------------

namespace internal {

inline double log_normal_pdf(double x, double mean, double sigma) {
  const double z = (x - mean) / sigma;
  return -0.5 * z * z - std::log(sigma) -
         0.5 * std::log(2.0 * std::numbers::pi);
}

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double fa, double fm,
                        double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0) {
    throw NumericError(
        "adaptive_simpson: did not converge; residual " +
        std::to_string(std::abs(delta)));
  }
  if (std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <typename F>
double integrate(const F& f, double a, double b, double tol) {
  const double m = 0.5 * (a + b);
  const double fa = f(a);
  const double fm = f(m);
  const double fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace internal

// Computes D_alpha(N(mean_a, sigma^2) || N(mean_b, sigma^2)) by direct
// numeric integration, shifted in log space so the integrand stays in
// range. Serves as the independent check of the closed form alpha * gap^2 /
// (2 sigma^2).
inline double numeric_gaussian_divergence(double mean_a, double mean_b,
                                          double sigma, RenyiOrder order) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ParameterError("numeric_gaussian_divergence: sigma must be > 0");
  }
  if (!std::isfinite(mean_a) || !std::isfinite(mean_b)) {
    throw ParameterError("numeric_gaussian_divergence: means must be finite");
  }
  const double alpha = order.alpha;

  if (alpha == 1.0) {
    // KL divergence: integrate p log(p/q) around the p mean.
    const auto integrand = [&](double x) {
      const double lp = internal::log_normal_pdf(x, mean_a, sigma);
      const double lq = internal::log_normal_pdf(x, mean_b, sigma);
      return std::exp(lp) * (lp - lq);
    };
    const double lo = mean_a - 12.0 * sigma - std::abs(mean_b - mean_a);
    const double hi = mean_a + 12.0 * sigma + std::abs(mean_b - mean_a);
    return internal::integrate(integrand, lo, hi, 1e-9);
  }

  // The alpha-moment integrand p^alpha q^(1-alpha) concentrates around
  // alpha * mean_a + (1 - alpha) * mean_b; find its numeric peak on a
  // coarse scan and integrate the shifted integrand.
  const double center = alpha * mean_a + (1.0 - alpha) * mean_b;
  const double lo = center - 12.0 * sigma;
  const double hi = center + 12.0 * sigma;
  const auto log_integrand = [&](double x) {
    return alpha * internal::log_normal_pdf(x, mean_a, sigma) +
           (1.0 - alpha) * internal::log_normal_pdf(x, mean_b, sigma);
  };
  double shift = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 128; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / 128.0;
    shift = std::max(shift, log_integrand(x));
  }
  const auto integrand = [&](double x) {
    return std::exp(log_integrand(x) - shift);
  };
  const double integral = internal::integrate(integrand, lo, hi, 1e-9);
  if (!(integral > 0.0) || !std::isfinite(integral)) {
    throw NumericError("numeric_gaussian_divergence: integral out of range");
  }
  return (shift + std::log(integral)) / (alpha - 1.0);
}

}  // namespace ipa
