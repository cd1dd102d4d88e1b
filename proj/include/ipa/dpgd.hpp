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
// Differentially private full-batch gradient descent, plain and with
// per-point squared-norm filtering. Every point contributes a clipped
// gradient plus one Gaussian noise vector each round; in filtered mode the
// clip cap shrinks as a point's squared-norm budget depletes, so cumulative
// spend can never exceed the budget. Spend bookkeeping is done in the
// squared domain (caps compared as squares, the recorded spend capped by the
// same square) so that a filtered run with norm_budget = steps * clip_c^2
// reproduces the plain run bit for bit.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "ipa/core.hpp"
#include "ipa/data.hpp"
#include "ipa/error.hpp"
#include "ipa/rng.hpp"

namespace ipa {

enum class LossKind { kLogistic, kSquared };
enum class GdMode { kPlain, kFiltered };

// A convex per-example loss with an everywhere-defined analytic gradient.
// logistic: log(1 + e^z) - y z for the margin z = <theta, x>, labels in
// {0, 1}; squared: (z - y)^2 / 2. Both add an L2 term (lambda/2) |theta|^2.
struct LossSpec {
  LossKind kind = LossKind::kLogistic;
  double regularization = 0.0;
};

struct GdConfig {
  double learning_rate = 0.1;
  // Optional per-round step size; called with the 1-based round index and
  // overrides learning_rate when set.
  std::function<double(std::size_t)> schedule;
  double sigma = 1.0;   // noise multiplier: per-point noise is N(0, sigma^2 clip_c^2 I)
  double clip_c = 1.0;  // gradient norm cap
  std::size_t steps = 1;     // rounds: k when plain, k_max when filtered
  double norm_budget = 0.0;  // per-point squared-norm budget; filtered only
  std::uint64_t seed = 0;
  bool zero_noise = false;  // diagnostic mode: skip the noise entirely
  bool parallel = false;    // parallel per-example gradients; same results
};

namespace internal {

inline double stable_sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

inline double squared_norm(const std::vector<double>& v) {
  double sum = 0.0;
  for (const double x : v) sum += x * x;
  return sum;
}

// The adaptive cap in the squared domain: min(clip_c^2, norm_budget - spent)
// with both operands already rounded. Keeping the comparison here avoids a
// square root whose rounding would otherwise break the plain-recovery
// identity.
inline double adaptive_cap_sq(double cap_sq, double norm_budget,
                              double spent) {
  if (spent > norm_budget) {
    throw InvariantError("adaptive_cap: spent " + std::to_string(spent) +
                         " exceeds norm budget " +
                         std::to_string(norm_budget));
  }
  return std::min(cap_sq, norm_budget - spent);
}

}  // namespace internal

// Analytic gradient of the chosen per-example loss at (theta, x, y).
inline std::vector<double> per_example_gradient(const LossSpec& loss,
                                                const std::vector<double>& theta,
                                                const std::vector<double>& x,
                                                double y) {
  if (theta.size() != x.size()) {
    throw DimensionError("per_example_gradient: theta has " +
                         std::to_string(theta.size()) + " entries, x has " +
                         std::to_string(x.size()));
  }
  const double z = internal::dot(theta, x);
  double factor = 0.0;
  switch (loss.kind) {
    case LossKind::kLogistic:
      factor = internal::stable_sigmoid(z) - y;
      break;
    case LossKind::kSquared:
      factor = z - y;
      break;
  }
  std::vector<double> gradient(theta.size());
  for (std::size_t j = 0; j < theta.size(); ++j) {
    gradient[j] = factor * x[j] + loss.regularization * theta[j];
  }
  return gradient;
}

// Mean per-example loss over a dataset, including the L2 term.
inline double mean_loss(const LossSpec& loss, const std::vector<double>& theta,
                        const Dataset& data) {
  if (data.n() == 0) {
    throw ParameterError("mean_loss: dataset is empty");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    if (data.features[i].size() != theta.size()) {
      throw DimensionError("mean_loss: feature/parameter size mismatch");
    }
    const double z = internal::dot(theta, data.features[i]);
    const double y = data.labels[i];
    switch (loss.kind) {
      case LossKind::kLogistic:
        // log(1 + e^z) - y z, evaluated without overflow for large |z|.
        total += std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))) - y * z;
        break;
      case LossKind::kSquared:
        total += 0.5 * (z - y) * (z - y);
        break;
    }
  }
  return total / static_cast<double>(data.n()) +
         0.5 * loss.regularization * internal::squared_norm(theta);
}

// Fraction of points whose thresholded prediction matches the 0/1 label:
// logistic thresholds the margin at 0, squared thresholds the prediction at
// one half.
inline double classification_accuracy(const LossSpec& loss,
                                      const std::vector<double>& theta,
                                      const Dataset& data) {
  if (data.n() == 0) {
    throw ParameterError("classification_accuracy: dataset is empty");
  }
  const double threshold = loss.kind == LossKind::kLogistic ? 0.0 : 0.5;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    if (data.features[i].size() != theta.size()) {
      throw DimensionError(
          "classification_accuracy: feature/parameter size mismatch");
    }
    const double predicted =
        internal::dot(theta, data.features[i]) >= threshold ? 1.0 : 0.0;
    if (predicted == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.n());
}

// Rescales g so its Euclidean norm does not exceed cap; returns g unchanged
// when it already fits. cap = 0 yields the zero vector, and a zero gradient
// passes through without any division.
inline std::vector<double> clip_gradient(const std::vector<double>& g,
                                         double cap) {
  if (!(cap >= 0.0)) {
    throw ParameterError("clip_gradient: cap must be >= 0");
  }
  if (cap == 0.0) {
    return std::vector<double>(g.size(), 0.0);
  }
  const double norm_sq = internal::squared_norm(g);
  if (norm_sq == 0.0 || std::sqrt(norm_sq) <= cap) {
    return g;
  }
  const double scale = cap / std::sqrt(norm_sq);
  std::vector<double> clipped(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) clipped[j] = g[j] * scale;
  return clipped;
}

// The filtered variant's clip cap: min(clip_c, sqrt(norm_budget - spent)).
// Evaluated via the squared domain so the result is exactly clip_c whenever
// the remaining budget covers a full-norm gradient.
inline double adaptive_cap(double clip_c, double norm_budget, double spent) {
  if (!(clip_c > 0.0) || !std::isfinite(clip_c)) {
    throw ParameterError("adaptive_cap: clip_c must be finite and > 0");
  }
  if (!(norm_budget > 0.0) || !std::isfinite(norm_budget)) {
    throw ParameterError("adaptive_cap: norm_budget must be finite and > 0");
  }
  if (!(spent >= 0.0)) {
    throw ParameterError("adaptive_cap: spent must be >= 0");
  }
  const double cap_sq =
      internal::adaptive_cap_sq(clip_c * clip_c, norm_budget, spent);
  return cap_sq == clip_c * clip_c ? clip_c : std::sqrt(cap_sq);
}

// One recorded round of a training run. theta is the iterate the round's
// gradients were computed at; spent is each point's cumulative squared-norm
// spend after the round.
struct GdRound {
  std::size_t round = 0;  // 1-based
  std::vector<double> theta;
  std::vector<double> clipped_norm_sq;
  std::vector<double> spent;
  std::size_t active_count = 0;  // points with a positive cap this round

  double max_spent() const {
    double best = 0.0;
    for (const double s : spent) best = std::max(best, s);
    return best;
  }
};

struct GdTrace {
  std::vector<GdRound> rounds;
  std::vector<double> theta_final;
  bool aborted = false;
  std::string diagnostic;
};

inline void validate_gd_config(const GdConfig& config, GdMode mode) {
  if (!(config.sigma > 0.0) || !std::isfinite(config.sigma)) {
    throw ParameterError("GdConfig: sigma must be finite and > 0");
  }
  if (!(config.clip_c > 0.0) || !std::isfinite(config.clip_c)) {
    throw ParameterError("GdConfig: clip_c must be finite and > 0");
  }
  if (config.steps == 0) {
    throw ParameterError("GdConfig: steps must be >= 1");
  }
  if (!config.schedule &&
      (!(config.learning_rate > 0.0) || !std::isfinite(config.learning_rate))) {
    throw ParameterError("GdConfig: learning_rate must be finite and > 0");
  }
  if (mode == GdMode::kFiltered) {
    if (!(config.norm_budget > 0.0) || !std::isfinite(config.norm_budget)) {
      throw ParameterError(
          "GdConfig: filtered mode needs a norm_budget that is finite and > 0");
    }
  } else if (config.norm_budget != 0.0) {
    throw ParameterError("GdConfig: plain mode takes no norm_budget");
  }
}

namespace internal {

// Runs fn(i) for i in [0, n), either inline or across a small thread pool.
// Results must not depend on execution order.
inline void for_each_index(std::size_t n, bool parallel,
                           const std::function<void(std::size_t)>& fn) {
  if (!parallel || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t hardware = std::thread::hardware_concurrency();
  const std::size_t n_threads = std::max<std::size_t>(
      1, std::min<std::size_t>(hardware == 0 ? 2 : hardware, 8));
  std::vector<std::thread> workers;
  workers.reserve(n_threads);
  for (std::size_t w = 0; w < n_threads; ++w) {
    workers.emplace_back([n, n_threads, w, &fn]() {
      for (std::size_t i = w; i < n; i += n_threads) fn(i);
    });
  }
  for (std::thread& worker : workers) worker.join();
}

}  // namespace internal

// Full-batch private gradient descent. Each round every point contributes
// its clipped gradient plus one N(0, sigma^2 clip_c^2 I) noise vector; the
// update averages over the full dataset size. Plain mode clips at clip_c for
// all rounds; filtered mode shrinks each point's cap as its squared-norm
// budget depletes, excluding the point (cap 0) once the budget is spent.
// Non-finite gradients or iterates abort the run with a diagnostic instead
// of throwing: the trace up to the failure is still returned.
inline GdTrace run_private_gd(const GdConfig& config, const Dataset& data,
                              const LossSpec& loss, GdMode mode) {
  validate_gd_config(config, mode);
  const std::size_t n = data.n();
  if (n == 0) {
    throw ParameterError("run_private_gd: dataset is empty");
  }
  const std::size_t d = data.dim();
  if (d == 0) {
    throw ParameterError("run_private_gd: dataset has no features");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (data.features[i].size() != d) {
      throw DimensionError("run_private_gd: ragged feature rows");
    }
  }
  if (data.labels.size() != n) {
    throw DimensionError("run_private_gd: labels/features size mismatch");
  }

  const double cap_sq_full = config.clip_c * config.clip_c;
  const double noise_scale = config.sigma * config.clip_c;

  GdTrace trace;
  trace.theta_final.assign(d, 0.0);
  std::vector<double>& theta = trace.theta_final;
  std::vector<double> spent(n, 0.0);
  Rng rng(config.seed);

  std::vector<double> round_cap_sq(n, 0.0);
  std::vector<double> round_cap(n, 0.0);
  std::vector<std::vector<double>> clipped(n);
  std::vector<double> recorded(n, 0.0);
  // Plain char flags: vector<bool> packs bits, which would make concurrent
  // per-index writes in the parallel path a data race.
  std::vector<unsigned char> gradient_ok(n, 1);

  for (std::size_t t = 1; t <= config.steps; ++t) {
    GdRound round;
    round.round = t;
    round.theta = theta;

    std::size_t active = 0;
    for (std::size_t i = 0; i < n; ++i) {
      round_cap_sq[i] =
          mode == GdMode::kPlain
              ? cap_sq_full
              : internal::adaptive_cap_sq(cap_sq_full, config.norm_budget,
                                          spent[i]);
      round_cap[i] = round_cap_sq[i] == cap_sq_full
                         ? config.clip_c
                         : std::sqrt(round_cap_sq[i]);
      if (round_cap_sq[i] > 0.0) ++active;
    }
    round.active_count = active;

    // Per-example gradients and clipping are order-independent and may run
    // in parallel; everything that touches the RNG or the running sum stays
    // sequential in ascending point order below.
    internal::for_each_index(n, config.parallel, [&](std::size_t i) {
      if (round_cap_sq[i] == 0.0) {
        // An excluded point contributes a zero gradient (its loss is no
        // longer evaluated) but still gets a noise vector below.
        clipped[i].assign(d, 0.0);
        recorded[i] = 0.0;
        gradient_ok[i] = 1;
        return;
      }
      const std::vector<double> gradient =
          per_example_gradient(loss, theta, data.features[i], data.labels[i]);
      const double raw_norm_sq = internal::squared_norm(gradient);
      if (!std::isfinite(raw_norm_sq)) {
        gradient_ok[i] = 0;
        return;
      }
      clipped[i] = clip_gradient(gradient, round_cap[i]);
      // The recorded spend is the clipped squared norm, capped once more in
      // the squared domain so rounding in the norm can never overdraw.
      recorded[i] =
          std::min(internal::squared_norm(clipped[i]), round_cap_sq[i]);
    });

    for (std::size_t i = 0; i < n; ++i) {
      if (!gradient_ok[i]) {
        trace.aborted = true;
        trace.diagnostic = "round " + std::to_string(t) +
                           ": non-finite gradient for point " +
                           std::to_string(i);
        return trace;
      }
    }

    std::vector<double> sum(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (config.zero_noise) {
        for (std::size_t j = 0; j < d; ++j) sum[j] += clipped[i][j];
      } else {
        for (std::size_t j = 0; j < d; ++j) {
          sum[j] += clipped[i][j] + rng.gaussian(noise_scale);
        }
      }
      if (mode == GdMode::kFiltered) {
        spent[i] = std::min(spent[i] + recorded[i], config.norm_budget);
      } else {
        spent[i] += recorded[i];
      }
    }

    const double eta = config.schedule ? config.schedule(t) : config.learning_rate;
    if (!(eta > 0.0) || !std::isfinite(eta)) {
      throw ParameterError("run_private_gd: schedule produced step size " +
                           std::to_string(eta) + " at round " +
                           std::to_string(t));
    }
    const double n_double = static_cast<double>(n);
    bool theta_finite = true;
    for (std::size_t j = 0; j < d; ++j) {
      theta[j] -= eta * (sum[j] / n_double);
      theta_finite = theta_finite && std::isfinite(theta[j]);
    }

    round.clipped_norm_sq = recorded;
    round.spent = spent;
    trace.rounds.push_back(std::move(round));

    if (!theta_finite) {
      trace.aborted = true;
      trace.diagnostic =
          "round " + std::to_string(t) + ": parameter vector diverged";
      return trace;
    }
  }
  return trace;
}

// The training run's RDP guarantee as a curve over the default order grid:
// plain mode composes `steps` rounds of per-point loss alpha / (2 sigma^2);
// filtered mode is bounded by the norm budget alone, independent of how many
// rounds actually ran.
inline RdpCurve privacy_report(const GdConfig& config, GdMode mode) {
  validate_gd_config(config, mode);
  double slope = 0.0;
  if (mode == GdMode::kPlain) {
    slope = static_cast<double>(config.steps) /
            (2.0 * config.sigma * config.sigma);
  } else {
    slope = config.norm_budget / (2.0 * config.sigma * config.sigma *
                                  config.clip_c * config.clip_c);
  }
  return RdpCurve::linear(slope, default_alpha_grid());
}

}  // namespace ipa
