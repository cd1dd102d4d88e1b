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
// Renyi-divergence primitives and conversions between RDP, zCDP and
// approximate DP. All divergence accumulation happens in log space so that
// large orders (up to a few hundred) never overflow; an infinite divergence
// is reported through an explicit sentinel that is only produced by the
// absolute-continuity check, never by arithmetic overflow.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "ipa/error.hpp"

namespace ipa {

// Sentinel for D_alpha(p || q) = +infinity (support of p not contained in
// the support of q). Compare with is_infinite_divergence().
inline constexpr double kInfiniteDivergence =
    std::numeric_limits<double>::infinity();

inline bool is_infinite_divergence(double d) { return std::isinf(d); }

// Tolerance for "sums to one" and "equals zero" checks on distributions.
inline constexpr double kDistributionTolerance = 1e-12;

// A Renyi order alpha >= 1. Order 1 denotes the KL limit.
struct RenyiOrder {
  explicit RenyiOrder(double a) : alpha(a) {
    if (!std::isfinite(a) || a < 1.0) {
      throw ParameterError("RenyiOrder: alpha must be finite and >= 1, got " +
                           std::to_string(a));
    }
  }
  double alpha;
};

// One point (alpha, rho) on an RDP curve; rho is in nats.
struct RdpPoint {
  RdpPoint(RenyiOrder o, double r) : order(o), rho(r) {
    if (!std::isfinite(r) || r < 0.0) {
      throw ParameterError("RdpPoint: rho must be finite and >= 0, got " +
                           std::to_string(r));
    }
  }
  RenyiOrder order;
  double rho;
};

// An approximate-DP guarantee (epsilon, delta).
struct DpPoint {
  double epsilon;
  double delta;
};

// A finitely supported probability distribution. Construction validates
// non-negativity and normalization; support positions are implicit indices,
// so two distributions are comparable only when their sizes agree.
class DiscreteDistribution {
 public:
  explicit DiscreteDistribution(std::vector<double> probs)
      : probs_(std::move(probs)) {
    if (probs_.empty()) {
      throw InvariantError("DiscreteDistribution: empty support");
    }
    double sum = 0.0;
    for (double p : probs_) {
      if (!std::isfinite(p) || p < 0.0) {
        throw InvariantError(
            "DiscreteDistribution: probabilities must be finite and >= 0");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kDistributionTolerance) {
      throw InvariantError("DiscreteDistribution: probabilities sum to " +
                           std::to_string(sum) + ", expected 1");
    }
  }

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  const std::vector<double>& probs() const { return probs_; }

 private:
  std::vector<double> probs_;
};

// log(sum_i exp(v[i])) without overflow. -infinity entries contribute zero
// mass and an empty input yields -infinity.
inline double log_sum_exp(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double x : v) {
    if (x != -std::numeric_limits<double>::infinity()) acc += std::exp(x - m);
  }
  return m + std::log(acc);
}

namespace internal {

// KL divergence, the alpha -> 1 limit of the Renyi divergence.
inline double kl_divergence(const std::vector<double>& p,
                            const std::vector<double>& q) {
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return kInfiniteDivergence;
    acc += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(0.0, acc);
}

}  // namespace internal

// D_alpha(p || q) = 1/(alpha-1) * log sum_i p_i^alpha q_i^(1-alpha), with
// the KL limit at alpha = 1. Returns kInfiniteDivergence when p puts mass
// where q does not. Result is clamped at zero to absorb rounding on the
// p == q diagonal.
inline double renyi_divergence(const DiscreteDistribution& p,
                               const DiscreteDistribution& q,
                               RenyiOrder order) {
  if (p.size() != q.size()) {
    throw DimensionError("renyi_divergence: supports have sizes " +
                         std::to_string(p.size()) + " and " +
                         std::to_string(q.size()));
  }
  const double alpha = order.alpha;
  if (alpha == 1.0) return internal::kl_divergence(p.probs(), q.probs());
  std::vector<double> terms;
  terms.reserve(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;  // 0^alpha contributes nothing.
    if (q[i] == 0.0) return kInfiniteDivergence;
    terms.push_back(alpha * std::log(p[i]) + (1.0 - alpha) * std::log(q[i]));
  }
  if (terms.empty()) {
    throw InvariantError("renyi_divergence: first argument has no mass");
  }
  return std::max(0.0, log_sum_exp(terms) / (alpha - 1.0));
}

// max{D_alpha(p || q), D_alpha(q || p)}; infinite if either direction is.
inline double symmetric_renyi_divergence(const DiscreteDistribution& p,
                                         const DiscreteDistribution& q,
                                         RenyiOrder order) {
  return std::max(renyi_divergence(p, q, order),
                  renyi_divergence(q, p, order));
}

// Individual RDP loss of the Gaussian mechanism for a single data point:
// a query with per-point Lipschitz constant `lipschitz`, evaluated at a
// point with feature norm `norm`, answered with N(0, sigma^2) noise, costs
// rho = alpha * lipschitz^2 * norm^2 / (2 sigma^2).
inline RdpPoint gaussian_individual_rdp(RenyiOrder order, double lipschitz,
                                        double norm, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ParameterError("gaussian_individual_rdp: sigma must be > 0");
  }
  if (!std::isfinite(lipschitz) || lipschitz < 0.0 || !std::isfinite(norm) ||
      norm < 0.0) {
    throw ParameterError(
        "gaussian_individual_rdp: lipschitz and norm must be >= 0");
  }
  const double rho = order.alpha * lipschitz * lipschitz * norm * norm /
                     (2.0 * sigma * sigma);
  return RdpPoint(order, rho);
}

// Converts one RDP point to approximate DP at a target delta:
// epsilon = rho + log(1/delta) / (alpha - 1). The conversion is undefined
// at alpha = 1.
inline DpPoint rdp_to_dp(const RdpPoint& point, double delta) {
  if (!(delta > 0.0) || !(delta < 1.0)) {
    throw ParameterError("rdp_to_dp: delta must lie in (0, 1)");
  }
  const double alpha = point.order.alpha;
  if (alpha == 1.0) {
    throw ParameterError(
        "rdp_to_dp: conversion is undefined at order alpha = 1");
  }
  return DpPoint{point.rho + std::log(1.0 / delta) / (alpha - 1.0), delta};
}

// An RDP curve: a finite set of (alpha, rho) points with distinct,
// strictly increasing orders.
class RdpCurve {
 public:
  RdpCurve() = default;

  void insert(const RdpPoint& point) { points_[point.order.alpha] = point.rho; }

  // rho(alpha) = slope * alpha, sampled on the given orders. This is the
  // curve of a zCDP guarantee, e.g. k-fold adaptive composition of the
  // Gaussian mechanism at noise scale sigma has slope k / (2 sigma^2).
  static RdpCurve linear(double slope, const std::vector<double>& orders) {
    if (!std::isfinite(slope) || slope < 0.0) {
      throw ParameterError("RdpCurve::linear: slope must be finite and >= 0");
    }
    RdpCurve curve;
    for (double a : orders) {
      curve.insert(RdpPoint(RenyiOrder(a), slope * a));
    }
    return curve;
  }

  bool empty() const { return points_.empty(); }
  std::size_t size() const { return points_.size(); }
  const std::map<double, double>& points() const { return points_; }

 private:
  std::map<double, double> points_;
};

struct BestDpResult {
  DpPoint point;
  double order;  // the alpha achieving the minimum (smallest on ties)
};

// Minimizes the RDP-to-DP conversion over the curve's orders. All orders
// must exceed 1. Ties resolve to the smallest alpha (map iteration order).
inline BestDpResult best_dp_over_curve(const RdpCurve& curve, double delta) {
  if (curve.empty()) {
    throw ParameterError("best_dp_over_curve: curve is empty");
  }
  if (!(delta > 0.0) || !(delta < 1.0)) {
    throw ParameterError("best_dp_over_curve: delta must lie in (0, 1)");
  }
  double best_eps = std::numeric_limits<double>::infinity();
  double best_alpha = 0.0;
  for (const auto& [alpha, rho] : curve.points()) {
    if (alpha <= 1.0) {
      throw ParameterError(
          "best_dp_over_curve: all curve orders must exceed 1");
    }
    const double eps = rdp_to_dp(RdpPoint(RenyiOrder(alpha), rho), delta).epsilon;
    if (eps < best_eps) {
      best_eps = eps;
      best_alpha = alpha;
    }
  }
  return BestDpResult{DpPoint{best_eps, delta}, best_alpha};
}

// The largest zCDP budget B such that B-zCDP (i.e. rho(alpha) = B * alpha)
// implies (eps, delta)-DP:
//   B = (-sqrt(log(1/delta)) + sqrt(log(1/delta) + eps))^2.
// eps = 0 maps to B = 0.
inline double zcdp_budget_for_dp(double eps, double delta) {
  if (!std::isfinite(eps) || eps < 0.0) {
    throw ParameterError("zcdp_budget_for_dp: eps must be finite and >= 0");
  }
  if (!(delta > 0.0) || !(delta < 1.0)) {
    throw ParameterError("zcdp_budget_for_dp: delta must lie in (0, 1)");
  }
  const double log_inv_delta = std::log(1.0 / delta);
  const double root = -std::sqrt(log_inv_delta) + std::sqrt(log_inv_delta + eps);
  return root * root;
}

// Default order grid for curves: quarter steps from 1.25 to 5, unit steps
// to 64, then a quarter-octave geometric tail to 256. The tail keeps the
// grid short while still bracketing conversion optima that land between 64
// and 128 (common for sigma in the few-hundreds at delta ~ 1e-5).
inline std::vector<double> default_alpha_grid() {
  std::vector<double> grid;
  for (int j = 1; j <= 16; ++j) grid.push_back(1.0 + 0.25 * j);
  for (int a = 2; a <= 64; ++a) grid.push_back(static_cast<double>(a));
  for (int j = 1; j <= 8; ++j) {
    grid.push_back(64.0 * std::pow(2.0, 0.25 * j));
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

}  // namespace ipa
