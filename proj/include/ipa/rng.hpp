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

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace ipa {

// splitmix64 finalizer; used to derive independent stream seeds so that
// partitioned work (fuzz plans, probes) is order-independent.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return mix_seed(a ^ mix_seed(b));
}

// Deterministic random source. The engine is std::mt19937_64 (whose output
// sequence is fixed by the standard) and Gaussian variates use the basic
// Box-Muller transform, so every draw consumes exactly known engine output:
// one 64-bit word per uniform, two words per gaussian. That makes the
// stream position a faithful snapshot of the generator, and keeps artifacts
// byte-reproducible for a given seed on any platform with IEEE doubles.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t next_u64() {
    ++position_;
    return engine_();
  }

  // Uniform in [0, 1), using the top 53 bits of one engine word.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller. u1 is mapped into (0, 1] so the log is
  // finite; the sine branch is discarded so each call costs two words.
  double gaussian() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  double gaussian(double stddev) { return stddev * gaussian(); }

  std::uint64_t seed() const { return seed_; }

  // Number of 64-bit words consumed since construction/restore.
  std::uint64_t position() const { return position_; }

  // Rebuilds the generator at an exact stream position.
  static Rng restore(std::uint64_t seed, std::uint64_t position) {
    Rng rng(seed);
    rng.engine_.discard(position);
    rng.position_ = position;
    return rng;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t position_ = 0;
  std::mt19937_64 engine_;
};

}  // namespace ipa
