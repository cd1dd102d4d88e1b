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

#include "ipa/rng.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

namespace ipa {
namespace {

TEST(RngTest, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(a.next_u64(), b.next_u64());
  }
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(a.gaussian(), b.gaussian());
  }
}

TEST(RngTest, GaussianConsumesExactlyTwoWords) {
  Rng rng(7);
  EXPECT_EQ(rng.position(), 0u);
  rng.gaussian();
  EXPECT_EQ(rng.position(), 2u);
  rng.uniform();
  EXPECT_EQ(rng.position(), 3u);
}

TEST(RngTest, RestoreResumesMidStream) {
  Rng full(123);
  std::vector<double> expected;
  for (int i = 0; i < 20; ++i) expected.push_back(full.gaussian());

  Rng first(123);
  for (int i = 0; i < 8; ++i) first.gaussian();
  Rng resumed = Rng::restore(first.seed(), first.position());
  for (int i = 8; i < 20; ++i) {
    EXPECT_EQ(resumed.gaussian(), expected[i]) << i;
  }
}

TEST(RngTest, GaussianMomentsAreRoughlyStandardNormal) {
  Rng rng(2026);
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.gaussian();
    sum += x;
    sumsq += x * x;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  EXPECT_NEAR(mean, 0.0, 0.01);
  EXPECT_NEAR(var, 1.0, 0.02);
}

TEST(RngTest, UniformStaysInHalfOpenUnitInterval) {
  Rng rng(5);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(RngTest, MixSeedSeparatesStreams) {
  EXPECT_NE(mix_seed(1), mix_seed(2));
  EXPECT_NE(mix_seed(0, 1), mix_seed(1, 0));
}

}  // namespace
}  // namespace ipa
