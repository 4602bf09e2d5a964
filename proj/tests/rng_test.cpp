// Copyright 2026 The glsim Authors.
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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "glsim/rng.hpp"

namespace glsim {
namespace {

TEST(Rng, SplitMixReferenceOutputs) {
  // Reference outputs of SplitMix64 seeded with 0 (Vigna's splitmix64.c).
  std::uint64_t s = 0;
  auto next = [&] {
    s += kGamma;
    return mix64(s);
  };
  EXPECT_EQ(next(), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(next(), 0x6e789e6aa1b965f4ULL);
  EXPECT_EQ(next(), 0x06c45d188009454fULL);
}

TEST(Rng, SameSeedSameStream) {
  RngStream a(42, 7), b(42, 7);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, DifferentStreamsDiffer) {
  RngStream a(42, 7), b(42, 8), c(43, 7);
  int same_ab = 0, same_ac = 0;
  for (int i = 0; i < 100; ++i) {
    auto x = a.next_u64();
    same_ab += x == b.next_u64();
    same_ac += x == c.next_u64();
  }
  EXPECT_EQ(same_ab, 0);
  EXPECT_EQ(same_ac, 0);
}

TEST(Rng, ChildDoesNotAdvanceParent) {
  RngStream a(1, 2), b(1, 2);
  auto c = a.child("x");
  (void)c.next_u64();
  EXPECT_EQ(a.next_u64(), b.next_u64());
  EXPECT_EQ(a.child("x").next_u64(), b.child("x").next_u64());
  EXPECT_NE(a.child("x").next_u64(), a.child("y").next_u64());
}

TEST(Rng, UniformInUnitInterval) {
  RngStream r(3, 0);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / n, 0.5, 4 * std::sqrt(1.0 / 12 / n));
}

TEST(Rng, BelowIsUnbiased) {
  RngStream r(5, 0);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) ++counts[r.below(7)];
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - n / 7.0) * (c - n / 7.0) / (n / 7.0);
  EXPECT_LT(chi2, 22.5);  // p ~ 0.001 at 6 dof
  EXPECT_EQ(r.below(1), 0u);
  EXPECT_EQ(r.below(0), 0u);
}

TEST(Rng, NormalMoments) {
  RngStream r(9, 0);
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = r.normal();
    s += x;
    s2 += x * x;
  }
  double m = s / n;
  EXPECT_NEAR(m, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(s2 / n - m * m, 1.0, 4.0 * std::sqrt(2.0 / n));
}

TEST(Rng, ShuffleIsPermutationAndDeterministic) {
  std::vector<int> v(50), w;
  std::iota(v.begin(), v.end(), 0);
  w = v;
  RngStream a(11, 0), b(11, 0);
  shuffle(v.begin(), v.end(), a);
  shuffle(w.begin(), w.end(), b);
  EXPECT_EQ(v, w);
  std::set<int> s(v.begin(), v.end());
  EXPECT_EQ(s.size(), 50u);
}

TEST(Rng, HashLabelIsFnv1a) {
  EXPECT_EQ(hash_label(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(hash_label("a"), 0xaf63dc4c8601ec8cULL);
}

}  // namespace
}  // namespace glsim
