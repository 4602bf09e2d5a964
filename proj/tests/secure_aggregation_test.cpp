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

#include <cmath>

#include "glsim/secure_aggregation.hpp"

namespace glsim {
namespace {

GradientUpdate shaped(RngStream& rng, bool zero) {
  GradientUpdate g;
  g.layers.resize(2);
  g.layers[0].weights = Matrix(3, 4);
  g.layers[0].bias.assign(3, 0.0);
  g.layers[1].weights = Matrix(2, 3);
  g.layers[1].bias.assign(2, 0.0);
  if (!zero) for_each_block(g, [&](std::span<double> b) {
      for (double& v : b) v = rng.normal();
    });
  return g;
}

std::vector<UserId> roster(std::size_t m) {
  std::vector<UserId> r;
  for (std::size_t i = 0; i < m; ++i) r.push_back(static_cast<UserId>(3 * i + 1));
  return r;
}

TEST(Masks, PairCountsAndSymmetry) {
  RngStream rng(1, 0);
  EXPECT_EQ(setup_masks(roster(2), rng).pair_count(), 1u);
  auto m = setup_masks(roster(5), rng);
  EXPECT_EQ(m.pair_count(), 10u);
  for (UserId u : m.participants())
    for (UserId v : m.participants()) EXPECT_EQ(m.seed(u, v), m.seed(v, u));
}

TEST(Masks, TooFewParticipants) {
  RngStream rng(1, 0);
  EXPECT_THROW(setup_masks(roster(1), rng), ProtocolError);
  EXPECT_THROW(setup_masks({4, 4}, rng), ProtocolError);
}

TEST(Masks, ControlledPairsUnmasked) {
  RngStream rng(1, 0);
  auto m = setup_masks(roster(5), rng, {4, 7, 10});
  EXPECT_FALSE(m.live(4, 7));
  EXPECT_TRUE(m.live(1, 4));
  EXPECT_EQ(m.live_pair_count(), 10u - 3u);
}

TEST(Mask, TwoZeroUpdatesCancelExactly) {
  RngStream rng(2, 0);
  auto masks = setup_masks({0, 1}, rng);
  auto z = shaped(rng, true);
  auto a = mask_update(z, 0, masks), b = mask_update(z, 1, masks);
  std::vector<MaskedUpdate> both{a, b};
  auto sum = aggregate(both, masks);
  for_each_block(sum, [](std::span<double> s) {
    for (double v : s) EXPECT_EQ(v, 0.0);
  });
  EXPECT_GT(max_abs_diff(a.values, z), 0.0);
}

TEST(Mask, UnknownParticipant) {
  RngStream rng(2, 0);
  auto masks = setup_masks({0, 1}, rng);
  EXPECT_THROW(mask_update(shaped(rng, true), 5, masks), ProtocolError);
}

TEST(Aggregate, EqualsPlainSumAndConceals) {
  RngStream rng(3, 0);
  for (int t = 0; t < 50; ++t) {
    const std::size_t m = 2 + rng.below(63);
    auto r = roster(m);
    auto masks = setup_masks(r, rng);
    auto plain = shaped(rng, true);
    std::vector<MaskedUpdate> masked;
    for (UserId u : r) {
      auto g = shaped(rng, false);
      accumulate(plain, g);
      masked.push_back(mask_update(g, u, masks));
      EXPECT_GT(max_abs_diff(masked.back().values, g), 0.0);
    }
    EXPECT_LE(max_abs_diff(aggregate(masked, masks), plain), 1e-9);
  }
}

TEST(Aggregate, MissingOrDuplicateAborts) {
  RngStream rng(4, 0);
  auto masks = setup_masks(roster(3), rng);
  auto g = shaped(rng, false);
  std::vector<MaskedUpdate> two{mask_update(g, 1, masks), mask_update(g, 4, masks)};
  EXPECT_THROW(aggregate(two, masks), ProtocolError);
  two.push_back(two.front());
  EXPECT_THROW(aggregate(two, masks), ProtocolError);
}

}  // namespace
}  // namespace glsim
