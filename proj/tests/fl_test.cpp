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
#include <set>

#include "glsim/experiments.hpp"
#include "glsim/fl.hpp"

namespace glsim {
namespace {

WorldSpec small_world(std::size_t honest, std::size_t sybils, double sigma) {
  WorldSpec w;
  w.seed = 17;
  w.dim = 12;
  w.classes = 3;
  w.honest_users = honest;
  w.examples_per_user = 10;
  w.batch = 4;
  w.hidden = {8};
  w.sybils = sybils;
  w.dp.sigma = sigma;
  return w;
}

RoundConfig targeted(UserId target, std::size_t m, const DPConfig& dp) {
  RoundConfig c;
  c.participants = m;
  c.sampling = Sampling::kTargeted;
  c.target = target;
  c.dp = dp;
  c.malicious = true;
  c.skip_update = true;
  return c;
}

TEST(Registry, ProvisionSybils) {
  auto st = build_world(small_world(2, 0, 0.1));
  EXPECT_TRUE(provision_sybils(st, 0).empty());
  EXPECT_EQ(st.registry.size(), 2u);
  provision_sybils(st, 99);
  EXPECT_EQ(st.ids(UserKind::kSybil).size(), 99u);
}

TEST(Sampling, TargetedContainsTargetOnce) {
  auto st = build_world(small_world(1, 99, 0.1));
  RngStream rng(0, 0);
  auto r = sample_users(st, targeted(0, 100, st.registry[0].dp), rng);
  EXPECT_EQ(r.size(), 100u);
  EXPECT_EQ(std::count(r.begin(), r.end(), 0u), 1);
}

TEST(Sampling, UniformHonestTakesAll) {
  auto st = build_world(small_world(10, 0, 0.1));
  RoundConfig c;
  c.participants = 10;
  RngStream rng(0, 0);
  auto r = sample_users(st, c, rng);
  EXPECT_EQ(std::set<UserId>(r.begin(), r.end()).size(), 10u);
}

TEST(Sampling, MixedRoster) {
  auto st = build_world(small_world(5, 10, 0.1));
  auto c = targeted(0, 8, st.registry[0].dp);
  c.max_sybils = 3;
  RngStream rng(0, 0);
  auto r = sample_users(st, c, rng);
  std::size_t sy = 0, hon = 0;
  for (UserId u : r) (st.user(u).kind == UserKind::kSybil ? sy : hon) += 1;
  EXPECT_EQ(sy, 3u);
  EXPECT_EQ(hon, 5u);
  c.target = 999;
  EXPECT_THROW(sample_users(st, c, rng), ConfigError);
}

TEST(LocalUpdate, SybilZerosAndRawHonest) {
  auto st = build_world(small_world(1, 1, 0.0));
  auto z = local_update(st.user(1), st.model, *st.data, 0, st.user(1).dp);
  EXPECT_EQ(max_abs_diff(z, zeros_like(st.model)), 0.0);
  DPConfig none;
  none.mode = DPMode::kNone;
  none.clip = 1e12;
  auto raw = raw_gradient(st.user(0), st.model, *st.data, 0);
  EXPECT_EQ(max_abs_diff(local_update(st.user(0), st.model, *st.data, 0, none), raw), 0.0);
}

TEST(LocalUpdate, NoDataIsAnError) {
  auto st = build_world(small_world(1, 0, 0.1));
  UserProfile u = st.user(0);
  u.data.clear();
  EXPECT_THROW(local_update(u, st.model, *st.data, 0, u.dp), InputError);
}

TEST(Round, AllSybilZerosGiveZeroAggregate) {
  auto st = build_world(small_world(1, 5, 0.1));
  RoundConfig c;
  c.participants = 5;
  auto res = run_round(st, c, {1, 2, 3, 4, 5});
  EXPECT_EQ(max_abs_diff(res.aggregate, zeros_like(st.model)), 0.0);
}

TEST(Round, TargetedZerosExposeTargetUpdate) {
  auto st = build_world(small_world(1, 99, 0.1));
  auto c = targeted(0, 100, st.registry[0].dp);
  RngStream rng(0, 0);
  auto roster = sample_users(st, c, rng);
  const Model before = st.model;
  auto res = run_round(st, c, roster, {0});
  EXPECT_LE(max_abs_diff(res.aggregate, res.captured.at(0)), 1e-9);
  EXPECT_FALSE(res.record.applied);
  EXPECT_EQ(checksum(st.model), checksum(before));
}

TEST(Round, BenignAggregateIsSumOfNoisedUpdates) {
  auto st = build_world(small_world(10, 0, 0.1));
  RoundConfig c;
  c.participants = 10;
  c.dp = st.registry[0].dp;
  std::vector<UserId> r = st.ids(UserKind::kHonest);
  std::set<UserId> all(r.begin(), r.end());
  const Model before = st.model;
  auto res = run_round(st, c, r, all);
  GradientUpdate sum = zeros_like(before);
  for (auto& [id, g] : res.captured) accumulate(sum, g);
  EXPECT_LE(max_abs_diff(res.aggregate, sum), 1e-9);
  EXPECT_TRUE(res.record.applied);
  auto expected = apply_aggregate(before, res.aggregate, c.learning_rate, 10);
  EXPECT_EQ(checksum(st.model), checksum(expected));
}

TEST(Round, ReplayIsBitExact) {
  auto a = build_world(small_world(10, 0, 0.1));
  auto b = build_world(small_world(10, 0, 0.1));
  RoundConfig c;
  c.participants = 10;
  c.dp = a.registry[0].dp;
  auto r = a.ids(UserKind::kHonest);
  for (std::size_t t = 0; t < 3; ++t) {
    c.round_index = t;
    auto x = run_round(a, c, r), y = run_round(b, c, r);
    EXPECT_EQ(x.record.aggregate_checksums, y.record.aggregate_checksums);
  }
  EXPECT_EQ(checksum(a.model), checksum(b.model));
}

TEST(ApplyAggregate, ZeroAggregateOrRateKeepsModel) {
  auto st = build_world(small_world(1, 0, 0.1));
  auto g = zeros_like(st.model);
  EXPECT_EQ(checksum(apply_aggregate(st.model, g, 0.5, 10)), checksum(st.model));
  for_each_block(g, [](std::span<double> b) {
    for (double& v : b) v = 1.0;
  });
  EXPECT_EQ(checksum(apply_aggregate(st.model, g, 0.0, 10)), checksum(st.model));
}

TEST(Round, RosterSizeMismatch) {
  auto st = build_world(small_world(3, 0, 0.1));
  RoundConfig c;
  c.participants = 3;
  EXPECT_THROW(run_round(st, c, {0, 1}), ConfigError);
}

}  // namespace
}  // namespace glsim
