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

#include "glsim/attack.hpp"
#include "glsim/experiments.hpp"

namespace glsim {
namespace {

WorldSpec world(std::size_t sybils, SybilPayload payload) {
  WorldSpec w;
  w.seed = 5;
  w.dim = 16;
  w.classes = 4;
  w.honest_users = 3;
  w.examples_per_user = 10;
  w.batch = 5;
  w.hidden = {32};
  w.sybils = sybils;
  w.payload = payload;
  return w;
}

TEST(Trap, ExactNegativeFractionAndZeroBias) {
  DenseLayer l;
  l.weights = Matrix(50, 101);
  l.bias.assign(50, 1.0);
  TrapWeightConfig cfg;
  cfg.negative_fraction = 0.3;
  RngStream rng(1, 0);
  auto t = init_trap_weights(l, cfg, rng);
  for (std::size_t i = 0; i < 50; ++i) {
    std::size_t neg = 0;
    for (double v : t.weights.row(i)) neg += v < 0.0;
    EXPECT_EQ(neg, 30u);
    EXPECT_EQ(t.bias[i], 0.0);
  }
}

TEST(Trap, LargeGammaSilencesNeuronsOnNonNegativeInputs) {
  auto st = build_world(world(0, {}));
  TrapWeightConfig t;
  t.gamma = 10.0;
  arm_trap(st, t);
  MiniBatch b = st.data->batch(batch_indices(st.user(0), 0));
  EXPECT_EQ(extractability_census(st.model, b).extractable_points, 0u);
}

TEST(Trap, ZeroGammaActivatesAboutHalf) {
  WorldSpec w = world(0, {});
  w.dim = 192;
  w.hidden = {400};
  auto st = build_world(w);
  TrapWeightConfig t;
  t.gamma = 0.0;
  arm_trap(st, t);
  MiniBatch b = st.data->batch(batch_indices(st.user(0), 0));
  auto act = first_layer_activity(st.model, b);
  double on = 0.0;
  for (const auto& r : act)
    for (auto a : r) on += a;
  double frac = on / static_cast<double>(act.size() * act.front().size());
  EXPECT_GT(frac, 0.35);
  EXPECT_LT(frac, 0.65);
}

TEST(Amplify, HotCounts) {
  RngStream src(1, 0);
  Model m = make_mlp({8, 1000, 10}, src);
  for (double p : {0.1, 1.0}) {
    AmplificationConfig cfg{true, p, 1.0, 0.0};
    RngStream rng(2, 0);
    auto a = build_amplified_head(m, cfg, rng);
    const auto& head = a.layers.back();
    ASSERT_EQ(head.out_dim(), 11u);
    std::size_t ones = 0;
    for (double v : head.weights.row(10)) ones += v == 1.0;
    EXPECT_EQ(ones, static_cast<std::size_t>(p * 1000));
    for (std::size_t r = 0; r < 10; ++r)
      for (std::size_t c = 0; c < 1000; ++c)
        EXPECT_EQ(head.weights(r, c), m.layers.back().weights(r, c));
  }
  RngStream rng(2, 0);
  EXPECT_EQ(checksum(build_amplified_head(m, {}, rng)), checksum(m));
}

TEST(Plan, PureAndMixed) {
  auto st = build_world(world(99, {}));
  PlanRequest req;
  auto [cfg, plan] = plan_malicious_round(st, 0, req);
  EXPECT_EQ(plan.sybils.size(), 99u);
  EXPECT_TRUE(plan.bystanders.empty());
  EXPECT_TRUE(cfg.malicious);

  req.participants = 10;
  req.allow_mixed = true;
  req.max_sybils = 7;
  auto [c2, p2] = plan_malicious_round(st, 0, req);
  (void)c2;
  EXPECT_EQ(p2.sybils.size(), 7u);
  EXPECT_EQ(p2.bystanders.size(), 2u);
}

TEST(Plan, PureModeNeedsSybils) {
  auto st = build_world(world(0, {}));
  PlanRequest req;
  EXPECT_THROW(plan_malicious_round(st, 0, req), PlanningError);
}

void expect_exposure(SybilPayload payload) {
  auto st = build_world(world(99, payload));
  PlanRequest req;
  req.dp = st.user(0).dp;
  req.skip_update = true;
  auto [cfg, plan] = plan_malicious_round(st, 0, req);
  auto res = run_round(st, cfg, planned_roster(plan), {0});
  auto exposed = subtract_sybil_contributions(res.aggregate, plan, res.record);
  EXPECT_LE(max_abs_diff(exposed, res.captured.at(0)), 1e-9);
}

TEST(Subtract, ExposureForEveryPayloadKind) {
  expect_exposure(SybilPayload::zeros());
  expect_exposure(SybilPayload::constant(0.25));
  auto st = build_world(world(0, {}));
  GradientUpdate fixed = zeros_like(st.model);
  RngStream rng(3, 0);
  for_each_block(fixed, [&](std::span<double> b) {
    for (double& v : b) v = rng.normal();
  });
  expect_exposure(SybilPayload::fixed_update(fixed));
}

TEST(Subtract, ConstantPayloadArithmetic) {
  auto st = build_world(world(4, SybilPayload::constant(0.5)));
  PlanRequest req;
  req.participants = 5;
  auto [cfg, plan] = plan_malicious_round(st, 0, req);
  (void)cfg;
  GradientUpdate agg = zeros_like(st.model);
  auto out = subtract_sybil_contributions(agg, plan);
  for_each_block(out, [](std::span<double> b) {
    for (double v : b) EXPECT_DOUBLE_EQ(v, -2.0);
  });
}

TEST(Subtract, RecordMismatchThrows) {
  auto st = build_world(world(99, {}));
  PlanRequest req;
  auto [cfg, plan] = plan_malicious_round(st, 0, req);
  auto res = run_round(st, cfg, planned_roster(plan));
  plan.round_index = 3;
  EXPECT_THROW(subtract_sybil_contributions(res.aggregate, plan, res.record), PlanningError);
}

}  // namespace
}  // namespace glsim
