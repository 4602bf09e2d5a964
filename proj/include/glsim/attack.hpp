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

// Malicious-server toolkit: trap weights, the amplification head, round
// planning and removal of known sybil contributions.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "glsim/error.hpp"
#include "glsim/fl.hpp"
#include "glsim/nn.hpp"
#include "glsim/rng.hpp"
#include "json.hpp"

namespace glsim {

// Each row gets exactly round(negative_fraction * in) negative entries at
// random positions. Magnitudes are scale * U(1 - jitter, 1); negative
// entries are further multiplied by (1 + gamma). Bias is zero.
struct TrapWeightConfig {
  double negative_fraction = 0.5;
  double scale = 0.0;   // <= 0 selects 1 / sqrt(in)
  double gamma = 0.04;
  double jitter = 0.0;  // 0 gives constant-magnitude rows
  std::uint64_t seed = 0;
};

inline void validate(const TrapWeightConfig& cfg) {
  if (!(cfg.negative_fraction > 0.0 && cfg.negative_fraction < 1.0))
    throw ConfigError("trap: negative fraction must lie in (0,1)");
  if (!(cfg.gamma >= 0.0)) throw ConfigError("trap: gamma must be non-negative");
  if (!(cfg.jitter >= 0.0 && cfg.jitter < 1.0)) throw ConfigError("trap: jitter must lie in [0,1)");
}

inline DenseLayer init_trap_weights(DenseLayer layer, const TrapWeightConfig& cfg,
                                    RngStream& rng) {
  validate(cfg);
  const std::size_t in = layer.in_dim();
  const double s = cfg.scale > 0.0 ? cfg.scale : 1.0 / std::sqrt(static_cast<double>(in));
  const auto negatives =
      static_cast<std::size_t>(std::llround(cfg.negative_fraction * static_cast<double>(in)));
  std::vector<std::size_t> order(in);
  for (std::size_t r = 0; r < layer.out_dim(); ++r) {
    for (std::size_t i = 0; i < in; ++i) order[i] = i;
    shuffle(order.begin(), order.end(), rng);
    auto row = layer.weights.row(r);
    for (std::size_t k = 0; k < in; ++k) {
      double mag = s * (cfg.jitter > 0.0 ? rng.uniform(1.0 - cfg.jitter, 1.0) : 1.0);
      row[order[k]] = k < negatives ? -mag * (1.0 + cfg.gamma) : mag;
    }
  }
  std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
  return layer;
}

struct AmplificationConfig {
  bool enabled = false;
  double hot_fraction = 0.1;
  double hot_value = 1.0;
  double cold_value = 0.0;
};

inline std::size_t hot_count(const AmplificationConfig& cfg, std::size_t width) {
  return static_cast<std::size_t>(std::ceil(cfg.hot_fraction * static_cast<double>(width) - 1e-9));
}

// Adds one output class fed by a random subset of the previous layer's
// neurons. The subset is the prefix of a random permutation, so for a fixed
// rng state a smaller fraction selects a subset of a larger one.
inline Model build_amplified_head(const Model& model, const AmplificationConfig& cfg,
                                  RngStream& rng, std::vector<std::size_t>* hot_out = nullptr) {
  if (!cfg.enabled) return model;
  if (model.layers.empty()) throw ConfigError("amplification needs a classification layer");
  Model out = model;
  DenseLayer& head = out.layers.back();
  const std::size_t width = head.in_dim();
  if (!(cfg.hot_fraction > 0.0 && cfg.hot_fraction <= 1.0))
    throw ConfigError("amplification: hot fraction must lie in (0,1]");
  const std::size_t hot = hot_count(cfg, width);
  if (hot < 1) throw ConfigError("amplification: hot fraction selects no neuron");
  std::vector<std::size_t> perm(width);
  for (std::size_t i = 0; i < width; ++i) perm[i] = i;
  shuffle(perm.begin(), perm.end(), rng);
  perm.resize(hot);
  std::sort(perm.begin(), perm.end());

  Matrix w(head.out_dim() + 1, width, 0.0);
  std::copy(head.weights.data.begin(), head.weights.data.end(), w.data.begin());
  auto extra = w.row(head.out_dim());
  std::fill(extra.begin(), extra.end(), cfg.cold_value);
  for (auto i : perm) extra[i] = cfg.hot_value;
  head.weights = std::move(w);
  head.bias.push_back(0.0);
  if (hot_out) *hot_out = perm;
  return out;
}

struct AttackPlan {
  UserId target = 0;
  std::vector<UserId> sybils;
  std::map<UserId, SybilPayload> payloads;
  std::vector<UserId> bystanders;  // honest non-targets in a mixed roster
  TrapWeightConfig trap;
  AmplificationConfig amplification;
  std::size_t round_index = 0;
};

struct PlanRequest {
  std::size_t participants = 100;
  std::size_t round_index = 0;
  DPConfig dp;
  double learning_rate = 0.1;
  bool allow_mixed = false;               // fill with honest bystanders
  std::optional<std::size_t> max_sybils;  // mixed rosters: sybils to use
  bool skip_update = false;
  TrapWeightConfig trap;
  AmplificationConfig amplification;
};

inline std::pair<RoundConfig, AttackPlan> plan_malicious_round(const ServerState& state,
                                                               UserId target,
                                                               const PlanRequest& req) {
  if (req.participants < 2) throw PlanningError("a targeted round needs at least 2 participants");
  if (!state.has_user(target) || state.user(target).kind != UserKind::kHonest)
    throw PlanningError("unknown target user " + std::to_string(target));
  const std::size_t available = state.ids(UserKind::kSybil).size();
  if (!req.allow_mixed && available < req.participants - 1)
    throw PlanningError("pure sybil roster needs " + std::to_string(req.participants - 1) +
                        " sybils, only " + std::to_string(available) + " provisioned");
  if (req.allow_mixed && req.max_sybils && *req.max_sybils > available)
    throw PlanningError("plan asks for more sybils than provisioned");

  RoundConfig cfg;
  cfg.round_index = req.round_index;
  cfg.participants = req.participants;
  cfg.sampling = Sampling::kTargeted;
  cfg.target = target;
  cfg.max_sybils = req.allow_mixed ? req.max_sybils : std::optional<std::size_t>{};
  cfg.dp = req.dp;
  cfg.dp.participants = req.participants;
  cfg.learning_rate = req.learning_rate;
  cfg.malicious = true;
  cfg.skip_update = req.skip_update;

  RngStream unused(state.seed, 0);  // targeted sampling draws no randomness
  auto roster = sample_users(state, cfg, unused);

  AttackPlan plan;
  plan.target = target;
  plan.round_index = req.round_index;
  plan.trap = req.trap;
  plan.amplification = req.amplification;
  for (UserId u : roster) {
    if (u == target) continue;
    const auto& p = state.user(u);
    if (p.kind == UserKind::kSybil) {
      plan.sybils.push_back(u);
      plan.payloads.emplace(u, p.payload);
    } else {
      plan.bystanders.push_back(u);
    }
  }
  return {cfg, plan};
}

inline std::vector<UserId> planned_roster(const AttackPlan& plan) {
  std::vector<UserId> r{plan.target};
  r.insert(r.end(), plan.sybils.begin(), plan.sybils.end());
  r.insert(r.end(), plan.bystanders.begin(), plan.bystanders.end());
  return r;
}

// aggregate minus every stored sybil payload.
inline GradientUpdate subtract_sybil_contributions(const GradientUpdate& aggregate,
                                                   const AttackPlan& plan) {
  GradientUpdate out = aggregate;
  double constant_total = 0.0;
  for (UserId s : plan.sybils) {
    auto it = plan.payloads.find(s);
    if (it == plan.payloads.end())
      throw PlanningError("plan lacks the payload of sybil " + std::to_string(s));
    const SybilPayload& p = it->second;
    if (p.kind == SybilPayload::Kind::kConstant) {
      constant_total += p.value;
    } else if (p.kind == SybilPayload::Kind::kFixed) {
      if (!p.fixed || !same_shape(*p.fixed, aggregate))
        throw PlanningError("sybil payload shape does not match the round's aggregate");
      accumulate(out, *p.fixed, -1.0);
    }
  }
  if (constant_total != 0.0)
    for_each_block(out, [&](std::span<double> b) {
      for (double& v : b) v -= constant_total;
    });
  return out;
}

// Same, after checking that the record belongs to the planned round.
inline GradientUpdate subtract_sybil_contributions(const GradientUpdate& aggregate,
                                                   const AttackPlan& plan,
                                                   const RoundRecord& record) {
  auto expected = planned_roster(plan);
  auto got = record.roster;
  std::sort(expected.begin(), expected.end());
  std::sort(got.begin(), got.end());
  if (record.round_index != plan.round_index || expected != got)
    throw PlanningError("round record does not match the attack plan");
  return subtract_sybil_contributions(aggregate, plan);
}

inline nlohmann::ordered_json to_json(const AttackPlan& p) {
  nlohmann::ordered_json j;
  j["round"] = p.round_index;
  j["target"] = p.target;
  j["sybils"] = p.sybils;
  j["bystanders"] = p.bystanders;
  nlohmann::ordered_json payloads = nlohmann::ordered_json::object();
  for (const auto& [id, pl] : p.payloads) {
    const char* kind = pl.kind == SybilPayload::Kind::kZeros      ? "zeros"
                       : pl.kind == SybilPayload::Kind::kConstant ? "constant"
                                                                  : "fixed";
    nlohmann::ordered_json e = {{"kind", kind}};
    if (pl.kind == SybilPayload::Kind::kConstant) e["value"] = pl.value;
    payloads[std::to_string(id)] = e;
  }
  j["payloads"] = payloads;
  j["trap"] = {{"negative_fraction", p.trap.negative_fraction},
               {"scale", p.trap.scale},
               {"gamma", p.trap.gamma},
               {"jitter", p.trap.jitter},
               {"seed", p.trap.seed}};
  j["amplification"] = {{"enabled", p.amplification.enabled},
                        {"hot_fraction", p.amplification.hot_fraction},
                        {"hot_value", p.amplification.hot_value},
                        {"cold_value", p.amplification.cold_value}};
  return j;
}

}  // namespace glsim
