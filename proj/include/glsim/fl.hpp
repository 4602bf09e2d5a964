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

// FedSGD round orchestration with secure aggregation and DP.
//
// Every random draw in a round derives from (master seed, round index,
// user id), so a logged round replays bit-exactly from the server state it
// started from.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "glsim/checksum.hpp"
#include "glsim/dataset.hpp"
#include "glsim/dp.hpp"
#include "glsim/error.hpp"
#include "glsim/nn.hpp"
#include "glsim/rng.hpp"
#include "glsim/secure_aggregation.hpp"
#include "json.hpp"

namespace glsim {

enum class UserKind { kHonest, kSybil };

struct SybilPayload {
  enum class Kind { kZeros, kConstant, kFixed };
  Kind kind = Kind::kZeros;
  double value = 0.0;                            // kConstant
  std::shared_ptr<const GradientUpdate> fixed;   // kFixed

  static SybilPayload zeros() { return {}; }
  static SybilPayload constant(double v) { return {Kind::kConstant, v, nullptr}; }
  static SybilPayload fixed_update(GradientUpdate u) {
    return {Kind::kFixed, 0.0, std::make_shared<const GradientUpdate>(std::move(u))};
  }
};

// Shared example pool; users own index slices into it.
struct DataPool {
  std::shared_ptr<const Dataset> images;
  std::shared_ptr<const TextDataset> text;

  MiniBatch batch(const std::vector<std::size_t>& indices) const {
    if (text) return make_text_batch(*text, indices);
    if (images) return make_batch(*images, indices);
    throw InputError("data pool is empty");
  }
};

struct UserProfile {
  UserId id = 0;
  UserKind kind = UserKind::kHonest;
  std::vector<std::size_t> data;  // indices into the pool
  std::size_t batch_size = 20;
  DPConfig dp;
  RngStream rng;
  SybilPayload payload;  // sybils only
};

enum class Sampling { kUniformHonest, kTargeted };

struct RoundConfig {
  std::size_t round_index = 0;
  std::size_t participants = 100;
  Sampling sampling = Sampling::kUniformHonest;
  UserId target = 0;
  std::optional<std::size_t> max_sybils;  // Targeted: cap on sybils in the roster
  DPConfig dp;
  double learning_rate = 0.1;
  bool malicious = false;
  bool skip_update = false;            // malicious rounds only
  bool mask_sybil_pairs = false;       // mask sybil-sybil pairs too
};

struct RoundRecord {
  std::size_t round_index = 0;
  std::vector<UserId> roster;
  bool malicious = false;
  bool applied = false;
  DPConfig dp;
  double learning_rate = 0.0;
  std::uint64_t master_seed = 0;
  std::uint64_t mask_round_seed = 0;
  std::string model_checksum;                  // model the round was computed on
  std::vector<std::string> aggregate_checksums;  // one per layer
};

struct ServerState {
  Model model;
  std::vector<UserProfile> registry;
  std::vector<RoundRecord> log;
  std::uint64_t seed = 0;
  std::shared_ptr<const DataPool> data;

  const UserProfile& user(UserId id) const {
    for (const auto& u : registry)
      if (u.id == id) return u;
    throw ConfigError("unknown user " + std::to_string(id));
  }
  bool has_user(UserId id) const {
    for (const auto& u : registry)
      if (u.id == id) return true;
    return false;
  }
  UserId next_id() const {
    UserId n = 0;
    for (const auto& u : registry) n = std::max<UserId>(n, u.id + 1);
    return n;
  }
  std::vector<UserId> ids(UserKind kind) const {
    std::vector<UserId> out;
    for (const auto& u : registry)
      if (u.kind == kind) out.push_back(u.id);
    return out;
  }
};

inline std::string checksum(const GradientUpdate& g, std::size_t layer) {
  Fnv1a64 h;
  h.update(g.layers[layer].weights.data);
  h.update(g.layers[layer].bias);
  return hex64(h.digest());
}

inline std::string checksum(const Model& m) {
  Fnv1a64 h;
  for (const auto& l : m.layers) {
    h.update(l.weights.data);
    h.update(l.bias);
  }
  return hex64(h.digest());
}

// IID split: shuffle all indices and deal equal slices to `users` users.
inline std::vector<std::vector<std::size_t>> partition_iid(std::size_t count, std::size_t users,
                                                           RngStream& rng) {
  if (users == 0) return {};
  std::vector<std::size_t> idx(count);
  for (std::size_t i = 0; i < count; ++i) idx[i] = i;
  shuffle(idx.begin(), idx.end(), rng);
  std::vector<std::vector<std::size_t>> parts(users);
  const std::size_t per = count / users;
  for (std::size_t u = 0; u < users; ++u)
    parts[u].assign(idx.begin() + static_cast<std::ptrdiff_t>(u * per),
                    idx.begin() + static_cast<std::ptrdiff_t>((u + 1) * per));
  return parts;
}

// Non-IID split: user u holds only examples of class u mod classes.
inline std::vector<std::vector<std::size_t>> partition_by_class(
    const std::vector<std::uint32_t>& labels, std::uint32_t classes, std::size_t users) {
  std::vector<std::vector<std::size_t>> by_class(classes);
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  std::vector<std::size_t> users_of_class(classes, 0);
  for (std::size_t u = 0; u < users; ++u) ++users_of_class[u % classes];
  std::vector<std::size_t> taken(classes, 0);
  std::vector<std::vector<std::size_t>> parts(users);
  for (std::size_t u = 0; u < users; ++u) {
    const std::size_t c = u % classes;
    const std::size_t per = by_class[c].size() / users_of_class[c];
    auto begin = by_class[c].begin() + static_cast<std::ptrdiff_t>(taken[c]);
    parts[u].assign(begin, begin + static_cast<std::ptrdiff_t>(per));
    taken[c] += per;
  }
  return parts;
}

inline std::vector<UserId> provision_honest(ServerState& state,
                                            const std::vector<std::vector<std::size_t>>& slices,
                                            std::size_t batch_size, const DPConfig& dp) {
  std::vector<UserId> ids;
  UserId id = state.next_id();
  for (const auto& s : slices) {
    UserProfile u;
    u.id = id++;
    u.kind = UserKind::kHonest;
    u.data = s;
    u.batch_size = batch_size;
    u.dp = dp;
    u.rng = RngStream(state.seed, derive_key(hash_label("user"), u.id));
    state.registry.push_back(std::move(u));
    ids.push_back(state.registry.back().id);
  }
  return ids;
}

inline std::vector<UserId> provision_sybils(ServerState& state, std::size_t count,
                                            const SybilPayload& payload = SybilPayload::zeros()) {
  std::vector<UserId> ids;
  UserId id = state.next_id();
  for (std::size_t i = 0; i < count; ++i) {
    UserProfile u;
    u.id = id++;
    u.kind = UserKind::kSybil;
    u.batch_size = 0;
    u.dp.mode = DPMode::kNone;
    u.rng = RngStream(state.seed, derive_key(hash_label("user"), u.id));
    u.payload = payload;
    state.registry.push_back(std::move(u));
    ids.push_back(state.registry.back().id);
  }
  return ids;
}

inline std::vector<UserId> sample_users(const ServerState& state, const RoundConfig& cfg,
                                        RngStream& rng) {
  const std::size_t m = cfg.participants;
  if (m > state.registry.size())
    throw ConfigError("round needs " + std::to_string(m) + " users but only " +
                      std::to_string(state.registry.size()) + " are registered");
  auto honest = state.ids(UserKind::kHonest);
  if (cfg.sampling == Sampling::kUniformHonest) {
    if (m > honest.size()) throw ConfigError("not enough honest users for uniform sampling");
    shuffle(honest.begin(), honest.end(), rng);
    honest.resize(m);
    std::sort(honest.begin(), honest.end());
    return honest;
  }
  if (!state.has_user(cfg.target) || state.user(cfg.target).kind != UserKind::kHonest)
    throw ConfigError("unknown target user " + std::to_string(cfg.target));
  auto sybils = state.ids(UserKind::kSybil);
  std::size_t k = std::min(sybils.size(), m - 1);
  if (cfg.max_sybils) k = std::min(k, *cfg.max_sybils);
  std::vector<UserId> roster{cfg.target};
  roster.insert(roster.end(), sybils.begin(), sybils.begin() + static_cast<std::ptrdiff_t>(k));
  // Bystanders are taken in registry order so that larger rosters extend
  // smaller ones.
  for (UserId h : honest) {
    if (roster.size() == m) break;
    if (h != cfg.target) roster.push_back(h);
  }
  if (roster.size() != m) throw ConfigError("not enough users to fill a mixed roster");
  return roster;
}

inline RngStream round_stream(const UserProfile& user, std::size_t round, std::string_view what) {
  return user.rng.child(round).child(what);
}

// Indices of the mini-batch an honest user trains on in a given round.
inline std::vector<std::size_t> batch_indices(const UserProfile& user, std::size_t round) {
  if (user.data.empty()) throw InputError("user " + std::to_string(user.id) + " has no local data");
  if (user.data.size() < user.batch_size)
    throw InputError("user " + std::to_string(user.id) +
                     " holds fewer examples than its batch size");
  auto idx = user.data;
  RngStream rng = round_stream(user, round, "batch");
  // Partial Fisher-Yates: the first B positions are a uniform sample.
  for (std::size_t i = 0; i < user.batch_size; ++i) {
    std::size_t j = i + rng.below(idx.size() - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(user.batch_size);
  return idx;
}

inline GradientUpdate sybil_update(const UserProfile& user, const Model& model) {
  switch (user.payload.kind) {
    case SybilPayload::Kind::kZeros:
      return zeros_like(model);
    case SybilPayload::Kind::kConstant: {
      GradientUpdate g = zeros_like(model);
      for_each_block(g, [&](std::span<double> b) {
        std::fill(b.begin(), b.end(), user.payload.value);
      });
      return g;
    }
    case SybilPayload::Kind::kFixed:
      return *user.payload.fixed;
  }
  return zeros_like(model);
}

// Unclipped, noise-free gradient of an honest user's round batch.
inline GradientUpdate raw_gradient(const UserProfile& user, const Model& model,
                                   const DataPool& data, std::size_t round) {
  MiniBatch batch = data.batch(batch_indices(user, round));
  return backward(model, forward(model, batch), batch);
}

inline GradientUpdate local_update(const UserProfile& user, const Model& model,
                                   const DataPool& data, std::size_t round,
                                   const DPConfig& dp) {
  if (user.kind == UserKind::kSybil) return sybil_update(user, model);
  RngStream noise = round_stream(user, round, "dp");
  return apply_dp(raw_gradient(user, model, data, round), dp, noise);
}

inline Model apply_aggregate(const Model& model, const GradientUpdate& aggregate, double lr,
                             std::size_t m) {
  if (!matches_model(aggregate, model)) throw InputError("aggregate shape does not match model");
  if (m == 0) throw ConfigError("apply_aggregate: M must be positive");
  Model out = model;
  const double s = -lr / static_cast<double>(m);
  for (std::size_t i = 0; i < out.layers.size(); ++i) {
    axpy(s, aggregate.layers[i].weights.data, out.layers[i].weights.data);
    axpy(s, aggregate.layers[i].bias, out.layers[i].bias);
  }
  return out;
}

struct RoundResult {
  GradientUpdate aggregate;  // sum of updates (the server divides by M)
  RoundRecord record;
  std::map<UserId, GradientUpdate> captured;  // simulator-side ground truth
};

// Runs one round: broadcast, local updates, masking, aggregation, and (unless
// a malicious round asks to skip it) the model step. Users listed in
// `capture` have their post-DP updates returned for evaluation.
inline RoundResult run_round(ServerState& state, const RoundConfig& cfg,
                             const std::vector<UserId>& roster,
                             const std::set<UserId>& capture = {}) {
  if (roster.size() != cfg.participants)
    throw ConfigError("roster size does not match the round's participant count");
  if (!state.data) throw ConfigError("server state has no data pool");
  const Model model = state.model;  // broadcast copy
  DPConfig dp = cfg.dp;
  dp.participants = cfg.participants;
  validate(dp);

  std::vector<UserId> controlled;
  if (!cfg.mask_sybil_pairs)
    for (UserId u : roster)
      if (state.user(u).kind == UserKind::kSybil) controlled.push_back(u);
  RngStream mask_rng = RngStream(state.seed, hash_label("masks")).child(cfg.round_index);
  MaskSeedMatrix masks = setup_masks(roster, mask_rng, controlled);

  RoundResult res;
  Aggregator agg(masks);
  for (UserId id : roster) {
    const UserProfile& u = state.user(id);
    GradientUpdate upd = local_update(u, model, *state.data, cfg.round_index, dp);
    agg.add(mask_update(upd, id, masks));
    if (capture.count(id)) res.captured.emplace(id, std::move(upd));
  }
  res.aggregate = agg.finish();

  RoundRecord& rec = res.record;
  rec.round_index = cfg.round_index;
  rec.roster = roster;
  rec.malicious = cfg.malicious;
  rec.dp = dp;
  rec.learning_rate = cfg.learning_rate;
  rec.master_seed = state.seed;
  rec.mask_round_seed = masks.round_seed();
  rec.model_checksum = checksum(model);
  for (std::size_t l = 0; l < res.aggregate.layers.size(); ++l)
    rec.aggregate_checksums.push_back(checksum(res.aggregate, l));
  rec.applied = !(cfg.malicious && cfg.skip_update);
  if (rec.applied)
    state.model = apply_aggregate(state.model, res.aggregate, cfg.learning_rate, cfg.participants);
  state.log.push_back(rec);
  return res;
}

inline nlohmann::ordered_json to_json(const DPConfig& dp) {
  return {{"mode", to_string(dp.mode)},
          {"clip", dp.clip},
          {"sigma", dp.sigma},
          {"participants", dp.participants},
          {"clip_scope", dp.scope == ClipScope::kPerLayer ? "layer" : "global"}};
}

// Round log schema: round index, roster, config, seeds, per-layer aggregate
// checksums (FNV-1a 64 over the little-endian doubles of weights then bias).
inline nlohmann::ordered_json to_json(const RoundRecord& r) {
  nlohmann::ordered_json j;
  j["round"] = r.round_index;
  j["roster"] = r.roster;
  j["config"] = {{"malicious", r.malicious},
                 {"applied", r.applied},
                 {"learning_rate", r.learning_rate},
                 {"dp", to_json(r.dp)}};
  j["seeds"] = {{"master", r.master_seed}, {"mask_round", r.mask_round_seed}};
  j["model_checksum"] = r.model_checksum;
  j["aggregate_checksums"] = r.aggregate_checksums;
  return j;
}

}  // namespace glsim
