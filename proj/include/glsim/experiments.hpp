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

// Measurement campaigns: attack round, extractability census, sybil-fraction
// sweep, norm-vs-SNR, amplification, text recovery and benign training.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "glsim/attack.hpp"
#include "glsim/dataset.hpp"
#include "glsim/dp.hpp"
#include "glsim/fl.hpp"
#include "glsim/nn.hpp"
#include "glsim/reconstruction.hpp"
#include "glsim/rng.hpp"
#include "glsim/stats.hpp"

namespace glsim {

// ---------------------------------------------------------------------------
// Census

struct CensusReport {
  std::vector<std::size_t> point_activations;  // neurons activated per point
  std::vector<std::size_t> point_exclusive;    // neurons activated by that point only
  std::vector<std::size_t> neuron_activations;  // activating points per neuron
  std::size_t extractable_points = 0;
  double median_neuron_activations = 0.0;
  std::size_t max_redundancy = 0;

  std::size_t total_from_points() const {
    std::size_t s = 0;
    for (auto v : point_activations) s += v;
    return s;
  }
  std::size_t total_from_neurons() const {
    std::size_t s = 0;
    for (auto v : neuron_activations) s += v;
    return s;
  }
};

inline CensusReport census_from_activity(const std::vector<std::vector<std::uint8_t>>& act) {
  CensusReport r;
  const std::size_t n = act.size();
  const std::size_t w = n ? act.front().size() : 0;
  r.point_activations.assign(n, 0);
  r.point_exclusive.assign(n, 0);
  r.neuron_activations.assign(w, 0);
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t i = 0; i < w; ++i)
      if (act[p][i]) {
        ++r.point_activations[p];
        ++r.neuron_activations[i];
      }
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t i = 0; i < w; ++i)
      if (act[p][i] && r.neuron_activations[i] == 1) ++r.point_exclusive[p];
  for (auto e : r.point_exclusive) {
    if (e > 0) ++r.extractable_points;
    r.max_redundancy = std::max(r.max_redundancy, e);
  }
  std::vector<double> per_neuron(r.neuron_activations.begin(), r.neuron_activations.end());
  r.median_neuron_activations = median(per_neuron);
  return r;
}

inline CensusReport extractability_census(const Model& model, const MiniBatch& batch) {
  if (model.layers.empty() || model.layers.front().activation != Activation::kReLU)
    throw ConfigError("census: first layer must be ReLU");
  return census_from_activity(first_layer_activity(model, batch));
}

// ---------------------------------------------------------------------------
// World construction shared by the studies.

enum class Partition { kIid, kByClass };

struct WorldSpec {
  std::uint64_t seed = 0;
  std::size_t dim = 3072;
  std::uint32_t classes = 10;
  std::size_t honest_users = 10;
  std::size_t examples_per_user = 40;
  std::size_t batch = 20;
  std::vector<std::size_t> hidden{1000};
  double head_gain = 1.0;
  DPConfig dp;
  std::size_t sybils = 0;
  SybilPayload payload;
  Partition partition = Partition::kIid;
  std::shared_ptr<const Dataset> dataset;  // external data; synthetic when null
  SyntheticOptions synthetic;
};

inline ServerState build_world(const WorldSpec& spec) {
  ServerState st;
  st.seed = spec.seed;
  auto pool = std::make_shared<DataPool>();
  if (spec.dataset) {
    pool->images = spec.dataset;
  } else {
    pool->images = std::make_shared<const Dataset>(generate_synthetic(
        spec.dim, spec.classes, spec.honest_users * spec.examples_per_user,
        derive_key(spec.seed, hash_label("data")), spec.synthetic));
  }
  const Dataset& ds = *pool->images;
  if (ds.count() < spec.honest_users * spec.batch)
    throw ConfigError("dataset too small for " + std::to_string(spec.honest_users) +
                      " users with batch " + std::to_string(spec.batch));
  st.data = pool;
  RngStream part_rng(spec.seed, hash_label("partition"));
  auto slices = spec.partition == Partition::kIid
                    ? partition_iid(ds.count(), spec.honest_users, part_rng)
                    : partition_by_class(ds.labels, ds.classes, spec.honest_users);
  std::vector<std::size_t> dims{ds.dim()};
  dims.insert(dims.end(), spec.hidden.begin(), spec.hidden.end());
  dims.push_back(ds.classes);
  RngStream model_rng(spec.seed, hash_label("model"));
  st.model = make_mlp(dims, model_rng, spec.head_gain);
  provision_honest(st, slices, spec.batch, spec.dp);
  provision_sybils(st, spec.sybils, spec.payload);
  return st;
}

inline void arm_trap(ServerState& st, const TrapWeightConfig& trap) {
  RngStream rng(trap.seed, hash_label("trap"));
  st.model.layers.front() = init_trap_weights(st.model.layers.front(), trap, rng);
}

inline double extraction_threshold(double noise_std, double override_eps = 0.0) {
  if (override_eps > 0.0) return override_eps;
  return noise_std > 0.0 ? noise_std : 1e-12;
}

inline double relative_error(std::span<const double> r, std::span<const double> x) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    num += (r[i] - x[i]) * (r[i] - x[i]);
    den += x[i] * x[i];
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

// Rescaled row i of the first layer, sign-aligned if requested. Empty when
// the bias entry is exactly zero.
inline Vector rescaled_row(const GradientUpdate& g, std::size_t i, bool align) {
  const auto& l = g.layers.front();
  if (l.bias[i] == 0.0) return {};
  auto row = l.weights.row(i);
  Vector r(row.begin(), row.end());
  double s = 0.0;
  for (double& v : r) {
    v /= l.bias[i];
    s += v;
  }
  if (align && s < 0.0)
    for (double& v : r) v = -v;
  return r;
}

// ---------------------------------------------------------------------------
// Attack round

struct AttackRoundParams {
  WorldSpec world;
  bool trap_enabled = true;
  TrapWeightConfig trap;
  std::size_t participants = 100;
  std::size_t target_index = 0;  // position among honest users
  double eps = 0.0;              // <= 0 picks extraction_threshold
  bool align = true;
  double snr_threshold = 1.0;
  std::size_t clusters = 0;  // 0 selects 2B
  std::size_t cluster_iters = 100;
  bool skip_update = false;
  bool mask_sybil_pairs = false;
};

struct PointOutcome {
  std::size_t point = 0;
  std::uint32_t label = 0;
  std::size_t activations = 0;
  std::size_t exclusive = 0;
  double best_relative_error = -1.0;  // -1 when no exclusive row was extracted
  double best_snr = 0.0;
};

struct AttackRoundResult {
  RoundRecord record;
  AttackPlan plan;
  double noise_std = 0.0;
  double eps = 0.0;
  double exposure_error = 0.0;  // max |exposed - target's post-DP update|
  Matrix truth;                 // target's mini-batch inputs
  std::vector<ExtractedCandidate> candidates;
  std::vector<PointOutcome> points;
  std::size_t extractable_points = 0;
  std::size_t exact_points = 0;  // extractable points with relative error < 1e-6
  std::vector<ExtractedCandidate> retained;
  std::optional<ClusterResult> clusters;
  std::vector<double> centroid_snr;
  std::size_t averaging_point = 0;
  std::vector<double> averaging_snr;
  Vector averaging_mean;
};

inline AttackRoundResult run_attack_round(const AttackRoundParams& p) {
  WorldSpec ws = p.world;
  ws.sybils = std::max<std::size_t>(ws.sybils, p.participants - 1);
  ServerState st = build_world(ws);
  if (p.trap_enabled) arm_trap(st, p.trap);
  auto honest = st.ids(UserKind::kHonest);
  if (p.target_index >= honest.size()) throw ConfigError("target index out of range");
  const UserId target = honest[p.target_index];

  PlanRequest req;
  req.participants = p.participants;
  req.dp = ws.dp;
  req.trap = p.trap;
  req.skip_update = p.skip_update;
  auto [cfg, plan] = plan_malicious_round(st, target, req);
  cfg.mask_sybil_pairs = p.mask_sybil_pairs;
  const Model model = st.model;
  auto round = run_round(st, cfg, planned_roster(plan), {target});

  AttackRoundResult res;
  res.record = round.record;
  res.plan = plan;
  GradientUpdate exposed = subtract_sybil_contributions(round.aggregate, plan, round.record);
  res.exposure_error = max_abs_diff(exposed, round.captured.at(target));
  res.noise_std = noise_std(round.record.dp);
  res.eps = extraction_threshold(res.noise_std, p.eps);

  const UserProfile& tu = st.user(target);
  MiniBatch batch = st.data->batch(batch_indices(tu, cfg.round_index));
  res.truth = batch.inputs;
  res.candidates = extract_inputs(exposed, 0, res.eps, {p.align});
  score_candidates(res.candidates, res.truth);

  // Per-point outcome against the ground-truth activation pattern.
  auto act = first_layer_activity(model, batch);
  CensusReport census = census_from_activity(act);
  std::map<std::size_t, const ExtractedCandidate*> by_neuron;
  for (const auto& c : res.candidates) by_neuron[c.neuron] = &c;
  for (std::size_t q = 0; q < batch.size(); ++q) {
    PointOutcome o;
    o.point = q;
    o.label = batch.labels[q];
    o.activations = census.point_activations[q];
    o.exclusive = census.point_exclusive[q];
    for (std::size_t i = 0; i < act[q].size(); ++i) {
      if (!act[q][i] || census.neuron_activations[i] != 1) continue;
      auto it = by_neuron.find(i);
      if (it == by_neuron.end()) continue;
      double e = relative_error(it->second->reconstruction, res.truth.row(q));
      if (o.best_relative_error < 0.0 || e < o.best_relative_error) o.best_relative_error = e;
      o.best_snr = std::max(o.best_snr, aligned_snr(it->second->reconstruction, res.truth.row(q)));
    }
    if (o.exclusive > 0) {
      ++res.extractable_points;
      if (o.best_relative_error >= 0.0 && o.best_relative_error < 1e-6) ++res.exact_points;
    }
    res.points.push_back(o);
  }

  // SNR filter, then k-means over what is left.
  res.retained = filter_by_snr(res.candidates, p.snr_threshold);
  std::size_t k = p.clusters ? p.clusters : 2 * batch.size();
  k = std::min(k, res.retained.size());
  if (k > 0) {
    RngStream krng(ws.seed, hash_label("kmeans"));
    res.clusters = kmeans_cluster(res.retained, k, p.cluster_iters, krng);
    for (std::size_t c = 0; c < k; ++c)
      res.centroid_snr.push_back(compute_snr(res.clusters->centroids.row(c), res.truth).snr);
  }

  // Running mean over the rows exclusive to the most redundant point.
  std::size_t best = 0;
  for (std::size_t q = 0; q < res.points.size(); ++q)
    if (res.points[q].exclusive > res.points[best].exclusive) best = q;
  res.averaging_point = best;
  std::vector<ExtractedCandidate> redundant;
  for (std::size_t i = 0; i < census.neuron_activations.size(); ++i) {
    if (!act[best][i] || census.neuron_activations[i] != 1) continue;
    Vector r = rescaled_row(exposed, i, p.align);
    if (r.empty()) continue;
    ExtractedCandidate c;
    c.neuron = i;
    c.reconstruction = std::move(r);
    redundant.push_back(std::move(c));
  }
  if (!redundant.empty()) {
    auto avg = average_redundant(redundant, res.truth.row(best));
    res.averaging_snr = avg.snr;
    res.averaging_mean = avg.mean;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Census study: trap weights against the random initialization.

struct CensusParams {
  WorldSpec world;  // data source and model shape
  TrapWeightConfig trap;
  std::size_t batch = 100;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
};

struct CensusRow {
  std::uint64_t seed = 0;
  std::string init;
  CensusReport report;
};

inline std::vector<CensusRow> census_study(const CensusParams& p) {
  std::vector<CensusRow> rows;
  for (auto seed : p.seeds) {
    WorldSpec ws = p.world;
    ws.seed = seed;
    ws.honest_users = 1;
    ws.examples_per_user = std::max(p.batch, ws.examples_per_user);
    ws.batch = p.batch;
    ws.sybils = 0;
    ServerState st = build_world(ws);
    const UserProfile& u = st.registry.front();
    MiniBatch batch = st.data->batch(batch_indices(u, 0));
    rows.push_back({seed, "random", extractability_census(st.model, batch)});
    TrapWeightConfig trap = p.trap;
    trap.seed = derive_key(seed, hash_label("trap"));
    arm_trap(st, trap);
    rows.push_back({seed, "trap", extractability_census(st.model, batch)});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Sybil-fraction sweep.

struct SweepParams {
  WorldSpec world;  // honest_users must cover the largest benign count
  TrapWeightConfig trap;
  std::size_t participants = 50;
  std::vector<std::size_t> benign{1, 2, 3, 4, 5, 10, 15, 20, 30, 40, 50};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
};

struct SweepPoint {
  std::uint64_t seed = 0;
  std::size_t benign = 0;  // honest users in the round, target included
  std::size_t sybils = 0;
  double fraction = 0.0;
  double mean_snr = 0.0;
};

struct SweepReport {
  std::vector<SweepPoint> per_seed;
  std::vector<SweepPoint> mean;  // averaged over seeds, seed field unused
};

// Fraction: share of the target's batch points that activate some neuron no
// other honest point in the round activates.
// Mean SNR: over the neurons the target's batch activates, power of the
// target's clipped, noise-free weight row inside the exposed row relative to
// the rest (noise and bystander rows).
inline SweepReport sybil_fraction_sweep(const SweepParams& p) {
  const std::size_t m = p.participants;
  std::size_t max_benign = 0;
  for (auto b : p.benign) {
    if (b < 1 || b > m) throw ConfigError("sweep: benign count must lie in [1, M]");
    max_benign = std::max(max_benign, b);
  }
  SweepReport rep;
  for (auto seed : p.seeds) {
    WorldSpec ws = p.world;
    ws.seed = seed;
    ws.honest_users = std::max(ws.honest_users, max_benign);
    ws.sybils = m - 1;
    ServerState base = build_world(ws);
    TrapWeightConfig trap = p.trap;
    trap.seed = derive_key(seed, hash_label("trap"));
    arm_trap(base, trap);
    auto honest = base.ids(UserKind::kHonest);
    const UserId target = honest.front();

    // Activation pattern of every honest user's round-0 batch.
    std::vector<std::vector<std::vector<std::uint8_t>>> acts;
    for (std::size_t u = 0; u < max_benign; ++u) {
      const UserProfile& up = base.user(honest[u]);
      acts.push_back(first_layer_activity(base.model, base.data->batch(batch_indices(up, 0))));
    }
    const std::size_t width = base.model.layers.front().out_dim();
    std::vector<std::uint8_t> target_rows(width, 0);
    for (const auto& a : acts.front())
      for (std::size_t i = 0; i < width; ++i) target_rows[i] |= a[i];

    DPConfig dp = ws.dp;
    dp.participants = m;
    const GradientUpdate clean =
        clip_update(raw_gradient(base.user(target), base.model, *base.data, 0), dp.clip, dp.scope);

    for (auto b : p.benign) {
      ServerState st = base;
      PlanRequest req;
      req.participants = m;
      req.dp = dp;
      req.allow_mixed = true;
      req.max_sybils = m - b;
      req.trap = trap;
      req.skip_update = true;
      auto [cfg, plan] = plan_malicious_round(st, target, req);
      auto round = run_round(st, cfg, planned_roster(plan));
      GradientUpdate exposed = subtract_sybil_contributions(round.aggregate, plan, round.record);

      std::vector<std::size_t> count(width, 0);
      for (std::size_t u = 0; u < b; ++u)
        for (const auto& a : acts[u])
          for (std::size_t i = 0; i < width; ++i) count[i] += a[i];
      std::size_t exclusive_points = 0;
      for (const auto& a : acts.front()) {
        bool ok = false;
        for (std::size_t i = 0; i < width && !ok; ++i) ok = a[i] && count[i] == 1;
        exclusive_points += ok;
      }
      std::vector<double> snrs;
      for (std::size_t i = 0; i < width; ++i)
        if (target_rows[i])
          snrs.push_back(component_snr(exposed.layers.front().weights.row(i),
                                     clean.layers.front().weights.row(i)));
      SweepPoint pt;
      pt.seed = seed;
      pt.benign = b;
      pt.sybils = m - b;
      pt.fraction =
          static_cast<double>(exclusive_points) / static_cast<double>(acts.front().size());
      pt.mean_snr = mean(snrs);
      rep.per_seed.push_back(pt);
    }
  }
  for (std::size_t k = 0; k < p.benign.size(); ++k) {
    SweepPoint avg;
    avg.benign = p.benign[k];
    avg.sybils = m - p.benign[k];
    for (std::size_t s = 0; s < p.seeds.size(); ++s) {
      avg.fraction += rep.per_seed[s * p.benign.size() + k].fraction;
      avg.mean_snr += rep.per_seed[s * p.benign.size() + k].mean_snr;
    }
    avg.fraction /= static_cast<double>(p.seeds.size());
    avg.mean_snr /= static_cast<double>(p.seeds.size());
    rep.mean.push_back(avg);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Norm against SNR.

struct NormSnrRow {
  std::size_t neuron = 0;
  double row_norm = 0.0;
  double bias_gradient = 0.0;
  double snr = 0.0;
  std::size_t match = 0;
  std::size_t activations = 0;  // target points activating the neuron
};

struct NormSnrResult {
  std::vector<NormSnrRow> rows;  // every row passing eps
  double spearman_active = 0.0;  // over rows with at least one activation
  double spearman_all = 0.0;
  std::size_t active_rows = 0;
};

inline NormSnrResult norm_vs_snr_study(const AttackRoundParams& p) {
  WorldSpec ws = p.world;
  ws.sybils = std::max<std::size_t>(ws.sybils, p.participants - 1);
  ServerState st = build_world(ws);
  arm_trap(st, p.trap);
  const UserId target = st.ids(UserKind::kHonest).at(p.target_index);
  PlanRequest req;
  req.participants = p.participants;
  req.dp = ws.dp;
  req.trap = p.trap;
  auto [cfg, plan] = plan_malicious_round(st, target, req);
  const Model model = st.model;
  auto round = run_round(st, cfg, planned_roster(plan));
  GradientUpdate exposed = subtract_sybil_contributions(round.aggregate, plan, round.record);
  MiniBatch batch = st.data->batch(batch_indices(st.user(target), 0));
  auto act = first_layer_activity(model, batch);
  double eps = extraction_threshold(noise_std(round.record.dp), p.eps);
  auto cands = extract_inputs(exposed, 0, eps, {p.align});
  NormSnrResult res;
  std::vector<double> na, sa, nall, sall;
  for (const auto& c : cands) {
    NormSnrRow r;
    r.neuron = c.neuron;
    r.row_norm = c.row_norm;
    r.bias_gradient = c.bias_gradient;
    auto m = compute_snr(c.reconstruction, batch.inputs);
    r.snr = m.snr;
    r.match = m.index;
    for (const auto& a : act) r.activations += a[c.neuron];
    nall.push_back(r.row_norm);
    sall.push_back(r.snr);
    if (r.activations > 0) {
      na.push_back(r.row_norm);
      sa.push_back(r.snr);
    }
    res.rows.push_back(r);
  }
  res.active_rows = na.size();
  res.spearman_active = na.size() > 1 ? spearman(na, sa) : 0.0;
  res.spearman_all = nall.size() > 1 ? spearman(nall, sall) : 0.0;
  return res;
}

// ---------------------------------------------------------------------------
// Amplification.

struct AmplifyParams {
  WorldSpec world;
  TrapWeightConfig trap;
  std::size_t participants = 10;
  std::vector<double> fractions{0.1, 0.3, 0.5, 1.0};
  double hot_value = 1.0;
  double cold_value = 0.0;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  bool align = true;
};

struct AmplifyRow {
  std::uint64_t seed = 0;
  std::string variant;  // "original" or "amplified"
  double fraction = 0.0;
  std::size_t rows = 0;  // candidates passing eps
  double max_snr = 0.0;
  double median_snr = 0.0;
  double hot_norm = 0.0;   // mean row norm over hot rows
  double cold_norm = 0.0;  // mean row norm over the others
};

inline std::vector<AmplifyRow> amplification_study(const AmplifyParams& p) {
  std::vector<AmplifyRow> out;
  for (auto seed : p.seeds) {
    WorldSpec ws = p.world;
    ws.seed = seed;
    ws.sybils = p.participants - 1;
    ServerState base = build_world(ws);
    TrapWeightConfig trap = p.trap;
    trap.seed = derive_key(seed, hash_label("trap"));
    arm_trap(base, trap);
    const UserId target = base.ids(UserKind::kHonest).front();
    MiniBatch batch = base.data->batch(batch_indices(base.user(target), 0));

    auto evaluate = [&](const Model& model, const std::string& variant, double fraction,
                        const std::vector<std::size_t>& hot) {
      ServerState st = base;
      st.model = model;
      PlanRequest req;
      req.participants = p.participants;
      req.dp = ws.dp;
      req.trap = trap;
      req.skip_update = true;
      auto [cfg, plan] = plan_malicious_round(st, target, req);
      plan.amplification.enabled = variant == "amplified";
      plan.amplification.hot_fraction = fraction;
      auto round = run_round(st, cfg, planned_roster(plan));
      GradientUpdate exposed = subtract_sybil_contributions(round.aggregate, plan, round.record);
      double eps = extraction_threshold(noise_std(round.record.dp));
      auto cands = extract_inputs(exposed, 0, eps, {p.align});
      std::vector<double> snrs;
      for (const auto& c : cands) snrs.push_back(compute_snr(c.reconstruction, batch.inputs).snr);
      AmplifyRow r;
      r.seed = seed;
      r.variant = variant;
      r.fraction = fraction;
      r.rows = cands.size();
      r.max_snr = snrs.empty() ? 0.0 : *std::max_element(snrs.begin(), snrs.end());
      r.median_snr = median(snrs);
      std::set<std::size_t> hs(hot.begin(), hot.end());
      const auto& g = exposed.layers.front();
      double hsum = 0.0, csum = 0.0;
      std::size_t hn = 0, cn = 0;
      for (std::size_t i = 0; i < g.bias.size(); ++i) {
        double n = std::sqrt(squared_norm(g.weights.row(i)) + g.bias[i] * g.bias[i]);
        if (hs.count(i)) {
          hsum += n;
          ++hn;
        } else {
          csum += n;
          ++cn;
        }
      }
      r.hot_norm = hn ? hsum / static_cast<double>(hn) : 0.0;
      r.cold_norm = cn ? csum / static_cast<double>(cn) : 0.0;
      out.push_back(r);
    };

    evaluate(base.model, "original", 0.0, {});
    for (double f : p.fractions) {
      AmplificationConfig amp{true, f, p.hot_value, p.cold_value};
      RngStream hot_rng(seed, hash_label("hot"));  // same stream for every fraction
      std::vector<std::size_t> hot;
      Model m = build_amplified_head(base.model, amp, hot_rng, &hot);
      evaluate(m, "amplified", f, hot);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text recovery.

struct TextParams {
  std::uint64_t seed = 0;
  std::uint32_t vocab = 1000;
  std::size_t embed_dim = 16;
  std::size_t length = 8;
  Pooling pooling = Pooling::kConcat;
  std::size_t hidden = 1000;
  double head_gain = 1.0;
  TrapWeightConfig trap;
  std::size_t participants = 100;
  std::size_t batch = 20;
  std::size_t honest_users = 1;
  std::size_t examples_per_user = 40;
  DPConfig dp;  // sigma is replaced by each entry of `sigmas`
  std::vector<double> sigmas{0.0, 0.01, 0.1, 0.5};
};

struct TextRow {
  double sigma = 0.0;
  std::size_t rows = 0;    // individually extractable rows
  std::size_t tokens = 0;  // tokens checked
  std::size_t recovered = 0;
  double fraction = 0.0;
};

inline std::vector<TextRow> text_study(const TextParams& p) {
  if (p.pooling != Pooling::kConcat)
    throw ConfigError("text study: token lookup needs concatenation pooling");
  ServerState base;
  base.seed = p.seed;
  auto pool = std::make_shared<DataPool>();
  pool->text = std::make_shared<const TextDataset>(generate_text(
      p.vocab, p.length, p.honest_users * p.examples_per_user,
      derive_key(p.seed, hash_label("data"))));
  base.data = pool;
  RngStream model_rng(p.seed, hash_label("model"));
  base.model = make_mlp({p.length * p.embed_dim, p.hidden, 2}, model_rng, p.head_gain);
  RngStream emb_rng(p.seed, hash_label("embedding"));
  base.model.embedding = make_embedding(p.vocab, p.embed_dim, emb_rng, p.pooling);
  TrapWeightConfig trap = p.trap;
  trap.seed = derive_key(p.seed, hash_label("trap"));
  arm_trap(base, trap);
  RngStream part_rng(p.seed, hash_label("partition"));
  provision_honest(base, partition_iid(pool->text->count(), p.honest_users, part_rng), p.batch,
                   p.dp);
  provision_sybils(base, p.participants - 1);
  const UserId target = base.ids(UserKind::kHonest).front();
  MiniBatch batch = pool->batch(batch_indices(base.user(target), 0));
  auto act = first_layer_activity(base.model, batch);
  CensusReport census = census_from_activity(act);
  const EmbeddingLayer& table = *base.model.embedding;

  std::vector<TextRow> out;
  for (double sigma : p.sigmas) {
    ServerState st = base;
    PlanRequest req;
    req.participants = p.participants;
    req.dp = p.dp;
    req.dp.sigma = sigma;
    req.trap = trap;
    req.skip_update = true;
    auto [cfg, plan] = plan_malicious_round(st, target, req);
    auto round = run_round(st, cfg, planned_roster(plan));
    GradientUpdate exposed = subtract_sybil_contributions(round.aggregate, plan, round.record);
    double eps = extraction_threshold(noise_std(round.record.dp));
    TextRow row;
    row.sigma = sigma;
    for (std::size_t i = 0; i < census.neuron_activations.size(); ++i) {
      if (census.neuron_activations[i] != 1) continue;
      std::size_t q = 0;
      while (!act[q][i]) ++q;
      ++row.rows;
      row.tokens += p.length;
      if (!(std::abs(exposed.layers.front().bias[i]) > eps)) continue;
      Vector r = rescaled_row(exposed, i, true);
      auto toks = tokens_from_reconstruction(r, table);
      for (std::size_t t = 0; t < p.length; ++t) row.recovered += toks[t] == batch.tokens[q][t];
    }
    row.fraction = row.tokens ? static_cast<double>(row.recovered) / static_cast<double>(row.tokens)
                              : 0.0;
    out.push_back(row);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Benign training.

struct TrainParams {
  WorldSpec world;
  std::size_t participants = 10;
  std::size_t rounds = 30;
  double learning_rate = 0.5;
};

inline double dataset_loss(const Model& model, const Dataset& ds) {
  std::vector<std::size_t> all(ds.count());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  MiniBatch b = make_batch(ds, all);
  return forward(model, b).loss;
}

// losses[0] is the loss at initialization, losses[t] after round t.
inline std::vector<double> train_benign(const TrainParams& p) {
  WorldSpec ws = p.world;
  ws.sybils = 0;
  ServerState st = build_world(ws);
  std::vector<double> losses{dataset_loss(st.model, *st.data->images)};
  for (std::size_t t = 0; t < p.rounds; ++t) {
    RoundConfig cfg;
    cfg.round_index = t;
    cfg.participants = p.participants;
    cfg.sampling = Sampling::kUniformHonest;
    cfg.dp = ws.dp;
    cfg.learning_rate = p.learning_rate;
    RngStream srng = RngStream(st.seed, hash_label("sampling")).child(t);
    auto roster = sample_users(st, cfg, srng);
    run_round(st, cfg, roster);
    losses.push_back(dataset_loss(st.model, *st.data->images));
  }
  return losses;
}

}  // namespace glsim
