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

// Config-driven experiment dispatch and artifact emission.

#pragma once

#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "glsim/config.hpp"
#include "glsim/experiments.hpp"
#include "glsim/report.hpp"

namespace glsim {

inline DPConfig dp_from(const ExperimentConfig& c) {
  DPConfig dp;
  dp.mode = c.dp_mode;
  dp.clip = c.clip;
  dp.sigma = c.sigma;
  dp.participants = c.participants;
  dp.scope = c.clip_scope;
  return dp;
}

inline TrapWeightConfig trap_from(const ExperimentConfig& c, std::uint64_t seed) {
  TrapWeightConfig t;
  t.negative_fraction = c.negative_fraction;
  t.scale = c.trap_scale;
  t.gamma = c.gamma;
  t.jitter = c.jitter;
  t.seed = derive_key(seed, hash_label("trap"));
  return t;
}

inline WorldSpec world_from(const ExperimentConfig& c, std::uint64_t seed) {
  WorldSpec w;
  w.seed = seed;
  w.dim = c.data_dim;
  w.classes = c.data_classes;
  w.honest_users = c.honest_users;
  w.examples_per_user = c.examples_per_user;
  w.batch = c.batch;
  w.hidden = c.hidden;
  w.head_gain = c.head_gain;
  w.dp = dp_from(c);
  w.payload = c.payload == "constant" ? SybilPayload::constant(c.payload_value)
                                      : SybilPayload::zeros();
  w.partition = c.partition == "by-class" ? Partition::kByClass : Partition::kIid;
  if (c.data_source == "file") w.dataset = std::make_shared<const Dataset>(read_glds(c.data_path));
  return w;
}

inline std::vector<std::uint64_t> repetition_seeds(const ExperimentConfig& c) {
  std::vector<std::uint64_t> s;
  for (auto x : c.seeds) s.push_back(c.seed + x);
  return s;
}

inline AttackRoundParams round_params_from(const ExperimentConfig& c) {
  AttackRoundParams p;
  p.world = world_from(c, c.seed);
  p.trap_enabled = c.trap;
  p.trap = trap_from(c, c.seed);
  p.participants = c.participants;
  p.target_index = c.target;
  p.eps = c.eps;
  p.align = c.align;
  p.snr_threshold = c.snr_threshold;
  p.clusters = c.clusters;
  p.cluster_iters = c.cluster_iters;
  p.skip_update = c.skip_update;
  p.mask_sybil_pairs = c.mask_sybil_pairs;
  return p;
}

inline CensusParams census_params_from(const ExperimentConfig& c) {
  CensusParams p;
  p.world = world_from(c, c.seed);
  p.trap = trap_from(c, c.seed);
  p.batch = c.census_batch;
  p.seeds = repetition_seeds(c);
  return p;
}

inline SweepParams sweep_params_from(const ExperimentConfig& c) {
  SweepParams p;
  p.world = world_from(c, c.seed);
  p.trap = trap_from(c, c.seed);
  p.participants = c.participants;
  p.benign = c.benign;
  p.seeds = repetition_seeds(c);
  return p;
}

inline AmplifyParams amplify_params_from(const ExperimentConfig& c) {
  AmplifyParams p;
  p.world = world_from(c, c.seed);
  p.trap = trap_from(c, c.seed);
  p.participants = c.participants;
  p.fractions = c.amp_fractions;
  p.hot_value = c.amp_hot;
  p.cold_value = c.amp_cold;
  p.seeds = repetition_seeds(c);
  p.align = c.align;
  return p;
}

inline TextParams text_params_from(const ExperimentConfig& c) {
  if (c.data_source != "synthetic")
    throw UsageError("config field 'data.source': text runs use generated sequences");
  TextParams p;
  p.seed = c.seed;
  p.vocab = c.text_vocab;
  p.embed_dim = c.text_dim;
  p.length = c.text_length;
  p.pooling = c.text_pooling == "mean" ? Pooling::kMean : Pooling::kConcat;
  p.hidden = c.hidden.front();
  p.head_gain = c.head_gain;
  p.trap = trap_from(c, c.seed);
  p.participants = c.participants;
  p.batch = c.batch;
  p.honest_users = c.honest_users;
  p.examples_per_user = c.examples_per_user;
  p.dp = dp_from(c);
  p.sigmas = c.text_sigmas;
  return p;
}

inline TrainParams train_params_from(const ExperimentConfig& c) {
  TrainParams p;
  p.world = world_from(c, c.seed);
  p.participants = c.participants;
  p.rounds = c.rounds;
  p.learning_rate = c.learning_rate;
  return p;
}

// Headline numbers of a run, echoed by the CLI and stored in the manifest.
using RunSummary = std::map<std::string, double>;

namespace runner_detail {

inline CsvTable summary_table(const RunSummary& s) {
  CsvTable t({"metric", "value"});
  for (const auto& [k, v] : s) t.add({k, cell(v)});
  return t;
}

inline std::string two_digits(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%02zu", i);
  return buf;
}

inline RunSummary run_round(const ExperimentConfig& c, ArtifactWriter& w) {
  AttackRoundParams p = round_params_from(c);
  AttackRoundResult r = run_attack_round(p);
  RunSummary s;
  s["exposure_error"] = r.exposure_error;
  s["noise_std"] = r.noise_std;
  s["eps"] = r.eps;
  s["candidates"] = static_cast<double>(r.candidates.size());
  s["extractable_points"] = static_cast<double>(r.extractable_points);
  s["exact_points"] = static_cast<double>(r.exact_points);
  s["retained"] = static_cast<double>(r.retained.size());
  s["clusters"] = r.clusters ? static_cast<double>(r.clusters->k) : 0.0;
  s["averaging_point"] = static_cast<double>(r.averaging_point);
  s["averaging_rows"] = static_cast<double>(r.averaging_snr.size());
  for (std::size_t n : {1, 5, 10, 20})
    if (n <= r.averaging_snr.size())
      s["averaging_snr_n" + std::to_string(n)] = r.averaging_snr[n - 1];

  CsvTable cand({"neuron", "bias_gradient", "row_norm", "snr", "match"});
  for (const auto& x : r.candidates)
    cand.add({cell(x.neuron), cell(x.bias_gradient), cell(x.row_norm), cell(x.snr.value_or(0.0)),
              cell(x.match.value_or(0))});
  CsvTable pts({"point", "label", "activations", "exclusive", "best_relative_error", "best_snr"});
  for (const auto& x : r.points)
    pts.add({cell(x.point), cell(x.label), cell(x.activations), cell(x.exclusive),
             cell(x.best_relative_error), cell(x.best_snr)});
  CsvTable cl({"cluster", "members", "centroid_snr"});
  if (r.clusters)
    for (std::size_t k = 0; k < r.clusters->k; ++k)
      cl.add({cell(k), cell(r.clusters->counts[k]), cell(r.centroid_snr[k])});
  CsvTable avg({"n", "snr"});
  for (std::size_t n = 0; n < r.averaging_snr.size(); ++n)
    avg.add({cell(n + 1), cell(r.averaging_snr[n])});

  w.write_csv("summary.csv", summary_table(s));
  w.write_csv("candidates.csv", cand);
  w.write_csv("points.csv", pts);
  w.write_csv("clusters.csv", cl);
  w.write_csv("averaging.csv", avg);
  w.write_json("round_log.json", to_json(r.record));
  w.write_json("plan.json", to_json(r.plan));

  ImageShape shape = infer_shape(r.truth.cols);
  if (c.images && shape.height > 1) {
    for (std::size_t q = 0; q < r.truth.rows; ++q)
      w.write("images/original_" + two_digits(q) + (shape.channels == 3 ? ".ppm" : ".pgm"),
              encode_pnm(r.truth.row(q), shape));
    if (r.clusters)
      for (std::size_t k = 0; k < r.clusters->k; ++k)
        w.write("images/cluster_" + two_digits(k) + (shape.channels == 3 ? ".ppm" : ".pgm"),
                encode_pnm(r.clusters->centroids.row(k), shape));
    if (!r.averaging_mean.empty())
      w.write(std::string("images/averaged") + (shape.channels == 3 ? ".ppm" : ".pgm"),
              encode_pnm(r.averaging_mean, shape));
  }
  return s;
}

inline RunSummary run_census(const ExperimentConfig& c, ArtifactWriter& w) {
  CensusParams p = census_params_from(c);
  auto rows = census_study(p);
  CsvTable t({"seed", "init", "extractable_points", "median_neuron_activations", "max_redundancy",
              "total_activations"});
  CsvTable pts({"seed", "init", "point", "activations", "exclusive"});
  CsvTable neu({"seed", "init", "neuron", "activations"});
  RunSummary s;
  std::size_t trap_wins = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    t.add({cell(r.seed), r.init, cell(r.report.extractable_points),
           cell(r.report.median_neuron_activations), cell(r.report.max_redundancy),
           cell(r.report.total_from_points())});
    for (std::size_t q = 0; q < r.report.point_activations.size(); ++q)
      pts.add({cell(r.seed), r.init, cell(q), cell(r.report.point_activations[q]),
               cell(r.report.point_exclusive[q])});
    for (std::size_t n = 0; n < r.report.neuron_activations.size(); ++n)
      neu.add({cell(r.seed), r.init, cell(n), cell(r.report.neuron_activations[n])});
    if (r.init == "trap") {
      const auto& rnd = rows[i - 1].report;
      trap_wins += r.report.extractable_points > rnd.extractable_points &&
                   r.report.median_neuron_activations < rnd.median_neuron_activations;
    }
  }
  s["seeds"] = static_cast<double>(p.seeds.size());
  s["trap_wins"] = static_cast<double>(trap_wins);
  w.write_csv("census.csv", t);
  w.write_csv("census_points.csv", pts);
  w.write_csv("census_neurons.csv", neu);
  w.write_csv("summary.csv", summary_table(s));
  return s;
}

inline RunSummary run_sweep(const ExperimentConfig& c, ArtifactWriter& w) {
  auto rep = sybil_fraction_sweep(sweep_params_from(c));
  CsvTable mean_t({"benign", "sybils", "fraction", "mean_snr"});
  for (const auto& x : rep.mean)
    mean_t.add({cell(x.benign), cell(x.sybils), cell(x.fraction), cell(x.mean_snr)});
  CsvTable seed_t({"seed", "benign", "sybils", "fraction", "mean_snr"});
  for (const auto& x : rep.per_seed)
    seed_t.add({cell(x.seed), cell(x.benign), cell(x.sybils), cell(x.fraction), cell(x.mean_snr)});
  w.write_csv("sweep.csv", mean_t);
  w.write_csv("sweep_seeds.csv", seed_t);
  RunSummary s;
  s["rows"] = static_cast<double>(rep.mean.size());
  if (!rep.mean.empty()) {
    s["fraction_first"] = rep.mean.front().fraction;
    s["fraction_last"] = rep.mean.back().fraction;
  }
  w.write_csv("summary.csv", summary_table(s));
  return s;
}

inline RunSummary run_norm_snr(const ExperimentConfig& c, ArtifactWriter& w) {
  auto r = norm_vs_snr_study(round_params_from(c));
  CsvTable t({"neuron", "row_norm", "bias_gradient", "snr", "match", "activations"});
  for (const auto& x : r.rows)
    t.add({cell(x.neuron), cell(x.row_norm), cell(x.bias_gradient), cell(x.snr), cell(x.match),
           cell(x.activations)});
  RunSummary s;
  s["rows"] = static_cast<double>(r.rows.size());
  s["active_rows"] = static_cast<double>(r.active_rows);
  s["spearman_active"] = r.spearman_active;
  s["spearman_all"] = r.spearman_all;
  w.write_csv("norm_snr.csv", t);
  w.write_csv("summary.csv", summary_table(s));
  return s;
}

inline RunSummary run_amplify(const ExperimentConfig& c, ArtifactWriter& w) {
  auto rows = amplification_study(amplify_params_from(c));
  CsvTable t({"seed", "variant", "fraction", "rows", "max_snr", "median_snr", "hot_norm",
              "cold_norm"});
  for (const auto& x : rows)
    t.add({cell(x.seed), x.variant, cell(x.fraction), cell(x.rows), cell(x.max_snr),
           cell(x.median_snr), cell(x.hot_norm), cell(x.cold_norm)});
  w.write_csv("amplify.csv", t);
  RunSummary s;
  s["rows"] = static_cast<double>(rows.size());
  w.write_csv("summary.csv", summary_table(s));
  return s;
}

inline RunSummary run_text(const ExperimentConfig& c, ArtifactWriter& w) {
  auto rows = text_study(text_params_from(c));
  CsvTable t({"sigma", "rows", "tokens", "recovered", "fraction"});
  for (const auto& x : rows)
    t.add({cell(x.sigma), cell(x.rows), cell(x.tokens), cell(x.recovered), cell(x.fraction)});
  w.write_csv("text.csv", t);
  RunSummary s;
  if (!rows.empty()) s["fraction_first"] = rows.front().fraction;
  w.write_csv("summary.csv", summary_table(s));
  return s;
}

inline RunSummary run_train(const ExperimentConfig& c, ArtifactWriter& w) {
  auto losses = train_benign(train_params_from(c));
  CsvTable t({"round", "loss"});
  for (std::size_t i = 0; i < losses.size(); ++i) t.add({cell(i), cell(losses[i])});
  w.write_csv("train.csv", t);
  RunSummary s;
  s["initial_loss"] = losses.front();
  s["final_loss"] = losses.back();
  s["reduction"] = 1.0 - losses.back() / losses.front();
  w.write_csv("summary.csv", summary_table(s));
  return s;
}

}  // namespace runner_detail

// Runs one experiment and writes config.txt, its CSV/JSON/image artifacts
// and manifest.json into `out`.
inline RunSummary run(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  validate(cfg);
  ArtifactWriter w(out);
  w.write("config.txt", to_config_text(cfg));
  RunSummary s;
  const std::string& e = cfg.experiment;
  if (e == "round") s = runner_detail::run_round(cfg, w);
  else if (e == "census") s = runner_detail::run_census(cfg, w);
  else if (e == "sweep") s = runner_detail::run_sweep(cfg, w);
  else if (e == "norm-snr") s = runner_detail::run_norm_snr(cfg, w);
  else if (e == "amplify") s = runner_detail::run_amplify(cfg, w);
  else if (e == "text") s = runner_detail::run_text(cfg, w);
  else if (e == "train-benign") s = runner_detail::run_train(cfg, w);
  else throw UsageError("unknown experiment '" + e + "'");
  nlohmann::ordered_json extra;
  nlohmann::ordered_json summary = nlohmann::ordered_json::object();
  for (const auto& [k, v] : s) summary[k] = v;
  extra["summary"] = summary;
  if (cfg.data_source == "file") {
    std::ifstream f(cfg.data_path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    Fnv1a64 h;
    h.update(bytes);
    extra["dataset"] = {{"path", cfg.data_path}, {"fnv1a64", hex64(h.digest())}};
  }
  w.write_manifest(cfg, extra);
  return s;
}

}  // namespace glsim
