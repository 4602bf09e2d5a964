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

// Flat key=value experiment configuration.
//
// A config file holds one `key = value` pair per line; `#` starts a comment.
// Lists are comma-separated. Every key has a default that may depend on the
// experiment (see experiment_defaults). Unknown keys and malformed values
// are rejected with the offending key in the message.

#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "glsim/dp.hpp"
#include "glsim/error.hpp"

namespace glsim {

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"round",  "census", "sweep",       "norm-snr",
                                              "amplify", "text",  "train-benign"};
  return names;
}

struct ExperimentConfig {
  std::string experiment = "round";
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};

  std::string data_source = "synthetic";  // synthetic | file
  std::string data_path;
  std::size_t data_dim = 3072;
  std::uint32_t data_classes = 10;
  std::size_t honest_users = 1;
  std::size_t examples_per_user = 40;
  std::string partition = "iid";  // iid | by-class

  std::vector<std::size_t> hidden{1000};
  double head_gain = 10.0;

  DPMode dp_mode = DPMode::kDDP;
  double clip = 1.0;
  double sigma = 0.1;
  ClipScope clip_scope = ClipScope::kPerLayer;

  std::size_t participants = 100;
  std::size_t batch = 20;
  double learning_rate = 0.1;
  bool skip_update = false;
  bool mask_sybil_pairs = false;
  std::size_t target = 0;

  std::string payload = "zeros";  // zeros | constant
  double payload_value = 0.0;

  bool trap = true;
  double gamma = 0.03;
  double trap_scale = 0.0;
  double negative_fraction = 0.5;
  double jitter = 0.0;

  double eps = 0.0;
  bool align = true;
  double snr_threshold = 1.0;
  std::size_t clusters = 0;
  std::size_t cluster_iters = 100;
  bool images = true;

  std::size_t census_batch = 100;
  std::vector<std::size_t> benign{1, 2, 3, 4, 5, 10, 15, 20, 30, 40, 50};
  std::vector<double> amp_fractions{0.1, 0.3, 0.5, 1.0};
  double amp_hot = 1.0;
  double amp_cold = 0.0;

  std::uint32_t text_vocab = 1000;
  std::size_t text_dim = 16;
  std::size_t text_length = 8;
  std::string text_pooling = "concat";  // concat | mean
  std::vector<double> text_sigmas{0.0, 0.01, 0.1, 0.5};

  std::size_t rounds = 30;
};

namespace config_detail {

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] inline void bad(const std::string& key, const std::string& value,
                             const std::string& why) {
  throw UsageError("config field '" + key + "': " + why + " (got '" + value + "')");
}

template <typename T>
T parse_int(const std::string& key, const std::string& v) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad(key, v, "expected a non-negative integer");
  return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out))
    bad(key, v, "expected a finite number");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad(key, v, "expected true or false");
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

inline std::string fmt_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

template <typename T>
std::string fmt(const T& v) {
  if constexpr (std::is_same_v<T, bool>) {
    return v ? "true" : "false";
  } else if constexpr (std::is_same_v<T, double>) {
    return fmt_double(v);
  } else if constexpr (std::is_same_v<T, std::string>) {
    return v;
  } else if constexpr (std::is_integral_v<T>) {
    return std::to_string(v);
  } else {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ",";
      s += fmt(v[i]);
    }
    return s;
  }
}

template <typename T>
T parse(const std::string& key, const std::string& v) {
  if constexpr (std::is_same_v<T, bool>) {
    return parse_bool(key, v);
  } else if constexpr (std::is_same_v<T, double>) {
    return parse_double(key, v);
  } else if constexpr (std::is_same_v<T, std::string>) {
    return v;
  } else if constexpr (std::is_integral_v<T>) {
    return parse_int<T>(key, v);
  } else {
    T out;
    if (v.empty()) return out;
    for (const auto& item : split_list(v))
      out.push_back(parse<typename T::value_type>(key, item));
    return out;
  }
}

}  // namespace config_detail

struct ConfigField {
  std::string key;
  std::string doc;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <typename T>
ConfigField make_field(std::string key, std::string doc, T ExperimentConfig::*member) {
  std::string k = key;
  return {std::move(key), std::move(doc),
          [k, member](ExperimentConfig& c, const std::string& v) {
            c.*member = config_detail::parse<T>(k, v);
          },
          [member](const ExperimentConfig& c) { return config_detail::fmt(c.*member); }};
}

inline const std::vector<ConfigField>& config_fields() {
  using C = ExperimentConfig;
  static const std::vector<ConfigField> fields = [] {
    std::vector<ConfigField> f;
    f.push_back(make_field("experiment", "experiment name", &C::experiment));
    f.push_back(make_field("seed", "master seed (GLSIM_SEED overrides)", &C::seed));
    f.push_back(make_field("seeds", "repetition offsets added to the master seed", &C::seeds));
    f.push_back(make_field("data.source", "synthetic or file", &C::data_source));
    f.push_back(make_field("data.path", "GLDS file when data.source=file", &C::data_path));
    f.push_back(make_field("data.dim", "synthetic feature dim", &C::data_dim));
    f.push_back(make_field("data.classes", "synthetic class count", &C::data_classes));
    f.push_back(make_field("users.honest", "honest users provisioned", &C::honest_users));
    f.push_back(make_field("users.examples", "examples per honest user", &C::examples_per_user));
    f.push_back(make_field("users.partition", "iid or by-class", &C::partition));
    f.push_back(make_field("model.hidden", "hidden layer widths", &C::hidden));
    f.push_back(make_field("model.head_gain", "Glorot gain of the output layer", &C::head_gain));
    f.push_back({"dp.mode", "none, ldp or ddp",
                 [](C& c, const std::string& v) {
                   if (v == "none") c.dp_mode = DPMode::kNone;
                   else if (v == "ldp") c.dp_mode = DPMode::kLDP;
                   else if (v == "ddp") c.dp_mode = DPMode::kDDP;
                   else config_detail::bad("dp.mode", v, "expected none, ldp or ddp");
                 },
                 [](const C& c) { return std::string(to_string(c.dp_mode)); }});
    f.push_back(make_field("dp.clip", "clipping bound c", &C::clip));
    f.push_back(make_field("dp.sigma", "noise multiplier sigma", &C::sigma));
    f.push_back({"dp.clip_scope", "layer or global",
                 [](C& c, const std::string& v) {
                   if (v == "layer") c.clip_scope = ClipScope::kPerLayer;
                   else if (v == "global") c.clip_scope = ClipScope::kGlobal;
                   else config_detail::bad("dp.clip_scope", v, "expected layer or global");
                 },
                 [](const C& c) {
                   return std::string(c.clip_scope == ClipScope::kPerLayer ? "layer" : "global");
                 }});
    f.push_back(make_field("round.participants", "participants M per round", &C::participants));
    f.push_back(make_field("round.batch", "mini-batch size B", &C::batch));
    f.push_back(make_field("round.lr", "server learning rate", &C::learning_rate));
    f.push_back(make_field("round.skip_update", "malicious rounds skip the model step",
                           &C::skip_update));
    f.push_back(make_field("round.mask_sybil_pairs", "also mask sybil-sybil pairs",
                           &C::mask_sybil_pairs));
    f.push_back(make_field("attack.target", "target position among honest users", &C::target));
    f.push_back(make_field("attack.payload", "zeros or constant", &C::payload));
    f.push_back(make_field("attack.payload_value", "constant payload value", &C::payload_value));
    f.push_back(make_field("trap.enabled", "apply trap weights", &C::trap));
    f.push_back(make_field("trap.gamma", "negative skew", &C::gamma));
    f.push_back(make_field("trap.scale", "entry magnitude (0 = 1/sqrt(in))", &C::trap_scale));
    f.push_back(make_field("trap.negative_fraction", "negative entries per row",
                           &C::negative_fraction));
    f.push_back(make_field("trap.jitter", "relative magnitude jitter", &C::jitter));
    f.push_back(make_field("extract.eps", "bias threshold (0 = automatic)", &C::eps));
    f.push_back(make_field("extract.align", "flip candidates to non-negative mean", &C::align));
    f.push_back(make_field("extract.snr_threshold", "SNR filter threshold", &C::snr_threshold));
    f.push_back(make_field("cluster.k", "k-means clusters (0 = 2B)", &C::clusters));
    f.push_back(make_field("cluster.iters", "Lloyd iterations", &C::cluster_iters));
    f.push_back(make_field("output.images", "write PGM/PPM reconstructions", &C::images));
    f.push_back(make_field("census.batch", "census mini-batch size", &C::census_batch));
    f.push_back(make_field("sweep.benign", "honest users per round, target included", &C::benign));
    f.push_back(make_field("amp.fractions", "hot fractions", &C::amp_fractions));
    f.push_back(make_field("amp.hot", "hot weight value", &C::amp_hot));
    f.push_back(make_field("amp.cold", "cold weight value", &C::amp_cold));
    f.push_back(make_field("text.vocab", "vocabulary size", &C::text_vocab));
    f.push_back(make_field("text.dim", "embedding dim", &C::text_dim));
    f.push_back(make_field("text.length", "tokens per sequence", &C::text_length));
    f.push_back(make_field("text.pooling", "concat or mean", &C::text_pooling));
    f.push_back(make_field("text.sigmas", "noise multipliers to compare", &C::text_sigmas));
    f.push_back(make_field("train.rounds", "benign training rounds", &C::rounds));
    return f;
  }();
  return fields;
}

// Per-experiment defaults on top of the struct defaults.
inline ExperimentConfig experiment_defaults(const std::string& name) {
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), name) == names.end())
    throw UsageError("unknown experiment '" + name + "'");
  ExperimentConfig c;
  c.experiment = name;
  if (name == "census") {
    c.head_gain = 1.0;
    c.gamma = 0.04;
  } else if (name == "sweep") {
    c.hidden = {256};
    c.gamma = 0.03;
    c.participants = 50;
    c.honest_users = 50;
  } else if (name == "norm-snr") {
    c.gamma = 0.045;
  } else if (name == "amplify") {
    c.head_gain = 1.0;
    c.dp_mode = DPMode::kLDP;
    c.sigma = 0.001;
    c.participants = 10;
  } else if (name == "text") {
    c.head_gain = 1.0;
    c.gamma = 0.17;
  } else if (name == "train-benign") {
    c.hidden = {128};
    c.head_gain = 1.0;
    c.trap = false;
    c.dp_mode = DPMode::kNone;
    c.participants = 10;
    c.honest_users = 20;
  }
  return c;
}

inline void set_field(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& f : config_fields()) {
    if (f.key == key) {
      f.set(cfg, value);
      return;
    }
  }
  throw UsageError("unknown config key '" + key + "'");
}

// Parses "key=value".
inline void apply_assignment(ExperimentConfig& cfg, const std::string& line) {
  auto eq = line.find('=');
  if (eq == std::string::npos) throw UsageError("expected key=value, got '" + line + "'");
  set_field(cfg, config_detail::trim(std::string_view(line).substr(0, eq)),
            config_detail::trim(std::string_view(line).substr(eq + 1)));
}

inline void apply_config_text(ExperimentConfig& cfg, const std::string& text) {
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (config_detail::trim(line).empty()) continue;
    apply_assignment(cfg, line);
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void validate(const ExperimentConfig& c) {
  auto fail = [](const std::string& key, const std::string& why) {
    throw UsageError("config field '" + key + "': " + why);
  };
  if (!(c.clip > 0.0)) fail("dp.clip", "must be positive");
  if (c.sigma < 0.0) fail("dp.sigma", "must be non-negative");
  if (c.participants < 2) fail("round.participants", "must be at least 2");
  if (c.batch < 1) fail("round.batch", "must be at least 1");
  if (c.honest_users < 1) fail("users.honest", "must be at least 1");
  if (c.examples_per_user < c.batch) fail("users.examples", "must be at least round.batch");
  if (c.target >= c.honest_users) fail("attack.target", "must index an honest user");
  if (c.hidden.empty()) fail("model.hidden", "needs at least one hidden layer");
  for (auto h : c.hidden)
    if (h == 0) fail("model.hidden", "widths must be positive");
  if (c.data_source != "synthetic" && c.data_source != "file")
    fail("data.source", "expected synthetic or file");
  if (c.data_source == "file" && c.data_path.empty()) fail("data.path", "required for file data");
  if (c.partition != "iid" && c.partition != "by-class")
    fail("users.partition", "expected iid or by-class");
  if (c.payload != "zeros" && c.payload != "constant")
    fail("attack.payload", "expected zeros or constant");
  if (!(c.negative_fraction > 0.0 && c.negative_fraction < 1.0))
    fail("trap.negative_fraction", "must lie in (0,1)");
  if (c.gamma < 0.0) fail("trap.gamma", "must be non-negative");
  if (c.jitter < 0.0 || c.jitter >= 1.0) fail("trap.jitter", "must lie in [0,1)");
  if (c.text_pooling != "concat" && c.text_pooling != "mean")
    fail("text.pooling", "expected concat or mean");
  for (double s : c.text_sigmas)
    if (s < 0.0) fail("text.sigmas", "must be non-negative");
  for (double p : c.amp_fractions)
    if (!(p > 0.0 && p <= 1.0)) fail("amp.fractions", "each must lie in (0,1]");
  if (c.experiment == "sweep")
    for (auto b : c.benign)
      if (b < 1 || b > c.participants)
        fail("sweep.benign", "each must lie in [1, round.participants]");
  if (c.seeds.empty()) fail("seeds", "needs at least one entry");
}

// Resolved config as key=value lines, in field order.
inline std::string to_config_text(const ExperimentConfig& c) {
  std::string out;
  for (const auto& f : config_fields()) out += f.key + "=" + f.get(c) + "\n";
  return out;
}

inline std::map<std::string, std::string> to_map(const ExperimentConfig& c) {
  std::map<std::string, std::string> m;
  for (const auto& f : config_fields()) m[f.key] = f.get(c);
  return m;
}

// Defaults for `experiment`, then the file (if any), then key=value
// overrides. The file may not name a different experiment.
inline ExperimentConfig parse_config(const std::string& experiment, const std::string& path,
                                     const std::vector<std::string>& overrides) {
  ExperimentConfig c = experiment_defaults(experiment);
  if (!path.empty()) apply_config_text(c, read_text_file(path));
  for (const auto& o : overrides) apply_assignment(c, o);
  if (c.experiment != experiment)
    throw UsageError("config names experiment '" + c.experiment + "' but '" + experiment +
                     "' was requested");
  validate(c);
  return c;
}

}  // namespace glsim
