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

// Clipping and Gaussian noise for local and distributed DP.

#pragma once

#include <cmath>
#include <string>

#include "glsim/error.hpp"
#include "glsim/nn.hpp"
#include "glsim/rng.hpp"

namespace glsim {

enum class DPMode { kNone, kLDP, kDDP };

enum class ClipScope {
  kPerLayer,  // weights and bias of each layer jointly
  kGlobal,    // whole update as one vector
};

struct DPConfig {
  DPMode mode = DPMode::kDDP;
  double clip = 1.0;
  double sigma = 0.1;
  std::size_t participants = 100;
  ClipScope scope = ClipScope::kPerLayer;
};

inline void validate(const DPConfig& cfg) {
  if (!(cfg.clip > 0.0) || !std::isfinite(cfg.clip))
    throw ConfigError("dp: clip must be a positive finite number");
  if (!(cfg.sigma >= 0.0) || !std::isfinite(cfg.sigma))
    throw ConfigError("dp: sigma must be non-negative");
  if (cfg.mode == DPMode::kDDP && cfg.participants < 2)
    throw ConfigError("dp: DDP needs at least 2 participants");
}

// g / max(1, ||g|| / c), applied per layer or to the whole update.
inline GradientUpdate clip_update(GradientUpdate update, double c,
                                  ClipScope scope = ClipScope::kPerLayer) {
  if (!(c > 0.0)) throw ConfigError("clip: c must be positive");
  auto scale_by = [](LayerGradient& l, double s) {
    for (double& v : l.weights.data) v *= s;
    for (double& v : l.bias) v *= s;
  };
  if (scope == ClipScope::kPerLayer) {
    auto norms = per_layer_l2_norm(update);
    for (std::size_t i = 0; i < update.layers.size(); ++i)
      if (norms[i] > c) scale_by(update.layers[i], c / norms[i]);
  } else {
    double sq = 0.0;
    for (double n : per_layer_l2_norm(update)) sq += n * n;
    double norm = std::sqrt(sq);
    if (norm > c)
      for (auto& l : update.layers) scale_by(l, c / norm);
  }
  return update;
}

inline double noise_std(const DPConfig& cfg) {
  validate(cfg);
  if (cfg.sigma == 0.0) return 0.0;
  switch (cfg.mode) {
    case DPMode::kNone:
      return 0.0;
    case DPMode::kLDP:
      return cfg.sigma * cfg.clip;
    case DPMode::kDDP:
      return cfg.sigma * cfg.clip / std::sqrt(static_cast<double>(cfg.participants - 1));
  }
  return 0.0;
}

inline void add_gaussian_noise(GradientUpdate& update, double stddev, RngStream& rng) {
  if (stddev == 0.0) return;
  for_each_block(update, [&](std::span<double> block) {
    for (double& v : block) v += stddev * rng.normal();
  });
}

inline GradientUpdate apply_dp(const GradientUpdate& update, const DPConfig& cfg,
                               RngStream& rng) {
  double std_dev = noise_std(cfg);
  GradientUpdate out = clip_update(update, cfg.clip, cfg.scope);
  add_gaussian_noise(out, std_dev, rng);
  return out;
}

inline const char* to_string(DPMode m) {
  switch (m) {
    case DPMode::kNone:
      return "none";
    case DPMode::kLDP:
      return "ldp";
    case DPMode::kDDP:
      return "ddp";
  }
  return "?";
}

}  // namespace glsim
