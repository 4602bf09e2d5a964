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

// Finite-difference gradient check shared by the unit and acceptance tests.

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "glsim/nn.hpp"

namespace glsim::testing {

struct GradCheck {
  double max_abs_dev = 0.0;
  std::size_t entries = 0;
};

// Random MLP with 1 to 3 dense layers of at most 32 units, plus a random
// batch with its labels. Resamples until no ReLU pre-activation lies within
// 1e-3 of zero, so the central difference never straddles a kink.
struct GradProblem {
  Model model;
  MiniBatch batch;
};

inline double min_abs_hidden_pre(const Model& m, const MiniBatch& b) {
  ForwardState st = forward(m, b);
  double lo = 1e300;
  for (std::size_t k = 0; k + 1 < m.layers.size(); ++k)
    for (double v : st.pre[k].data) lo = std::min(lo, std::abs(v));
  return lo;
}

inline GradProblem random_grad_problem(RngStream& rng) {
  for (;;) {
    const std::size_t depth = 1 + rng.below(3);
    std::vector<std::size_t> dims{2 + rng.below(31)};
    for (std::size_t k = 0; k + 1 < depth; ++k) dims.push_back(2 + rng.below(31));
    dims.push_back(2 + rng.below(9));
    GradProblem p;
    p.model = make_mlp(dims, rng);
    for (auto& l : p.model.layers)
      for (double& b : l.bias) b = rng.uniform(-0.1, 0.1);
    const std::size_t n = 1 + rng.below(8);
    p.batch.inputs = Matrix(n, dims.front());
    for (double& v : p.batch.inputs.data) v = rng.uniform(-1.0, 1.0);
    for (std::size_t i = 0; i < n; ++i)
      p.batch.labels.push_back(static_cast<std::uint32_t>(rng.below(dims.back())));
    if (min_abs_hidden_pre(p.model, p.batch) >= 1e-3) return p;
  }
}

inline GradCheck finite_difference_check(const Model& model, const MiniBatch& batch,
                                         double h = 1e-4) {
  GradientUpdate g = backward(model, forward(model, batch), batch);
  GradCheck out;
  Model m = model;
  auto probe = [&](double& param, double analytic) {
    const double keep = param;
    param = keep + h;
    double up = forward(m, batch).loss;
    param = keep - h;
    double down = forward(m, batch).loss;
    param = keep;
    out.max_abs_dev = std::max(out.max_abs_dev, std::abs((up - down) / (2 * h) - analytic));
    ++out.entries;
  };
  for (std::size_t k = 0; k < m.layers.size(); ++k) {
    for (std::size_t i = 0; i < m.layers[k].weights.data.size(); ++i)
      probe(m.layers[k].weights.data[i], g.layers[k].weights.data[i]);
    for (std::size_t i = 0; i < m.layers[k].bias.size(); ++i)
      probe(m.layers[k].bias[i], g.layers[k].bias[i]);
  }
  return out;
}

}  // namespace glsim::testing
