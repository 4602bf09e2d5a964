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
#include <numbers>

#include "glsim/nn.hpp"
#include "gradcheck.hpp"

namespace glsim {
namespace {

DenseLayer layer(std::size_t out, std::size_t in, Activation a) {
  DenseLayer l;
  l.weights = Matrix(out, in);
  l.bias = Vector(out, 0.0);
  l.activation = a;
  return l;
}

MiniBatch batch_of(Matrix x, std::vector<std::uint32_t> y) {
  MiniBatch b;
  b.inputs = std::move(x);
  b.labels = std::move(y);
  return b;
}

TEST(Forward, IdentityLayerPassesInput) {
  Model m;
  auto id = layer(2, 2, Activation::kIdentity);
  id.weights(0, 0) = id.weights(1, 1) = 1.0;
  m.layers.push_back(id);
  Matrix x(1, 2);
  x(0, 0) = 1.0;
  x(0, 1) = 2.0;
  auto st = forward(m, batch_of(x, {0}));
  EXPECT_EQ(st.post[0](0, 0), 1.0);
  EXPECT_EQ(st.post[0](0, 1), 2.0);
}

TEST(Forward, ReluZeroesNegativePreActivations) {
  Model m;
  auto l = layer(3, 2, Activation::kReLU);
  for (double& w : l.weights.data) w = -1.0;
  m.layers.push_back(l);
  m.layers.push_back(layer(2, 3, Activation::kSoftmax));
  Matrix x(1, 2, 0.5);
  auto st = forward(m, batch_of(x, {1}));
  for (double v : st.post[0].data) EXPECT_EQ(v, 0.0);
}

TEST(Forward, UniformLogitsGiveLn2) {
  Model m;
  m.layers.push_back(layer(2, 3, Activation::kSoftmax));
  Matrix x(4, 3, 0.7);
  auto st = forward(m, batch_of(x, {0, 1, 1, 0}));
  EXPECT_NEAR(st.loss, std::numbers::ln2, 1e-15);
}

TEST(Forward, DimensionMismatchThrows) {
  Model m;
  m.layers.push_back(layer(2, 3, Activation::kSoftmax));
  EXPECT_THROW(forward(m, batch_of(Matrix(1, 4), {0})), Error);
  EXPECT_THROW(forward(m, batch_of(Matrix(1, 3), {2})), Error);
}

TEST(Backward, MatchesFiniteDifferences) {
  RngStream rng(2024, 0);
  for (int t = 0; t < 10; ++t) {
    auto p = testing::random_grad_problem(rng);
    auto r = testing::finite_difference_check(p.model, p.batch);
    EXPECT_LT(r.max_abs_dev, 1e-5) << "trial " << t;
    EXPECT_GT(r.entries, 0u);
  }
}

TEST(Backward, SingleExampleIdentityIsExact) {
  RngStream rng(7, 0);
  Model m;
  auto l0 = layer(1, 5, Activation::kReLU);
  for (double& w : l0.weights.data) w = rng.uniform(0.1, 1.0);
  m.layers.push_back(l0);
  auto l1 = layer(3, 1, Activation::kSoftmax);
  for (double& w : l1.weights.data) w = rng.uniform(-1.0, 1.0);
  m.layers.push_back(l1);
  Matrix x(1, 5);
  for (double& v : x.data) v = rng.uniform(0.0, 1.0);
  auto b = batch_of(x, {2});
  auto g = backward(m, forward(m, b), b);
  ASSERT_NE(g.layers[0].bias[0], 0.0);
  for (std::size_t d = 0; d < 5; ++d)
    EXPECT_NEAR(g.layers[0].weights(0, d) / g.layers[0].bias[0], x(0, d), 1e-12 * x(0, d));
}

TEST(Backward, FirstLayerIdentityAndSparsity) {
  // Each neuron i of a wide ReLU layer: if exactly one example activates it,
  // row / bias reproduces that example; if none does, the bias gradient is 0.
  RngStream rng(8, 0);
  Model m = make_mlp({6, 40, 3}, rng);
  Matrix x(4, 6);
  for (double& v : x.data) v = rng.uniform(-1.0, 1.0);
  auto b = batch_of(x, {0, 1, 2, 0});
  auto st = forward(m, b);
  auto g = backward(m, st, b);
  int singles = 0;
  for (std::size_t i = 0; i < 40; ++i) {
    std::vector<std::size_t> act;
    for (std::size_t e = 0; e < 4; ++e)
      if (st.pre[0](e, i) > 0.0) act.push_back(e);
    if (act.empty()) {
      EXPECT_EQ(g.layers[0].bias[i], 0.0);
    } else if (act.size() == 1 && g.layers[0].bias[i] != 0.0) {
      ++singles;
      for (std::size_t d = 0; d < 6; ++d) {
        double r = g.layers[0].weights(i, d) / g.layers[0].bias[i];
        EXPECT_NEAR(r, x(act[0], d), 1e-9 * std::max(1.0, std::abs(x(act[0], d))));
      }
    }
  }
  EXPECT_GT(singles, 0);
}

TEST(Backward, ConfidentCorrectPredictionHasTinyGradient) {
  Model m;
  auto l = layer(2, 2, Activation::kSoftmax);
  l.weights(0, 0) = 60.0;
  l.weights(1, 1) = 60.0;
  m.layers.push_back(l);
  Matrix x(2, 2);
  x(0, 0) = 1.0;
  x(1, 1) = 1.0;
  auto b = batch_of(x, {0, 1});
  auto g = backward(m, forward(m, b), b);
  for (double v : g.layers[0].weights.data) EXPECT_LT(std::abs(v), 1e-20);
}

TEST(Embed, MeanAndConcatPooling) {
  EmbeddingLayer e;
  e.table = Matrix(2, 1);
  e.table(0, 0) = 0.3;
  e.table(1, 0) = 0.7;
  EXPECT_DOUBLE_EQ(embed(e, {{0}})(0, 0), 0.3);
  EXPECT_DOUBLE_EQ(embed(e, {{0, 1}})(0, 0), 0.5);
  e.pooling = Pooling::kConcat;
  auto c = embed(e, {{1, 0}});
  EXPECT_EQ(c.cols, 2u);
  EXPECT_EQ(c(0, 0), 0.7);
  EXPECT_EQ(c(0, 1), 0.3);
  EXPECT_THROW(embed(e, {{2}}), InputError);
}

TEST(Embed, MatchesDirectLookup) {
  RngStream rng(4, 0);
  EmbeddingLayer e;
  e.table = Matrix(50, 4);
  for (double& v : e.table.data) v = rng.uniform();
  for (std::uint32_t t = 0; t < 50; ++t) {
    auto row = embed(e, {{t}});
    for (std::size_t d = 0; d < 4; ++d) EXPECT_EQ(row(0, d), e.table(t, d));
  }
}

TEST(Norms, PerLayerL2) {
  GradientUpdate g;
  g.layers.resize(2);
  g.layers[0].weights = Matrix(1, 2);
  g.layers[0].weights(0, 0) = 3.0;
  g.layers[0].weights(0, 1) = 4.0;
  g.layers[0].bias = {0.0};
  g.layers[1].weights = Matrix(2, 2);
  g.layers[1].bias = {0.0, 0.0};
  auto n = per_layer_l2_norm(g);
  EXPECT_EQ(n[0], 5.0);
  EXPECT_EQ(n[1], 0.0);

  RngStream rng(1, 1);
  for (double& v : g.layers[1].weights.data) v = rng.normal();
  for (double& v : g.layers[1].bias) v = rng.normal();
  double s = 0.0;
  for (double v : g.layers[1].weights.data) s += v * v;
  for (double v : g.layers[1].bias) s += v * v;
  EXPECT_NEAR(per_layer_l2_norm(g)[1], std::sqrt(s), 1e-14);
}

TEST(Model, ValidateRejectsIncompatibleLayers) {
  Model m;
  m.layers.push_back(layer(3, 2, Activation::kReLU));
  m.layers.push_back(layer(2, 4, Activation::kSoftmax));
  EXPECT_THROW(validate_model(m), Error);
}

}  // namespace
}  // namespace glsim
