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

// Fully-connected networks with hand-written forward and backward passes.
// The loss is softmax cross-entropy averaged over the mini-batch.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "glsim/error.hpp"
#include "glsim/matrix.hpp"
#include "glsim/rng.hpp"

namespace glsim {

enum class Activation { kReLU, kIdentity, kSoftmax };

struct DenseLayer {
  Matrix weights;  // out x in
  Vector bias;     // out
  Activation activation = Activation::kReLU;

  std::size_t in_dim() const { return weights.cols; }
  std::size_t out_dim() const { return weights.rows; }
};

enum class Pooling { kMean, kConcat };

struct EmbeddingLayer {
  Matrix table;  // vocab x dim
  Pooling pooling = Pooling::kMean;

  std::size_t vocab() const { return table.rows; }
  std::size_t dim() const { return table.cols; }
};

struct Model {
  std::optional<EmbeddingLayer> embedding;
  std::vector<DenseLayer> layers;

  std::size_t input_dim() const {
    return layers.empty() ? 0 : layers.front().in_dim();
  }
  std::size_t num_classes() const {
    return layers.empty() ? 0 : layers.back().out_dim();
  }
  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.bias.size();
    return n;
  }
};

struct MiniBatch {
  Matrix inputs;                                 // B x input-dim
  std::vector<std::vector<std::uint32_t>> tokens;  // used when the model embeds
  std::vector<std::uint32_t> labels;

  std::size_t size() const { return labels.size(); }
};

struct LayerGradient {
  Matrix weights;
  Vector bias;
  bool operator==(const LayerGradient&) const = default;
};

struct GradientUpdate {
  std::vector<LayerGradient> layers;
  std::size_t batch_size = 0;

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.bias.size();
    return n;
  }
};

// Visits every parameter block (weights, then bias, layer by layer) in a
// fixed order. DP noise, masks and checksums all rely on this order.
template <typename U, typename F>
void for_each_block(U& update, F&& fn) {
  for (auto& l : update.layers) {
    fn(std::span(l.weights.data));
    fn(std::span(l.bias));
  }
}

inline GradientUpdate zeros_like(const Model& model) {
  GradientUpdate g;
  for (const auto& l : model.layers)
    g.layers.push_back({Matrix(l.out_dim(), l.in_dim()), Vector(l.out_dim(), 0.0)});
  return g;
}

inline GradientUpdate zeros_like(const GradientUpdate& u) {
  GradientUpdate g;
  g.batch_size = u.batch_size;
  for (const auto& l : u.layers)
    g.layers.push_back({Matrix(l.weights.rows, l.weights.cols), Vector(l.bias.size(), 0.0)});
  return g;
}

inline bool same_shape(const GradientUpdate& a, const GradientUpdate& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    if (!a.layers[i].weights.same_shape(b.layers[i].weights)) return false;
    if (a.layers[i].bias.size() != b.layers[i].bias.size()) return false;
  }
  return true;
}

inline bool matches_model(const GradientUpdate& g, const Model& m) {
  if (g.layers.size() != m.layers.size()) return false;
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    if (g.layers[i].weights.rows != m.layers[i].out_dim() ||
        g.layers[i].weights.cols != m.layers[i].in_dim() ||
        g.layers[i].bias.size() != m.layers[i].out_dim())
      return false;
  }
  return true;
}

// a += scale * b
inline void accumulate(GradientUpdate& a, const GradientUpdate& b,
                       double scale = 1.0) {
  if (!same_shape(a, b)) throw InputError("accumulate: update shapes differ");
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    axpy(scale, b.layers[i].weights.data, a.layers[i].weights.data);
    axpy(scale, b.layers[i].bias, a.layers[i].bias);
  }
}

inline double max_abs_diff(const GradientUpdate& a, const GradientUpdate& b) {
  if (!same_shape(a, b)) throw InputError("max_abs_diff: update shapes differ");
  double m = 0.0;
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    const auto& x = a.layers[i];
    const auto& y = b.layers[i];
    for (std::size_t k = 0; k < x.weights.size(); ++k)
      m = std::max(m, std::abs(x.weights.data[k] - y.weights.data[k]));
    for (std::size_t k = 0; k < x.bias.size(); ++k)
      m = std::max(m, std::abs(x.bias[k] - y.bias[k]));
  }
  return m;
}

// L2 norm over the concatenation of each layer's weight and bias gradients.
inline std::vector<double> per_layer_l2_norm(const GradientUpdate& update) {
  std::vector<double> out;
  out.reserve(update.layers.size());
  for (const auto& l : update.layers)
    out.push_back(std::sqrt(squared_norm(l.weights.data) + squared_norm(l.bias)));
  return out;
}

inline void validate_model(const Model& model) {
  if (model.layers.empty()) throw ConfigError("model has no dense layers");
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    const auto& l = model.layers[k];
    if (l.bias.size() != l.out_dim())
      throw ConfigError("layer " + std::to_string(k) + ": bias length differs from weight rows");
    if (k + 1 < model.layers.size()) {
      if (model.layers[k + 1].in_dim() != l.out_dim())
        throw ConfigError("layer " + std::to_string(k + 1) +
                          ": input size does not match previous output");
      if (l.activation == Activation::kSoftmax)
        throw ConfigError("softmax is only allowed on the last layer");
    }
  }
  if (model.embedding) {
    const auto& e = *model.embedding;
    if (e.vocab() == 0 || e.dim() == 0) throw ConfigError("empty embedding table");
  }
}

// Pools token embeddings into one row per sequence.
inline Matrix embed(const EmbeddingLayer& layer,
                    const std::vector<std::vector<std::uint32_t>>& token_rows) {
  const std::size_t dim = layer.dim();
  std::size_t len = token_rows.empty() ? 0 : token_rows.front().size();
  const std::size_t cols = layer.pooling == Pooling::kConcat ? len * dim : dim;
  Matrix out(token_rows.size(), cols);
  for (std::size_t r = 0; r < token_rows.size(); ++r) {
    const auto& row = token_rows[r];
    if (layer.pooling == Pooling::kConcat && row.size() != len)
      throw InputError("embed: concatenation pooling needs equal-length rows");
    auto dst = out.row(r);
    for (std::size_t t = 0; t < row.size(); ++t) {
      if (row[t] >= layer.vocab())
        throw InputError("embed: token " + std::to_string(row[t]) + " out of range for vocab " +
                         std::to_string(layer.vocab()));
      auto src = layer.table.row(row[t]);
      if (layer.pooling == Pooling::kConcat) {
        std::copy(src.begin(), src.end(), dst.begin() + static_cast<std::ptrdiff_t>(t * dim));
      } else {
        for (std::size_t d = 0; d < dim; ++d) dst[d] += src[d];
      }
    }
    if (layer.pooling == Pooling::kMean && !row.empty())
      for (double& v : dst) v /= static_cast<double>(row.size());
  }
  return out;
}

struct ForwardState {
  Matrix input;               // input of the first dense layer
  std::vector<Matrix> pre;    // per-layer pre-activations
  std::vector<Matrix> post;   // per-layer activations
  Matrix probabilities;       // softmax over the final output
  double loss = 0.0;
};

namespace detail {

// out = x W^T + b, one dot product per (example, unit).
inline Matrix affine(const Matrix& x, const DenseLayer& l) {
  Matrix z(x.rows, l.out_dim());
  for (std::size_t b = 0; b < x.rows; ++b) {
    const double* xb = x.data.data() + b * x.cols;
    for (std::size_t o = 0; o < l.out_dim(); ++o)
      z(b, o) = dot(xb, l.weights.data.data() + o * l.in_dim(), l.in_dim()) + l.bias[o];
  }
  return z;
}

inline void softmax_rows(const Matrix& z, Matrix& p, Vector& log_norm) {
  p = Matrix(z.rows, z.cols);
  log_norm.assign(z.rows, 0.0);
  for (std::size_t b = 0; b < z.rows; ++b) {
    auto zr = z.row(b);
    double m = *std::max_element(zr.begin(), zr.end());
    double s = 0.0;
    for (double v : zr) s += std::exp(v - m);
    log_norm[b] = m + std::log(s);
    for (std::size_t k = 0; k < z.cols; ++k) p(b, k) = std::exp(zr[k] - log_norm[b]);
  }
}

}  // namespace detail

inline Matrix model_input(const Model& model, const MiniBatch& batch) {
  if (model.embedding) return embed(*model.embedding, batch.tokens);
  return batch.inputs;
}

inline ForwardState forward(const Model& model, const MiniBatch& batch) {
  validate_model(model);
  ForwardState st;
  st.input = model_input(model, batch);
  if (st.input.cols != model.input_dim())
    throw InputError("forward: batch input dim " + std::to_string(st.input.cols) +
                     " does not match model input dim " + std::to_string(model.input_dim()));
  if (st.input.rows != batch.labels.size())
    throw InputError("forward: label count does not match batch rows");
  if (!all_finite(st.input.data)) throw InputError("forward: non-finite input");
  const std::size_t classes = model.num_classes();
  for (auto y : batch.labels)
    if (y >= classes) throw InputError("forward: label out of range");

  const Matrix* x = &st.input;
  for (const auto& l : model.layers) {
    Matrix z = detail::affine(*x, l);
    Matrix a;
    switch (l.activation) {
      case Activation::kReLU:
        a = z;
        for (double& v : a.data) v = v > 0.0 ? v : 0.0;
        break;
      case Activation::kIdentity:
        a = z;
        break;
      case Activation::kSoftmax: {
        Vector unused;
        detail::softmax_rows(z, a, unused);
        break;
      }
    }
    st.pre.push_back(std::move(z));
    st.post.push_back(std::move(a));
    x = &st.post.back();
  }

  // Cross-entropy on softmax of the logits. For a softmax output layer the
  // logits are its pre-activations, otherwise its activations.
  const auto& last = model.layers.back();
  const Matrix& logits = last.activation == Activation::kSoftmax ? st.pre.back() : st.post.back();
  Vector log_norm;
  detail::softmax_rows(logits, st.probabilities, log_norm);
  double total = 0.0;
  for (std::size_t b = 0; b < logits.rows; ++b)
    total += log_norm[b] - logits(b, batch.labels[b]);
  st.loss = logits.rows == 0 ? 0.0 : total / static_cast<double>(logits.rows);
  if (!std::isfinite(st.loss)) throw InputError("forward: non-finite loss");
  return st;
}

inline GradientUpdate backward(const Model& model, const ForwardState& st,
                               const MiniBatch& batch) {
  const std::size_t n = batch.size();
  const std::size_t depth = model.layers.size();
  if (st.pre.size() != depth || st.probabilities.rows != n)
    throw InputError("backward: forward state does not match model/batch");
  GradientUpdate g = zeros_like(model);
  g.batch_size = n;
  if (n == 0) return g;

  // dL/dlogits for the mean loss.
  Matrix delta = st.probabilities;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t b = 0; b < n; ++b) delta(b, batch.labels[b]) -= 1.0;
  for (double& v : delta.data) v *= inv_n;

  for (std::size_t k = depth; k-- > 0;) {
    const auto& l = model.layers[k];
    // delta currently holds dL/d(post_k); turn it into dL/d(pre_k).
    if (l.activation == Activation::kReLU) {
      for (std::size_t i = 0; i < delta.size(); ++i)
        if (!(st.pre[k].data[i] > 0.0)) delta.data[i] = 0.0;
    }
    const Matrix& x = k == 0 ? st.input : st.post[k - 1];
    auto& gl = g.layers[k];
    for (std::size_t b = 0; b < n; ++b) {
      auto xb = x.row(b);
      for (std::size_t o = 0; o < l.out_dim(); ++o) {
        double d = delta(b, o);
        if (d == 0.0) continue;
        gl.bias[o] += d;
        axpy(d, xb, gl.weights.row(o));
      }
    }
    if (k == 0) break;
    Matrix prev(n, l.in_dim());
    for (std::size_t b = 0; b < n; ++b) {
      auto pb = prev.row(b);
      for (std::size_t o = 0; o < l.out_dim(); ++o) {
        double d = delta(b, o);
        if (d == 0.0) continue;
        axpy(d, l.weights.row(o), pb);
      }
    }
    delta = std::move(prev);
  }
  return g;
}

// Glorot (Xavier) uniform: U(-a, a) with a = gain * sqrt(6 / (in + out)).
inline void glorot_uniform(DenseLayer& layer, RngStream& rng, double gain = 1.0) {
  double a = gain * std::sqrt(6.0 / static_cast<double>(layer.in_dim() + layer.out_dim()));
  for (double& w : layer.weights.data) w = rng.uniform(-a, a);
  std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
}

// dims = {input, hidden..., classes}. Hidden layers use ReLU, the output
// layer is softmax-with-loss.
inline Model make_mlp(const std::vector<std::size_t>& dims, RngStream& rng,
                      double output_gain = 1.0) {
  if (dims.size() < 2) throw ConfigError("make_mlp needs at least input and output sizes");
  Model m;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    DenseLayer l;
    l.weights = Matrix(dims[k + 1], dims[k]);
    l.bias = Vector(dims[k + 1], 0.0);
    l.activation = k + 2 == dims.size() ? Activation::kSoftmax : Activation::kReLU;
    glorot_uniform(l, rng, k + 2 == dims.size() ? output_gain : 1.0);
    m.layers.push_back(std::move(l));
  }
  return m;
}

// Positions where the first dense layer's pre-activation is positive:
// active[b][i] for example b and neuron i.
inline std::vector<std::vector<std::uint8_t>> first_layer_activity(const Model& model,
                                                                   const MiniBatch& batch) {
  Matrix x = model_input(model, batch);
  Matrix z = detail::affine(x, model.layers.front());
  std::vector<std::vector<std::uint8_t>> act(z.rows, std::vector<std::uint8_t>(z.cols, 0));
  for (std::size_t b = 0; b < z.rows; ++b)
    for (std::size_t i = 0; i < z.cols; ++i) act[b][i] = z(b, i) > 0.0 ? 1 : 0;
  return act;
}

}  // namespace glsim
