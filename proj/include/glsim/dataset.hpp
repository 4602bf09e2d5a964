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

// Datasets: the GLDS binary format and synthetic generators.
//
// GLDS layout (all integers little-endian):
//   bytes 0..3   magic "GLDS"
//   u32          format version (1)
//   u32          example count N
//   u32          feature dim D
//   u32          class count C
//   f64[N*D]     features, row-major, little-endian IEEE-754
//   u32[N]       labels
// Total length is 20 + 8*N*D + 4*N bytes.

#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "glsim/error.hpp"
#include "glsim/matrix.hpp"
#include "glsim/nn.hpp"
#include "glsim/rng.hpp"

namespace glsim {

static_assert(std::endian::native == std::endian::little,
              "GLDS I/O assumes a little-endian host");

struct Dataset {
  Matrix features;  // count x dim
  std::vector<std::uint32_t> labels;
  std::uint32_t classes = 0;

  std::size_t count() const { return features.rows; }
  std::size_t dim() const { return features.cols; }
};

inline constexpr std::uint32_t kGldsVersion = 1;

inline std::vector<std::uint8_t> encode_glds(const Dataset& ds) {
  const std::size_t n = ds.count(), d = ds.dim();
  std::vector<std::uint8_t> out(20 + 8 * n * d + 4 * n);
  std::memcpy(out.data(), "GLDS", 4);
  std::uint32_t hdr[4] = {kGldsVersion, static_cast<std::uint32_t>(n),
                          static_cast<std::uint32_t>(d), ds.classes};
  std::memcpy(out.data() + 4, hdr, sizeof(hdr));
  if (n * d != 0) std::memcpy(out.data() + 20, ds.features.data.data(), 8 * n * d);
  if (n) std::memcpy(out.data() + 20 + 8 * n * d, ds.labels.data(), 4 * n);
  return out;
}

inline Dataset decode_glds(const std::vector<std::uint8_t>& bytes, const std::string& what) {
  if (bytes.size() < 20 || std::memcmp(bytes.data(), "GLDS", 4) != 0)
    throw IoError(what + ": not a GLDS file");
  std::uint32_t hdr[4];
  std::memcpy(hdr, bytes.data() + 4, sizeof(hdr));
  if (hdr[0] != kGldsVersion)
    throw IoError(what + ": unsupported GLDS version " + std::to_string(hdr[0]));
  const std::size_t n = hdr[1], d = hdr[2];
  if (bytes.size() != 20 + 8 * n * d + 4 * n)
    throw IoError(what + ": length " + std::to_string(bytes.size()) + " does not match header");
  Dataset ds;
  ds.classes = hdr[3];
  ds.features = Matrix(n, d);
  ds.labels.resize(n);
  if (n * d != 0) std::memcpy(ds.features.data.data(), bytes.data() + 20, 8 * n * d);
  if (n) std::memcpy(ds.labels.data(), bytes.data() + 20 + 8 * n * d, 4 * n);
  for (auto y : ds.labels)
    if (y >= ds.classes) throw IoError(what + ": label out of range");
  return ds;
}

inline void write_glds(const Dataset& ds, const std::filesystem::path& path) {
  auto bytes = encode_glds(ds);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write failed: " + path.string());
}

inline Dataset read_glds(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open dataset " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  return decode_glds(bytes, path.string());
}

// Spatial layout used for smoothing and image output.
struct ImageShape {
  std::size_t height = 1, width = 0, channels = 1;
};

// 3-channel square if dim = 3*s*s, grayscale square if dim = s*s, else 1-D.
inline ImageShape infer_shape(std::size_t dim) {
  auto square = [](std::size_t n) -> std::size_t {
    auto s = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
    return s * s == n ? s : 0;
  };
  if (dim % 3 == 0 && dim > 3)
    if (auto s = square(dim / 3)) return {s, s, 3};
  if (auto s = square(dim); s > 1) return {s, s, 1};
  return {1, dim, 1};
}

namespace detail {

inline Vector gaussian_kernel(double sigma) {
  int radius = static_cast<int>(std::ceil(3.0 * sigma));
  Vector k(2 * radius + 1);
  double s = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    s += k[i + radius];
  }
  for (double& v : k) v /= s;
  return k;
}

// Separable Gaussian blur with wrap-around, channels interleaved last
// (index = (y * width + x) * channels + c).
inline void blur(std::span<double> v, const ImageShape& sh, double sigma) {
  if (sigma <= 0.0) return;
  Vector k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  const int h = static_cast<int>(sh.height), w = static_cast<int>(sh.width);
  const int ch = static_cast<int>(sh.channels);
  Vector tmp(v.size());
  auto at = [&](int y, int x, int c) { return static_cast<std::size_t>((y * w + x) * ch + c); };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c) {
        double s = 0.0;
        for (int i = -r; i <= r; ++i) s += k[i + r] * v[at(y, ((x + i) % w + w) % w, c)];
        tmp[at(y, x, c)] = s;
      }
  if (h == 1) {
    std::copy(tmp.begin(), tmp.end(), v.begin());
    return;
  }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c) {
        double s = 0.0;
        for (int i = -r; i <= r; ++i) s += k[i + r] * tmp[at(((y + i) % h + h) % h, x, c)];
        v[at(y, x, c)] = s;
      }
}

inline void standardize(std::span<double> v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  double sd = std::sqrt(var / static_cast<double>(v.size()));
  for (double& x : v) x = sd > 0.0 ? (x - mean) / sd : 0.0;
}

}  // namespace detail

struct SyntheticOptions {
  double template_sigma = 4.0;  // smoothing of the per-class template
  double example_sigma = 1.0;   // smoothing of the per-example field
  double class_weight = 0.5;
  double example_weight = 1.0;
};

// Each class gets a smooth random template T_c; example i of class c is
// sigmoid(class_weight * T_c + example_weight * e_i) for a smooth field e_i.
// Both fields are standardized. Labels are i mod classes, so class counts
// differ by at most one.
inline Dataset generate_synthetic(std::size_t dim, std::uint32_t classes, std::size_t count,
                                  std::uint64_t seed, const SyntheticOptions& opt = {}) {
  if (dim == 0 || classes == 0) throw ConfigError("synthetic data needs positive dim and classes");
  Dataset ds;
  ds.classes = classes;
  ds.features = Matrix(count, dim);
  ds.labels.resize(count);
  const ImageShape shape = infer_shape(dim);
  RngStream root(seed, hash_label("synthetic"));

  Matrix templates(classes, dim);
  for (std::uint32_t c = 0; c < classes; ++c) {
    RngStream rng = root.child("template").child(c);
    auto t = templates.row(c);
    for (double& v : t) v = rng.normal();
    detail::blur(t, shape, opt.template_sigma);
    detail::standardize(t);
  }
  Vector field(dim);
  for (std::size_t i = 0; i < count; ++i) {
    RngStream rng = root.child("example").child(i);
    for (double& v : field) v = rng.normal();
    detail::blur(field, shape, opt.example_sigma);
    detail::standardize(field);
    const std::uint32_t y = static_cast<std::uint32_t>(i % classes);
    ds.labels[i] = y;
    auto t = templates.row(y);
    auto x = ds.features.row(i);
    for (std::size_t d = 0; d < dim; ++d)
      x[d] = 1.0 / (1.0 + std::exp(-(opt.class_weight * t[d] + opt.example_weight * field[d])));
  }
  return ds;
}

inline MiniBatch make_batch(const Dataset& ds, const std::vector<std::size_t>& indices) {
  MiniBatch b;
  b.inputs = Matrix(indices.size(), ds.dim());
  b.labels.resize(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= ds.count()) throw InputError("batch index out of range");
    auto src = ds.features.row(indices[r]);
    std::copy(src.begin(), src.end(), b.inputs.row(r).begin());
    b.labels[r] = ds.labels[indices[r]];
  }
  return b;
}

// Fixed-length token sequences. Token 0 is reserved for padding.
struct TextDataset {
  std::vector<std::vector<std::uint32_t>> tokens;
  std::vector<std::uint32_t> labels;
  std::uint32_t vocab = 0;
  std::uint32_t classes = 2;

  std::size_t count() const { return labels.size(); }
};

// Sequences of `length` tokens drawn uniformly from [1, vocab). The label is
// 1 when most tokens come from the upper half of the vocabulary.
inline TextDataset generate_text(std::uint32_t vocab, std::size_t length, std::size_t count,
                                 std::uint64_t seed) {
  if (vocab < 2 || length == 0) throw ConfigError("text data needs vocab >= 2 and length >= 1");
  TextDataset ds;
  ds.vocab = vocab;
  ds.tokens.resize(count);
  ds.labels.resize(count);
  RngStream rng(seed, hash_label("text"));
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t upper = 0;
    for (std::size_t t = 0; t < length; ++t) {
      auto tok = static_cast<std::uint32_t>(1 + rng.below(vocab - 1));
      upper += tok >= vocab / 2;
      ds.tokens[i].push_back(tok);
    }
    ds.labels[i] = 2 * upper > length ? 1 : 0;
  }
  return ds;
}

inline MiniBatch make_text_batch(const TextDataset& ds, const std::vector<std::size_t>& indices) {
  MiniBatch b;
  for (auto i : indices) {
    if (i >= ds.count()) throw InputError("batch index out of range");
    b.tokens.push_back(ds.tokens[i]);
    b.labels.push_back(ds.labels[i]);
  }
  return b;
}

// Embedding table with entries uniform on [0, 1); row 0 (padding) is zero.
inline EmbeddingLayer make_embedding(std::uint32_t vocab, std::size_t dim, RngStream& rng,
                                     Pooling pooling) {
  EmbeddingLayer e;
  e.pooling = pooling;
  e.table = Matrix(vocab, dim);
  for (std::size_t r = 1; r < vocab; ++r)
    for (double& v : e.table.row(r)) v = rng.uniform();
  return e;
}

}  // namespace glsim
