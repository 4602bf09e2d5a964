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

// Turning an exposed update into reconstructed inputs.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "glsim/error.hpp"
#include "glsim/matrix.hpp"
#include "glsim/nn.hpp"
#include "glsim/rng.hpp"

namespace glsim {

inline constexpr double kSnrCap = 1e12;

struct ExtractedCandidate {
  std::size_t neuron = 0;
  Vector reconstruction;
  double bias_gradient = 0.0;  // magnitude
  double row_norm = 0.0;       // L2 norm of the source weight row and bias entry
  std::optional<double> snr;
  std::optional<std::size_t> match;  // index of the matched ground-truth input
};

struct ExtractOptions {
  // Under noise the sign of the bias gradient is unreliable. For inputs known
  // to be non-negative, flip each candidate so its mean is non-negative.
  bool align_nonnegative = false;
};

// Candidate i = weight-grad row i / bias-grad i, for |bias-grad i| > eps_b.
inline std::vector<ExtractedCandidate> extract_inputs(const GradientUpdate& update,
                                                      std::size_t layer, double eps_b,
                                                      const ExtractOptions& opt = {}) {
  if (layer >= update.layers.size()) throw InputError("extract_inputs: no such layer");
  const auto& g = update.layers[layer];
  std::vector<ExtractedCandidate> out;
  for (std::size_t i = 0; i < g.bias.size(); ++i) {
    const double b = g.bias[i];
    if (!(std::abs(b) > eps_b)) continue;
    ExtractedCandidate c;
    c.neuron = i;
    c.bias_gradient = std::abs(b);
    auto row = g.weights.row(i);
    c.row_norm = std::sqrt(squared_norm(row) + b * b);
    c.reconstruction.assign(row.begin(), row.end());
    double inv = 1.0 / b;
    double sum = 0.0;
    for (double& v : c.reconstruction) {
      v *= inv;
      sum += v;
    }
    if (opt.align_nonnegative && sum < 0.0)
      for (double& v : c.reconstruction) v = -v;
    out.push_back(std::move(c));
  }
  return out;
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InputError("pearson: length mismatch");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double x = a[i] - ma, y = b[i] - mb;
    sab += x * y;
    saa += x * x;
    sbb += y * y;
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

// ||alpha g||^2 / ||r - alpha g||^2 with alpha = <r,g>/<g,g>, capped.
inline double aligned_snr(std::span<const double> r, std::span<const double> g) {
  const double gg = squared_norm(g);
  if (gg == 0.0) return 0.0;
  const double alpha = dot(r, g) / gg;
  double res = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    double d = r[i] - alpha * g[i];
    res += d * d;
  }
  const double sig = alpha * alpha * gg;
  if (res == 0.0) return sig > 0.0 ? kSnrCap : 0.0;
  return std::min(kSnrCap, sig / res);
}

// Power of a known component t inside an observed vector e, relative to
// everything else: ||t||^2 / ||e - t||^2, capped. Needs simulator ground
// truth for t.
inline double component_snr(std::span<const double> e, std::span<const double> t) {
  if (e.size() != t.size()) throw InputError("component_snr: length mismatch");
  double res = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) res += (e[i] - t[i]) * (e[i] - t[i]);
  const double sig = squared_norm(t);
  if (res == 0.0) return sig > 0.0 ? kSnrCap : 0.0;
  return std::min(kSnrCap, sig / res);
}

struct SnrMatch {
  double snr = 0.0;
  std::size_t index = 0;
};

// Matches r to the ground-truth row with the largest absolute correlation
// (ties: lowest index) and scores it with aligned_snr.
inline SnrMatch compute_snr(std::span<const double> r, const Matrix& truth) {
  if (truth.rows == 0) throw InputError("compute_snr: empty ground truth");
  if (truth.cols != r.size()) throw InputError("compute_snr: dimension mismatch");
  std::size_t best = 0;
  double best_corr = -1.0;
  for (std::size_t k = 0; k < truth.rows; ++k) {
    double c = std::abs(pearson(r, truth.row(k)));
    if (c > best_corr) {
      best_corr = c;
      best = k;
    }
  }
  return {aligned_snr(r, truth.row(best)), best};
}

inline void score_candidates(std::vector<ExtractedCandidate>& cands, const Matrix& truth) {
  for (auto& c : cands) {
    auto m = compute_snr(c.reconstruction, truth);
    c.snr = m.snr;
    c.match = m.index;
  }
}

enum class ScoreMode {
  kSnr,           // ground-truth SNR (simulator only)
  kBiasGradient,  // attacker-side proxy
};

inline std::vector<ExtractedCandidate> filter_by_snr(const std::vector<ExtractedCandidate>& cands,
                                                     double threshold = 1.0,
                                                     ScoreMode mode = ScoreMode::kSnr) {
  std::vector<ExtractedCandidate> out;
  for (const auto& c : cands) {
    double score;
    if (mode == ScoreMode::kSnr) {
      if (!c.snr) throw InputError("filter_by_snr: candidate has no SNR");
      score = *c.snr;
    } else {
      score = c.bias_gradient;
    }
    if (score >= threshold) out.push_back(c);
  }
  return out;
}

struct ClusterResult {
  std::size_t k = 0;
  std::vector<std::size_t> assignments;
  Matrix centroids;
  std::vector<std::size_t> counts;
  std::vector<double> objective;  // after seeding, then after each Lloyd step
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

namespace detail {

inline double assign(const Matrix& pts, const Matrix& cent, std::vector<std::size_t>& asg) {
  double obj = 0.0;
  for (std::size_t p = 0; p < pts.rows; ++p) {
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cent.rows; ++c) {
      double d = squared_distance(pts.row(p), cent.row(c));
      if (d < bd) {
        bd = d;
        best = c;
      }
    }
    asg[p] = best;
    obj += bd;
  }
  return obj;
}

}  // namespace detail

// k-means++ seeding followed by Lloyd iterations. A cluster that loses all
// members keeps its previous centroid.
inline ClusterResult kmeans_cluster(const Matrix& points, std::size_t k, std::size_t max_iters,
                                    RngStream& rng) {
  if (k < 1) throw InputError("kmeans: k must be at least 1");
  if (points.rows < k) throw InputError("kmeans: fewer candidates than clusters");
  const std::size_t n = points.rows;
  ClusterResult res;
  res.k = k;
  res.centroids = Matrix(k, points.cols);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::vector<std::uint8_t> chosen(n, 0);
  std::size_t first = rng.below(n);
  chosen[first] = 1;
  std::copy(points.row(first).begin(), points.row(first).end(), res.centroids.row(0).begin());
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      d2[p] = std::min(d2[p], squared_distance(points.row(p), res.centroids.row(c - 1)));
      if (!chosen[p]) total += d2[p];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      double u = rng.uniform() * total, acc = 0.0;
      for (std::size_t p = 0; p < n; ++p) {
        if (chosen[p]) continue;
        acc += d2[p];
        if (u < acc) {
          pick = p;
          break;
        }
      }
    }
    if (pick == n)  // all remaining points coincide with centroids
      for (std::size_t p = 0; p < n && pick == n; ++p)
        if (!chosen[p]) pick = p;
    chosen[pick] = 1;
    std::copy(points.row(pick).begin(), points.row(pick).end(), res.centroids.row(c).begin());
  }

  res.assignments.assign(n, 0);
  res.objective.push_back(detail::assign(points, res.centroids, res.assignments));
  for (std::size_t it = 0; it < max_iters; ++it) {
    Matrix sums(k, points.cols);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t p = 0; p < n; ++p) {
      axpy(1.0, points.row(p), sums.row(res.assignments[p]));
      ++counts[res.assignments[p]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      auto dst = res.centroids.row(c);
      auto src = sums.row(c);
      for (std::size_t d = 0; d < points.cols; ++d)
        dst[d] = src[d] / static_cast<double>(counts[c]);
    }
    auto before = res.assignments;
    res.objective.push_back(detail::assign(points, res.centroids, res.assignments));
    if (before == res.assignments) break;
  }
  res.counts.assign(k, 0);
  for (auto a : res.assignments) ++res.counts[a];
  return res;
}

inline Matrix stack(const std::vector<ExtractedCandidate>& cands) {
  if (cands.empty()) return {};
  Matrix m(cands.size(), cands.front().reconstruction.size());
  for (std::size_t i = 0; i < cands.size(); ++i) {
    if (cands[i].reconstruction.size() != m.cols) throw InputError("candidates differ in size");
    std::copy(cands[i].reconstruction.begin(), cands[i].reconstruction.end(), m.row(i).begin());
  }
  return m;
}

inline ClusterResult kmeans_cluster(const std::vector<ExtractedCandidate>& cands, std::size_t k,
                                    std::size_t max_iters, RngStream& rng) {
  if (cands.size() < k) throw InputError("kmeans: fewer candidates than clusters");
  return kmeans_cluster(stack(cands), k, max_iters, rng);
}

struct AveragingResult {
  Vector mean;
  std::vector<double> snr;  // snr[n-1] is the SNR of the mean of the first n
};

// Running equal-weight mean over candidates that match one ground-truth
// point. With normalize set, every candidate is scaled to unit L2 norm
// first so rows with tiny bias gradients (huge rescaled noise) do not
// dominate the mean.
inline AveragingResult average_redundant(const std::vector<ExtractedCandidate>& cands,
                                         std::span<const double> truth, bool normalize = true) {
  if (cands.empty()) throw InputError("average_redundant: no candidates");
  const std::size_t dim = cands.front().reconstruction.size();
  if (truth.size() != dim) throw InputError("average_redundant: dimension mismatch");
  AveragingResult res;
  Vector sum(dim, 0.0);
  res.mean.assign(dim, 0.0);
  for (std::size_t n = 0; n < cands.size(); ++n) {
    const auto& r = cands[n].reconstruction;
    double s = 1.0;
    if (normalize) {
      double norm = l2_norm(r);
      s = norm > 0.0 ? 1.0 / norm : 0.0;
    }
    axpy(s, r, sum);
    for (std::size_t d = 0; d < dim; ++d) res.mean[d] = sum[d] / static_cast<double>(n + 1);
    res.snr.push_back(aligned_snr(res.mean, truth));
  }
  return res;
}

// Closest table row by L2 distance; ties go to the lowest index.
inline std::size_t token_lookup(std::span<const double> row, const EmbeddingLayer& table) {
  if (table.vocab() == 0) throw InputError("token_lookup: empty table");
  if (row.size() != table.dim()) throw InputError("token_lookup: dimension mismatch");
  std::size_t best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < table.vocab(); ++t) {
    double d = squared_distance(row, table.table.row(t));
    if (d < bd) {
      bd = d;
      best = t;
    }
  }
  return best;
}

// Splits a concatenation-pooled reconstruction into per-position chunks and
// looks each one up.
inline std::vector<std::size_t> tokens_from_reconstruction(std::span<const double> r,
                                                           const EmbeddingLayer& table) {
  if (table.dim() == 0 || r.size() % table.dim() != 0)
    throw InputError("reconstruction length is not a multiple of the embedding dim");
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < r.size(); p += table.dim())
    out.push_back(token_lookup(r.subspan(p, table.dim()), table));
  return out;
}

}  // namespace glsim
