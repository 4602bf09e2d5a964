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

// Simulated pairwise-masking secure aggregation over real vectors.
//
// Each unordered pair {u, v} of participants shares a seed. User u adds
// PRG(s_uv) for every partner v with a larger id and subtracts it for every
// partner with a smaller id, so the masks cancel in the sum.
//
// PRG(s) is the SplitMix64 stream seeded with s: entry k (in for_each_block
// order) is 2 * to_unit(mix64(s + (k + 1) * kGamma)) - 1, uniform on [-1, 1).
//
// Pairs whose endpoints are both server-controlled may be left unmasked: the
// server runs both ends and gains nothing by masking towards itself.

#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "glsim/error.hpp"
#include "glsim/nn.hpp"
#include "glsim/rng.hpp"

namespace glsim {

using UserId = std::uint32_t;

class MaskSeedMatrix {
 public:
  MaskSeedMatrix() = default;

  const std::vector<UserId>& participants() const { return participants_; }
  std::uint64_t round_seed() const { return round_seed_; }
  std::size_t size() const { return participants_.size(); }

  bool contains(UserId u) const { return index_.count(u) != 0; }

  std::size_t index_of(UserId u) const {
    auto it = index_.find(u);
    if (it == index_.end())
      throw ProtocolError("user " + std::to_string(u) + " is not a round participant");
    return it->second;
  }

  std::uint64_t seed(UserId u, UserId v) const {
    return table_[index_of(u) * size() + index_of(v)];
  }

  // Whether the pair {u, v} carries a mask.
  bool live(UserId u, UserId v) const {
    if (u == v) return false;
    return !(controlled_[index_of(u)] && controlled_[index_of(v)]);
  }

  std::size_t pair_count() const { return size() * (size() - 1) / 2; }

  std::size_t live_pair_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < size(); ++i)
      for (std::size_t j = i + 1; j < size(); ++j)
        if (!(controlled_[i] && controlled_[j])) ++n;
    return n;
  }

 private:
  friend MaskSeedMatrix setup_masks(const std::vector<UserId>&, RngStream&,
                                    const std::vector<UserId>&);
  std::vector<UserId> participants_;
  std::unordered_map<UserId, std::size_t> index_;
  std::vector<std::uint8_t> controlled_;
  std::vector<std::uint64_t> table_;
  std::uint64_t round_seed_ = 0;
};

// Draws the round seed from rng and derives one seed per unordered pair.
// Pairs between two ids listed in `controlled` are left unmasked.
inline MaskSeedMatrix setup_masks(const std::vector<UserId>& participants, RngStream& rng,
                                  const std::vector<UserId>& controlled = {}) {
  if (participants.size() < 2)
    throw ProtocolError("secure aggregation needs at least 2 participants");
  MaskSeedMatrix m;
  m.round_seed_ = rng.next_u64();
  m.participants_ = participants;
  const std::size_t n = participants.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!m.index_.emplace(participants[i], i).second)
      throw ProtocolError("duplicate participant " + std::to_string(participants[i]));
  }
  m.controlled_.assign(n, 0);
  for (UserId u : controlled) {
    auto it = m.index_.find(u);
    if (it != m.index_.end()) m.controlled_[it->second] = 1;
  }
  m.table_.assign(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      UserId lo = std::min(participants[i], participants[j]);
      UserId hi = std::max(participants[i], participants[j]);
      std::uint64_t s = derive_key(derive_key(m.round_seed_, lo), hi);
      m.table_[i * n + j] = s;
      m.table_[j * n + i] = s;
    }
  }
  return m;
}

struct MaskedUpdate {
  GradientUpdate values;
  UserId owner = 0;
};

// values += sign * PRG(seed), entry by entry in block order.
inline void add_prg(GradientUpdate& values, std::uint64_t seed, double sign) {
  const double a = 2.0 * sign;
  std::uint64_t state = seed;
  for_each_block(values, [&](std::span<double> block) {
    double* p = block.data();
    const std::size_t n = block.size();
    for (std::size_t i = 0; i < n; ++i) {
      state += kGamma;
      p[i] += a * to_unit(mix64(state)) - sign;
    }
  });
}

inline MaskedUpdate mask_update(const GradientUpdate& update, UserId self,
                                const MaskSeedMatrix& masks) {
  if (!masks.contains(self))
    throw ProtocolError("user " + std::to_string(self) + " is not a round participant");
  MaskedUpdate out{update, self};
  for (UserId v : masks.participants()) {
    if (!masks.live(self, v)) continue;
    add_prg(out.values, masks.seed(self, v), self < v ? 1.0 : -1.0);
  }
  return out;
}

// Streaming sum of masked updates. finish() aborts unless every participant
// contributed exactly once.
class Aggregator {
 public:
  explicit Aggregator(const MaskSeedMatrix& masks)
      : masks_(&masks), seen_(masks.size(), 0) {}

  void add(const MaskedUpdate& m) {
    std::size_t i = masks_->index_of(m.owner);
    if (seen_[i]) throw ProtocolError("duplicate update from user " + std::to_string(m.owner));
    if (!started_) {
      sum_ = zeros_like(m.values);
      sum_.batch_size = 0;
      started_ = true;
    } else if (!same_shape(sum_, m.values)) {
      throw ProtocolError("masked update shape differs from the round's model");
    }
    seen_[i] = 1;
    accumulate(sum_, m.values);
    sum_.batch_size += m.values.batch_size;
  }

  GradientUpdate finish() {
    for (std::size_t i = 0; i < seen_.size(); ++i)
      if (!seen_[i])
        throw ProtocolError("missing update from participant " +
                            std::to_string(masks_->participants()[i]) + "; round aborted");
    return std::move(sum_);
  }

 private:
  const MaskSeedMatrix* masks_;
  std::vector<std::uint8_t> seen_;
  GradientUpdate sum_;
  bool started_ = false;
};

inline GradientUpdate aggregate(std::span<const MaskedUpdate> masked,
                                const MaskSeedMatrix& masks) {
  Aggregator agg(masks);
  for (const auto& m : masked) agg.add(m);
  return agg.finish();
}

}  // namespace glsim
