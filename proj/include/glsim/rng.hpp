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

// Deterministic random streams.
//
// All randomness comes from SplitMix64 (Steele, Lea and Flood 2014). The
// generator state advances by the golden-gamma constant and each output is
// the 64-bit finalizer applied to the state, so the k-th output of a stream
// seeded with s is mix64(s + (k + 1) * kGamma). Integer arithmetic only, so
// uniform draws are identical on every platform.
//
// Uniform doubles take the top 53 bits: u = (x >> 11) * 2^-53, in [0, 1).
// Normal draws use the basic Box-Muller transform on two uniforms u1, u2:
//   r = sqrt(-2 ln(1 - u1)), z0 = r cos(2 pi u2), z1 = r sin(2 pi u2)
// and z1 is cached for the next call. These go through the C library's
// log/cos/sin, which are correctly rounded on glibc for the inputs we use
// in practice but are not guaranteed bit-identical on every libm.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace glsim {

inline constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr double to_unit(std::uint64_t x) {
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

// FNV-1a over a label, used to name sub-streams.
constexpr std::uint64_t hash_label(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Combines a parent key with a child id into a new well-mixed key.
constexpr std::uint64_t derive_key(std::uint64_t parent, std::uint64_t child) {
  return mix64(parent ^ mix64(child + kGamma));
}

class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed), stream_id_(stream_id), state_(derive_key(seed, stream_id)) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64() {
    state_ += kGamma;
    return mix64(state_);
  }

  double uniform() { return to_unit(next_u64()); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      unsigned __int128 m =
          static_cast<unsigned __int128>(next_u64()) * static_cast<unsigned __int128>(n);
      if (static_cast<std::uint64_t>(m) >= threshold)
        return static_cast<std::uint64_t>(m >> 64);
    }
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log1p(-u1));
    double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // Independent child stream; does not advance this stream.
  RngStream child(std::uint64_t id) const {
    return RngStream(derive_key(seed_, stream_id_), id);
  }
  RngStream child(std::string_view label) const {
    return child(hash_label(label));
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Fisher-Yates shuffle driven by a RngStream (std::shuffle's use of the URBG
// is implementation-defined).
template <typename It>
void shuffle(It first, It last, RngStream& rng) {
  auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    std::uint64_t j = rng.below(i);
    std::swap(first[i - 1], first[j]);
  }
}

}  // namespace glsim
