// Copyright 2026 The lidp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LIDP_RNG_HPP_
#define LIDP_RNG_HPP_

// Deterministic random-number plumbing.
//
// Every random quantity in the library is a pure function of a 64-bit seed.
// A master seed is split into independent sub-streams with derive(), so that
// the i-th trial (or the i-th canary, or the holdout phase) depends only on
// (master_seed, i, role) and never on execution order.  This is what makes
// audits reproducible and safely parallelizable.

#include <array>
#include <cmath>
#include <cstdint>

namespace lidp::rng {

// Roles namespace the sub-streams derived from one master seed.
inline constexpr std::uint64_t kRoleCanary = 1;   // per-trial canary sets
inline constexpr std::uint64_t kRoleMech0 = 2;    // mechanism run on D0
inline constexpr std::uint64_t kRoleMech1 = 3;    // mechanism run on D1
inline constexpr std::uint64_t kRoleHoldout = 4;  // threshold-tuning phase
inline constexpr std::uint64_t kRoleNullSet = 5;  // null-canary sub-stream
inline constexpr std::uint64_t kRoleSphere = 6;   // per-vector sphere draws
inline constexpr std::uint64_t kRoleMixture = 7;  // per-row mixture draws
inline constexpr std::uint64_t kRoleRepeat = 8;   // per-repeat master seeds

// SplitMix64 finalizer (Steele, Lea & Flood; public-domain reference code).
// Used both to derive sub-seeds and to expand a seed into generator state.
constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent sub-seed from (master, index, role).  The chained
// finalizers decorrelate nearby (index, role) pairs.
constexpr std::uint64_t derive(std::uint64_t master, std::uint64_t index,
                               std::uint64_t role) {
  return splitmix64(splitmix64(splitmix64(master) ^ index) ^ role);
}

// xoshiro256++ (Blackman & Vigna).  Small, fast, and adequate statistical
// quality for Monte Carlo work; state is seeded via SplitMix64 as the
// authors recommend.
class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) {
      word = splitmix64(sm);
      sm += 0x9e3779b97f4a7c15ULL;
    }
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::array<std::uint64_t, 4> state_{};
};

// Standard-normal stream using the Marsaglia polar method.  Implemented
// explicitly (rather than via std::normal_distribution) because the standard
// library does not pin the algorithm, and bit-identical output across
// platforms is part of the reproducibility contract.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : gen_(seed) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u = 0.0;
    double v = 0.0;
    double s = 0.0;
    do {
      u = 2.0 * gen_.uniform() - 1.0;
      v = 2.0 * gen_.uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  double uniform() { return gen_.uniform(); }

 private:
  Xoshiro256pp gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace lidp::rng

#endif  // LIDP_RNG_HPP_
