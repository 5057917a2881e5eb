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

#ifndef LIDP_XBERN_HPP_
#define LIDP_XBERN_HPP_

// Exchangeable-Bernoulli (XBern) statistics.
//
// A trial produces a binary vector x in {0,1}^K whose coordinates are
// exchangeable.  The order-l moment of a trial is the subset average
//
//   m_l = (1 / C(K,l)) * sum_{j1<...<jl} x_{j1} * ... * x_{jl},
//
// computed here in O(K) per trial via the recurrence
//
//   m_1 = s / K,   m_{l+1} = m_l * (s - l) / (K - l),   s = sum_j x_j,
//
// which equals C(s,l) / C(K,l) and therefore matches the subset average
// exactly.  Moments are aggregated across trials by a plain serial mean so
// that results do not depend on summation order.

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "lidp/rng.hpp"

namespace lidp {

// One trial's binary test statistics; entries are exactly 0 or 1.
using BinaryVector = std::vector<std::uint8_t>;

inline constexpr int kMaxMomentOrder = 4;

// Rectangular n x K matrix of binary statistics, one row per trial.
struct StatMatrix {
  std::size_t n = 0;  // trials (rows)
  std::size_t K = 0;  // statistics per trial (columns)
  std::vector<std::uint8_t> data;  // row-major, n * K entries in {0,1}

  StatMatrix() = default;
  StatMatrix(std::size_t rows, std::size_t cols)
      : n(rows), K(cols), data(rows * cols, 0) {}

  std::uint8_t& at(std::size_t i, std::size_t j) { return data[i * K + j]; }
  std::uint8_t at(std::size_t i, std::size_t j) const {
    return data[i * K + j];
  }
  BinaryVector row(std::size_t i) const {
    return BinaryVector(data.begin() + static_cast<std::ptrdiff_t>(i * K),
                        data.begin() + static_cast<std::ptrdiff_t>((i + 1) * K));
  }
  void set_row(std::size_t i, const BinaryVector& x);
};

// Empirical moments of a StatMatrix: aggregate mu_hat[l-1] is the mean over
// trials of the per-trial order-l moment; per_trial keeps each trial's
// (m_1..m_max_order) for diagnostics and tests.
struct MomentVector {
  int max_order = 0;  // orders 1..max_order are populated
  std::array<double, kMaxMomentOrder> mu_hat{};
  std::vector<std::array<double, kMaxMomentOrder>> per_trial;

  // 1-based accessor for the aggregate order-l moment.
  double mu(int order) const;
};

// Per-trial moments m_1..m_max_order of one binary vector.
// Requires 1 <= max_order <= min(4, x.size()); throws
// OrderExceedsDimensionError when max_order exceeds the vector length and
// std::invalid_argument for an empty vector or an out-of-range order.
std::vector<double> trial_moments(const BinaryVector& x, int max_order);

// Aggregates per-trial moments across all rows of M.
MomentVector aggregate_moments(const StatMatrix& M, int max_order);

// Mixing distribution over [0,1] for the synthetic XBern sampler.  The
// sampler draws p ~ mixing once per row and then K conditionally i.i.d.
// Bernoulli(p) entries, so the true order-l moment is E[p^l].
struct Mixing {
  enum class Kind { kPoint, kTwoPoint, kBeta };

  Kind kind = Kind::kPoint;
  double p = 0.0;              // point mass location
  double p_a = 0.0, p_b = 0.0, w = 0.0;  // two-point: p_a w.p. w, else p_b
  double a = 0.0, b = 0.0;     // beta shape parameters

  static Mixing point(double p);
  static Mixing two_point(double p_a, double p_b, double w);
  static Mixing beta(double a, double b);

  // Analytic moment E[p^order], order in 1..4.
  double moment(int order) const;

  // Draws one p from the mixing distribution.
  double sample(rng::Xoshiro256pp& gen) const;
};

struct MixtureSample {
  StatMatrix matrix;
  std::array<double, kMaxMomentOrder> true_mu{};  // ground-truth E[p^l]
};

// Synthetic exchangeable sampler (test fixture).  Row i depends only on
// (seed, i), never on call order.
MixtureSample sample_xbern_mixture(std::size_t K, std::size_t n,
                                   const Mixing& mixing, std::uint64_t seed);

}  // namespace lidp

#endif  // LIDP_XBERN_HPP_
