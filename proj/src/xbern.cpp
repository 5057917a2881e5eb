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

#include "lidp/xbern.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "lidp/errors.hpp"
#include "lidp/rng.hpp"

namespace lidp {
namespace {

void check_order(int max_order, std::size_t K) {
  if (max_order < 1 || max_order > kMaxMomentOrder) {
    throw std::invalid_argument("moment order must be in 1..4, got " +
                                std::to_string(max_order));
  }
  if (static_cast<std::size_t>(max_order) > K) {
    throw OrderExceedsDimensionError(
        "moment order " + std::to_string(max_order) +
        " exceeds vector length " + std::to_string(K));
  }
}

// Per-trial moments from the row sum s.  m_l = C(s,l) / C(K,l): start from
// m_1 = s/K and multiply by (s-l)/(K-l).  Using the integer row sum keeps
// the factors exact, so m_l is 0 exactly whenever l > s.
void moments_from_row_sum(std::size_t s, std::size_t K, int max_order,
                          double* out) {
  double m = static_cast<double>(s) / static_cast<double>(K);
  out[0] = m;
  for (int l = 1; l < max_order; ++l) {
    m *= (static_cast<double>(s) - l) / (static_cast<double>(K) - l);
    out[l] = m;
  }
}

}  // namespace

void StatMatrix::set_row(std::size_t i, const BinaryVector& x) {
  if (x.size() != K) {
    throw std::invalid_argument("row length " + std::to_string(x.size()) +
                                " does not match matrix width " +
                                std::to_string(K));
  }
  for (std::size_t j = 0; j < K; ++j) data[i * K + j] = x[j];
}

double MomentVector::mu(int order) const {
  if (order < 1 || order > max_order) {
    throw std::invalid_argument("moment order " + std::to_string(order) +
                                " not available (have 1.." +
                                std::to_string(max_order) + ")");
  }
  return mu_hat[static_cast<std::size_t>(order - 1)];
}

std::vector<double> trial_moments(const BinaryVector& x, int max_order) {
  if (x.empty()) {
    throw std::invalid_argument("trial_moments: empty binary vector");
  }
  check_order(max_order, x.size());
  std::size_t s = 0;
  for (const auto bit : x) {
    if (bit > 1) {
      throw std::invalid_argument("trial_moments: entries must be 0 or 1");
    }
    s += bit;
  }
  std::vector<double> out(static_cast<std::size_t>(max_order), 0.0);
  moments_from_row_sum(s, x.size(), max_order, out.data());
  return out;
}

MomentVector aggregate_moments(const StatMatrix& M, int max_order) {
  if (M.n == 0 || M.K == 0) {
    throw std::invalid_argument("aggregate_moments: empty matrix");
  }
  check_order(max_order, M.K);
  MomentVector mv;
  mv.max_order = max_order;
  mv.per_trial.resize(M.n);
  std::array<double, kMaxMomentOrder> sums{};
  // Serial fold in trial order: the aggregate is independent of how the
  // trials themselves were scheduled.
  for (std::size_t i = 0; i < M.n; ++i) {
    std::size_t s = 0;
    for (std::size_t j = 0; j < M.K; ++j) s += M.at(i, j);
    std::array<double, kMaxMomentOrder> row{};
    moments_from_row_sum(s, M.K, max_order, row.data());
    mv.per_trial[i] = row;
    for (int l = 0; l < max_order; ++l) sums[static_cast<std::size_t>(l)] += row[static_cast<std::size_t>(l)];
  }
  for (int l = 0; l < max_order; ++l) {
    mv.mu_hat[static_cast<std::size_t>(l)] =
        sums[static_cast<std::size_t>(l)] / static_cast<double>(M.n);
  }
  return mv;
}

Mixing Mixing::point(double p) {
  if (p < 0.0 || p > 1.0) {
    throw std::invalid_argument("point mixing: p must be in [0,1]");
  }
  Mixing mix;
  mix.kind = Kind::kPoint;
  mix.p = p;
  return mix;
}

Mixing Mixing::two_point(double p_a, double p_b, double w) {
  if (p_a < 0.0 || p_a > 1.0 || p_b < 0.0 || p_b > 1.0 || w < 0.0 || w > 1.0) {
    throw std::invalid_argument(
        "two-point mixing: p_a, p_b and w must be in [0,1]");
  }
  Mixing mix;
  mix.kind = Kind::kTwoPoint;
  mix.p_a = p_a;
  mix.p_b = p_b;
  mix.w = w;
  return mix;
}

Mixing Mixing::beta(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw std::invalid_argument("beta mixing: shapes must be positive");
  }
  Mixing mix;
  mix.kind = Kind::kBeta;
  mix.a = a;
  mix.b = b;
  return mix;
}

double Mixing::moment(int order) const {
  if (order < 1 || order > kMaxMomentOrder) {
    throw std::invalid_argument("mixing moment order must be in 1..4");
  }
  switch (kind) {
    case Kind::kPoint:
      return std::pow(p, order);
    case Kind::kTwoPoint:
      return w * std::pow(p_a, order) + (1.0 - w) * std::pow(p_b, order);
    case Kind::kBeta: {
      // E[p^l] = prod_{i=0}^{l-1} (a + i) / (a + b + i).
      double value = 1.0;
      for (int i = 0; i < order; ++i) value *= (a + i) / (a + b + i);
      return value;
    }
  }
  throw std::logic_error("unreachable mixing kind");
}

namespace {

// Marsaglia-Tsang squeeze method for Gamma(shape, 1), with the standard
// boost for shape < 1.
double sample_gamma(double shape, rng::Xoshiro256pp& gen) {
  if (shape < 1.0) {
    const double g = sample_gamma(shape + 1.0, gen);
    double u = gen.uniform();
    while (u == 0.0) u = gen.uniform();
    return g * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = 0.0;
    double v = 0.0;
    do {
      // Inline polar normal draw on the shared uniform stream.
      double a = 0.0, b = 0.0, s = 0.0;
      do {
        a = 2.0 * gen.uniform() - 1.0;
        b = 2.0 * gen.uniform() - 1.0;
        s = a * a + b * b;
      } while (s >= 1.0 || s == 0.0);
      x = a * std::sqrt(-2.0 * std::log(s) / s);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = gen.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 &&
        std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
      return d * v;
    }
  }
}

}  // namespace

double Mixing::sample(rng::Xoshiro256pp& gen) const {
  switch (kind) {
    case Kind::kPoint:
      return p;
    case Kind::kTwoPoint:
      return gen.uniform() < w ? p_a : p_b;
    case Kind::kBeta: {
      const double g1 = sample_gamma(a, gen);
      const double g2 = sample_gamma(b, gen);
      return g1 / (g1 + g2);
    }
  }
  throw std::logic_error("unreachable mixing kind");
}

MixtureSample sample_xbern_mixture(std::size_t K, std::size_t n,
                                   const Mixing& mixing, std::uint64_t seed) {
  if (K < 1 || n < 1) {
    throw std::invalid_argument("sample_xbern_mixture: K and n must be >= 1");
  }
  MixtureSample sample;
  sample.matrix = StatMatrix(n, K);
  for (int l = 1; l <= kMaxMomentOrder; ++l) {
    sample.true_mu[static_cast<std::size_t>(l - 1)] = mixing.moment(l);
  }
  for (std::size_t i = 0; i < n; ++i) {
    // Row i depends only on (seed, i); rows may be generated in any order.
    rng::Xoshiro256pp gen(rng::derive(seed, i, rng::kRoleMixture));
    const double p = mixing.sample(gen);
    for (std::size_t j = 0; j < K; ++j) {
      sample.matrix.at(i, j) = gen.uniform() < p ? 1 : 0;
    }
  }
  return sample;
}

}  // namespace lidp
