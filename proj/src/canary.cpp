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

#include "lidp/canary.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "lidp/rng.hpp"

namespace lidp {

std::vector<std::vector<double>> sample_sphere(std::size_t d, std::size_t count,
                                               std::uint64_t seed) {
  if (d < 1) {
    throw std::invalid_argument("sample_sphere: dimension must be >= 1");
  }
  if (count < 1) {
    throw std::invalid_argument("sample_sphere: count must be >= 1");
  }
  std::vector<std::vector<double>> vectors(count);
  for (std::size_t i = 0; i < count; ++i) {
    // Vector i depends only on (seed, i): growing count keeps a stable
    // prefix, which pairs canary sets across different K.
    rng::GaussianStream gauss(rng::derive(seed, i, rng::kRoleSphere));
    auto& v = vectors[i];
    v.resize(d);
    double norm = 0.0;
    do {
      double norm_sq = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        v[j] = gauss.next();
        norm_sq += v[j] * v[j];
      }
      norm = std::sqrt(norm_sq);
    } while (norm < 1e-12);  // astronomically unlikely; redraw if degenerate
    for (std::size_t j = 0; j < d; ++j) v[j] /= norm;
  }
  return vectors;
}

CanarySet sample_canary_set(std::size_t d, std::size_t K, std::size_t m,
                            std::uint64_t seed) {
  if (K < 1 || m < 1) {
    throw std::invalid_argument("sample_canary_set: K and m must be >= 1");
  }
  CanarySet set;
  set.d = d;
  set.K = K;
  set.m = m;
  set.canaries = sample_sphere(d, K, seed);
  // The null canaries live on their own sub-stream so that audits with the
  // same seed but different K test identical null vectors.
  auto nulls = sample_sphere(d, m, rng::derive(seed, 0, rng::kRoleNullSet));
  set.canaries.insert(set.canaries.end(),
                      std::make_move_iterator(nulls.begin()),
                      std::make_move_iterator(nulls.end()));
  return set;
}

int test_canary(const std::vector<double>& output, const std::vector<double>& c,
                double tau) {
  if (output.size() != c.size()) {
    throw std::invalid_argument(
        "test_canary: output dimension " + std::to_string(output.size()) +
        " does not match canary dimension " + std::to_string(c.size()));
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < output.size(); ++i) dot += output[i] * c[i];
  return dot > tau ? 1 : 0;
}

ThresholdTuning tune_threshold(
    const std::vector<double>& grid, std::size_t holdout_trials,
    const std::function<double(double, std::size_t)>& audit_closure) {
  if (grid.empty()) {
    throw std::invalid_argument("tune_threshold: empty threshold grid");
  }
  ThresholdTuning tuning;
  tuning.grid = grid;
  tuning.holdout_eps.reserve(grid.size());
  std::size_t best = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    tuning.holdout_eps.push_back(audit_closure(grid[i], holdout_trials));
    // Strictly-greater keeps the smallest tau on ties (and the smallest tau
    // overall when several grid points share the best estimate).
    if (tuning.holdout_eps[i] > tuning.holdout_eps[best] ||
        (tuning.holdout_eps[i] == tuning.holdout_eps[best] &&
         grid[i] < grid[best])) {
      best = i;
    }
  }
  tuning.tau_star = grid[best];
  return tuning;
}

std::vector<double> default_tau_grid() {
  std::vector<double> grid(21);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid[i] = static_cast<double>(i) * 0.1;
  }
  return grid;
}

}  // namespace lidp
