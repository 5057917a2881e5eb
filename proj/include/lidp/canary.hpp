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

#ifndef LIDP_CANARY_HPP_
#define LIDP_CANARY_HPP_

// Canary generation and membership testing for the Gaussian-mechanism audit.
//
// Canaries are i.i.d. uniform unit-sphere vectors; exchangeability of the
// resulting test statistics rests entirely on this i.i.d. draw.  The
// membership test declares a canary present when its dot product with the
// mechanism output strictly exceeds a threshold tau.  tau can be tuned on a
// holdout set; the tuned value must then be evaluated on fresh trials.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace lidp {

// K + m unit vectors: the first K are injected into the dataset ("present"
// canaries), the last m are never injected and drive the null tests.
struct CanarySet {
  std::size_t d = 0;
  std::size_t K = 0;
  std::size_t m = 0;
  std::vector<std::vector<double>> canaries;  // size K + m

  const std::vector<double>& present(std::size_t k) const {
    return canaries[k];
  }
  const std::vector<double>& null_test(std::size_t j) const {
    return canaries[K + j];
  }
};

// Dot-product threshold test; membership depends only on (output, canary,
// tau), never on the canary's index.
struct RejectionRule {
  double tau = 0.0;
};

// count i.i.d. uniform unit-sphere vectors in R^d: standard Gaussian draws
// normalized to unit length.  Vector i depends only on (seed, i), so
// extending count keeps earlier vectors unchanged.
std::vector<std::vector<double>> sample_sphere(std::size_t d, std::size_t count,
                                               std::uint64_t seed);

// Draws the K present canaries and m null canaries of one trial.  The null
// canaries come from a sub-stream derived from seed, so canary sets with
// the same seed but different K share their null vectors.
CanarySet sample_canary_set(std::size_t d, std::size_t K, std::size_t m,
                            std::uint64_t seed);

// 1 when <c, output> > tau (strictly), else 0.  Ties count as rejection.
// Throws std::invalid_argument on dimension mismatch.
int test_canary(const std::vector<double>& output, const std::vector<double>& c,
                double tau);

struct ThresholdTuning {
  double tau_star = 0.0;
  std::vector<double> grid;
  std::vector<double> holdout_eps;  // audit estimate per grid point
};

// Grid argmax of the audit estimate on a holdout set.  audit_closure(tau,
// holdout_trials) must run a full audit at the given threshold on holdout
// seeds disjoint from the reporting seeds; the caller must re-run on fresh
// seeds to report.  Ties break toward the smallest tau.  Throws
// std::invalid_argument on an empty grid.
ThresholdTuning tune_threshold(
    const std::vector<double>& grid, std::size_t holdout_trials,
    const std::function<double(double, std::size_t)>& audit_closure);

// 21 equally spaced thresholds on [0, 2]; the present-canary statistic
// concentrates near 1 plus noise, so the grid brackets it.
std::vector<double> default_tau_grid();

}  // namespace lidp

#endif  // LIDP_CANARY_HPP_
