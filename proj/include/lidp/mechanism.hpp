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

#ifndef LIDP_MECHANISM_HPP_
#define LIDP_MECHANISM_HPP_

// The mechanism under audit, and the concrete Gaussian sum mechanism
//
//   A(D) = sum_{z in D} z + sigma * xi,   xi ~ N(0, I_d),
//
// over inputs with ||z||_2 <= 1 (l2 sensitivity 1), together with the
// calibration between the noise scale sigma and an (epsilon, delta)-DP
// guarantee via the Renyi divergence bound
//
//   eps(sigma, delta) = inf_{alpha > 1} { alpha / (2 sigma^2)
//                        + log(1/(alpha delta)) / (alpha - 1)
//                        + log(1 - 1/alpha) }.

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

namespace lidp {

struct PrivacyParams {
  double epsilon = 0.0;  // >= 0
  double delta = 0.0;    // in [0, 1]
};

// Black-box interface: the audit harness only ever calls run().  Outputs
// must be a pure function of (dataset, trial_seed) so trials can execute
// concurrently and reproducibly.
class Mechanism {
 public:
  virtual ~Mechanism() = default;
  virtual std::vector<double> run(
      const std::vector<std::vector<double>>& dataset,
      std::uint64_t trial_seed) const = 0;
};

// Gaussian sum mechanism on the d-dimensional unit ball.  sigma == 0 is
// accepted and yields the noiseless sum (useful for deterministic tests; it
// simply carries no privacy guarantee).
class GaussianSumMechanism : public Mechanism {
 public:
  GaussianSumMechanism(std::size_t d, double sigma);

  // Rejects inputs of the wrong dimension or with ||z||_2 > 1 + 1e-9
  // (SensitivityViolationError); never clips.
  std::vector<double> run(const std::vector<std::vector<double>>& dataset,
                          std::uint64_t trial_seed) const override;

  std::size_t dim() const { return d_; }
  double sigma() const { return sigma_; }

 private:
  std::size_t d_;
  double sigma_;
};

// Decorator counting run() invocations; used to report how many mechanism
// executions an audit consumed.
class CountingMechanism : public Mechanism {
 public:
  explicit CountingMechanism(std::shared_ptr<const Mechanism> inner)
      : inner_(std::move(inner)) {}

  std::vector<double> run(const std::vector<std::vector<double>>& dataset,
                          std::uint64_t trial_seed) const override {
    calls_.fetch_add(1, std::memory_order_relaxed);
    return inner_->run(dataset, trial_seed);
  }

  std::uint64_t calls() const { return calls_.load(std::memory_order_relaxed); }

 private:
  std::shared_ptr<const Mechanism> inner_;
  mutable std::atomic<std::uint64_t> calls_{0};
};

// Tightest (epsilon, delta)-DP guarantee of the Gaussian sum mechanism at
// noise scale sigma, clamped at 0.  Requires sigma > 0 and delta in (0, 1).
double epsilon_of_sigma(double sigma, double delta);

// Smallest sigma (relative tolerance 1e-6, bisection on log sigma over
// [1e-3, 1e3]) with epsilon_of_sigma(sigma, delta) <= eps.
double sigma_for_epsilon(double eps, double delta);

}  // namespace lidp

#endif  // LIDP_MECHANISM_HPP_
