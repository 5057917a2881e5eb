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

#ifndef LIDP_HARNESS_HPP_
#define LIDP_HARNESS_HPP_

// The end-to-end audit.
//
// Each of n independent trials injects K i.i.d. canaries into the dataset,
// runs the mechanism, and tests every canary plus m fresh null canaries:
//
//   add_remove:   D0 = D u {c_1..c_{K-1}},  D1 = D u {c_1..c_K};
//                 x_k = test(c_k, A(D1)),   y_j = test(c'_j, A(D0))
//                 (two mechanism runs per trial)
//   replace_one:  D1 = D u {c_1..c_K};
//                 x_k = test(c_k, A(D1)),   y_j = test(c'_j, A(D1))
//                 (one mechanism run per trial)
//
// The n x K matrix X of present-canary results and the n x m matrix Y of
// null results feed the chosen confidence-bound method: p1_lower is a lower
// confidence bound on the mean of X at budget beta/2, p0_upper an upper
// bound on the mean of Y at beta/2, and the audit reports
//
//   eps_hat = max(0, log((p1_lower - delta) / p0_upper)),
//
// which satisfies P(eps < eps_hat) <= beta for any mechanism that is
// actually (eps, delta)-DP.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lidp/canary.hpp"
#include "lidp/ci.hpp"
#include "lidp/mechanism.hpp"
#include "lidp/xbern.hpp"

namespace lidp {

enum class Neighborhood { kAddRemove, kReplaceOne };

std::string to_string(Neighborhood n);

struct AuditConfig {
  std::size_t n = 1024;  // trials
  std::size_t K = 32;    // canaries per trial
  std::size_t m = 32;    // null tests per trial
  std::size_t d = 1000;  // canary / output dimension
  PrivacyParams claimed{1.0, 1e-5};  // the (eps, delta) being audited
  double beta = 0.05;    // failure budget of the whole audit
  CiMethod ci_method = CiMethod::kWilson;
  int ci_order = 2;
  Neighborhood neighborhood = Neighborhood::kAddRemove;
  std::optional<double> tau;      // fixed threshold; unset => tune on grid
  std::vector<double> tau_grid;   // tuning grid; empty => default_tau_grid()
  std::uint64_t seed = 0;         // master seed
  int workers = 0;                // 0 = auto, 1 = serial reference
  bool both_directions = false;   // also audit with D0/D1 roles swapped
  std::shared_ptr<const Mechanism> mechanism;  // required
  // Base dataset D; empty means the zero vector {0_d}.
  std::vector<std::vector<double>> base_data;
};

// The pieces of an estimate that are a pure function of (config, X, Y).
struct EstimateResult {
  double eps_hat = 0.0;  // clamped at 0; +infinity when p0_upper == 0
  std::optional<double> eps_hat_reverse;  // roles swapped (both_directions)
  ConfidenceBound p1_bound;  // two-sided bound on the mean of X
  ConfidenceBound p0_bound;  // two-sided bound on the mean of Y
  MomentVector moments_alt;
  MomentVector moments_null;
  std::optional<double> corr2;  // |mu2_hat - mu1_hat^2| of X (K >= 2)
  std::optional<double> corr4;  // |mu4_hat - mu2_hat^2| of X (K >= 4)
};

struct AuditReport {
  EstimateResult estimate;
  StatMatrix stats_alt;   // X: n x K
  StatMatrix stats_null;  // Y: n x m
  double tau_used = 0.0;
  bool tau_tuned = false;
  std::vector<double> tau_grid;     // populated when tuned
  std::vector<double> holdout_eps;  // populated when tuned
  std::uint64_t mechanism_calls = 0;
  double wall_seconds = 0.0;
  // Echo of the audited configuration (mechanism pointer not serialized).
  AuditConfig config;
};

// One trial of the add/remove-neighborhood audit.  Requires config.tau.
std::pair<BinaryVector, BinaryVector> run_trial_add_remove(
    const AuditConfig& config, std::size_t trial_index);

// One trial of the replace-one-neighborhood audit (single mechanism run).
std::pair<BinaryVector, BinaryVector> run_trial_replace_one(
    const AuditConfig& config, std::size_t trial_index);

// Validates a config; throws std::invalid_argument (or
// OrderExceedsDimensionError) naming the offending field.
void validate_config(const AuditConfig& config);

// The audit's return value before clamping is log((p1_lower - delta) /
// p0_upper).  A non-positive numerator certifies nothing (0); a zero
// denominator with a positive numerator yields +infinity.
double eps_hat_from_bounds(double p1_lower, double p0_upper, double delta);

// Confidence bounds, diagnostics and eps_hat from already-collected
// matrices.  Pure; lets callers re-analyze the same data under a different
// method or order without re-running the mechanism.
EstimateResult estimate_from_matrices(const AuditConfig& config,
                                      const StatMatrix& X, const StatMatrix& Y);

// Full audit: resolves tau (tuning on holdout seeds when config.tau is
// unset), runs all trials, and assembles the report.  Deterministic given
// the config, independent of worker count.
AuditReport audit(const AuditConfig& config);

// One row of the bias/variance decomposition at canary count K:
//   delta_bias(K)     = eps_hat(K, order 1) - eps_hat(1, order 1)
//   delta_var(K, ord) = eps_hat(K, ord)     - eps_hat(K, order 1)
// All estimates at one K come from the same matrices (the decomposition is
// confidence-interval post-processing); eps_hat(1, 1) shares the master
// seed with the K-canary arms.
struct BiasVarianceRow {
  std::size_t K = 0;
  int order = 1;
  double eps_K_order = 0.0;
  double eps_K_1 = 0.0;
  double eps_1_1 = 0.0;
  double delta_bias = 0.0;
  double delta_var = 0.0;
};

std::vector<BiasVarianceRow> bias_variance_decomposition(
    const AuditConfig& base, const std::vector<std::size_t>& K_grid,
    const std::vector<int>& orders);

struct Diagnostics {
  double corr2 = 0.0;
  std::optional<double> corr4;
};

// corr2 = |mu2_hat - mu1_hat^2| (requires K >= 2); corr4 = |mu4_hat -
// mu2_hat^2| when max_order >= 4, which requires K >= 4 (throws
// OrderExceedsDimensionError otherwise).
Diagnostics correlation_diagnostics(const StatMatrix& X, int max_order = 4);

// --------------------------------------------------------------------------
// Experiment sweeps (the CLI's `sweep` subcommand).
// --------------------------------------------------------------------------

struct ExperimentSpec {
  AuditConfig base;  // sweep axes override n/K/d/claimed.epsilon/ci fields
  std::vector<std::size_t> n_values;
  std::vector<std::size_t> K_values;
  std::vector<std::size_t> d_values;
  std::vector<double> eps_values;
  std::vector<std::pair<CiMethod, int>> ci_values;
  std::size_t repeats = 1;
  // When set, every point uses this noise scale instead of calibrating
  // sigma from the point's epsilon.
  std::optional<double> sigma_override;
  // m tracks K at every sweep point unless the caller pinned m explicitly.
  bool m_follows_K = true;
};

struct SweepRow {
  std::size_t n = 0, K = 0, d = 0;
  double eps_true = 0.0;
  CiMethod method = CiMethod::kWilson;
  int order = 1;
  std::size_t repeat = 0;
  double eps_hat = 0.0;
  std::optional<double> corr2, corr4;
  double delta_bias = 0.0;
  double delta_var = 0.0;
  // Mean/stderr of eps_hat over the point's repeats; set when repeats >= 2.
  std::optional<double> eps_hat_mean, eps_hat_se;
};

// Runs the full cross product of the sweep axes; rows are ordered by
// (n, K, d, eps, ci, repeat).  Repeat r of every point derives its master
// seed from (base.seed, r), so arms are paired across points.
std::vector<SweepRow> run_sweep(const ExperimentSpec& spec);

}  // namespace lidp

#endif  // LIDP_HARNESS_HPP_
