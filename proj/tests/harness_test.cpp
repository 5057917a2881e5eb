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

#include "lidp/harness.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <stdexcept>
#include <vector>

#include "lidp/canary.hpp"
#include "lidp/ci.hpp"
#include "lidp/errors.hpp"
#include "lidp/mechanism.hpp"
#include "lidp/parallel.hpp"
#include "lidp/rng.hpp"
#include "lidp/xbern.hpp"

namespace lidp {
namespace {

// Small, fast configuration: low dimension, mild noise, fixed threshold.
AuditConfig small_config(double sigma = 1.0) {
  AuditConfig cfg;
  cfg.n = 24;
  cfg.K = 8;
  cfg.m = 8;
  cfg.d = 16;
  cfg.claimed = PrivacyParams{1.0, 1e-5};
  cfg.beta = 0.05;
  cfg.ci_method = CiMethod::kWilson;
  cfg.ci_order = 2;
  cfg.neighborhood = Neighborhood::kAddRemove;
  cfg.tau = 1.0;
  cfg.seed = 777;
  cfg.workers = 1;
  cfg.mechanism = std::make_shared<GaussianSumMechanism>(16, sigma);
  return cfg;
}

double dot_ascending(const std::vector<double>& a,
                     const std::vector<double>& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

// Independent replication of one audit trial from its documented recipe:
// canary set from sub-stream (master, trial, canary role); D1 appends all K
// present canaries to the base dataset; D0 additionally drops the last one.
struct ManualTrial {
  std::vector<double> theta1;
  std::vector<double> theta0;  // add/remove null model
  CanarySet set;
};

ManualTrial replicate_trial(const AuditConfig& cfg, std::size_t trial) {
  ManualTrial out{std::vector<double>(), std::vector<double>(),
                  sample_canary_set(
                      cfg.d, cfg.K, cfg.m,
                      rng::derive(cfg.seed, trial, rng::kRoleCanary))};
  std::vector<std::vector<double>> base = cfg.base_data;
  if (base.empty()) base.push_back(std::vector<double>(cfg.d, 0.0));

  std::vector<std::vector<double>> d1 = base;
  for (std::size_t k = 0; k < cfg.K; ++k) d1.push_back(out.set.present(k));
  out.theta1 =
      cfg.mechanism->run(d1, rng::derive(cfg.seed, trial, rng::kRoleMech1));

  std::vector<std::vector<double>> d0 = base;
  for (std::size_t k = 0; k + 1 < cfg.K; ++k) d0.push_back(out.set.present(k));
  out.theta0 =
      cfg.mechanism->run(d0, rng::derive(cfg.seed, trial, rng::kRoleMech0));
  return out;
}

TEST(ValidateConfig, AcceptsSmallCompleteConfig) {
  EXPECT_NO_THROW(validate_config(small_config()));
}

TEST(ValidateConfig, RejectsEachInvalidField) {
  {
    AuditConfig c = small_config();
    c.mechanism.reset();
    EXPECT_THROW(validate_config(c), std::invalid_argument);
  }
  {
    AuditConfig c = small_config();
    c.n = 0;
    EXPECT_THROW(validate_config(c), std::invalid_argument);
  }
  {
    AuditConfig c = small_config();
    c.K = 0;
    EXPECT_THROW(validate_config(c), std::invalid_argument);
  }
  {
    AuditConfig c = small_config();
    c.m = 0;
    EXPECT_THROW(validate_config(c), std::invalid_argument);
  }
  {
    AuditConfig c = small_config();
    c.d = 0;
    EXPECT_THROW(validate_config(c), std::invalid_argument);
  }
  for (const double beta : {0.0, 1.0, -0.1, 1.5}) {
    AuditConfig c = small_config();
    c.beta = beta;
    EXPECT_THROW(validate_config(c), std::invalid_argument) << beta;
  }
  {
    AuditConfig c = small_config();
    c.claimed.delta = -1e-9;
    EXPECT_THROW(validate_config(c), std::invalid_argument);
  }
  {
    AuditConfig c = small_config();
    c.claimed.delta = 1.0;
    EXPECT_THROW(validate_config(c), std::invalid_argument);
  }
  {
    AuditConfig c = small_config();
    c.claimed.epsilon = -0.1;
    EXPECT_THROW(validate_config(c), std::invalid_argument);
  }
  for (const int order : {0, 3, 5}) {
    AuditConfig c = small_config();
    c.ci_order = order;
    EXPECT_THROW(validate_config(c), std::invalid_argument) << order;
  }
  {
    // The interval order cannot exceed the number of canaries per trial.
    AuditConfig c = small_config();
    c.K = 1;
    c.ci_order = 2;
    EXPECT_THROW(validate_config(c), OrderExceedsDimensionError);
  }
  {
    // The same interval is applied to the null side with m columns.
    AuditConfig c = small_config();
    c.m = 1;
    c.ci_order = 2;
    EXPECT_THROW(validate_config(c), OrderExceedsDimensionError);
  }
  {
    AuditConfig c = small_config();
    c.workers = -1;
    EXPECT_THROW(validate_config(c), std::invalid_argument);
  }
  {
    AuditConfig c = small_config();
    c.base_data = {std::vector<double>(c.d - 1, 0.0)};
    EXPECT_THROW(validate_config(c), std::invalid_argument);
  }
}

TEST(EpsHatFromBounds, AppliesLogRatioWithClamps) {
  EXPECT_DOUBLE_EQ(eps_hat_from_bounds(0.5, 0.1, 0.0), std::log(5.0));
  EXPECT_DOUBLE_EQ(eps_hat_from_bounds(0.5, 0.1, 0.2), std::log(3.0));

  // A non-positive numerator certifies nothing.
  EXPECT_EQ(eps_hat_from_bounds(0.1, 0.5, 0.1), 0.0);
  EXPECT_EQ(eps_hat_from_bounds(0.05, 0.5, 0.1), 0.0);
  EXPECT_EQ(eps_hat_from_bounds(0.0, 0.5, 0.0), 0.0);

  // A zero denominator with a positive numerator is unbounded evidence.
  const double inf_case = eps_hat_from_bounds(0.5, 0.0, 0.0);
  EXPECT_TRUE(std::isinf(inf_case));
  EXPECT_GT(inf_case, 0.0);

  // Ratios below one clamp at zero rather than going negative.
  EXPECT_EQ(eps_hat_from_bounds(0.2, 0.9, 0.0), 0.0);
}

TEST(RunTrial, MatchesManualPipelineReplication) {
  const AuditConfig cfg = small_config();
  for (const std::size_t trial : {std::size_t{0}, std::size_t{1}, std::size_t{5}}) {
    const auto [x, y] = run_trial_add_remove(cfg, trial);
    ASSERT_EQ(x.size(), cfg.K);
    ASSERT_EQ(y.size(), cfg.m);

    const ManualTrial manual = replicate_trial(cfg, trial);
    BinaryVector expected_x(cfg.K), expected_y(cfg.m), expected_ry(cfg.m);
    for (std::size_t k = 0; k < cfg.K; ++k) {
      expected_x[k] =
          dot_ascending(manual.set.present(k), manual.theta1) > *cfg.tau ? 1
                                                                         : 0;
    }
    for (std::size_t j = 0; j < cfg.m; ++j) {
      expected_y[j] =
          dot_ascending(manual.set.null_test(j), manual.theta0) > *cfg.tau ? 1
                                                                           : 0;
      expected_ry[j] =
          dot_ascending(manual.set.null_test(j), manual.theta1) > *cfg.tau ? 1
                                                                           : 0;
    }
    EXPECT_EQ(x, expected_x) << "trial " << trial;
    EXPECT_EQ(y, expected_y) << "trial " << trial;

    // Replace-one scores both sides against the same K-canary model, so its
    // alternatives match add/remove exactly and its nulls use theta1.
    const auto [rx, ry] = run_trial_replace_one(cfg, trial);
    EXPECT_EQ(rx, x) << "trial " << trial;
    EXPECT_EQ(ry, expected_ry) << "trial " << trial;
  }

  // Repeat calls are deterministic.
  EXPECT_EQ(run_trial_add_remove(cfg, 2), run_trial_add_remove(cfg, 2));

  // Distinct trials draw distinct canaries and noise.
  const auto t0 = run_trial_add_remove(cfg, 0);
  const auto t1 = run_trial_add_remove(cfg, 1);
  const auto t2 = run_trial_add_remove(cfg, 2);
  EXPECT_TRUE(t0 != t1 || t1 != t2);
}

TEST(RunTrial, RequiresThresholdAndValidatesConfig) {
  AuditConfig cfg = small_config();
  cfg.tau.reset();
  EXPECT_THROW(run_trial_add_remove(cfg, 0), std::invalid_argument);
  EXPECT_THROW(run_trial_replace_one(cfg, 0), std::invalid_argument);

  AuditConfig bad = small_config();
  bad.n = 0;
  EXPECT_THROW(run_trial_add_remove(bad, 0), std::invalid_argument);
}

TEST(RunTrial, TreatsThresholdTiesAsRejection) {
  AuditConfig cfg = small_config(/*sigma=*/0.0);
  const ManualTrial manual = replicate_trial(cfg, 0);
  const double exact = dot_ascending(manual.set.present(0), manual.theta1);

  cfg.tau = exact;  // tie: strictly-greater test rejects
  EXPECT_EQ(run_trial_add_remove(cfg, 0).first[0], 0);

  cfg.tau = std::nextafter(exact, -std::numeric_limits<double>::infinity());
  EXPECT_EQ(run_trial_add_remove(cfg, 0).first[0], 1);
}

TEST(Audit, IsDeterministicAndWorkerCountInvariant) {
  const AuditConfig serial = small_config();
  AuditConfig auto_workers = serial;
  auto_workers.workers = 0;
  AuditConfig three_workers = serial;
  three_workers.workers = 3;

  const AuditReport a = audit(serial);
  const AuditReport b = audit(serial);
  const AuditReport c = audit(auto_workers);
  const AuditReport d = audit(three_workers);

  for (const AuditReport* other : {&b, &c, &d}) {
    EXPECT_EQ(a.stats_alt.data, other->stats_alt.data);
    EXPECT_EQ(a.stats_null.data, other->stats_null.data);
    EXPECT_EQ(a.estimate.eps_hat, other->estimate.eps_hat);
    EXPECT_EQ(a.estimate.p1_bound.lower, other->estimate.p1_bound.lower);
    EXPECT_EQ(a.estimate.p1_bound.upper, other->estimate.p1_bound.upper);
    EXPECT_EQ(a.estimate.p0_bound.lower, other->estimate.p0_bound.lower);
    EXPECT_EQ(a.estimate.p0_bound.upper, other->estimate.p0_bound.upper);
    EXPECT_EQ(a.tau_used, other->tau_used);
    EXPECT_EQ(a.mechanism_calls, other->mechanism_calls);
  }
}

TEST(Audit, CountsMechanismCallsByNeighborhoodAndTuningPhase) {
  AuditConfig cfg = small_config();
  EXPECT_EQ(audit(cfg).mechanism_calls, 2 * cfg.n);

  cfg.neighborhood = Neighborhood::kReplaceOne;
  EXPECT_EQ(audit(cfg).mechanism_calls, cfg.n);

  // Threshold tuning adds exactly one holdout pass: grid points re-threshold
  // the cached holdout outputs instead of re-running the mechanism.
  AuditConfig tuned = small_config();
  tuned.tau.reset();
  tuned.tau_grid = {0.5, 1.0, 1.5};
  EXPECT_EQ(audit(tuned).mechanism_calls, 4 * tuned.n);

  tuned.neighborhood = Neighborhood::kReplaceOne;
  EXPECT_EQ(audit(tuned).mechanism_calls, 2 * tuned.n);
}

TEST(Audit, EchoesConfigurationAndMatrixShapes) {
  const AuditConfig cfg = small_config();
  const AuditReport rep = audit(cfg);

  EXPECT_EQ(rep.config.n, cfg.n);
  EXPECT_EQ(rep.config.K, cfg.K);
  EXPECT_EQ(rep.config.m, cfg.m);
  EXPECT_EQ(rep.config.d, cfg.d);
  EXPECT_EQ(rep.config.seed, cfg.seed);
  EXPECT_EQ(rep.config.beta, cfg.beta);

  EXPECT_EQ(rep.stats_alt.n, cfg.n);
  EXPECT_EQ(rep.stats_alt.K, cfg.K);
  EXPECT_EQ(rep.stats_alt.data.size(), cfg.n * cfg.K);
  EXPECT_EQ(rep.stats_null.n, cfg.n);
  EXPECT_EQ(rep.stats_null.K, cfg.m);
  EXPECT_EQ(rep.stats_null.data.size(), cfg.n * cfg.m);

  EXPECT_FALSE(rep.tau_tuned);
  EXPECT_TRUE(rep.tau_grid.empty());
  EXPECT_TRUE(rep.holdout_eps.empty());
  EXPECT_EQ(rep.tau_used, *cfg.tau);
  EXPECT_GE(rep.wall_seconds, 0.0);

  EXPECT_EQ(rep.estimate.moments_alt.max_order, 4);
  EXPECT_EQ(rep.estimate.moments_null.max_order, 4);
}

TEST(Audit, OfflineReanalysisReproducesReportedEstimate) {
  for (const bool tune : {false, true}) {
    AuditConfig cfg = small_config(/*sigma=*/0.5);
    if (tune) {
      cfg.tau.reset();
      cfg.tau_grid = {0.5, 1.0, 1.5};
    }
    const AuditReport rep = audit(cfg);
    const EstimateResult redo =
        estimate_from_matrices(cfg, rep.stats_alt, rep.stats_null);

    EXPECT_EQ(redo.eps_hat, rep.estimate.eps_hat);
    EXPECT_EQ(redo.p1_bound.lower, rep.estimate.p1_bound.lower);
    EXPECT_EQ(redo.p1_bound.upper, rep.estimate.p1_bound.upper);
    EXPECT_EQ(redo.p0_bound.lower, rep.estimate.p0_bound.lower);
    EXPECT_EQ(redo.p0_bound.upper, rep.estimate.p0_bound.upper);
    for (int order = 1; order <= 4; ++order) {
      EXPECT_EQ(redo.moments_alt.mu(order), rep.estimate.moments_alt.mu(order));
      EXPECT_EQ(redo.moments_null.mu(order),
                rep.estimate.moments_null.mu(order));
    }
    ASSERT_TRUE(redo.corr2.has_value());
    ASSERT_TRUE(rep.estimate.corr2.has_value());
    EXPECT_EQ(*redo.corr2, *rep.estimate.corr2);
    ASSERT_TRUE(redo.corr4.has_value());
    EXPECT_EQ(*redo.corr4, *rep.estimate.corr4);
  }
}

TEST(Audit, BothDirectionsReportsReverseEstimate) {
  AuditConfig cfg = small_config(/*sigma=*/0.5);
  EXPECT_FALSE(audit(cfg).estimate.eps_hat_reverse.has_value());

  cfg.both_directions = true;
  const AuditReport rep = audit(cfg);
  ASSERT_TRUE(rep.estimate.eps_hat_reverse.has_value());
  EXPECT_EQ(*rep.estimate.eps_hat_reverse,
            eps_hat_from_bounds(rep.estimate.p0_bound.lower,
                                rep.estimate.p1_bound.upper,
                                cfg.claimed.delta));
}

TEST(Audit, TunedThresholdMatchesManualHoldoutScan) {
  AuditConfig cfg = small_config(/*sigma=*/0.25);
  cfg.tau.reset();
  cfg.tau_grid = {0.25, 0.5, 0.75, 1.25};
  const AuditReport rep = audit(cfg);

  EXPECT_TRUE(rep.tau_tuned);
  EXPECT_EQ(rep.tau_grid, cfg.tau_grid);
  ASSERT_EQ(rep.holdout_eps.size(), cfg.tau_grid.size());

  // Replicate the holdout phase: same trials under the holdout sub-seed,
  // re-thresholded at every grid point and scored by the audit estimate.
  AuditConfig holdout = cfg;
  holdout.seed = rng::derive(cfg.seed, 0, rng::kRoleHoldout);
  std::vector<double> expected_eps;
  for (const double tau : cfg.tau_grid) {
    holdout.tau = tau;
    StatMatrix X(cfg.n, cfg.K), Y(cfg.n, cfg.m);
    for (std::size_t i = 0; i < cfg.n; ++i) {
      const auto [x, y] = run_trial_add_remove(holdout, i);
      X.set_row(i, x);
      Y.set_row(i, y);
    }
    expected_eps.push_back(estimate_from_matrices(cfg, X, Y).eps_hat);
  }
  for (std::size_t i = 0; i < expected_eps.size(); ++i) {
    EXPECT_EQ(rep.holdout_eps[i], expected_eps[i]) << "grid point " << i;
  }

  // Winner: largest holdout estimate, ties broken toward the smallest tau.
  double best_eps = -std::numeric_limits<double>::infinity();
  double best_tau = 0.0;
  for (std::size_t i = 0; i < expected_eps.size(); ++i) {
    if (expected_eps[i] > best_eps ||
        (expected_eps[i] == best_eps && cfg.tau_grid[i] < best_tau)) {
      best_eps = expected_eps[i];
      best_tau = cfg.tau_grid[i];
    }
  }
  EXPECT_EQ(rep.tau_used, best_tau);

  // An empty grid request falls back to the default 21-point grid.
  AuditConfig default_grid = small_config(/*sigma=*/0.25);
  default_grid.tau.reset();
  const AuditReport rep2 = audit(default_grid);
  EXPECT_TRUE(rep2.tau_tuned);
  EXPECT_EQ(rep2.tau_grid, default_tau_grid());
  EXPECT_EQ(rep2.holdout_eps.size(), default_tau_grid().size());
}

TEST(Audit, DefaultBaseDatasetIsTheZeroVector) {
  const AuditConfig implicit = small_config();
  AuditConfig explicit_zero = implicit;
  explicit_zero.base_data = {std::vector<double>(implicit.d, 0.0)};

  const AuditReport a = audit(implicit);
  const AuditReport b = audit(explicit_zero);
  EXPECT_EQ(a.stats_alt.data, b.stats_alt.data);
  EXPECT_EQ(a.stats_null.data, b.stats_null.data);
  EXPECT_EQ(a.estimate.eps_hat, b.estimate.eps_hat);
}

TEST(Audit, BaseDataEntersTheAuditedDataset) {
  AuditConfig cfg;
  cfg.n = 1;
  cfg.K = 1;
  cfg.m = 1;
  cfg.d = 2;
  cfg.ci_order = 1;
  cfg.tau = 1.0 + 1e-9;
  cfg.seed = 5;
  cfg.workers = 1;
  cfg.mechanism = std::make_shared<GaussianSumMechanism>(2, 0.0);
  cfg.base_data = {{1.0, 0.0}};

  const ManualTrial manual = replicate_trial(cfg, 0);
  const double shifted_dot =
      dot_ascending(manual.set.present(0), manual.theta1);
  ASSERT_GT(std::abs(shifted_dot - *cfg.tau), 1e-6)
      << "degenerate seed: shifted statistic sits on the threshold";

  EXPECT_EQ(audit(cfg).stats_alt.at(0, 0), shifted_dot > *cfg.tau ? 1 : 0);

  // Without base data the noiseless statistic is the canary's unit norm,
  // which the strictly-greater test at tau just above 1 rejects.
  AuditConfig plain = cfg;
  plain.base_data.clear();
  EXPECT_EQ(audit(plain).stats_alt.at(0, 0), 0);
}

TEST(EstimateFromMatrices, UsesHalvedBudgetAndMomentAlgebra) {
  AuditConfig cfg = small_config();
  cfg.ci_method = CiMethod::kBernstein;
  cfg.ci_order = 2;

  const StatMatrix X =
      sample_xbern_mixture(8, 200, Mixing::two_point(0.2, 0.8, 0.5), 31).matrix;
  const StatMatrix Y =
      sample_xbern_mixture(4, 200, Mixing::point(0.1), 32).matrix;
  const EstimateResult est = estimate_from_matrices(cfg, X, Y);

  const MomentVector mx = aggregate_moments(X, 4);
  const MomentVector my = aggregate_moments(Y, 4);
  const ConfidenceBound p1 =
      apply_ci(cfg.ci_method, cfg.ci_order, mx, X.n, X.K, cfg.beta / 2.0);
  const ConfidenceBound p0 =
      apply_ci(cfg.ci_method, cfg.ci_order, my, Y.n, Y.K, cfg.beta / 2.0);

  EXPECT_EQ(est.p1_bound.lower, p1.lower);
  EXPECT_EQ(est.p1_bound.upper, p1.upper);
  EXPECT_EQ(est.p0_bound.lower, p0.lower);
  EXPECT_EQ(est.p0_bound.upper, p0.upper);
  EXPECT_EQ(est.eps_hat,
            eps_hat_from_bounds(p1.lower, p0.upper, cfg.claimed.delta));

  ASSERT_TRUE(est.corr2.has_value());
  EXPECT_DOUBLE_EQ(*est.corr2, std::abs(mx.mu(2) - mx.mu(1) * mx.mu(1)));
  ASSERT_TRUE(est.corr4.has_value());
  EXPECT_DOUBLE_EQ(*est.corr4, std::abs(mx.mu(4) - mx.mu(2) * mx.mu(2)));

  // Column counts cap the moment order and the diagnostics.
  AuditConfig first_order = cfg;
  first_order.ci_order = 1;
  const StatMatrix X1 =
      sample_xbern_mixture(1, 50, Mixing::point(0.5), 33).matrix;
  const StatMatrix X3 =
      sample_xbern_mixture(3, 50, Mixing::point(0.5), 34).matrix;
  const EstimateResult est1 = estimate_from_matrices(first_order, X1, X1);
  EXPECT_EQ(est1.moments_alt.max_order, 1);
  EXPECT_FALSE(est1.corr2.has_value());
  EXPECT_FALSE(est1.corr4.has_value());
  const EstimateResult est3 = estimate_from_matrices(first_order, X3, X3);
  EXPECT_EQ(est3.moments_alt.max_order, 3);
  EXPECT_TRUE(est3.corr2.has_value());
  EXPECT_FALSE(est3.corr4.has_value());
}

TEST(CorrelationDiagnostics, MatchesMomentAlgebraOnDegenerateMatrices) {
  StatMatrix ones(10, 6);
  for (auto& bit : ones.data) bit = 1;
  const Diagnostics all_ones = correlation_diagnostics(ones, 4);
  EXPECT_EQ(all_ones.corr2, 0.0);
  ASSERT_TRUE(all_ones.corr4.has_value());
  EXPECT_EQ(*all_ones.corr4, 0.0);

  // Half the trials all-ones, half all-zeros: every moment is 1/2, so both
  // excess-correlation diagnostics equal 1/2 - 1/4.
  StatMatrix split(10, 8);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t k = 0; k < 8; ++k) split.at(i, k) = 1;
  }
  const Diagnostics half = correlation_diagnostics(split, 4);
  EXPECT_DOUBLE_EQ(half.corr2, 0.25);
  ASSERT_TRUE(half.corr4.has_value());
  EXPECT_DOUBLE_EQ(*half.corr4, 0.25);
}

TEST(CorrelationDiagnostics, IsSmallForIndependentColumns) {
  const StatMatrix X =
      sample_xbern_mixture(8, 20000, Mixing::point(0.3), 41).matrix;
  const Diagnostics diag = correlation_diagnostics(X, 4);
  EXPECT_LT(diag.corr2, 0.03);
  ASSERT_TRUE(diag.corr4.has_value());
  EXPECT_LT(*diag.corr4, 0.03);
}

TEST(CorrelationDiagnostics, ValidatesOrderAndColumnCount) {
  const StatMatrix X4(10, 4);
  for (const int bad_order : {1, 3, 5, 0}) {
    EXPECT_THROW(correlation_diagnostics(X4, bad_order), std::invalid_argument)
        << bad_order;
  }

  const StatMatrix X1(10, 1);
  EXPECT_THROW(correlation_diagnostics(X1, 2), OrderExceedsDimensionError);

  const StatMatrix X3(10, 3);
  EXPECT_THROW(correlation_diagnostics(X3, 4), OrderExceedsDimensionError);
  const Diagnostics capped = correlation_diagnostics(X3, 2);
  EXPECT_FALSE(capped.corr4.has_value());

  const Diagnostics full = correlation_diagnostics(X4, 4);
  EXPECT_TRUE(full.corr4.has_value());
}

TEST(BiasVariance, DecomposesSharedMatricesExactly) {
  AuditConfig cfg = small_config(/*sigma=*/0.25);
  cfg.tau = 0.5;

  const std::vector<std::size_t> Ks{2, 4};
  const std::vector<int> orders{1, 2};
  const auto rows = bias_variance_decomposition(cfg, Ks, orders);
  ASSERT_EQ(rows.size(), 4u);

  EXPECT_EQ(rows[0].K, 2u);
  EXPECT_EQ(rows[0].order, 1);
  EXPECT_EQ(rows[1].K, 2u);
  EXPECT_EQ(rows[1].order, 2);
  EXPECT_EQ(rows[2].K, 4u);
  EXPECT_EQ(rows[2].order, 1);
  EXPECT_EQ(rows[3].K, 4u);
  EXPECT_EQ(rows[3].order, 2);

  for (const BiasVarianceRow& row : rows) {
    EXPECT_EQ(row.delta_bias, row.eps_K_1 - row.eps_1_1);
    EXPECT_EQ(row.delta_var, row.eps_K_order - row.eps_K_1);
    EXPECT_EQ(row.eps_1_1, rows[0].eps_1_1);
    if (row.order == 1) {
      EXPECT_EQ(row.eps_K_order, row.eps_K_1);
      EXPECT_EQ(row.delta_var, 0.0);
    }
  }

  // The baseline arm is an ordinary single-canary audit on the same seed.
  AuditConfig one = cfg;
  one.K = 1;
  one.m = 1;
  one.ci_order = 1;
  EXPECT_EQ(rows[0].eps_1_1, audit(one).estimate.eps_hat);

  // Each K arm collects matrices once at order 1 and re-analyzes them.
  AuditConfig four = cfg;
  four.K = 4;
  four.m = 4;
  four.ci_order = 1;
  const AuditReport rep4 = audit(four);
  EXPECT_EQ(rows[2].eps_K_1, rep4.estimate.eps_hat);

  AuditConfig four_second = four;
  four_second.ci_order = 2;
  four_second.tau = rep4.tau_used;
  EXPECT_EQ(rows[3].eps_K_order,
            estimate_from_matrices(four_second, rep4.stats_alt, rep4.stats_null)
                .eps_hat);

  EXPECT_THROW(bias_variance_decomposition(cfg, {}, orders),
               std::invalid_argument);
  EXPECT_THROW(bias_variance_decomposition(cfg, Ks, {}),
               std::invalid_argument);
}

ExperimentSpec small_sweep_spec() {
  ExperimentSpec spec;
  spec.base = small_config(/*sigma=*/0.25);
  spec.base.n = 16;
  spec.base.d = 8;
  spec.base.tau = 0.8;
  spec.base.seed = 2024;
  spec.base.mechanism = std::make_shared<GaussianSumMechanism>(8, 0.25);
  spec.n_values = {16};
  spec.K_values = {2, 4};
  spec.d_values = {8};
  spec.eps_values = {1.0};
  spec.ci_values = {{CiMethod::kWilson, 1}, {CiMethod::kBernstein, 1}};
  spec.repeats = 2;
  spec.sigma_override = 0.5;
  return spec;
}

TEST(RunSweep, OrdersRowsAndEchoesAxes) {
  const ExperimentSpec spec = small_sweep_spec();
  const auto rows = run_sweep(spec);
  ASSERT_EQ(rows.size(), 8u);  // 1 n x 2 K x 1 d x 1 eps x 2 ci x 2 repeats

  const std::vector<std::size_t> want_K{2, 2, 2, 2, 4, 4, 4, 4};
  const std::vector<CiMethod> want_method{
      CiMethod::kWilson,    CiMethod::kWilson,    CiMethod::kBernstein,
      CiMethod::kBernstein, CiMethod::kWilson,    CiMethod::kWilson,
      CiMethod::kBernstein, CiMethod::kBernstein};
  const std::vector<std::size_t> want_repeat{0, 1, 0, 1, 0, 1, 0, 1};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].n, 16u) << i;
    EXPECT_EQ(rows[i].d, 8u) << i;
    EXPECT_EQ(rows[i].eps_true, 1.0) << i;
    EXPECT_EQ(rows[i].order, 1) << i;
    EXPECT_EQ(rows[i].K, want_K[i]) << i;
    EXPECT_EQ(rows[i].method, want_method[i]) << i;
    EXPECT_EQ(rows[i].repeat, want_repeat[i]) << i;
  }
}

TEST(RunSweep, MatchesManualAuditAtEachPoint) {
  const ExperimentSpec spec = small_sweep_spec();
  const auto rows = run_sweep(spec);
  ASSERT_EQ(rows.size(), 8u);

  // Row 0: (K=2, wilson order 1, repeat 0); row 5: (K=4, wilson, repeat 1).
  for (const std::size_t idx : {std::size_t{0}, std::size_t{5}}) {
    const SweepRow& row = rows[idx];
    AuditConfig cfg = spec.base;
    cfg.n = row.n;
    cfg.K = row.K;
    cfg.m = row.K;  // m follows K by default
    cfg.d = row.d;
    cfg.claimed.epsilon = row.eps_true;
    cfg.ci_method = row.method;
    cfg.ci_order = row.order;
    cfg.seed = rng::derive(spec.base.seed, row.repeat, rng::kRoleRepeat);
    cfg.mechanism =
        std::make_shared<GaussianSumMechanism>(row.d, *spec.sigma_override);
    const AuditReport rep = audit(cfg);
    EXPECT_EQ(row.eps_hat, rep.estimate.eps_hat) << idx;
    ASSERT_TRUE(row.corr2.has_value());
    EXPECT_EQ(*row.corr2, *rep.estimate.corr2) << idx;

    // Order-1 rows: the bias split is against a single-canary audit on the
    // same per-repeat master seed, and the variance split is zero.
    EXPECT_EQ(row.delta_var, 0.0) << idx;
    AuditConfig base1 = cfg;
    base1.K = 1;
    base1.m = 1;
    base1.ci_order = 1;
    const double baseline = audit(base1).estimate.eps_hat;
    EXPECT_EQ(row.delta_bias, row.eps_hat - baseline) << idx;
  }
}

TEST(RunSweep, ComputesRepeatMeanAndStandardError) {
  const ExperimentSpec spec = small_sweep_spec();
  const auto rows = run_sweep(spec);
  ASSERT_EQ(rows.size(), 8u);

  for (std::size_t block = 0; block < rows.size(); block += 2) {
    const double a = rows[block].eps_hat;
    const double b = rows[block + 1].eps_hat;
    const double mean = (a + b) / 2.0;
    const double sd = std::sqrt((a - mean) * (a - mean) +
                                (b - mean) * (b - mean));  // over repeats-1=1
    const double se = sd / std::sqrt(2.0);
    for (const std::size_t i : {block, block + 1}) {
      ASSERT_TRUE(rows[i].eps_hat_mean.has_value()) << i;
      ASSERT_TRUE(rows[i].eps_hat_se.has_value()) << i;
      EXPECT_DOUBLE_EQ(*rows[i].eps_hat_mean, mean) << i;
      EXPECT_DOUBLE_EQ(*rows[i].eps_hat_se, se) << i;
    }
  }

  ExperimentSpec single = spec;
  single.repeats = 1;
  const auto once = run_sweep(single);
  ASSERT_EQ(once.size(), 4u);
  for (const SweepRow& row : once) {
    EXPECT_FALSE(row.eps_hat_mean.has_value());
    EXPECT_FALSE(row.eps_hat_se.has_value());
  }

  ExperimentSpec zero = spec;
  zero.repeats = 0;
  EXPECT_THROW(run_sweep(zero), std::invalid_argument);
}

TEST(RunSweep, SplitsVarianceTermAtHigherOrder) {
  ExperimentSpec spec = small_sweep_spec();
  spec.K_values = {4};
  spec.ci_values = {{CiMethod::kWilson, 2}};
  spec.repeats = 1;
  const auto rows = run_sweep(spec);
  ASSERT_EQ(rows.size(), 1u);

  AuditConfig cfg = spec.base;
  cfg.n = 16;
  cfg.K = 4;
  cfg.m = 4;
  cfg.d = 8;
  cfg.ci_method = CiMethod::kWilson;
  cfg.ci_order = 2;
  cfg.seed = rng::derive(spec.base.seed, 0, rng::kRoleRepeat);
  cfg.mechanism = std::make_shared<GaussianSumMechanism>(8, 0.5);
  const AuditReport rep = audit(cfg);
  EXPECT_EQ(rows[0].eps_hat, rep.estimate.eps_hat);

  AuditConfig first = cfg;
  first.ci_order = 1;
  first.tau = rep.tau_used;
  const double eps_K_1 =
      estimate_from_matrices(first, rep.stats_alt, rep.stats_null).eps_hat;
  EXPECT_EQ(rows[0].delta_var, rows[0].eps_hat - eps_K_1);

  AuditConfig base1 = cfg;
  base1.K = 1;
  base1.m = 1;
  base1.ci_order = 1;
  EXPECT_EQ(rows[0].delta_bias, eps_K_1 - audit(base1).estimate.eps_hat);
}

TEST(RunSweep, HonorsFixedNullCountAndAxisDefaults) {
  ExperimentSpec spec = small_sweep_spec();
  spec.K_values = {4};
  spec.ci_values = {{CiMethod::kWilson, 1}};
  spec.repeats = 1;
  spec.m_follows_K = false;
  spec.base.m = 3;
  const auto rows = run_sweep(spec);
  ASSERT_EQ(rows.size(), 1u);

  AuditConfig cfg = spec.base;
  cfg.n = 16;
  cfg.K = 4;
  cfg.m = 3;  // fixed null count
  cfg.d = 8;
  cfg.ci_method = CiMethod::kWilson;
  cfg.ci_order = 1;
  cfg.seed = rng::derive(spec.base.seed, 0, rng::kRoleRepeat);
  cfg.mechanism = std::make_shared<GaussianSumMechanism>(8, 0.5);
  EXPECT_EQ(rows[0].eps_hat, audit(cfg).estimate.eps_hat);

  // Empty axes fall back to the base configuration's values.
  ExperimentSpec defaults;
  defaults.base = small_sweep_spec().base;
  defaults.sigma_override = 0.5;
  const auto single = run_sweep(defaults);
  ASSERT_EQ(single.size(), 1u);
  EXPECT_EQ(single[0].n, defaults.base.n);
  EXPECT_EQ(single[0].K, defaults.base.K);
  EXPECT_EQ(single[0].d, defaults.base.d);
  EXPECT_EQ(single[0].eps_true, defaults.base.claimed.epsilon);
  EXPECT_EQ(single[0].method, defaults.base.ci_method);
  EXPECT_EQ(single[0].order, defaults.base.ci_order);
}

TEST(ParallelFor, ComputesAllIndicesOnEveryWorkerSetting) {
  for (const int workers : {1, 0, 4}) {
    std::vector<std::size_t> out(101, 0);
    parallel_for(out.size(), workers,
                 [&](std::size_t i) { out[i] = i * i; });
    for (std::size_t i = 0; i < out.size(); ++i) {
      ASSERT_EQ(out[i], i * i) << "workers=" << workers;
    }
  }
}

TEST(ParallelFor, PropagatesExceptionsAndSkipsEmptyRanges) {
  for (const int workers : {1, 2}) {
    EXPECT_THROW(
        parallel_for(100, workers,
                     [](std::size_t i) {
                       if (i >= 50) throw std::runtime_error("boom");
                     }),
        std::runtime_error)
        << "workers=" << workers;
  }

  std::atomic<int> calls{0};
  parallel_for(0, 2, [&](std::size_t) { calls.fetch_add(1); });
  EXPECT_EQ(calls.load(), 0);
}

TEST(Neighborhood, HasStableNames) {
  EXPECT_EQ(to_string(Neighborhood::kAddRemove), "add_remove");
  EXPECT_EQ(to_string(Neighborhood::kReplaceOne), "replace_one");
}

}  // namespace
}  // namespace lidp
