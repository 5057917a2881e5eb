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

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>

#include "lidp/errors.hpp"
#include "lidp/parallel.hpp"
#include "lidp/rng.hpp"

namespace lidp {

std::string to_string(Neighborhood n) {
  return n == Neighborhood::kAddRemove ? "add_remove" : "replace_one";
}

void validate_config(const AuditConfig& config) {
  if (!config.mechanism) {
    throw std::invalid_argument("config.mechanism is required");
  }
  if (config.n < 1) throw std::invalid_argument("config.n must be >= 1");
  if (config.K < 1) throw std::invalid_argument("config.K must be >= 1");
  if (config.m < 1) throw std::invalid_argument("config.m must be >= 1");
  if (config.d < 1) throw std::invalid_argument("config.d must be >= 1");
  if (!(config.beta > 0.0) || !(config.beta < 1.0)) {
    throw std::invalid_argument("config.beta must be in (0,1)");
  }
  if (!(config.claimed.delta >= 0.0) || !(config.claimed.delta < 1.0)) {
    throw std::invalid_argument("config.delta must be in [0,1)");
  }
  if (!(config.claimed.epsilon >= 0.0)) {
    throw std::invalid_argument("config.eps must be >= 0");
  }
  if (config.ci_order != 1 && config.ci_order != 2 && config.ci_order != 4) {
    throw std::invalid_argument("config.ci order must be 1, 2 or 4");
  }
  const auto order = static_cast<std::size_t>(config.ci_order);
  if (order > config.K) {
    throw OrderExceedsDimensionError(
        "config.ci: order " + std::to_string(config.ci_order) +
        " requires K >= " + std::to_string(config.ci_order) + ", got K = " +
        std::to_string(config.K));
  }
  if (order > config.m) {
    throw OrderExceedsDimensionError(
        "config.ci: order " + std::to_string(config.ci_order) +
        " is also applied to the null side with m in place of K; m = " +
        std::to_string(config.m) + " is too small");
  }
  if (config.workers < 0) {
    throw std::invalid_argument("config.workers must be >= 0");
  }
  for (const auto& z : config.base_data) {
    if (z.size() != config.d) {
      throw std::invalid_argument(
          "config.base_data entries must have dimension d = " +
          std::to_string(config.d));
    }
  }
}

namespace {

std::vector<std::vector<double>> base_dataset(const AuditConfig& config) {
  if (!config.base_data.empty()) return config.base_data;
  return {std::vector<double>(config.d, 0.0)};
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

// Raw dot products of one trial: x against A(D1) and y against the null-test
// model (A(D0) for add/remove, A(D1) for replace-one).  Thresholding is the
// only tau-dependent step, so tuning can re-threshold these dots instead of
// re-running the mechanism; the result is bit-identical either way.
struct TrialDotsRow {
  std::vector<double> x;  // K entries
  std::vector<double> y;  // m entries
};

TrialDotsRow trial_dots(const AuditConfig& config, const Mechanism& mechanism,
                        std::uint64_t master, std::size_t trial_index) {
  const CanarySet set =
      sample_canary_set(config.d, config.K, config.m,
                        rng::derive(master, trial_index, rng::kRoleCanary));
  const auto base = base_dataset(config);

  std::vector<std::vector<double>> d1;
  d1.reserve(base.size() + config.K);
  d1.insert(d1.end(), base.begin(), base.end());
  for (std::size_t k = 0; k < config.K; ++k) d1.push_back(set.present(k));
  const auto theta1 =
      mechanism.run(d1, rng::derive(master, trial_index, rng::kRoleMech1));

  TrialDotsRow row;
  row.x.resize(config.K);
  for (std::size_t k = 0; k < config.K; ++k) {
    row.x[k] = dot(set.present(k), theta1);
  }

  row.y.resize(config.m);
  if (config.neighborhood == Neighborhood::kAddRemove) {
    std::vector<std::vector<double>> d0;
    d0.reserve(base.size() + config.K - 1);
    d0.insert(d0.end(), base.begin(), base.end());
    for (std::size_t k = 0; k + 1 < config.K; ++k) d0.push_back(set.present(k));
    const auto theta0 =
        mechanism.run(d0, rng::derive(master, trial_index, rng::kRoleMech0));
    for (std::size_t j = 0; j < config.m; ++j) {
      row.y[j] = dot(set.null_test(j), theta0);
    }
  } else {
    for (std::size_t j = 0; j < config.m; ++j) {
      row.y[j] = dot(set.null_test(j), theta1);
    }
  }
  return row;
}

struct DotsMatrix {
  std::size_t n = 0, K = 0, m = 0;
  std::vector<double> x;  // n * K
  std::vector<double> y;  // n * m
};

DotsMatrix compute_dots(const AuditConfig& config, const Mechanism& mechanism,
                        std::uint64_t master) {
  DotsMatrix dots;
  dots.n = config.n;
  dots.K = config.K;
  dots.m = config.m;
  dots.x.resize(config.n * config.K);
  dots.y.resize(config.n * config.m);
  // Each trial writes only its own slots, so the result is independent of
  // scheduling and bit-identical to the serial reference.
  parallel_for(config.n, config.workers, [&](std::size_t i) {
    const TrialDotsRow row = trial_dots(config, mechanism, master, i);
    std::copy(row.x.begin(), row.x.end(), dots.x.begin() + static_cast<std::ptrdiff_t>(i * config.K));
    std::copy(row.y.begin(), row.y.end(), dots.y.begin() + static_cast<std::ptrdiff_t>(i * config.m));
  });
  return dots;
}

StatMatrix threshold_matrix(const std::vector<double>& dots, std::size_t n,
                            std::size_t cols, double tau) {
  StatMatrix M(n, cols);
  for (std::size_t idx = 0; idx < dots.size(); ++idx) {
    M.data[idx] = dots[idx] > tau ? 1 : 0;
  }
  return M;
}

BinaryVector threshold_row(const std::vector<double>& dots, double tau) {
  BinaryVector out(dots.size());
  for (std::size_t i = 0; i < dots.size(); ++i) out[i] = dots[i] > tau ? 1 : 0;
  return out;
}

std::pair<BinaryVector, BinaryVector> run_trial(const AuditConfig& config,
                                                std::size_t trial_index,
                                                Neighborhood neighborhood) {
  if (!config.tau.has_value()) {
    throw std::invalid_argument("run_trial: config.tau must be set");
  }
  AuditConfig cfg = config;
  cfg.neighborhood = neighborhood;
  validate_config(cfg);
  const TrialDotsRow row = trial_dots(cfg, *cfg.mechanism, cfg.seed, trial_index);
  return {threshold_row(row.x, *cfg.tau), threshold_row(row.y, *cfg.tau)};
}

}  // namespace

std::pair<BinaryVector, BinaryVector> run_trial_add_remove(
    const AuditConfig& config, std::size_t trial_index) {
  return run_trial(config, trial_index, Neighborhood::kAddRemove);
}

std::pair<BinaryVector, BinaryVector> run_trial_replace_one(
    const AuditConfig& config, std::size_t trial_index) {
  return run_trial(config, trial_index, Neighborhood::kReplaceOne);
}

double eps_hat_from_bounds(double p1_lower, double p0_upper, double delta) {
  const double numerator = p1_lower - delta;
  if (numerator <= 0.0) return 0.0;
  if (p0_upper <= 0.0) return std::numeric_limits<double>::infinity();
  return std::max(0.0, std::log(numerator / p0_upper));
}

EstimateResult estimate_from_matrices(const AuditConfig& config,
                                      const StatMatrix& X,
                                      const StatMatrix& Y) {
  const double side_beta = config.beta / 2.0;
  EstimateResult est;
  est.moments_alt =
      aggregate_moments(X, static_cast<int>(std::min<std::size_t>(4, X.K)));
  est.moments_null =
      aggregate_moments(Y, static_cast<int>(std::min<std::size_t>(4, Y.K)));
  est.p1_bound = apply_ci(config.ci_method, config.ci_order, est.moments_alt,
                          X.n, X.K, side_beta);
  est.p0_bound = apply_ci(config.ci_method, config.ci_order, est.moments_null,
                          Y.n, Y.K, side_beta);
  est.eps_hat = eps_hat_from_bounds(est.p1_bound.lower, est.p0_bound.upper,
                                    config.claimed.delta);
  if (config.both_directions) {
    est.eps_hat_reverse = eps_hat_from_bounds(
        est.p0_bound.lower, est.p1_bound.upper, config.claimed.delta);
  }
  if (X.K >= 2) {
    const double mu1 = est.moments_alt.mu(1);
    est.corr2 = std::abs(est.moments_alt.mu(2) - mu1 * mu1);
  }
  if (X.K >= 4) {
    const double mu2 = est.moments_alt.mu(2);
    est.corr4 = std::abs(est.moments_alt.mu(4) - mu2 * mu2);
  }
  return est;
}

AuditReport audit(const AuditConfig& config) {
  validate_config(config);
  const auto start = std::chrono::steady_clock::now();
  const auto counting = std::make_shared<CountingMechanism>(config.mechanism);

  AuditReport report;
  report.config = config;

  AuditConfig resolved = config;
  if (!config.tau.has_value()) {
    // Tune tau on a holdout phase whose trials derive from a separate
    // master seed, then report on the fresh main-phase trials below.
    const auto grid =
        config.tau_grid.empty() ? default_tau_grid() : config.tau_grid;
    const DotsMatrix holdout = compute_dots(
        config, *counting, rng::derive(config.seed, 0, rng::kRoleHoldout));
    const auto closure = [&](double tau, std::size_t /*holdout_trials*/) {
      const StatMatrix Xh = threshold_matrix(holdout.x, holdout.n, holdout.K, tau);
      const StatMatrix Yh = threshold_matrix(holdout.y, holdout.n, holdout.m, tau);
      return estimate_from_matrices(config, Xh, Yh).eps_hat;
    };
    const ThresholdTuning tuning = tune_threshold(grid, config.n, closure);
    resolved.tau = tuning.tau_star;
    report.tau_tuned = true;
    report.tau_grid = tuning.grid;
    report.holdout_eps = tuning.holdout_eps;
  }
  report.tau_used = *resolved.tau;

  const DotsMatrix dots = compute_dots(resolved, *counting, resolved.seed);
  report.stats_alt = threshold_matrix(dots.x, dots.n, dots.K, report.tau_used);
  report.stats_null = threshold_matrix(dots.y, dots.n, dots.m, report.tau_used);
  report.estimate =
      estimate_from_matrices(resolved, report.stats_alt, report.stats_null);
  report.mechanism_calls = counting->calls();
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return report;
}

std::vector<BiasVarianceRow> bias_variance_decomposition(
    const AuditConfig& base, const std::vector<std::size_t>& K_grid,
    const std::vector<int>& orders) {
  if (K_grid.empty() || orders.empty()) {
    throw std::invalid_argument(
        "bias_variance_decomposition: empty K grid or order list");
  }
  // Baseline eps_hat(1, 1) shares the master seed with every K arm.
  AuditConfig cfg1 = base;
  cfg1.K = 1;
  cfg1.m = 1;
  cfg1.ci_order = 1;
  const double eps_1_1 = audit(cfg1).estimate.eps_hat;

  std::vector<BiasVarianceRow> rows;
  for (const std::size_t K : K_grid) {
    // Matrices are collected once per K (threshold tuning, when active,
    // scores the order-1 estimate); higher orders re-analyze the same
    // matrices, so delta_var isolates the confidence-interval effect.
    AuditConfig cfgK = base;
    cfgK.K = K;
    cfgK.m = K;
    cfgK.ci_order = 1;
    const AuditReport repK = audit(cfgK);
    const double eps_K_1 = repK.estimate.eps_hat;
    for (const int order : orders) {
      double eps_K_order = eps_K_1;
      if (order != 1) {
        AuditConfig cfg_est = cfgK;
        cfg_est.ci_order = order;
        cfg_est.tau = repK.tau_used;
        validate_config(cfg_est);
        eps_K_order =
            estimate_from_matrices(cfg_est, repK.stats_alt, repK.stats_null)
                .eps_hat;
      }
      BiasVarianceRow row;
      row.K = K;
      row.order = order;
      row.eps_K_order = eps_K_order;
      row.eps_K_1 = eps_K_1;
      row.eps_1_1 = eps_1_1;
      row.delta_bias = eps_K_1 - eps_1_1;
      row.delta_var = eps_K_order - eps_K_1;
      rows.push_back(row);
    }
  }
  return rows;
}

Diagnostics correlation_diagnostics(const StatMatrix& X, int max_order) {
  if (max_order != 2 && max_order != 4) {
    throw std::invalid_argument(
        "correlation_diagnostics: max_order must be 2 or 4");
  }
  if (X.K < 2) {
    throw OrderExceedsDimensionError("corr2 requires K >= 2, got K = " +
                                     std::to_string(X.K));
  }
  if (max_order >= 4 && X.K < 4) {
    throw OrderExceedsDimensionError("corr4 requires K >= 4, got K = " +
                                     std::to_string(X.K));
  }
  const MomentVector mv = aggregate_moments(X, max_order);
  Diagnostics diag;
  diag.corr2 = std::abs(mv.mu(2) - mv.mu(1) * mv.mu(1));
  if (max_order >= 4) {
    diag.corr4 = std::abs(mv.mu(4) - mv.mu(2) * mv.mu(2));
  }
  return diag;
}

namespace {

template <typename T>
std::vector<T> axis_or(const std::vector<T>& axis, T fallback) {
  return axis.empty() ? std::vector<T>{fallback} : axis;
}

}  // namespace

std::vector<SweepRow> run_sweep(const ExperimentSpec& spec) {
  if (spec.repeats < 1) {
    throw std::invalid_argument("sweep: repeats must be >= 1");
  }
  const auto ns = axis_or(spec.n_values, spec.base.n);
  const auto Ks = axis_or(spec.K_values, spec.base.K);
  const auto ds = axis_or(spec.d_values, spec.base.d);
  const auto epss = axis_or(spec.eps_values, spec.base.claimed.epsilon);
  const auto cis = spec.ci_values.empty()
                       ? std::vector<std::pair<CiMethod, int>>{{spec.base.ci_method,
                                                                spec.base.ci_order}}
                       : spec.ci_values;

  // eps_hat(1, 1) baselines, shared across K and ci axes per repeat.
  std::map<std::tuple<std::size_t, std::size_t, std::uint64_t, CiMethod,
                      std::size_t>,
           double>
      baseline_cache;

  std::vector<SweepRow> rows;
  for (const auto n : ns) {
    for (const auto K : Ks) {
      for (const auto d : ds) {
        for (const auto eps : epss) {
          for (const auto& [method, order] : cis) {
            const std::size_t first_row = rows.size();
            for (std::size_t r = 0; r < spec.repeats; ++r) {
              const std::uint64_t master =
                  rng::derive(spec.base.seed, r, rng::kRoleRepeat);
              AuditConfig cfg = spec.base;
              cfg.n = n;
              cfg.K = K;
              cfg.d = d;
              cfg.claimed.epsilon = eps;
              cfg.m = spec.m_follows_K ? K : spec.base.m;
              cfg.ci_method = method;
              cfg.ci_order = order;
              cfg.seed = master;
              const double sigma =
                  spec.sigma_override.has_value()
                      ? *spec.sigma_override
                      : sigma_for_epsilon(eps, cfg.claimed.delta);
              cfg.mechanism = std::make_shared<GaussianSumMechanism>(d, sigma);

              const std::string point_name =
                  "sweep point (n=" + std::to_string(n) +
                  ", K=" + std::to_string(K) + ", d=" + std::to_string(d) +
                  ", eps=" + std::to_string(eps) + ", ci=" + to_string(method) +
                  std::to_string(order) + ", repeat=" + std::to_string(r) + ")";
              SweepRow row;
              try {
                validate_config(cfg);
                const AuditReport rep = audit(cfg);
                row.eps_hat = rep.estimate.eps_hat;
                row.corr2 = rep.estimate.corr2;
                row.corr4 = rep.estimate.corr4;

                double eps_K_1 = rep.estimate.eps_hat;
                if (order != 1) {
                  AuditConfig cfg1 = cfg;
                  cfg1.ci_order = 1;
                  cfg1.tau = rep.tau_used;
                  eps_K_1 = estimate_from_matrices(cfg1, rep.stats_alt,
                                                   rep.stats_null)
                                .eps_hat;
                }

                const auto key = std::make_tuple(
                    n, d, std::bit_cast<std::uint64_t>(eps), method, r);
                auto found = baseline_cache.find(key);
                if (found == baseline_cache.end()) {
                  AuditConfig base1 = cfg;
                  base1.K = 1;
                  base1.m = spec.m_follows_K ? 1 : spec.base.m;
                  base1.ci_order = 1;
                  base1.tau = spec.base.tau;  // re-tune when tuning is active
                  found = baseline_cache
                              .emplace(key, audit(base1).estimate.eps_hat)
                              .first;
                }
                row.delta_bias = eps_K_1 - found->second;
                row.delta_var = row.eps_hat - eps_K_1;
              } catch (const std::exception& e) {
                throw std::runtime_error(point_name + " failed: " + e.what());
              }
              row.n = n;
              row.K = K;
              row.d = d;
              row.eps_true = eps;
              row.method = method;
              row.order = order;
              row.repeat = r;
              rows.push_back(row);
            }
            if (spec.repeats >= 2) {
              double sum = 0.0;
              for (std::size_t i = first_row; i < rows.size(); ++i) {
                sum += rows[i].eps_hat;
              }
              const double mean = sum / static_cast<double>(spec.repeats);
              double sq = 0.0;
              for (std::size_t i = first_row; i < rows.size(); ++i) {
                const double diff = rows[i].eps_hat - mean;
                sq += diff * diff;
              }
              const double se =
                  std::sqrt(sq / static_cast<double>(spec.repeats - 1)) /
                  std::sqrt(static_cast<double>(spec.repeats));
              for (std::size_t i = first_row; i < rows.size(); ++i) {
                rows[i].eps_hat_mean = mean;
                rows[i].eps_hat_se = se;
              }
            }
          }
        }
      }
    }
  }
  return rows;
}

}  // namespace lidp
