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

// lidp: audit a black-box mechanism's differential-privacy claim by
// injecting random canaries and lower-bounding the achievable epsilon.
//
// Subcommands:
//   audit      run one audit, write report.json + stats_alt/null.csv
//   sweep      run a grid of audits, write results.csv
//   calibrate  convert between noise scale sigma and (eps, delta)
//   ci         recompute a confidence bound from a saved stats CSV

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "lidp/harness.hpp"
#include "lidp/io.hpp"

namespace {

constexpr int kExitViolation = 2;

struct CommonOptions {
  std::size_t n = 1024;
  std::size_t K = 0;  // 0 => ceil(sqrt(n))
  std::size_t m = 0;  // 0 => K
  std::size_t d = 1000;
  double eps = 1.0;
  double delta = 1e-5;
  double beta = 0.05;
  double sigma = -1.0;  // < 0 => calibrate from (eps, delta)
  std::string ci = "wilson2";
  std::string neighborhood = "add_remove";
  double tau = 0.0;
  bool tau_given = false;
  std::string tau_grid;
  std::uint64_t seed = 0;
  int workers = 0;
  std::string out = ".";
  std::string config_file;
  bool fail_on_violation = false;
  bool both_directions = false;
  bool dump_canaries = false;
};

std::string trim(const std::string& text) {
  const auto begin = text.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = text.find_last_not_of(" \t");
  return text.substr(begin, end - begin + 1);
}

// Applies `key=value` lines to the subcommand's options, skipping any option
// already given on the command line (flags override the file).  Values go
// through the option's own parser, so type errors surface as usual.
void apply_flat_config(CLI::App& cmd, const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw CLI::ValidationError("--config", "cannot open `" + path + "`");
  }
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#' || text[0] == ';') continue;
    const auto at = path + ":" + std::to_string(line_no);
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw CLI::ValidationError(
          "--config", at + ": expected key=value, got `" + text + "`");
    }
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (key == "config") {
      throw CLI::ValidationError("--config", at + ": files cannot nest");
    }
    CLI::Option* option = cmd.get_option_no_throw("--" + key);
    if (option == nullptr) {
      throw CLI::ValidationError("--config", at + ": unknown key `" + key +
                                                 "`");
    }
    if (option->count() > 0) continue;  // the command line wins
    option->add_result(value);
    option->run_callback();
  }
}

std::pair<lidp::CiMethod, int> parse_ci(const std::string& name) {
  const auto make = [](lidp::CiMethod m, int o) { return std::make_pair(m, o); };
  if (name == "bernstein1") return make(lidp::CiMethod::kBernstein, 1);
  if (name == "bernstein2") return make(lidp::CiMethod::kBernstein, 2);
  if (name == "bernstein4") return make(lidp::CiMethod::kBernstein, 4);
  if (name == "wilson1") return make(lidp::CiMethod::kWilson, 1);
  if (name == "wilson2") return make(lidp::CiMethod::kWilson, 2);
  if (name == "wilson4") return make(lidp::CiMethod::kWilson, 4);
  throw CLI::ValidationError(
      "--ci", "expected one of {bernstein,wilson}{1,2,4}, got `" + name + "`");
}

lidp::Neighborhood parse_neighborhood(const std::string& name) {
  if (name == "add_remove") return lidp::Neighborhood::kAddRemove;
  if (name == "replace_one") return lidp::Neighborhood::kReplaceOne;
  throw CLI::ValidationError(
      "--neighborhood",
      "expected add_remove or replace_one, got `" + name + "`");
}

std::vector<double> parse_double_list(const std::string& text,
                                      const std::string& flag) {
  std::vector<double> values;
  std::string item;
  std::istringstream stream(text);
  while (std::getline(stream, item, ',')) {
    try {
      std::size_t pos = 0;
      values.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw CLI::ValidationError(flag, "cannot parse `" + item + "` as number");
    }
  }
  if (values.empty()) throw CLI::ValidationError(flag, "empty list");
  return values;
}

std::vector<std::size_t> parse_size_list(const std::string& text,
                                         const std::string& flag) {
  std::vector<std::size_t> values;
  for (const double v : parse_double_list(text, flag)) {
    if (v < 1 || v != std::floor(v)) {
      throw CLI::ValidationError(flag, "expected positive integers");
    }
    values.push_back(static_cast<std::size_t>(v));
  }
  return values;
}

// Registers the options shared by `audit` and `sweep`.
void add_common_options(CLI::App* cmd, CommonOptions* opt) {
  cmd->add_option("--n", opt->n, "Number of trials");
  cmd->add_option("--K", opt->K, "Canaries per trial (default: ceil(sqrt(n)))");
  cmd->add_option("--m", opt->m, "Null tests per trial (default: K)");
  cmd->add_option("--d", opt->d, "Canary/output dimension");
  cmd->add_option("--eps", opt->eps, "Claimed epsilon");
  cmd->add_option("--delta", opt->delta, "Claimed delta");
  cmd->add_option("--beta", opt->beta, "Audit failure budget");
  cmd->add_option("--sigma", opt->sigma,
                  "Noise scale override (default: calibrate from eps,delta)");
  cmd->add_option("--ci", opt->ci, "Confidence bound: {bernstein,wilson}{1,2,4}");
  cmd->add_option("--neighborhood", opt->neighborhood,
                  "add_remove or replace_one");
  cmd->add_option("--tau", opt->tau, "Fixed decision threshold");
  cmd->add_option("--tau-grid", opt->tau_grid,
                  "Comma-separated tuning grid (default: 21 points on [0,2])");
  cmd->add_option("--seed", opt->seed, "Master seed");
  cmd->add_option("--workers", opt->workers, "Worker threads (0 = auto)");
  cmd->add_option("--out", opt->out, "Output directory");
  cmd->add_flag("--fail-on-violation", opt->fail_on_violation,
                "Exit non-zero when eps_hat exceeds the claimed eps");
  cmd->add_flag("--both-directions", opt->both_directions,
                "Also audit with the dataset roles swapped; report both");
  cmd->add_flag("--dump-canaries", opt->dump_canaries,
                "Debug: dump all canaries to canaries.csv");
  cmd->add_option("--config", opt->config_file,
                  "Flat key=value config file; flags override");
}

// Resolves defaults and builds the audit configuration (including the
// mechanism).  Returns the noise scale actually used.
double build_config(CLI::App& cmd, CommonOptions& opt,
                    lidp::AuditConfig& cfg) {
  if (!opt.config_file.empty()) apply_flat_config(cmd, opt.config_file);
  if (cmd.count("--K") == 0 && opt.K == 0) {
    opt.K = static_cast<std::size_t>(
        std::ceil(std::sqrt(static_cast<double>(opt.n))));
  }
  if (cmd.count("--m") == 0 && opt.m == 0) opt.m = opt.K;
  opt.tau_given = cmd.count("--tau") > 0;

  cfg.n = opt.n;
  cfg.K = opt.K;
  cfg.m = opt.m;
  cfg.d = opt.d;
  cfg.claimed = {opt.eps, opt.delta};
  cfg.beta = opt.beta;
  std::tie(cfg.ci_method, cfg.ci_order) = parse_ci(opt.ci);
  cfg.neighborhood = parse_neighborhood(opt.neighborhood);
  if (opt.tau_given) {
    cfg.tau = opt.tau;
  } else if (!opt.tau_grid.empty()) {
    cfg.tau_grid = parse_double_list(opt.tau_grid, "--tau-grid");
  }
  cfg.seed = opt.seed;
  cfg.workers = opt.workers;
  cfg.both_directions = opt.both_directions;

  const double sigma = opt.sigma >= 0.0
                           ? opt.sigma
                           : lidp::sigma_for_epsilon(opt.eps, opt.delta);
  cfg.mechanism = std::make_shared<lidp::GaussianSumMechanism>(opt.d, sigma);
  return sigma;
}

double verdict_eps(const lidp::AuditReport& report) {
  const auto& est = report.estimate;
  return est.eps_hat_reverse.has_value()
             ? std::max(est.eps_hat, *est.eps_hat_reverse)
             : est.eps_hat;
}

int cmd_audit(CLI::App& cmd, CommonOptions& opt) {
  lidp::AuditConfig cfg;
  const double sigma = build_config(cmd, opt, cfg);
  lidp::validate_config(cfg);
  const lidp::AuditReport report = lidp::audit(cfg);
  lidp::write_audit_artifacts(report, opt.out);
  if (opt.dump_canaries) {
    lidp::write_canary_csv(
        cfg, (std::filesystem::path(opt.out) / "canaries.csv").string());
  }

  const auto& est = report.estimate;
  std::printf("sigma = %.6g (claimed eps = %.6g, delta = %.3g)\n", sigma,
              opt.eps, opt.delta);
  std::printf("tau = %.6g%s\n", report.tau_used,
              report.tau_tuned ? " (tuned on holdout trials)" : "");
  std::printf("eps_hat = %.6g  [P(eps < eps_hat) <= beta = %g]\n", est.eps_hat,
              cfg.beta);
  if (est.eps_hat_reverse.has_value()) {
    std::printf("eps_hat_reverse = %.6g, eps_hat_max = %.6g\n",
                *est.eps_hat_reverse, verdict_eps(report));
  }
  std::printf("artifacts: %s/report.json, stats_alt.csv, stats_null.csv\n",
              opt.out.c_str());
  if (opt.fail_on_violation && verdict_eps(report) > opt.eps) {
    std::fprintf(stderr,
                 "violation: eps_hat %.6g exceeds the claimed eps %.6g\n",
                 verdict_eps(report), opt.eps);
    return kExitViolation;
  }
  return 0;
}

struct SweepOptions {
  std::string sweep_n, sweep_K, sweep_d, sweep_eps, sweep_ci;
  std::size_t repeats = 1;
};

int cmd_sweep(CLI::App& cmd, CommonOptions& opt, SweepOptions& sweep) {
  lidp::ExperimentSpec spec;
  const double sigma = build_config(cmd, opt, spec.base);
  spec.base.mechanism.reset();  // run_sweep builds one mechanism per point

  if (!sweep.sweep_n.empty()) {
    spec.n_values = parse_size_list(sweep.sweep_n, "--sweep-n");
  }
  if (!sweep.sweep_K.empty()) {
    spec.K_values = parse_size_list(sweep.sweep_K, "--sweep-K");
  }
  if (!sweep.sweep_d.empty()) {
    spec.d_values = parse_size_list(sweep.sweep_d, "--sweep-d");
  }
  if (!sweep.sweep_eps.empty()) {
    spec.eps_values = parse_double_list(sweep.sweep_eps, "--sweep-eps");
  }
  if (!sweep.sweep_ci.empty()) {
    std::string item;
    std::istringstream stream(sweep.sweep_ci);
    while (std::getline(stream, item, ',')) {
      spec.ci_values.push_back(parse_ci(item));
    }
  }
  spec.repeats = sweep.repeats;
  if (cmd.count("--sigma") > 0) spec.sigma_override = sigma;
  spec.m_follows_K = cmd.count("--m") == 0;

  const std::vector<lidp::SweepRow> rows = lidp::run_sweep(spec);
  std::filesystem::create_directories(opt.out);
  const auto path = (std::filesystem::path(opt.out) / "results.csv").string();
  lidp::write_sweep_csv(rows, path);
  std::printf("wrote %zu rows to %s\n", rows.size(), path.c_str());
  return 0;
}

int cmd_calibrate(const CLI::App& cmd, double eps, double delta, double sigma) {
  nlohmann::json j;
  j["delta"] = delta;
  if (cmd.count("--sigma") > 0) {
    j["sigma"] = sigma;
    j["epsilon"] = lidp::epsilon_of_sigma(sigma, delta);
  } else {
    const double calibrated = lidp::sigma_for_epsilon(eps, delta);
    j["eps_requested"] = eps;
    j["sigma"] = calibrated;
    j["epsilon"] = lidp::epsilon_of_sigma(calibrated, delta);
  }
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_ci(const std::string& stats_path, const std::string& ci, double beta) {
  const auto [method, order] = parse_ci(ci);
  const lidp::StatMatrix M = lidp::read_stat_matrix_csv(stats_path);
  const lidp::MomentVector moments = lidp::aggregate_moments(
      M, static_cast<int>(std::min<std::size_t>(4, M.K)));
  const lidp::ConfidenceBound bound =
      lidp::apply_ci(method, order, moments, M.n, M.K, beta);
  std::cout << lidp::confidence_bound_to_json(bound).dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
#if defined(__GLIBC__)
  // Audits allocate and free multi-megabyte canary/dataset buffers once per
  // trial; keep freed memory in the arena instead of returning pages to the
  // kernel (and faulting them back in) every iteration.
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
#endif

  CLI::App app{"black-box differential-privacy auditing with lifted canaries"};
  app.require_subcommand(1);

  CommonOptions opt;
  SweepOptions sweep;

  CLI::App* audit_cmd = app.add_subcommand("audit", "Run one audit");
  add_common_options(audit_cmd, &opt);

  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "Run a grid of audits into results.csv");
  add_common_options(sweep_cmd, &opt);
  sweep_cmd->add_option("--sweep-n", sweep.sweep_n, "Comma list of n values");
  sweep_cmd->add_option("--sweep-K", sweep.sweep_K, "Comma list of K values");
  sweep_cmd->add_option("--sweep-d", sweep.sweep_d, "Comma list of d values");
  sweep_cmd->add_option("--sweep-eps", sweep.sweep_eps,
                        "Comma list of eps values");
  sweep_cmd->add_option("--sweep-ci", sweep.sweep_ci,
                        "Comma list of ci methods");
  sweep_cmd->add_option("--repeats", sweep.repeats, "Repeats per sweep point");

  double cal_eps = 1.0;
  double cal_delta = 1e-5;
  double cal_sigma = 1.0;
  CLI::App* calibrate_cmd = app.add_subcommand(
      "calibrate", "Noise scale for a target (eps, delta), or eps of a sigma");
  calibrate_cmd->add_option("--eps", cal_eps, "Target epsilon");
  calibrate_cmd->add_option("--delta", cal_delta, "Target delta");
  calibrate_cmd->add_option("--sigma", cal_sigma,
                            "Report the epsilon of this noise scale instead");

  std::string stats_path;
  std::string ci_name = "wilson1";
  double ci_beta = 0.05;
  CLI::App* ci_cmd = app.add_subcommand(
      "ci", "Confidence bound for a saved stats CSV (offline re-analysis)");
  ci_cmd->add_option("--stats", stats_path, "StatMatrix CSV path")->required();
  ci_cmd->add_option("--ci", ci_name, "Confidence bound method");
  ci_cmd->add_option("--beta", ci_beta, "Per-side failure probability");

  CLI11_PARSE(app, argc, argv);

  try {
    if (audit_cmd->parsed()) return cmd_audit(*audit_cmd, opt);
    if (sweep_cmd->parsed()) return cmd_sweep(*sweep_cmd, opt, sweep);
    if (calibrate_cmd->parsed()) {
      return cmd_calibrate(*calibrate_cmd, cal_eps, cal_delta, cal_sigma);
    }
    if (ci_cmd->parsed()) return cmd_ci(stats_path, ci_name, ci_beta);
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
