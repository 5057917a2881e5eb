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

#include "lidp/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "lidp/rng.hpp"

namespace lidp {
namespace {

// Shortest decimal that round-trips a double ("%.17g" is always exact; try
// shorter forms first to keep the CSVs readable).
std::string fmt_double(double v) {
  char buf[40];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

// JSON has no infinity/NaN literal; serialize them as strings.
nlohmann::json json_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

void write_stat_matrix_csv(const StatMatrix& M, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "trial";
  for (std::size_t j = 0; j < M.K; ++j) out << ",c" << (j + 1);
  out << '\n';
  for (std::size_t i = 0; i < M.n; ++i) {
    out << i;
    for (std::size_t j = 0; j < M.K; ++j) {
      out << ',' << static_cast<int>(M.at(i, j));
    }
    out << '\n';
  }
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path);
}

StatMatrix read_stat_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error(path + ": empty file");
  }
  strip_cr(line);
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "trial") {
    throw std::runtime_error(path +
                             ": bad header (expected `trial,c1,...,cK`)");
  }
  const std::size_t K = header.size() - 1;

  std::vector<std::uint8_t> data;
  std::size_t n = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != K + 1) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected " + std::to_string(K + 1) +
                               " fields, got " + std::to_string(fields.size()));
    }
    for (std::size_t j = 1; j < fields.size(); ++j) {
      if (fields[j] == "0") {
        data.push_back(0);
      } else if (fields[j] == "1") {
        data.push_back(1);
      } else {
        throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                 ": non-binary entry `" + fields[j] +
                                 "` in column " + std::to_string(j + 1));
      }
    }
    ++n;
  }
  if (n == 0) throw std::runtime_error(path + ": no data rows");
  StatMatrix M(n, K);
  M.data = std::move(data);
  return M;
}

nlohmann::json moment_vector_to_json(const MomentVector& mv) {
  nlohmann::json j;
  for (int l = 1; l <= mv.max_order; ++l) {
    j["mu" + std::to_string(l)] = json_number(mv.mu(l));
  }
  return j;
}

nlohmann::json confidence_bound_to_json(const ConfidenceBound& b) {
  return nlohmann::json{{"method", b.method},
                        {"order", b.order},
                        {"beta", b.beta},
                        {"joint_failure", b.joint_failure},
                        {"lower", b.lower},
                        {"upper", b.upper}};
}

nlohmann::json audit_report_to_json(const AuditReport& report) {
  const AuditConfig& cfg = report.config;
  nlohmann::json config_json{
      {"n", cfg.n},
      {"K", cfg.K},
      {"m", cfg.m},
      {"d", cfg.d},
      {"eps", cfg.claimed.epsilon},
      {"delta", cfg.claimed.delta},
      {"beta", cfg.beta},
      {"ci", to_string(cfg.ci_method) + std::to_string(cfg.ci_order)},
      {"neighborhood", to_string(cfg.neighborhood)},
      {"seed", cfg.seed},
      {"workers", cfg.workers},
      {"both_directions", cfg.both_directions},
  };
  config_json["tau"] =
      cfg.tau.has_value() ? nlohmann::json(*cfg.tau) : nlohmann::json(nullptr);

  const EstimateResult& est = report.estimate;
  nlohmann::json diagnostics;
  diagnostics["corr2"] = est.corr2.has_value() ? nlohmann::json(*est.corr2)
                                               : nlohmann::json(nullptr);
  diagnostics["corr4"] = est.corr4.has_value() ? nlohmann::json(*est.corr4)
                                               : nlohmann::json(nullptr);

  nlohmann::json j{
      {"config", config_json},
      {"tau", report.tau_used},
      {"tau_tuned", report.tau_tuned},
      {"eps_hat", json_number(est.eps_hat)},
      {"p1_lower", confidence_bound_to_json(est.p1_bound)},
      {"p0_upper", confidence_bound_to_json(est.p0_bound)},
      {"moments_alt", moment_vector_to_json(est.moments_alt)},
      {"moments_null", moment_vector_to_json(est.moments_null)},
      {"diagnostics", diagnostics},
      {"mechanism_calls", report.mechanism_calls},
      {"guarantee", "P(eps < eps_hat) <= beta = " + fmt_double(cfg.beta)},
      {"wall_seconds", report.wall_seconds},
  };
  if (report.tau_tuned) {
    j["tau_grid"] = report.tau_grid;
    nlohmann::json holdout = nlohmann::json::array();
    for (const double e : report.holdout_eps) holdout.push_back(json_number(e));
    j["holdout_eps"] = holdout;
  }
  if (est.eps_hat_reverse.has_value()) {
    j["eps_hat_reverse"] = json_number(*est.eps_hat_reverse);
    j["eps_hat_max"] =
        json_number(std::max(est.eps_hat, *est.eps_hat_reverse));
  }
  return j;
}

void write_audit_artifacts(const AuditReport& report, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const auto base = std::filesystem::path(dir);
  {
    std::ofstream out(base / "report.json", std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot open for writing: " +
                               (base / "report.json").string());
    }
    out << audit_report_to_json(report).dump(2) << '\n';
  }
  write_stat_matrix_csv(report.stats_alt, (base / "stats_alt.csv").string());
  write_stat_matrix_csv(report.stats_null, (base / "stats_null.csv").string());
}

void write_sweep_csv(const std::vector<SweepRow>& rows,
                     const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "n,K,d,eps_true,method,order,repeat,eps_hat,corr2,corr4,"
         "delta_bias,delta_var,eps_hat_mean,eps_hat_se\n";
  const auto opt = [](const std::optional<double>& v) {
    return v.has_value() ? fmt_double(*v) : std::string();
  };
  for (const auto& row : rows) {
    out << row.n << ',' << row.K << ',' << row.d << ','
        << fmt_double(row.eps_true) << ',' << to_string(row.method) << ','
        << row.order << ',' << row.repeat << ',' << fmt_double(row.eps_hat)
        << ',' << opt(row.corr2) << ',' << opt(row.corr4) << ','
        << fmt_double(row.delta_bias) << ',' << fmt_double(row.delta_var)
        << ',' << opt(row.eps_hat_mean) << ',' << opt(row.eps_hat_se) << '\n';
  }
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_canary_csv(const AuditConfig& config, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "trial,index,kind";
  for (std::size_t j = 0; j < config.d; ++j) out << ",c" << (j + 1);
  out << '\n';
  for (std::size_t i = 0; i < config.n; ++i) {
    const CanarySet set =
        sample_canary_set(config.d, config.K, config.m,
                          rng::derive(config.seed, i, rng::kRoleCanary));
    for (std::size_t k = 0; k < set.canaries.size(); ++k) {
      out << i << ',' << k << ',' << (k < config.K ? "present" : "null");
      for (const double v : set.canaries[k]) out << ',' << fmt_double(v);
      out << '\n';
    }
  }
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace lidp
