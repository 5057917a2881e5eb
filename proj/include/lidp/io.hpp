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

#ifndef LIDP_IO_HPP_
#define LIDP_IO_HPP_

// Serialization: StatMatrix <-> CSV (header `trial,c1,...,cK`, entries 0/1),
// MomentVector / ConfidenceBound / AuditReport -> JSON, sweep rows -> CSV.
// +infinity serializes as the string "inf" (JSON has no infinity literal).

#include <string>
#include <vector>

#include <json.hpp>

#include "lidp/harness.hpp"

namespace lidp {

void write_stat_matrix_csv(const StatMatrix& M, const std::string& path);

// Throws std::runtime_error naming the offending row on malformed input
// (non-binary entries, ragged rows, bad header).
StatMatrix read_stat_matrix_csv(const std::string& path);

nlohmann::json moment_vector_to_json(const MomentVector& mv);
nlohmann::json confidence_bound_to_json(const ConfidenceBound& b);
nlohmann::json audit_report_to_json(const AuditReport& report);

// Writes report.json, stats_alt.csv and stats_null.csv into dir (created if
// missing).
void write_audit_artifacts(const AuditReport& report, const std::string& dir);

void write_sweep_csv(const std::vector<SweepRow>& rows,
                     const std::string& path);

// Canary debug dump: one row per canary per trial.
void write_canary_csv(const AuditConfig& config, const std::string& path);

}  // namespace lidp

#endif  // LIDP_IO_HPP_
