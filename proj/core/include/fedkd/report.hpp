// Copyright 2026 The fedkd Authors
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

#ifndef FEDKD_REPORT_HPP_
#define FEDKD_REPORT_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fedkd/comms.hpp"
#include "fedkd/loss.hpp"
#include "fedkd/model.hpp"

namespace fedkd {

inline constexpr std::string_view kReportSchema = "fedkd.report/1";

struct RoundMetrics {
  std::size_t round = 0;  // 1-based
  // Final-epoch mean training loss of each teacher (fkd) or client (fedavg).
  std::vector<double> local_losses;
  // Student losses on the public set after this round's training (fkd only).
  std::optional<LossValue> student;
  // Per-epoch training trace of the student this round (fkd only).
  std::vector<LossValue> student_epochs;
  double test_accuracy = 0.0;
  double test_loss = 0.0;
  std::uint64_t upload_bytes = 0;
  std::uint64_t download_bytes = 0;
};

struct ExperimentReport {
  std::string schema{kReportSchema};
  Protocol protocol = Protocol::kFkd;
  std::size_t participants = 0;
  std::size_t num_classes = 0;
  std::size_t public_size = 0;
  std::size_t test_size = 0;
  double loss_alpha = 1.0;
  nlohmann::json settings = nlohmann::json::object();
  std::vector<RoundMetrics> rounds;
  CommLedger ledger;
  // Not serialized; checkpoint it separately.
  ModelState final_model;
};

nlohmann::json report_to_json(const ExperimentReport& report);
std::string report_to_json_string(const ExperimentReport& report);
// Throws SchemaError when the schema tag is missing or different.
ExperimentReport report_from_json(const nlohmann::json& json);

// round,test_accuracy,test_loss,student_total,student_loss,distill_loss,
// upload_bytes,download_bytes,local_loss_mean
std::string rounds_csv(const ExperimentReport& report);

}  // namespace fedkd

#endif  // FEDKD_REPORT_HPP_
