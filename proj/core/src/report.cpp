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

#include "fedkd/report.hpp"

#include <charconv>
#include <numeric>
#include <sstream>

#include "fedkd/errors.hpp"

namespace fedkd {

namespace {

using nlohmann::json;

json loss_json(const LossValue& v) {
  return {{"total", v.total}, {"student", v.student}, {"distill", v.distill}};
}

LossValue loss_from(const json& j) {
  return {j.at("total").get<double>(), j.at("student").get<double>(),
          j.at("distill").get<double>()};
}

std::string fmt(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

}  // namespace

json report_to_json(const ExperimentReport& r) {
  json rounds = json::array();
  for (const RoundMetrics& m : r.rounds) {
    json j = {{"round", m.round},
              {"local_losses", m.local_losses},
              {"test_accuracy", m.test_accuracy},
              {"test_loss", m.test_loss},
              {"upload_bytes", m.upload_bytes},
              {"download_bytes", m.download_bytes}};
    j["student"] = m.student ? loss_json(*m.student) : json(nullptr);
    json epochs = json::array();
    for (const LossValue& e : m.student_epochs) epochs.push_back(loss_json(e));
    j["student_epochs"] = std::move(epochs);
    rounds.push_back(std::move(j));
  }
  json ledger = json::array();
  for (const LedgerEntry& e : r.ledger.entries()) {
    ledger.push_back({{"round", e.round},
                      {"direction", to_string(e.direction)},
                      {"actor", e.actor},
                      {"kind", to_string(e.kind)},
                      {"bytes", e.bytes}});
  }
  return {{"schema", r.schema},
          {"protocol", to_string(r.protocol)},
          {"participants", r.participants},
          {"num_classes", r.num_classes},
          {"public_size", r.public_size},
          {"test_size", r.test_size},
          {"loss_alpha", r.loss_alpha},
          {"settings", r.settings},
          {"rounds", std::move(rounds)},
          {"ledger", std::move(ledger)}};
}

std::string report_to_json_string(const ExperimentReport& report) {
  return report_to_json(report).dump(2) + "\n";
}

ExperimentReport report_from_json(const json& j) {
  if (!j.is_object() || !j.contains("schema") || !j["schema"].is_string()) {
    throw SchemaError("report has no schema tag");
  }
  if (j["schema"].get<std::string>() != kReportSchema) {
    throw SchemaError("report schema '" + j["schema"].get<std::string>() +
                      "' is not supported (expected '" + std::string(kReportSchema) + "')");
  }
  try {
    ExperimentReport r;
    r.protocol = parse_protocol(j.at("protocol").get<std::string>());
    r.participants = j.at("participants").get<std::size_t>();
    r.num_classes = j.at("num_classes").get<std::size_t>();
    r.public_size = j.at("public_size").get<std::size_t>();
    r.test_size = j.at("test_size").get<std::size_t>();
    r.loss_alpha = j.at("loss_alpha").get<double>();
    r.settings = j.at("settings");
    for (const json& m : j.at("rounds")) {
      RoundMetrics rm;
      rm.round = m.at("round").get<std::size_t>();
      rm.local_losses = m.at("local_losses").get<std::vector<double>>();
      if (!m.at("student").is_null()) rm.student = loss_from(m.at("student"));
      for (const json& e : m.at("student_epochs")) rm.student_epochs.push_back(loss_from(e));
      rm.test_accuracy = m.at("test_accuracy").get<double>();
      rm.test_loss = m.at("test_loss").get<double>();
      rm.upload_bytes = m.at("upload_bytes").get<std::uint64_t>();
      rm.download_bytes = m.at("download_bytes").get<std::uint64_t>();
      r.rounds.push_back(std::move(rm));
    }
    for (const json& e : j.at("ledger")) {
      r.ledger.record({e.at("round").get<std::size_t>(),
                       parse_direction(e.at("direction").get<std::string>()),
                       e.at("actor").get<std::string>(),
                       parse_payload_kind(e.at("kind").get<std::string>()),
                       e.at("bytes").get<std::uint64_t>()});
    }
    return r;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed report: ") + e.what());
  } catch (const FormatError& e) {
    throw SchemaError(std::string("malformed report: ") + e.what());
  }
}

std::string rounds_csv(const ExperimentReport& r) {
  std::ostringstream out;
  out << "round,test_accuracy,test_loss,student_total,student_loss,distill_loss,"
         "upload_bytes,download_bytes,local_loss_mean\n";
  for (const RoundMetrics& m : r.rounds) {
    const double local_mean =
        m.local_losses.empty()
            ? 0.0
            : std::accumulate(m.local_losses.begin(), m.local_losses.end(), 0.0) /
                  static_cast<double>(m.local_losses.size());
    out << m.round << ',' << fmt(m.test_accuracy) << ',' << fmt(m.test_loss) << ',';
    if (m.student) {
      out << fmt(m.student->total) << ',' << fmt(m.student->student) << ','
          << fmt(m.student->distill);
    } else {
      out << ",,";
    }
    out << ',' << m.upload_bytes << ',' << m.download_bytes << ',' << fmt(local_mean) << '\n';
  }
  return out.str();
}

}  // namespace fedkd
