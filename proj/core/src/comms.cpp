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

#include "fedkd/comms.hpp"

#include <fstream>
#include <sstream>

#include "fedkd/errors.hpp"

namespace fedkd {

void validate_encoding(const EncodingModel& enc) {
  if (enc.bytes_per_value != 2 && enc.bytes_per_value != 4 && enc.bytes_per_value != 8) {
    throw DomainError("bytes_per_value must be 2, 4 or 8");
  }
}

double convert_bytes(std::uint64_t bytes, Unit unit) {
  const auto b = static_cast<double>(bytes);
  switch (unit) {
    case Unit::kBytes: return b;
    case Unit::kMegabytes: return b / 1e6;
    case Unit::kMegabits: return b * 8.0 / 1e6;
  }
  return b;
}

std::string_view unit_label(Unit unit) {
  switch (unit) {
    case Unit::kBytes: return "B";
    case Unit::kMegabytes: return "MB";
    case Unit::kMegabits: return "Mb";
  }
  return "B";
}

Unit parse_unit(std::string_view label) {
  if (label == "B") return Unit::kBytes;
  if (label == "MB") return Unit::kMegabytes;
  if (label == "Mb") return Unit::kMegabits;
  throw ConfigError("unknown unit '" + std::string(label) + "' (expected B, MB or Mb)");
}

std::uint64_t soft_label_payload(std::size_t rows, std::size_t classes,
                                 const EncodingModel& enc) {
  validate_encoding(enc);
  return static_cast<std::uint64_t>(rows) * classes * enc.bytes_per_value +
         enc.overhead_bytes_per_message;
}

std::uint64_t parameter_payload(const ParamCounts& counts, const EncodingModel& enc) {
  validate_encoding(enc);
  const std::size_t n = enc.scope == ParamScope::kAll ? counts.total : counts.trainable;
  return static_cast<std::uint64_t>(n) * enc.bytes_per_value + enc.overhead_bytes_per_message;
}

std::uint64_t parameter_payload(const ModelSpec& spec, const EncodingModel& enc) {
  return parameter_payload(count_parameters(spec), enc);
}

std::string_view to_string(Direction d) {
  return d == Direction::kUpload ? "upload" : "download";
}

std::string_view to_string(PayloadKind k) {
  return k == PayloadKind::kSoftLabels ? "soft_labels" : "parameters";
}

std::string_view to_string(Protocol p) { return p == Protocol::kFkd ? "fkd" : "fedavg"; }

Direction parse_direction(std::string_view s) {
  if (s == "upload") return Direction::kUpload;
  if (s == "download") return Direction::kDownload;
  throw FormatError("unknown direction '" + std::string(s) + "'");
}

PayloadKind parse_payload_kind(std::string_view s) {
  if (s == "soft_labels") return PayloadKind::kSoftLabels;
  if (s == "parameters") return PayloadKind::kParameters;
  throw FormatError("unknown payload kind '" + std::string(s) + "'");
}

Protocol parse_protocol(std::string_view s) {
  if (s == "fkd") return Protocol::kFkd;
  if (s == "fedavg") return Protocol::kFedAvg;
  throw FormatError("unknown protocol '" + std::string(s) + "'");
}

std::string CommLedger::to_csv() const {
  std::ostringstream out;
  out << "round,direction,actor,kind,bytes\n";
  for (const LedgerEntry& e : entries_) {
    out << e.round << ',' << to_string(e.direction) << ',' << e.actor << ','
        << to_string(e.kind) << ',' << e.bytes << '\n';
  }
  return out.str();
}

void CommLedger::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_csv();
}

RoundTotals round_totals(const CommLedger& ledger, Protocol protocol, std::size_t round) {
  const PayloadKind kind =
      protocol == Protocol::kFkd ? PayloadKind::kSoftLabels : PayloadKind::kParameters;
  RoundTotals totals;
  bool seen = false;
  for (const LedgerEntry& e : ledger.entries()) {
    if (e.round != round || e.kind != kind) continue;
    seen = true;
    (e.direction == Direction::kUpload ? totals.upload : totals.download) += e.bytes;
  }
  if (!seen) {
    throw MissingRoundError("no " + std::string(to_string(protocol)) +
                            " ledger entries for round " + std::to_string(round));
  }
  return totals;
}

void record_fkd_round(CommLedger& ledger, std::size_t round, std::size_t teachers,
                      std::size_t public_rows, std::size_t classes, const EncodingModel& enc) {
  const std::uint64_t bytes = soft_label_payload(public_rows, classes, enc);
  for (std::size_t t = 0; t < teachers; ++t) {
    ledger.record({round, Direction::kUpload, "teacher_" + std::to_string(t),
                   PayloadKind::kSoftLabels, bytes});
  }
  if (enc.download == DownloadConvention::kBroadcastOnce) {
    ledger.record({round, Direction::kDownload, "server", PayloadKind::kSoftLabels, bytes});
  } else {
    for (std::size_t t = 0; t < teachers; ++t) {
      ledger.record({round, Direction::kDownload, "server:teacher_" + std::to_string(t),
                     PayloadKind::kSoftLabels, bytes});
    }
  }
}

void record_fedavg_round(CommLedger& ledger, std::size_t round, std::size_t clients,
                         const ParamCounts& counts, const EncodingModel& enc) {
  const std::uint64_t bytes = parameter_payload(counts, enc);
  for (std::size_t c = 0; c < clients; ++c) {
    ledger.record({round, Direction::kUpload, "client_" + std::to_string(c),
                   PayloadKind::kParameters, bytes});
  }
  if (enc.download == DownloadConvention::kBroadcastOnce) {
    ledger.record({round, Direction::kDownload, "server", PayloadKind::kParameters, bytes});
  } else {
    for (std::size_t c = 0; c < clients; ++c) {
      ledger.record({round, Direction::kDownload, "server:client_" + std::to_string(c),
                     PayloadKind::kParameters, bytes});
    }
  }
}

}  // namespace fedkd
