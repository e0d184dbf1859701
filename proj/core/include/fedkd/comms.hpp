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

#ifndef FEDKD_COMMS_HPP_
#define FEDKD_COMMS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fedkd/model_spec.hpp"

namespace fedkd {

// Parameter count used for a VGG16-sized model when only the count matters.
inline constexpr std::size_t kVgg16ParameterCount = 138'000'000;

enum class Unit { kBytes, kMegabytes, kMegabits };
enum class ParamScope { kAll, kTrainableOnly };
enum class DownloadConvention { kBroadcastOnce, kPerRecipient };

struct EncodingModel {
  std::size_t bytes_per_value = 4;  // 2, 4 or 8
  Unit unit = Unit::kMegabits;
  std::size_t overhead_bytes_per_message = 0;
  ParamScope scope = ParamScope::kAll;
  DownloadConvention download = DownloadConvention::kBroadcastOnce;
};

void validate_encoding(const EncodingModel& enc);

// Megabytes are 1e6 bytes; megabits are bytes * 8 / 1e6.
double convert_bytes(std::uint64_t bytes, Unit unit);
std::string_view unit_label(Unit unit);  // "B", "MB", "Mb"
Unit parse_unit(std::string_view label);

std::uint64_t soft_label_payload(std::size_t rows, std::size_t classes,
                                 const EncodingModel& enc);
std::uint64_t parameter_payload(const ParamCounts& counts, const EncodingModel& enc);
std::uint64_t parameter_payload(const ModelSpec& spec, const EncodingModel& enc);

enum class Direction { kUpload, kDownload };
enum class PayloadKind { kSoftLabels, kParameters };
enum class Protocol { kFkd, kFedAvg };

std::string_view to_string(Direction d);
std::string_view to_string(PayloadKind k);
std::string_view to_string(Protocol p);
Direction parse_direction(std::string_view s);
PayloadKind parse_payload_kind(std::string_view s);
Protocol parse_protocol(std::string_view s);

struct LedgerEntry {
  std::size_t round = 0;
  Direction direction = Direction::kUpload;
  std::string actor;
  PayloadKind kind = PayloadKind::kSoftLabels;
  std::uint64_t bytes = 0;
  friend bool operator==(const LedgerEntry&, const LedgerEntry&) = default;
};

struct RoundTotals {
  std::uint64_t upload = 0;
  std::uint64_t download = 0;
};

/// Append-only traffic log. Not synchronized: the experiment runners record
/// at the per-round aggregation barrier only.
class CommLedger {
 public:
  void record(LedgerEntry entry) { entries_.push_back(std::move(entry)); }
  const std::vector<LedgerEntry>& entries() const noexcept { return entries_; }
  void write_csv(const std::filesystem::path& path) const;
  std::string to_csv() const;

  friend bool operator==(const CommLedger&, const CommLedger&) = default;

 private:
  std::vector<LedgerEntry> entries_;
};

// Sums the protocol's payload kind for one round. MissingRoundError if the
// round has no entries of that kind.
RoundTotals round_totals(const CommLedger& ledger, Protocol protocol, std::size_t round);

// One upload per teacher; the aggregate goes down once, or once per teacher
// under kPerRecipient.
void record_fkd_round(CommLedger& ledger, std::size_t round, std::size_t teachers,
                      std::size_t public_rows, std::size_t classes, const EncodingModel& enc);
// One upload per client; the global model goes down once, or once per
// client under kPerRecipient.
void record_fedavg_round(CommLedger& ledger, std::size_t round, std::size_t clients,
                         const ParamCounts& counts, const EncodingModel& enc);

}  // namespace fedkd

#endif  // FEDKD_COMMS_HPP_
