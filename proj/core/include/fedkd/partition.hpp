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

#ifndef FEDKD_PARTITION_HPP_
#define FEDKD_PARTITION_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace fedkd {

struct PartitionConfig {
  std::size_t num_clients = 2;
  double alpha = 10000.0;  // Dirichlet concentration
  std::uint64_t seed = 0;
  std::size_t min_per_client = 1;
};

void validate_partition_config(const PartitionConfig& cfg);

struct Partition {
  // Positions into the label list, ascending within each client.
  std::vector<std::vector<std::size_t>> assignments;
  // Row per client, column per class; each row sums to 1.
  std::vector<std::vector<double>> class_proportions;
};

/// For every class, draws client shares p ~ Dir(alpha * 1_K), integerizes
/// them by largest remainder, and deals a seeded shuffle of that class's
/// samples out in client order. If some client ends up below
/// min_per_client the whole draw is repeated (bounded), after which samples
/// are moved one at a time from the largest client.
Partition dirichlet_partition(std::span<const std::size_t> labels,
                              const PartitionConfig& cfg);

struct PartitionReport {
  std::vector<std::size_t> sizes;
  std::vector<std::vector<double>> class_proportions;
  std::vector<double> global_distribution;
  // Total-variation distance from the global label distribution, per client.
  std::vector<double> client_tv;
  // Mean of client_tv, in [0,1].
  double heterogeneity = 0.0;
};

PartitionReport partition_stats(const Partition& partition,
                                std::span<const std::size_t> global_labels);

// CSV rows client_id,sample_index.
void write_partition_csv(const std::filesystem::path& path, const Partition& partition);

}  // namespace fedkd

#endif  // FEDKD_PARTITION_HPP_
