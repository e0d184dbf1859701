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

#ifndef FEDKD_FEDAVG_HPP_
#define FEDKD_FEDAVG_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "fedkd/comms.hpp"
#include "fedkd/datasets.hpp"
#include "fedkd/model.hpp"
#include "fedkd/partition.hpp"
#include "fedkd/report.hpp"
#include "fedkd/train.hpp"

namespace fedkd {

enum class Weighting { kUniform, kBySampleCount };

std::string_view to_string(Weighting w);
Weighting parse_weighting(std::string_view s);

struct FedAvgConfig {
  std::size_t num_clients = 2;
  std::size_t rounds = 10;
  std::size_t local_epochs = 5;
  ModelSpec model_spec;
  OptimizerConfig optimizer;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  Weighting weighting = Weighting::kUniform;
  std::size_t threads = 1;
  EncodingModel encoding;
};

void validate_fedavg_config(const FedAvgConfig& cfg);

// Weighted elementwise mean of every parameter, BN moving statistics
// included. Weights are normalized; summation runs in model order.
ModelState average_models(std::span<const ModelState> models, std::span<const double> weights);

struct FedAvgRoundResult {
  ModelState global;
  std::vector<double> client_losses;  // final-epoch mean loss per client
};

// `round` is 1-based and only feeds the shuffle seeds.
FedAvgRoundResult fedavg_round(const ModelState& global, const Partition& partition,
                               const DatasetView& private_pool, const FedAvgConfig& cfg,
                               std::size_t round);

ExperimentReport run_fedavg_experiment(const FedAvgConfig& cfg, const ExperimentData& data,
                                       const Partition& partition);

}  // namespace fedkd

#endif  // FEDKD_FEDAVG_HPP_
