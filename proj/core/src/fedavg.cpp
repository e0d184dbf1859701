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

#include "fedkd/fedavg.hpp"

#include "fedkd/errors.hpp"
#include "fedkd/fkd.hpp"
#include "fedkd/seed.hpp"
#include "fedkd/spec_io.hpp"
#include "parallel.hpp"

namespace fedkd {

std::string_view to_string(Weighting w) {
  return w == Weighting::kUniform ? "uniform" : "by_sample_count";
}

Weighting parse_weighting(std::string_view s) {
  if (s == "uniform") return Weighting::kUniform;
  if (s == "by_sample_count") return Weighting::kBySampleCount;
  throw ConfigError("unknown weighting '" + std::string(s) +
                    "' (expected uniform or by_sample_count)");
}

void validate_fedavg_config(const FedAvgConfig& cfg) {
  if (cfg.num_clients == 0) throw ConfigError("num_clients must be at least 1");
  if (cfg.rounds == 0) throw ConfigError("rounds must be at least 1");
  if (cfg.local_epochs == 0) throw ConfigError("local_epochs must be at least 1");
  if (cfg.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (cfg.threads == 0) throw ConfigError("threads must be at least 1");
  validate_optimizer(cfg.optimizer);
  validate_encoding(cfg.encoding);
  validate_model_spec(cfg.model_spec);
}

ModelState average_models(std::span<const ModelState> models, std::span<const double> weights) {
  if (models.empty()) throw DomainError("no models to average");
  if (weights.size() != models.size()) {
    throw ShapeError("average_models: " + std::to_string(weights.size()) + " weights for " +
                     std::to_string(models.size()) + " models");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw DomainError("average_models: weights must be non-negative");
    total += w;
  }
  if (!(total > 0.0)) throw DomainError("average_models: weights sum to zero");
  for (const ModelState& m : models) {
    if (m.spec() != models.front().spec()) {
      throw ShapeError("average_models: models do not share one spec");
    }
  }

  ModelState out = ModelState::zeros(models.front().spec());
  for (Tensor& t : out.values()) t.fill(0.0);
  for (std::size_t c = 0; c < models.size(); ++c) {
    const double w = weights[c] / total;
    const auto& src = models[c].values();
    for (std::size_t p = 0; p < src.size(); ++p) {
      Tensor& dst = out.values()[p];
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += w * src[p][i];
    }
  }
  out.set_mode(models.front().mode());
  return out;
}

FedAvgRoundResult fedavg_round(const ModelState& global, const Partition& partition,
                               const DatasetView& private_pool, const FedAvgConfig& cfg,
                               std::size_t round) {
  const std::size_t clients = partition.assignments.size();
  if (clients == 0) throw ConfigError("partition has no clients");
  if (global.spec() != cfg.model_spec) {
    throw ShapeError("global model does not match the configured model spec");
  }
  std::vector<ModelState> locals(clients, global);
  std::vector<double> losses(clients, 0.0);
  detail::run_indexed(clients, cfg.threads, "client", [&](std::size_t c) {
    const DatasetView shard = private_pool.subset(partition.assignments[c]);
    LocalTraining local{cfg.local_epochs, cfg.batch_size, cfg.optimizer,
                        derive_seed(cfg.seed, {5, round, c})};
    losses[c] = train_teacher(locals[c], shard, local).back();
  });

  std::vector<double> weights(clients, 1.0);
  if (cfg.weighting == Weighting::kBySampleCount) {
    for (std::size_t c = 0; c < clients; ++c) {
      weights[c] = static_cast<double>(partition.assignments[c].size());
    }
  }
  return {average_models(locals, weights), std::move(losses)};
}

ExperimentReport run_fedavg_experiment(const FedAvgConfig& cfg, const ExperimentData& data,
                                       const Partition& partition) {
  validate_fedavg_config(cfg);
  if (partition.assignments.size() != cfg.num_clients) {
    throw ConfigError("partition has " + std::to_string(partition.assignments.size()) +
                      " clients, config expects " + std::to_string(cfg.num_clients));
  }
  const std::size_t classes = data.private_pool.num_classes();
  ModelState global = ModelState::initialize(cfg.model_spec, derive_seed(cfg.seed, {2}));
  const ParamCounts counts = global.counts();

  ExperimentReport report;
  report.protocol = Protocol::kFedAvg;
  report.participants = cfg.num_clients;
  report.num_classes = classes;
  report.public_size = 0;
  report.test_size = data.test_set.size();
  report.loss_alpha = 1.0;
  report.settings = {{"num_clients", cfg.num_clients},
                     {"rounds", cfg.rounds},
                     {"local_epochs", cfg.local_epochs},
                     {"batch_size", cfg.batch_size},
                     {"seed", cfg.seed},
                     {"weighting", to_string(cfg.weighting)},
                     {"optimizer",
                      {{"learning_rate", cfg.optimizer.learning_rate},
                       {"momentum", cfg.optimizer.momentum}}},
                     {"model_spec", format_model_spec(cfg.model_spec)},
                     {"private_size", data.private_pool.size()}};

  for (std::size_t round = 1; round <= cfg.rounds; ++round) {
    FedAvgRoundResult result = fedavg_round(global, partition, data.private_pool, cfg, round);
    global = std::move(result.global);
    record_fedavg_round(report.ledger, round, cfg.num_clients, counts, cfg.encoding);

    RoundMetrics m;
    m.round = round;
    m.local_losses = std::move(result.client_losses);
    const Evaluation eval = evaluate(global, data.test_set, classes);
    m.test_accuracy = eval.accuracy;
    m.test_loss = eval.loss;
    const RoundTotals totals = round_totals(report.ledger, Protocol::kFedAvg, round);
    m.upload_bytes = totals.upload;
    m.download_bytes = totals.download;
    report.rounds.push_back(std::move(m));
  }
  report.final_model = std::move(global);
  return report;
}

}  // namespace fedkd
