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

#ifndef FEDKD_FKD_HPP_
#define FEDKD_FKD_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fedkd/comms.hpp"
#include "fedkd/datasets.hpp"
#include "fedkd/loss.hpp"
#include "fedkd/model.hpp"
#include "fedkd/partition.hpp"
#include "fedkd/report.hpp"
#include "fedkd/train.hpp"

namespace fedkd {

struct LocalTraining {
  std::size_t epochs = 5;
  std::size_t batch_size = 32;
  OptimizerConfig optimizer;
  std::uint64_t seed = 0;
};

// Runs epochs x ceil(n / batch) cross-entropy steps over seeded shuffles.
// Returns the mean loss of each epoch.
std::vector<double> train_teacher(ModelState& teacher, const DatasetView& data,
                                  const LocalTraining& options);

struct SoftLabelBatch {
  Tensor probabilities;  // (N_public, classes)
  double temperature = 1.0;
  std::string source;
};

SoftLabelBatch generate_soft_labels(const ModelState& teacher, const DatasetView& public_set,
                                    double temperature, std::size_t classes,
                                    std::string source = "teacher");

SoftLabelBatch aggregate_soft_labels(std::span<const SoftLabelBatch> batches);

LossSpec distill_loss_spec(double alpha, double temperature,
                           DistillTarget target = DistillTarget::kDirect,
                           bool scale_distill_by_t2 = false);

// Losses of the student (eval mode) over the whole public set.
LossValue student_losses(const ModelState& student, const DatasetView& public_set,
                         const SoftLabelBatch& p_agg, const LossSpec& loss);

struct StudentTraining {
  std::size_t epochs = 5;
  std::size_t batch_size = 32;
  OptimizerConfig optimizer;
  LossSpec loss = distill_loss_spec(0.1, 10.0);
  std::uint64_t seed = 0;
};

// Per-epoch sample-weighted mean of the pre-step batch losses.
std::vector<LossValue> train_student(ModelState& student, const DatasetView& public_set,
                                     const SoftLabelBatch& p_agg,
                                     const StudentTraining& options);

struct Evaluation {
  double accuracy = 0.0;
  double loss = 0.0;  // mean cross entropy at T = 1
};

// Argmax ties resolve to the lowest class index.
Evaluation evaluate(const ModelState& model, const DatasetView& test_set, std::size_t classes);

struct DistillConfig {
  std::size_t num_teachers = 2;
  std::size_t rounds = 10;
  std::size_t local_epochs = 5;
  std::size_t student_epochs = 5;
  double temperature = 10.0;
  double alpha = 0.1;
  ModelSpec teacher_spec;
  // Optional per-teacher override; empty means teacher_spec for all.
  std::vector<ModelSpec> teacher_specs;
  ModelSpec student_spec;
  OptimizerConfig teacher_optimizer;
  OptimizerConfig student_optimizer;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  DistillTarget distill_target = DistillTarget::kDirect;
  bool scale_distill_by_t2 = false;
  bool reset_teachers = false;
  std::size_t threads = 1;
  EncodingModel encoding;
};

void validate_distill_config(const DistillConfig& cfg);

ExperimentReport run_fkd_experiment(const DistillConfig& cfg, const ExperimentData& data,
                                    const Partition& partition);

}  // namespace fedkd

#endif  // FEDKD_FKD_HPP_
