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

#ifndef FEDKD_CONFIG_HPP_
#define FEDKD_CONFIG_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

#include "fedkd/comms.hpp"
#include "fedkd/datasets.hpp"
#include "fedkd/fedavg.hpp"
#include "fedkd/fkd.hpp"
#include "fedkd/partition.hpp"
#include "fedkd/preprocess.hpp"

namespace fedkd {

enum class DataSourceKind { kSynthetic, kManifest };

struct DataSection {
  DataSourceKind source = DataSourceKind::kSynthetic;
  // Synthetic generator.
  std::size_t classes = 3;
  std::size_t per_class = 300;
  std::size_t height = 32;
  std::size_t width = 32;
  double noise = 0.4;
  // Manifest source; relative paths resolve against the config file.
  std::string manifest;
  bool preprocess = true;
  PipelineOptions pipeline;
  // Grayscale is replicated to this many channels.
  std::size_t channels = 3;
};

struct DistillSection {
  std::size_t rounds = 10;
  std::size_t local_epochs = 5;
  std::size_t student_epochs = 5;
  double temperature = 10.0;
  double alpha = 0.1;
  std::size_t batch_size = 32;
  std::string teacher_spec = "builtin:teacher-small";
  std::string student_spec = "builtin:student-32";
  OptimizerConfig teacher_optimizer{0.01, 0.9};
  OptimizerConfig student_optimizer{0.01, 0.9};
  DistillTarget target = DistillTarget::kDirect;
  bool scale_t2 = false;
  bool reset_teachers = false;
};

struct FedAvgSection {
  std::size_t rounds = 10;
  std::size_t local_epochs = 5;
  std::size_t batch_size = 32;
  std::string model_spec = "builtin:teacher-small";
  OptimizerConfig optimizer{0.01, 0.9};
  Weighting weighting = Weighting::kUniform;
};

/// Everything one experiment needs, read from a sectioned key = value file
/// or an equivalent JSON object ({"distill": {"alpha": 0.1}, ...}).
struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  DataSection data;
  SplitSpec split;  // split.seed is derived from `seed`
  std::size_t clients = 2;
  double dirichlet_alpha = 10000.0;
  std::size_t min_per_client = 1;
  DistillSection distill;
  FedAvgSection fedavg;
  EncodingModel encoding;
  // Directory that relative paths are resolved against.
  std::filesystem::path base_dir = ".";
};

// ConfigError messages start with the dotted key path, e.g. "distill.alpha".
ExperimentConfig parse_config(std::string_view text, bool json = false);
ExperimentConfig load_config(const std::filesystem::path& path);

// Key = value form of every field, in a fixed order. Parsing it back yields
// an equal configuration.
std::string canonical_config(const ExperimentConfig& cfg);

std::shared_ptr<const LabeledDataset> load_dataset(const ExperimentConfig& cfg);
SplitSpec make_split_spec(const ExperimentConfig& cfg);
PartitionConfig make_partition_config(const ExperimentConfig& cfg);
DistillConfig make_distill_config(const ExperimentConfig& cfg);
FedAvgConfig make_fedavg_config(const ExperimentConfig& cfg);

}  // namespace fedkd

#endif  // FEDKD_CONFIG_HPP_
