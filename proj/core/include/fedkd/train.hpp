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

#ifndef FEDKD_TRAIN_HPP_
#define FEDKD_TRAIN_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fedkd/loss.hpp"
#include "fedkd/model.hpp"

namespace fedkd {

struct OptimizerConfig {
  double learning_rate = 0.01;
  double momentum = 0.0;
};

void validate_optimizer(const OptimizerConfig& cfg);

/// Plain SGD with optional heavy-ball momentum: v = m*v + g; w -= lr*v.
class Sgd {
 public:
  explicit Sgd(OptimizerConfig cfg = {});

  const OptimizerConfig& config() const noexcept { return cfg_; }
  void apply(ModelState& model, const std::vector<Tensor>& grads);

 private:
  OptimizerConfig cfg_;
  std::vector<std::vector<double>> velocity_;
};

/// One train-mode step: forward, loss, backprop, moving-statistics update,
/// optimizer update. Returns the loss measured before the update.
LossValue train_step(ModelState& model, const Tensor& batch, const Targets& targets,
                     const LossSpec& loss, Sgd& optimizer);

struct GradCheckOptions {
  double epsilon = 1e-5;
  // 0 checks every entry; otherwise a seeded sample of this many per tensor.
  std::size_t max_entries_per_tensor = 0;
  std::uint64_t seed = 0;
};

// Denominator floor of the relative error |a - n| / max(|a|, |n|, floor).
inline constexpr double kGradCheckFloor = 1e-6;

/// Max relative error between backprop and central finite differences over
/// the trainable parameters, in the model's mode. 0 for parameter-free models.
double gradient_check(const ModelState& model, const Tensor& batch,
                      const Targets& targets, const LossSpec& loss,
                      const GradCheckOptions& options = {});

}  // namespace fedkd

#endif  // FEDKD_TRAIN_HPP_
