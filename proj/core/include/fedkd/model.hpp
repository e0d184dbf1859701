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

#ifndef FEDKD_MODEL_HPP_
#define FEDKD_MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fedkd/loss.hpp"
#include "fedkd/model_spec.hpp"
#include "fedkd/tensor.hpp"

namespace fedkd {

// kTrain normalizes batchnorm inputs with batch statistics, kEval with the
// stored moving statistics.
enum class Mode { kTrain, kEval };

/// Materialized parameters of a ModelSpec. Value type: copying a state
/// copies every tensor, so independent copies can train concurrently.
class ModelState {
 public:
  ModelState() = default;

  // He-style uniform fan-in initialization for kernels, zero biases,
  // unit gamma, zero beta, zero moving mean, unit moving variance.
  static ModelState initialize(const ModelSpec& spec, std::uint64_t seed);
  // Same as initialize but with zero kernels.
  static ModelState zeros(const ModelSpec& spec);

  const ModelSpec& spec() const noexcept { return spec_; }
  const std::vector<ParamInfo>& layout() const noexcept { return layout_; }
  std::vector<Tensor>& values() noexcept { return values_; }
  const std::vector<Tensor>& values() const noexcept { return values_; }

  std::size_t index_of(std::string_view name) const;
  Tensor& param(std::string_view name) { return values_[index_of(name)]; }
  const Tensor& param(std::string_view name) const { return values_[index_of(name)]; }
  // Index of the first parameter owned by `layer`, or npos.
  std::size_t first_param(std::size_t layer) const { return first_param_.at(layer); }

  Mode mode() const noexcept { return mode_; }
  void set_mode(Mode mode) noexcept { mode_ = mode; }

  ParamCounts counts() const;

  friend bool operator==(const ModelState&, const ModelState&) = default;

 private:
  explicit ModelState(const ModelSpec& spec);

  ModelSpec spec_;
  std::vector<ParamInfo> layout_;
  std::vector<Tensor> values_;
  std::vector<std::size_t> first_param_;
  Mode mode_ = Mode::kTrain;
};

/// Logits (N, L) for a batch (N, ...input shape) in the state's mode.
/// Never mutates the state. Throws ShapeError on a mismatched batch and
/// NumericError when the output is not finite.
Tensor forward(const ModelState& model, const Tensor& batch);
Tensor forward(const ModelState& model, const Tensor& batch, Mode mode);

// Batch statistics observed by one batchnorm layer during a train-mode pass.
struct BatchStats {
  std::size_t layer = 0;
  std::vector<double> mean;
  std::vector<double> variance;
};

struct GradientResult {
  LossValue loss;
  // Aligned with ModelState::values(); non-trainable entries stay empty.
  std::vector<Tensor> grads;
  std::vector<BatchStats> batch_stats;
};

/// Forward + loss + backpropagation through every layer in `mode`.
/// Throws NumericError naming the layer when a gradient is not finite.
GradientResult compute_gradients(const ModelState& model, const Tensor& batch,
                                 const Targets& targets, const LossSpec& loss,
                                 Mode mode);

}  // namespace fedkd

#endif  // FEDKD_MODEL_HPP_
