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

#ifndef FEDKD_MODEL_SPEC_HPP_
#define FEDKD_MODEL_SPEC_HPP_

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fedkd/tensor.hpp"

namespace fedkd {

enum class Padding { kSame, kValid };

struct Conv2D {
  std::size_t filters = 0;
  std::size_t kernel = 3;
  std::size_t stride = 1;
  Padding padding = Padding::kSame;
  friend bool operator==(const Conv2D&, const Conv2D&) = default;
};

struct BatchNorm {
  double epsilon = 1e-5;
  // Weight kept on the old moving statistic at each update.
  double momentum = 0.9;
  friend bool operator==(const BatchNorm&, const BatchNorm&) = default;
};

struct LeakyReLU {
  double slope = 0.01;
  friend bool operator==(const LeakyReLU&, const LeakyReLU&) = default;
};

struct MaxPool2D {
  std::size_t window = 2;
  std::size_t stride = 2;
  bool ceil_mode = true;
  friend bool operator==(const MaxPool2D&, const MaxPool2D&) = default;
};

struct GlobalAvgPool {
  friend bool operator==(const GlobalAvgPool&, const GlobalAvgPool&) = default;
};

// Dense flattens whatever it receives, so F_in is the product of the input
// sample shape.
struct Dense {
  std::size_t units = 0;
  friend bool operator==(const Dense&, const Dense&) = default;
};

using LayerSpec =
    std::variant<Conv2D, BatchNorm, LeakyReLU, MaxPool2D, GlobalAvgPool, Dense>;

std::string_view layer_kind_name(const LayerSpec& layer);

/// Declarative architecture: per-sample input shape plus an ordered layer
/// list. Spatial tensors are laid out (H, W, C).
struct ModelSpec {
  Shape input_shape;
  std::vector<LayerSpec> layers;
  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct ParamCounts {
  std::size_t total = 0;
  std::size_t trainable = 0;
  std::size_t non_trainable = 0;
  friend bool operator==(const ParamCounts&, const ParamCounts&) = default;
};

struct ParamInfo {
  std::string name;
  Shape shape;
  bool trainable = true;
  std::size_t layer = 0;
  friend bool operator==(const ParamInfo&, const ParamInfo&) = default;
};

struct LayerAudit {
  std::string name;
  std::string kind;
  Shape output_shape;
  ParamCounts params;
};

// Stable per-layer name: "<kind>_<1-based position>".
std::string layer_name(const ModelSpec& spec, std::size_t index);

// Checks hyperparameter ranges; throws DomainError.
void validate_hyperparameters(const ModelSpec& spec);

/// Per-layer output shapes (per sample, without the batch axis).
/// Throws ShapeError when any layer receives an input it cannot accept.
std::vector<Shape> infer_shapes(const ModelSpec& spec);

ParamCounts count_parameters(const ModelSpec& spec);

// Named parameter tensors in layer order. Conv and dense layers own
// kernel/bias, batchnorm owns gamma/beta (trainable) and
// moving_mean/moving_variance (non-trainable).
std::vector<ParamInfo> parameter_layout(const ModelSpec& spec);

std::vector<LayerAudit> audit_model(const ModelSpec& spec);

// Full validation: hyperparameters, shape inference, rank-1 final output.
void validate_model_spec(const ModelSpec& spec);

// The student architecture at a chosen input resolution and head width.
ModelSpec canonical_student_spec(std::size_t height = 224,
                                 std::size_t width = 224,
                                 std::size_t channels = 3,
                                 std::size_t head_units = 10);

}  // namespace fedkd

#endif  // FEDKD_MODEL_SPEC_HPP_
