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

#include "fedkd/model_spec.hpp"

#include <cmath>
#include <string>
#include <type_traits>

#include "fedkd/errors.hpp"

namespace fedkd {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::size_t conv_out_extent(std::size_t in, const Conv2D& c,
                            const std::string& where) {
  if (c.padding == Padding::kSame) return (in + c.stride - 1) / c.stride;
  if (in < c.kernel) {
    throw ShapeError(where + ": kernel " + std::to_string(c.kernel) +
                     " larger than input extent " + std::to_string(in));
  }
  return (in - c.kernel) / c.stride + 1;
}

std::size_t pool_out_extent(std::size_t in, const MaxPool2D& p,
                            const std::string& where) {
  if (in < p.window) {
    // Ceil mode keeps a single partial window; floor mode has none.
    if (p.ceil_mode) return 1;
    throw ShapeError(where + ": pool window " + std::to_string(p.window) +
                     " larger than input extent " + std::to_string(in));
  }
  const std::size_t span = in - p.window;
  std::size_t out = p.ceil_mode ? (span + p.stride - 1) / p.stride + 1
                                : span / p.stride + 1;
  // A window may not start past the end of the input.
  if (p.ceil_mode && (out - 1) * p.stride >= in) --out;
  return out;
}

Shape require_spatial(const Shape& in, const std::string& where) {
  if (in.size() != 3) {
    throw ShapeError(where + ": expects (H,W,C) input, got " +
                     shape_to_string(in));
  }
  return in;
}

Shape layer_output(const LayerSpec& layer, const Shape& in,
                   const std::string& where) {
  return std::visit(
      Overloaded{
          [&](const Conv2D& c) {
            require_spatial(in, where);
            return Shape{conv_out_extent(in[0], c, where),
                         conv_out_extent(in[1], c, where), c.filters};
          },
          [&](const BatchNorm&) { return in; },
          [&](const LeakyReLU&) { return in; },
          [&](const MaxPool2D& p) {
            require_spatial(in, where);
            return Shape{pool_out_extent(in[0], p, where),
                         pool_out_extent(in[1], p, where), in[2]};
          },
          [&](const GlobalAvgPool&) {
            require_spatial(in, where);
            return Shape{in[2]};
          },
          [&](const Dense& d) { return Shape{d.units}; },
      },
      layer);
}

ParamCounts layer_params(const LayerSpec& layer, const Shape& in) {
  return std::visit(
      Overloaded{
          [&](const Conv2D& c) {
            const std::size_t n = (c.kernel * c.kernel * in[2] + 1) * c.filters;
            return ParamCounts{n, n, 0};
          },
          [&](const BatchNorm&) {
            const std::size_t ch = in.back();
            return ParamCounts{4 * ch, 2 * ch, 2 * ch};
          },
          [&](const Dense& d) {
            const std::size_t n = (shape_size(in) + 1) * d.units;
            return ParamCounts{n, n, 0};
          },
          [](const auto&) { return ParamCounts{}; },
      },
      layer);
}

}  // namespace

std::string_view layer_kind_name(const LayerSpec& layer) {
  return std::visit(Overloaded{
                        [](const Conv2D&) { return "conv2d"; },
                        [](const BatchNorm&) { return "batchnorm"; },
                        [](const LeakyReLU&) { return "leaky_relu"; },
                        [](const MaxPool2D&) { return "maxpool2d"; },
                        [](const GlobalAvgPool&) { return "global_avg_pool"; },
                        [](const Dense&) { return "dense"; },
                    },
                    layer);
}

std::string layer_name(const ModelSpec& spec, std::size_t index) {
  return std::string(layer_kind_name(spec.layers.at(index))) + "_" +
         std::to_string(index + 1);
}

void validate_hyperparameters(const ModelSpec& spec) {
  if (spec.input_shape.empty()) throw DomainError("model input shape is empty");
  for (std::size_t d : spec.input_shape) {
    if (d == 0) throw DomainError("model input extents must be positive");
  }
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const std::string where = layer_name(spec, i);
    std::visit(
        Overloaded{
            [&](const Conv2D& c) {
              if (c.filters == 0 || c.kernel == 0 || c.stride == 0) {
                throw DomainError(where + ": filters, kernel and stride must be positive");
              }
            },
            [&](const BatchNorm& b) {
              if (!(b.epsilon > 0.0)) throw DomainError(where + ": epsilon must be positive");
              if (!(b.momentum >= 0.0 && b.momentum < 1.0)) {
                throw DomainError(where + ": momentum must be in [0,1)");
              }
            },
            [&](const LeakyReLU& r) {
              if (!(r.slope > 0.0 && r.slope < 1.0)) {
                throw DomainError(where + ": negative slope must be in (0,1)");
              }
            },
            [&](const MaxPool2D& p) {
              if (p.window == 0 || p.stride == 0) {
                throw DomainError(where + ": window and stride must be positive");
              }
            },
            [](const GlobalAvgPool&) {},
            [&](const Dense& d) {
              if (d.units == 0) throw DomainError(where + ": units must be positive");
            },
        },
        spec.layers[i]);
  }
}

std::vector<Shape> infer_shapes(const ModelSpec& spec) {
  validate_hyperparameters(spec);
  std::vector<Shape> shapes;
  shapes.reserve(spec.layers.size());
  Shape current = spec.input_shape;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    current = layer_output(spec.layers[i], current, layer_name(spec, i));
    shapes.push_back(current);
  }
  return shapes;
}

ParamCounts count_parameters(const ModelSpec& spec) {
  ParamCounts total;
  for (const LayerAudit& row : audit_model(spec)) {
    total.total += row.params.total;
    total.trainable += row.params.trainable;
    total.non_trainable += row.params.non_trainable;
  }
  return total;
}

std::vector<LayerAudit> audit_model(const ModelSpec& spec) {
  const std::vector<Shape> shapes = infer_shapes(spec);
  std::vector<LayerAudit> rows;
  rows.reserve(spec.layers.size());
  Shape in = spec.input_shape;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    rows.push_back({layer_name(spec, i),
                    std::string(layer_kind_name(spec.layers[i])), shapes[i],
                    layer_params(spec.layers[i], in)});
    in = shapes[i];
  }
  return rows;
}

std::vector<ParamInfo> parameter_layout(const ModelSpec& spec) {
  const std::vector<Shape> shapes = infer_shapes(spec);
  std::vector<ParamInfo> out;
  Shape in = spec.input_shape;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const std::string prefix = layer_name(spec, i) + "/";
    std::visit(
        Overloaded{
            [&](const Conv2D& c) {
              out.push_back({prefix + "kernel", {c.kernel, c.kernel, in[2], c.filters}, true, i});
              out.push_back({prefix + "bias", {c.filters}, true, i});
            },
            [&](const BatchNorm&) {
              const std::size_t ch = in.back();
              out.push_back({prefix + "gamma", {ch}, true, i});
              out.push_back({prefix + "beta", {ch}, true, i});
              out.push_back({prefix + "moving_mean", {ch}, false, i});
              out.push_back({prefix + "moving_variance", {ch}, false, i});
            },
            [&](const Dense& d) {
              out.push_back({prefix + "kernel", {shape_size(in), d.units}, true, i});
              out.push_back({prefix + "bias", {d.units}, true, i});
            },
            [](const auto&) {},
        },
        spec.layers[i]);
    in = shapes[i];
  }
  return out;
}

void validate_model_spec(const ModelSpec& spec) {
  const std::vector<Shape> shapes = infer_shapes(spec);
  const Shape& last = shapes.empty() ? spec.input_shape : shapes.back();
  if (last.size() != 1) {
    throw ShapeError("model must end in a rank-1 logit vector, got " +
                     shape_to_string(last));
  }
}

ModelSpec canonical_student_spec(std::size_t height, std::size_t width,
                                 std::size_t channels, std::size_t head_units) {
  ModelSpec spec;
  spec.input_shape = {height, width, channels};
  for (std::size_t filters : {32u, 64u, 128u}) {
    spec.layers.emplace_back(Conv2D{filters, 3, 2, Padding::kSame});
    spec.layers.emplace_back(BatchNorm{});
    spec.layers.emplace_back(LeakyReLU{});
    spec.layers.emplace_back(MaxPool2D{});
  }
  spec.layers.emplace_back(GlobalAvgPool{});
  spec.layers.emplace_back(Dense{head_units});
  return spec;
}

}  // namespace fedkd
