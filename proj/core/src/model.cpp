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

#include "fedkd/model.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <variant>

#include "fedkd/errors.hpp"
#include "layer_ops.hpp"

namespace fedkd {

namespace {

constexpr std::size_t kNoParam = std::numeric_limits<std::size_t>::max();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

struct Trace {
  std::vector<Tensor> acts;  // acts[i] is the input of layer i
  std::vector<ops::BatchNormCache> bn;
  std::vector<std::vector<std::size_t>> argmax;
  std::vector<BatchStats> batch_stats;
};

Trace run_forward(const ModelState& model, const Tensor& batch, Mode mode,
                  bool keep) {
  const ModelSpec& spec = model.spec();
  const std::vector<Shape> shapes = infer_shapes(spec);
  if (batch.rank() != spec.input_shape.size() + 1 ||
      Shape(batch.shape().begin() + 1, batch.shape().end()) != spec.input_shape) {
    throw ShapeError("batch " + shape_to_string(batch.shape()) +
                     " does not match model input " +
                     shape_to_string(spec.input_shape));
  }
  const std::size_t n = batch.dim(0);
  const auto& v = model.values();
  Trace t;
  t.bn.resize(spec.layers.size());
  t.argmax.resize(spec.layers.size());
  Tensor current = batch;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const std::size_t p = model.first_param(i);
    Tensor next = std::visit(
        Overloaded{
            [&](const Conv2D& c) {
              return ops::conv2d_forward(current, v[p], v[p + 1], c, shapes[i]);
            },
            [&](const BatchNorm& b) {
              ops::BatchNormCache* cache = keep ? &t.bn[i] : nullptr;
              if (mode == Mode::kTrain) {
                BatchStats stats{i, {}, {}};
                ops::batch_moments(current, stats.mean, stats.variance);
                Tensor out = ops::batchnorm_forward(current, v[p], v[p + 1], stats.mean,
                                                    stats.variance, b.epsilon, cache);
                t.batch_stats.push_back(std::move(stats));
                return out;
              }
              const auto mean = std::vector<double>(v[p + 2].data().begin(),
                                                    v[p + 2].data().end());
              const auto var = std::vector<double>(v[p + 3].data().begin(),
                                                   v[p + 3].data().end());
              return ops::batchnorm_forward(current, v[p], v[p + 1], mean, var,
                                            b.epsilon, cache);
            },
            [&](const LeakyReLU& r) { return ops::leaky_relu_forward(current, r.slope); },
            [&](const MaxPool2D& m) {
              return ops::maxpool_forward(current, m, shapes[i],
                                          keep ? &t.argmax[i] : nullptr);
            },
            [&](const GlobalAvgPool&) { return ops::global_avg_pool_forward(current); },
            [&](const Dense&) { return ops::dense_forward(current, v[p], v[p + 1]); },
        },
        spec.layers[i]);
    if (!next.all_finite()) {
      throw NumericError("non-finite output from layer " + layer_name(spec, i));
    }
    if (keep) {
      t.acts.push_back(std::move(current));
    }
    current = std::move(next);
  }
  // Flatten so that a layer-free model over a rank-1 input still yields (N, L).
  t.acts.push_back(current.reshaped({n, current.size() / n}));
  return t;
}

}  // namespace

ModelState::ModelState(const ModelSpec& spec)
    : spec_(spec), layout_(parameter_layout(spec)) {
  validate_model_spec(spec_);
  values_.reserve(layout_.size());
  for (const ParamInfo& info : layout_) values_.emplace_back(info.shape);
  first_param_.assign(spec_.layers.size(), kNoParam);
  for (std::size_t i = layout_.size(); i-- > 0;) first_param_[layout_[i].layer] = i;
}

ModelState ModelState::zeros(const ModelSpec& spec) {
  ModelState state(spec);
  for (std::size_t i = 0; i < state.layout_.size(); ++i) {
    const std::string& name = state.layout_[i].name;
    if (name.ends_with("/gamma") || name.ends_with("/moving_variance")) {
      state.values_[i].fill(1.0);
    }
  }
  return state;
}

ModelState ModelState::initialize(const ModelSpec& spec, std::uint64_t seed) {
  ModelState state = zeros(spec);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < state.layout_.size(); ++i) {
    const ParamInfo& info = state.layout_[i];
    if (!info.name.ends_with("/kernel")) continue;
    // Fan-in is every axis but the last (output) one.
    const std::size_t fan_in = shape_size(info.shape) / info.shape.back();
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& w : state.values_[i].data()) w = dist(rng);
  }
  return state;
}

std::size_t ModelState::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < layout_.size(); ++i) {
    if (layout_[i].name == name) return i;
  }
  throw DomainError("no parameter named '" + std::string(name) + "'");
}

ParamCounts ModelState::counts() const {
  ParamCounts c;
  for (std::size_t i = 0; i < layout_.size(); ++i) {
    const std::size_t n = values_[i].size();
    c.total += n;
    (layout_[i].trainable ? c.trainable : c.non_trainable) += n;
  }
  return c;
}

Tensor forward(const ModelState& model, const Tensor& batch) {
  return forward(model, batch, model.mode());
}

Tensor forward(const ModelState& model, const Tensor& batch, Mode mode) {
  Trace t = run_forward(model, batch, mode, false);
  return std::move(t.acts.back());
}

GradientResult compute_gradients(const ModelState& model, const Tensor& batch,
                                 const Targets& targets, const LossSpec& loss,
                                 Mode mode) {
  Trace t = run_forward(model, batch, mode, true);
  const ModelSpec& spec = model.spec();
  const auto& v = model.values();
  const auto& layout = model.layout();

  GradientResult result;
  Tensor grad;
  result.loss = evaluate_loss(t.acts.back(), targets, loss, &grad);
  result.batch_stats = std::move(t.batch_stats);
  result.grads.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (layout[i].trainable) result.grads[i] = Tensor(v[i].shape());
  }

  for (std::size_t i = spec.layers.size(); i-- > 0;) {
    const Tensor& in = t.acts[i];
    const std::size_t p = model.first_param(i);
    auto& g = result.grads;
    grad = std::visit(
        Overloaded{
            [&](const Conv2D& c) {
              return ops::conv2d_backward(in, v[p], grad, c, g[p], g[p + 1]);
            },
            [&](const BatchNorm&) {
              return ops::batchnorm_backward(grad, v[p], t.bn[i], mode == Mode::kTrain,
                                             g[p], g[p + 1]);
            },
            [&](const LeakyReLU& r) { return ops::leaky_relu_backward(in, grad, r.slope); },
            [&](const MaxPool2D&) {
              return ops::maxpool_backward(in.shape(), grad, t.argmax[i]);
            },
            [&](const GlobalAvgPool&) {
              return ops::global_avg_pool_backward(in.shape(), grad);
            },
            [&](const Dense&) {
              return ops::dense_backward(in, v[p], grad, g[p], g[p + 1]);
            },
        },
        spec.layers[i]);
    if (p != kNoParam) {
      for (std::size_t j = p; j < layout.size() && layout[j].layer == i; ++j) {
        if (layout[j].trainable && !g[j].all_finite()) {
          throw NumericError("non-finite gradient in layer " + layer_name(spec, i) +
                             " (" + layout[j].name + ")");
        }
      }
    }
  }
  return result;
}

}  // namespace fedkd
