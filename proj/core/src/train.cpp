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

#include "fedkd/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <variant>

#include "fedkd/errors.hpp"

namespace fedkd {

void validate_optimizer(const OptimizerConfig& cfg) {
  if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate)) {
    throw DomainError("learning rate must be a finite non-negative number");
  }
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) {
    throw DomainError("momentum must be in [0,1)");
  }
}

Sgd::Sgd(OptimizerConfig cfg) : cfg_(cfg) { validate_optimizer(cfg_); }

void Sgd::apply(ModelState& model, const std::vector<Tensor>& grads) {
  auto& values = model.values();
  const auto& layout = model.layout();
  if (cfg_.momentum > 0.0 && velocity_.size() != values.size()) {
    velocity_.assign(values.size(), {});
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (layout[i].trainable) velocity_[i].assign(values[i].size(), 0.0);
    }
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!layout[i].trainable) continue;
    auto w = values[i].data();
    const auto g = grads[i].data();
    if (cfg_.momentum > 0.0) {
      auto& vel = velocity_[i];
      for (std::size_t j = 0; j < w.size(); ++j) {
        vel[j] = cfg_.momentum * vel[j] + g[j];
        w[j] -= cfg_.learning_rate * vel[j];
      }
    } else {
      for (std::size_t j = 0; j < w.size(); ++j) w[j] -= cfg_.learning_rate * g[j];
    }
  }
}

LossValue train_step(ModelState& model, const Tensor& batch, const Targets& targets,
                     const LossSpec& loss, Sgd& optimizer) {
  if (loss.kind != LossKind::kCrossEntropy && targets.soft.empty()) {
    throw DomainError("train_step: distillation loss requires soft targets");
  }
  GradientResult r = compute_gradients(model, batch, targets, loss, Mode::kTrain);
  for (const BatchStats& s : r.batch_stats) {
    const double m = std::get<BatchNorm>(model.spec().layers[s.layer]).momentum;
    const std::size_t p = model.first_param(s.layer);
    auto mean = model.values()[p + 2].data();
    auto var = model.values()[p + 3].data();
    for (std::size_t c = 0; c < mean.size(); ++c) {
      mean[c] = m * mean[c] + (1.0 - m) * s.mean[c];
      var[c] = m * var[c] + (1.0 - m) * s.variance[c];
    }
  }
  optimizer.apply(model, r.grads);
  return r.loss;
}

double gradient_check(const ModelState& model, const Tensor& batch,
                      const Targets& targets, const LossSpec& loss,
                      const GradCheckOptions& options) {
  if (!(options.epsilon >= 1e-7 && options.epsilon <= 1e-3)) {
    throw DomainError("gradient_check epsilon must be in [1e-7, 1e-3]");
  }
  const Mode mode = model.mode();
  const GradientResult analytic = compute_gradients(model, batch, targets, loss, mode);
  ModelState probe = model;
  std::mt19937_64 rng(options.seed);
  double worst = 0.0;
  const auto& layout = model.layout();
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (!layout[i].trainable) continue;
    std::vector<std::size_t> entries(probe.values()[i].size());
    std::iota(entries.begin(), entries.end(), std::size_t{0});
    if (options.max_entries_per_tensor != 0 &&
        entries.size() > options.max_entries_per_tensor) {
      std::shuffle(entries.begin(), entries.end(), rng);
      entries.resize(options.max_entries_per_tensor);
    }
    for (std::size_t j : entries) {
      double& w = probe.values()[i][j];
      const double saved = w;
      w = saved + options.epsilon;
      const double up = evaluate_loss(forward(probe, batch, mode), targets, loss).total;
      w = saved - options.epsilon;
      const double down = evaluate_loss(forward(probe, batch, mode), targets, loss).total;
      w = saved;
      const double numeric = (up - down) / (2.0 * options.epsilon);
      if (!std::isfinite(numeric)) {
        throw NumericError("non-finite finite difference for " + layout[i].name);
      }
      const double a = analytic.grads[i][j];
      const double denom = std::max({std::abs(a), std::abs(numeric), kGradCheckFloor});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace fedkd
