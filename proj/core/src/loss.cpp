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

#include "fedkd/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fedkd/errors.hpp"

namespace fedkd {

namespace {

void check_rows(const Tensor& t, const char* what) {
  if (t.rank() != 2) {
    throw DomainError(std::string(what) + " must be a (rows, classes) matrix, got " +
                      shape_to_string(t.shape()));
  }
  for (std::size_t r = 0; r < t.dim(0); ++r) {
    double sum = 0.0;
    for (double v : t.row(r)) {
      if (!std::isfinite(v) || v < 0.0) {
        throw DomainError(std::string(what) + " row " + std::to_string(r) +
                          " has an invalid entry");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
      throw DomainError(std::string(what) + " row " + std::to_string(r) +
                        " sums to " + std::to_string(sum));
    }
  }
}

double kl_row(std::span<const double> p, std::span<const double> q) {
  double acc = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] > 0.0) acc += p[k] * std::log(p[k] / std::max(q[k], kProbabilityFloor));
  }
  return acc;
}

}  // namespace

std::vector<double> softmax_with_temperature(std::span<const double> logits,
                                             double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw DomainError("softmax temperature must be positive and finite");
  }
  if (logits.empty()) throw DomainError("softmax of an empty logit vector");
  for (double z : logits) {
    if (!std::isfinite(z)) throw DomainError("softmax of non-finite logits");
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp((logits[i] - top) / temperature);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

Tensor softmax_rows(const Tensor& logits, double temperature, std::size_t classes) {
  if (logits.rank() != 2) {
    throw ShapeError("softmax_rows expects (rows, logits), got " +
                     shape_to_string(logits.shape()));
  }
  const std::size_t width = logits.dim(1);
  const std::size_t k = classes == 0 ? width : classes;
  if (k > width) {
    throw ShapeError("requested " + std::to_string(k) + " classes from " +
                     std::to_string(width) + " logits");
  }
  Tensor out({logits.dim(0), k});
  for (std::size_t r = 0; r < logits.dim(0); ++r) {
    const auto q = softmax_with_temperature(logits.row(r).first(k), temperature);
    std::copy(q.begin(), q.end(), out.row(r).begin());
  }
  return out;
}

double cross_entropy(const Tensor& probs, std::span<const std::size_t> labels) {
  check_rows(probs, "probabilities");
  if (labels.size() != probs.dim(0)) {
    throw DomainError("cross_entropy: " + std::to_string(labels.size()) +
                      " labels for " + std::to_string(probs.dim(0)) + " rows");
  }
  double acc = 0.0;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (labels[r] >= probs.dim(1)) {
      throw DomainError("cross_entropy: label " + std::to_string(labels[r]) +
                        " out of range");
    }
    acc -= std::log(std::max(probs.row(r)[labels[r]], kProbabilityFloor));
  }
  return acc / static_cast<double>(labels.size());
}

double kl_divergence(const Tensor& p, const Tensor& q) {
  if (p.shape() != q.shape()) {
    throw DomainError("kl_divergence: shape mismatch " + shape_to_string(p.shape()) +
                      " vs " + shape_to_string(q.shape()));
  }
  check_rows(p, "p");
  check_rows(q, "q");
  double acc = 0.0;
  for (std::size_t r = 0; r < p.dim(0); ++r) acc += kl_row(p.row(r), q.row(r));
  return acc / static_cast<double>(p.dim(0));
}

void validate_loss_spec(const LossSpec& spec) {
  if (!(spec.alpha >= 0.0 && spec.alpha <= 1.0)) {
    throw DomainError("loss alpha must be in [0,1]");
  }
  if (!(spec.temperature > 0.0) || !std::isfinite(spec.temperature)) {
    throw DomainError("loss temperature must be positive");
  }
}

LossValue evaluate_loss(const Tensor& logits, const Targets& targets,
                        const LossSpec& spec, Tensor* grad) {
  validate_loss_spec(spec);
  if (logits.rank() != 2) {
    throw ShapeError("loss expects (batch, logits), got " +
                     shape_to_string(logits.shape()));
  }
  const std::size_t n = logits.dim(0);
  const std::size_t k = targets.num_classes;
  if (k == 0 || k > logits.dim(1)) {
    throw ShapeError("loss over " + std::to_string(k) + " classes from " +
                     std::to_string(logits.dim(1)) + " logits");
  }
  const bool use_ce = spec.kind != LossKind::kKlDivergence;
  const bool use_kl = spec.kind != LossKind::kCrossEntropy;
  const double w_ce = spec.kind == LossKind::kCombined ? spec.alpha : 1.0;
  const double w_kl = spec.kind == LossKind::kCombined ? 1.0 - spec.alpha : 1.0;
  const double kl_scale = spec.scale_distill_by_t2 ? spec.temperature * spec.temperature : 1.0;

  if (use_ce && targets.labels.size() != n) {
    throw DomainError("loss needs one label per row");
  }
  Tensor soft_target;
  if (use_kl) {
    if (targets.soft.empty()) throw DomainError("distillation loss needs soft targets");
    if (targets.soft.shape() != Shape{n, k}) {
      throw ShapeError("soft targets " + shape_to_string(targets.soft.shape()) +
                       " do not match (" + std::to_string(n) + "," +
                       std::to_string(k) + ")");
    }
    check_rows(targets.soft, "soft targets");
    soft_target = spec.target == DistillTarget::kDoubleSoftmax
                      ? softmax_rows(targets.soft, spec.temperature)
                      : targets.soft;
  }

  if (grad != nullptr) *grad = Tensor(logits.shape());
  const double inv_n = 1.0 / static_cast<double>(n);
  double ce_sum = 0.0;
  double kl_sum = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const auto z = logits.row(r).first(k);
    if (use_ce) {
      const std::size_t label = targets.labels[r];
      if (label >= k) {
        throw DomainError("label " + std::to_string(label) + " out of range for " +
                          std::to_string(k) + " classes");
      }
      const auto p = softmax_with_temperature(z, 1.0);
      ce_sum -= std::log(std::max(p[label], kProbabilityFloor));
      if (grad != nullptr) {
        auto g = grad->row(r);
        for (std::size_t c = 0; c < k; ++c) {
          g[c] += w_ce * (p[c] - (c == label ? 1.0 : 0.0)) * inv_n;
        }
      }
    }
    if (use_kl) {
      const auto q = softmax_with_temperature(z, spec.temperature);
      const auto t = soft_target.row(r);
      kl_sum += kl_row(t, q);
      if (grad != nullptr) {
        auto g = grad->row(r);
        const double scale = w_kl * kl_scale * inv_n / spec.temperature;
        for (std::size_t c = 0; c < k; ++c) g[c] += scale * (q[c] - t[c]);
      }
    }
  }
  LossValue out;
  out.student = use_ce ? ce_sum * inv_n : 0.0;
  out.distill = use_kl ? kl_scale * kl_sum * inv_n : 0.0;
  switch (spec.kind) {
    case LossKind::kCrossEntropy: out.total = out.student; break;
    case LossKind::kKlDivergence: out.total = out.distill; break;
    case LossKind::kCombined:
      out.total = spec.alpha * out.student + (1.0 - spec.alpha) * out.distill;
      break;
  }
  return out;
}

}  // namespace fedkd
