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

#ifndef FEDKD_LOSS_HPP_
#define FEDKD_LOSS_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "fedkd/tensor.hpp"

namespace fedkd {

// Probabilities are clamped here before any log.
inline constexpr double kProbabilityFloor = 1e-12;
// Allowed deviation of a probability row sum from 1.
inline constexpr double kRowSumTolerance = 1e-9;

/// Tempered softmax q_i = exp(z_i/T) / sum_j exp(z_j/T), evaluated with the
/// maximum logit subtracted. Throws DomainError on T <= 0 or non-finite
/// logits.
std::vector<double> softmax_with_temperature(std::span<const double> logits,
                                             double temperature);

// Row-wise tempered softmax over the first `classes` columns of an (N, L)
// logit matrix; classes == 0 means all columns.
Tensor softmax_rows(const Tensor& logits, double temperature,
                    std::size_t classes = 0);

// Mean of -log p[label] over rows, p clamped at kProbabilityFloor.
double cross_entropy(const Tensor& probs, std::span<const std::size_t> labels);

// Mean over rows of sum_k p_k ln(p_k / q_k), with 0 ln 0 = 0.
double kl_divergence(const Tensor& p, const Tensor& q);

enum class LossKind { kCrossEntropy, kKlDivergence, kCombined };

// How the aggregated soft labels enter the KL term. kDirect uses them as the
// target distribution; kDoubleSoftmax re-applies the tempered softmax to
// them first.
enum class DistillTarget { kDirect, kDoubleSoftmax };

struct LossSpec {
  LossKind kind = LossKind::kCrossEntropy;
  double alpha = 0.1;        // weight of the hard-label term (combined only)
  double temperature = 1.0;  // applies to the KL term; CE is always at T = 1
  DistillTarget target = DistillTarget::kDirect;
  bool scale_distill_by_t2 = false;
};

void validate_loss_spec(const LossSpec& spec);

// Training targets for a batch. `soft` is either empty or (N, num_classes).
// Logit columns at or beyond num_classes are ignored by every loss.
struct Targets {
  std::vector<std::size_t> labels;
  Tensor soft;
  std::size_t num_classes = 0;
};

struct LossValue {
  double total = 0.0;
  double student = 0.0;  // hard-label cross entropy
  double distill = 0.0;  // KL term, T^2-scaled when configured
};

/// Evaluates `spec` on an (N, L) logit matrix. When `grad` is non-null it
/// receives dTotal/dlogits with the same shape as `logits`.
LossValue evaluate_loss(const Tensor& logits, const Targets& targets,
                        const LossSpec& spec, Tensor* grad = nullptr);

}  // namespace fedkd

#endif  // FEDKD_LOSS_HPP_
