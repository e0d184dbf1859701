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

#ifndef FEDKD_SRC_LAYER_OPS_HPP_
#define FEDKD_SRC_LAYER_OPS_HPP_

#include <cstddef>
#include <vector>

#include "fedkd/model_spec.hpp"
#include "fedkd/tensor.hpp"

// Batched kernels for the six layer kinds. Activations carry a leading batch
// axis: (N, H, W, C) for spatial data, (N, F) otherwise.
namespace fedkd::ops {

Tensor conv2d_forward(const Tensor& in, const Tensor& kernel, const Tensor& bias,
                      const Conv2D& c, const Shape& out_sample);
// Accumulates into dkernel/dbias; returns the input gradient.
Tensor conv2d_backward(const Tensor& in, const Tensor& kernel, const Tensor& dout,
                       const Conv2D& c, Tensor& dkernel, Tensor& dbias);

struct BatchNormCache {
  std::vector<double> mean;
  std::vector<double> inv_std;
  Tensor normalized;
};

Tensor batchnorm_forward(const Tensor& in, const Tensor& gamma, const Tensor& beta,
                         const std::vector<double>& mean,
                         const std::vector<double>& variance, double epsilon,
                         BatchNormCache* cache);
// Per-channel biased mean and variance over every axis but the last.
void batch_moments(const Tensor& in, std::vector<double>& mean,
                   std::vector<double>& variance);
// `batch_stats` selects the train-mode gradient, where mean and variance
// depend on the input.
Tensor batchnorm_backward(const Tensor& dout, const Tensor& gamma,
                          const BatchNormCache& cache, bool batch_stats,
                          Tensor& dgamma, Tensor& dbeta);

Tensor leaky_relu_forward(const Tensor& in, double slope);
Tensor leaky_relu_backward(const Tensor& in, const Tensor& dout, double slope);

Tensor maxpool_forward(const Tensor& in, const MaxPool2D& p, const Shape& out_sample,
                       std::vector<std::size_t>* argmax);
Tensor maxpool_backward(const Shape& in_shape, const Tensor& dout,
                        const std::vector<std::size_t>& argmax);

Tensor global_avg_pool_forward(const Tensor& in);
Tensor global_avg_pool_backward(const Shape& in_shape, const Tensor& dout);

Tensor dense_forward(const Tensor& in, const Tensor& kernel, const Tensor& bias);
Tensor dense_backward(const Tensor& in, const Tensor& kernel, const Tensor& dout,
                      Tensor& dkernel, Tensor& dbias);

}  // namespace fedkd::ops

#endif  // FEDKD_SRC_LAYER_OPS_HPP_
