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

#include <random>

#include <benchmark/benchmark.h>

#include "fedkd/fkd.hpp"
#include "fedkd/partition.hpp"
#include "fedkd/preprocess.hpp"
#include "fedkd/spec_io.hpp"
#include "fedkd/train.hpp"

namespace fedkd {
namespace {

Tensor random_batch(const Shape& sample, std::size_t n, std::uint64_t seed) {
  Shape shape = {n};
  shape.insert(shape.end(), sample.begin(), sample.end());
  Tensor t(shape);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  for (double& v : t.data()) v = d(rng);
  return t;
}

void BM_ForwardEval(benchmark::State& state, const char* ref) {
  const ModelSpec spec = resolve_model_spec(ref);
  const ModelState model = ModelState::initialize(spec, 1);
  const Tensor x = random_batch(spec.input_shape, static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(forward(model, x, Mode::kEval));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK_CAPTURE(BM_ForwardEval, student32, "builtin:student-32")->Arg(32);
BENCHMARK_CAPTURE(BM_ForwardEval, teacher_small, "builtin:teacher-small")->Arg(32);

void BM_TrainStep(benchmark::State& state, const char* ref) {
  const ModelSpec spec = resolve_model_spec(ref);
  ModelState model = ModelState::initialize(spec, 1);
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const Tensor x = random_batch(spec.input_shape, n, 3);
  Targets t;
  t.num_classes = 3;
  for (std::size_t i = 0; i < n; ++i) t.labels.push_back(i % 3);
  Sgd sgd({0.01, 0.9});
  for (auto _ : state) benchmark::DoNotOptimize(train_step(model, x, t, LossSpec{}, sgd));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK_CAPTURE(BM_TrainStep, student32, "builtin:student-32")->Arg(32);
BENCHMARK_CAPTURE(BM_TrainStep, teacher_small, "builtin:teacher-small")->Arg(32);

void BM_Clahe(benchmark::State& state) {
  const std::size_t side = static_cast<std::size_t>(state.range(0));
  GrayImage img{side, side, std::vector<double>(side * side)};
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  for (double& v : img.pixels) v = d(rng);
  const ClaheConfig cfg{2.0, 8, 8, 256};
  for (auto _ : state) benchmark::DoNotOptimize(clahe(img, cfg));
}
BENCHMARK(BM_Clahe)->Arg(224)->Arg(512);

void BM_DirichletPartition(benchmark::State& state) {
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < 3000; ++i) labels.push_back(i % 3);
  const PartitionConfig cfg{static_cast<std::size_t>(state.range(0)), 0.5, 7, 1};
  for (auto _ : state) benchmark::DoNotOptimize(dirichlet_partition(labels, cfg));
}
BENCHMARK(BM_DirichletPartition)->Arg(2)->Arg(20);

void BM_SoftLabels(benchmark::State& state) {
  std::vector<SoftLabelBatch> batches;
  std::mt19937_64 rng(5);
  for (int t = 0; t < state.range(0); ++t) {
    Tensor p({1532, 3});
    for (std::size_t r = 0; r < 1532; ++r) {
      const double a = static_cast<double>(rng() % 100 + 1);
      const double b = static_cast<double>(rng() % 100 + 1);
      const double c = static_cast<double>(rng() % 100 + 1);
      p.row(r)[0] = a / (a + b + c);
      p.row(r)[1] = b / (a + b + c);
      p.row(r)[2] = c / (a + b + c);
    }
    batches.push_back({p, 10.0, "t"});
  }
  for (auto _ : state) benchmark::DoNotOptimize(aggregate_soft_labels(batches));
}
BENCHMARK(BM_SoftLabels)->Arg(2)->Arg(5);

}  // namespace
}  // namespace fedkd
BENCHMARK_MAIN();
