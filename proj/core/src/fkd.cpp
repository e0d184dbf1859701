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

#include "fedkd/fkd.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "fedkd/errors.hpp"
#include "fedkd/seed.hpp"
#include "fedkd/spec_io.hpp"
#include "parallel.hpp"

namespace fedkd {

namespace {

constexpr std::size_t kEvalChunk = 64;

std::vector<std::size_t> shuffled_positions(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

// Eval-mode logits for the whole view, one row per sample.
Tensor view_logits(const ModelState& model, const DatasetView& view) {
  std::vector<double> rows;
  std::size_t width = 0;
  std::vector<std::size_t> positions;
  for (std::size_t start = 0; start < view.size(); start += kEvalChunk) {
    const std::size_t end = std::min(view.size(), start + kEvalChunk);
    positions.resize(end - start);
    std::iota(positions.begin(), positions.end(), start);
    Tensor logits = forward(model, view.batch(positions), Mode::kEval);
    width = logits.dim(1);
    rows.insert(rows.end(), logits.data().begin(), logits.data().end());
  }
  return Tensor({view.size(), width}, std::move(rows));
}

Tensor gather_rows(const Tensor& m, std::span<const std::size_t> positions) {
  const std::size_t cols = m.dim(1);
  Tensor out({positions.size(), cols});
  for (std::size_t i = 0; i < positions.size(); ++i) {
    auto src = m.row(positions[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

void check_input_shape(const ModelSpec& spec, const DatasetView& view, const std::string& who) {
  if (!view.empty() && spec.input_shape != view.image_shape()) {
    throw ShapeError(who + ": model input " + shape_to_string(spec.input_shape) +
                     " does not match image shape " + shape_to_string(view.image_shape()));
  }
}

nlohmann::json optimizer_json(const OptimizerConfig& o) {
  return {{"learning_rate", o.learning_rate}, {"momentum", o.momentum}};
}

}  // namespace

std::vector<double> train_teacher(ModelState& teacher, const DatasetView& data,
                                  const LocalTraining& options) {
  std::vector<double> epoch_losses;
  if (options.epochs == 0) return epoch_losses;
  if (data.empty()) throw DomainError("local training needs a nonempty dataset");
  if (options.batch_size == 0) throw ConfigError("batch_size must be positive");
  check_input_shape(teacher.spec(), data, "local training");

  Sgd optimizer(options.optimizer);
  LossSpec loss;
  loss.kind = LossKind::kCrossEntropy;
  Targets targets;
  targets.num_classes = data.num_classes();
  teacher.set_mode(Mode::kTrain);
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    const auto order = shuffled_positions(data.size(), derive_seed(options.seed, {epoch}));
    double sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      std::span<const std::size_t> positions(order.data() + start, end - start);
      targets.labels = data.batch_labels(positions);
      const LossValue v = train_step(teacher, data.batch(positions), targets, loss, optimizer);
      sum += v.total * static_cast<double>(positions.size());
    }
    epoch_losses.push_back(sum / static_cast<double>(order.size()));
  }
  return epoch_losses;
}

SoftLabelBatch generate_soft_labels(const ModelState& teacher, const DatasetView& public_set,
                                    double temperature, std::size_t classes,
                                    std::string source) {
  if (!(temperature > 0.0)) throw DomainError("temperature must be positive");
  if (public_set.empty()) throw DomainError("public set is empty");
  check_input_shape(teacher.spec(), public_set, source);
  const Tensor logits = view_logits(teacher, public_set);
  return {softmax_rows(logits, temperature, classes), temperature, std::move(source)};
}

SoftLabelBatch aggregate_soft_labels(std::span<const SoftLabelBatch> batches) {
  if (batches.empty()) throw DomainError("no soft-label batches to aggregate");
  const SoftLabelBatch& first = batches.front();
  for (const SoftLabelBatch& b : batches) {
    if (b.probabilities.shape() != first.probabilities.shape()) {
      throw ShapeError("soft labels from " + b.source + " have shape " +
                       shape_to_string(b.probabilities.shape()) + ", expected " +
                       shape_to_string(first.probabilities.shape()));
    }
    if (b.temperature != first.temperature) {
      throw ConfigError("soft labels mix temperatures " + std::to_string(first.temperature) +
                        " and " + std::to_string(b.temperature));
    }
  }
  Tensor sum(first.probabilities.shape());
  for (const SoftLabelBatch& b : batches) {
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += b.probabilities[i];
  }
  const double n = static_cast<double>(batches.size());
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] /= n;
  return {std::move(sum), first.temperature, "aggregate"};
}

LossSpec distill_loss_spec(double alpha, double temperature, DistillTarget target,
                           bool scale_distill_by_t2) {
  LossSpec spec;
  spec.kind = LossKind::kCombined;
  spec.alpha = alpha;
  spec.temperature = temperature;
  spec.target = target;
  spec.scale_distill_by_t2 = scale_distill_by_t2;
  validate_loss_spec(spec);
  return spec;
}

LossValue student_losses(const ModelState& student, const DatasetView& public_set,
                         const SoftLabelBatch& p_agg, const LossSpec& loss) {
  if (p_agg.probabilities.rank() != 2 || p_agg.probabilities.dim(0) != public_set.size()) {
    throw ShapeError("aggregated soft labels have " +
                     shape_to_string(p_agg.probabilities.shape()) + " rows for a public set of " +
                     std::to_string(public_set.size()));
  }
  check_input_shape(student.spec(), public_set, "student");
  Targets targets{public_set.labels(), p_agg.probabilities, p_agg.probabilities.dim(1)};
  return evaluate_loss(view_logits(student, public_set), targets, loss);
}

std::vector<LossValue> train_student(ModelState& student, const DatasetView& public_set,
                                     const SoftLabelBatch& p_agg,
                                     const StudentTraining& options) {
  if (p_agg.probabilities.rank() != 2 || p_agg.probabilities.dim(0) != public_set.size()) {
    throw ShapeError("aggregated soft labels do not cover the public set");
  }
  if (options.batch_size == 0) throw ConfigError("batch_size must be positive");
  check_input_shape(student.spec(), public_set, "student");
  std::vector<LossValue> trace;
  if (options.epochs == 0) return trace;

  Sgd optimizer(options.optimizer);
  Targets targets;
  targets.num_classes = p_agg.probabilities.dim(1);
  student.set_mode(Mode::kTrain);
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    const auto order = shuffled_positions(public_set.size(), derive_seed(options.seed, {epoch}));
    LossValue sum;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      std::span<const std::size_t> positions(order.data() + start, end - start);
      targets.labels = public_set.batch_labels(positions);
      targets.soft = gather_rows(p_agg.probabilities, positions);
      const LossValue v =
          train_step(student, public_set.batch(positions), targets, options.loss, optimizer);
      const double w = static_cast<double>(positions.size());
      sum.total += v.total * w;
      sum.student += v.student * w;
      sum.distill += v.distill * w;
    }
    const double n = static_cast<double>(order.size());
    // Rebuild the total from the averaged parts so the trace keeps the
    // weighted-sum identity exactly.
    LossValue mean{0.0, sum.student / n, sum.distill / n};
    mean.total = options.loss.kind == LossKind::kCombined
                     ? options.loss.alpha * mean.student + (1.0 - options.loss.alpha) * mean.distill
                     : sum.total / n;
    trace.push_back(mean);
  }
  return trace;
}

Evaluation evaluate(const ModelState& model, const DatasetView& test_set, std::size_t classes) {
  if (test_set.empty()) throw ShapeError("cannot evaluate on an empty test set");
  check_input_shape(model.spec(), test_set, "evaluate");
  const Tensor logits = view_logits(model, test_set);
  if (classes == 0 || logits.dim(1) < classes) {
    throw ShapeError("model emits " + std::to_string(logits.dim(1)) + " logits for " +
                     std::to_string(classes) + " classes");
  }
  const std::vector<std::size_t> labels = test_set.labels();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto row = logits.row(i);
    std::size_t best = 0;
    for (std::size_t k = 1; k < classes; ++k) {
      if (row[k] > row[best]) best = k;
    }
    if (best == labels[i]) ++correct;
  }
  const Tensor probs = softmax_rows(logits, 1.0, classes);
  return {static_cast<double>(correct) / static_cast<double>(labels.size()),
          cross_entropy(probs, labels)};
}

void validate_distill_config(const DistillConfig& cfg) {
  if (cfg.num_teachers == 0) throw ConfigError("num_teachers must be at least 1");
  if (cfg.rounds == 0) throw ConfigError("rounds must be at least 1");
  if (cfg.local_epochs == 0) throw ConfigError("local_epochs must be at least 1");
  if (cfg.student_epochs == 0) throw ConfigError("student_epochs must be at least 1");
  if (cfg.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (cfg.threads == 0) throw ConfigError("threads must be at least 1");
  if (!(cfg.temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) throw ConfigError("alpha must lie in [0,1]");
  if (!cfg.teacher_specs.empty() && cfg.teacher_specs.size() != cfg.num_teachers) {
    throw ConfigError("teacher_specs must list one spec per teacher");
  }
  validate_optimizer(cfg.teacher_optimizer);
  validate_optimizer(cfg.student_optimizer);
  validate_encoding(cfg.encoding);
  if (cfg.teacher_specs.empty()) validate_model_spec(cfg.teacher_spec);
  for (const ModelSpec& s : cfg.teacher_specs) validate_model_spec(s);
  validate_model_spec(cfg.student_spec);
}

ExperimentReport run_fkd_experiment(const DistillConfig& cfg, const ExperimentData& data,
                                    const Partition& partition) {
  validate_distill_config(cfg);
  if (partition.assignments.size() != cfg.num_teachers) {
    throw ConfigError("partition has " + std::to_string(partition.assignments.size()) +
                      " clients for " + std::to_string(cfg.num_teachers) + " teachers");
  }
  if (data.public_set.empty()) throw DomainError("public set is empty");
  const std::size_t classes = data.public_set.num_classes();
  const LossSpec loss =
      distill_loss_spec(cfg.alpha, cfg.temperature, cfg.distill_target, cfg.scale_distill_by_t2);

  auto spec_of = [&](std::size_t t) -> const ModelSpec& {
    return cfg.teacher_specs.empty() ? cfg.teacher_spec : cfg.teacher_specs[t];
  };
  auto fresh_teacher = [&](std::size_t t) {
    return ModelState::initialize(spec_of(t), derive_seed(cfg.seed, {1, t}));
  };

  std::vector<DatasetView> shards;
  std::vector<ModelState> teachers;
  for (std::size_t t = 0; t < cfg.num_teachers; ++t) {
    shards.push_back(data.private_pool.subset(partition.assignments[t]));
    teachers.push_back(fresh_teacher(t));
  }
  ModelState student = ModelState::initialize(cfg.student_spec, derive_seed(cfg.seed, {2}));

  ExperimentReport report;
  report.protocol = Protocol::kFkd;
  report.participants = cfg.num_teachers;
  report.num_classes = classes;
  report.public_size = data.public_set.size();
  report.test_size = data.test_set.size();
  report.loss_alpha = cfg.alpha;
  nlohmann::json teacher_specs = nlohmann::json::array();
  for (std::size_t t = 0; t < cfg.num_teachers; ++t) {
    teacher_specs.push_back(format_model_spec(spec_of(t)));
  }
  report.settings = {{"num_teachers", cfg.num_teachers},
                     {"rounds", cfg.rounds},
                     {"local_epochs", cfg.local_epochs},
                     {"student_epochs", cfg.student_epochs},
                     {"temperature", cfg.temperature},
                     {"alpha", cfg.alpha},
                     {"batch_size", cfg.batch_size},
                     {"seed", cfg.seed},
                     {"distill_target", cfg.distill_target == DistillTarget::kDirect
                                            ? "direct"
                                            : "double_softmax"},
                     {"scale_distill_by_t2", cfg.scale_distill_by_t2},
                     {"reset_teachers", cfg.reset_teachers},
                     {"teacher_optimizer", optimizer_json(cfg.teacher_optimizer)},
                     {"student_optimizer", optimizer_json(cfg.student_optimizer)},
                     {"teacher_specs", std::move(teacher_specs)},
                     {"student_spec", format_model_spec(cfg.student_spec)},
                     {"private_size", data.private_pool.size()}};

  std::vector<std::vector<double>> teacher_losses(cfg.num_teachers);
  std::vector<SoftLabelBatch> soft(cfg.num_teachers);
  for (std::size_t round = 1; round <= cfg.rounds; ++round) {
    detail::run_indexed(cfg.num_teachers, cfg.threads, "teacher", [&](std::size_t t) {
      if (cfg.reset_teachers && round > 1) teachers[t] = fresh_teacher(t);
      LocalTraining local{cfg.local_epochs, cfg.batch_size, cfg.teacher_optimizer,
                          derive_seed(cfg.seed, {3, round, t})};
      teacher_losses[t] = train_teacher(teachers[t], shards[t], local);
      soft[t] = generate_soft_labels(teachers[t], data.public_set, cfg.temperature, classes,
                                     "teacher_" + std::to_string(t));
    });

    // Barrier: everything below is serial.
    record_fkd_round(report.ledger, round, cfg.num_teachers, data.public_set.size(), classes,
                     cfg.encoding);
    const SoftLabelBatch p_agg = aggregate_soft_labels(soft);

    StudentTraining st{cfg.student_epochs, cfg.batch_size, cfg.student_optimizer, loss,
                       derive_seed(cfg.seed, {4, round})};
    RoundMetrics m;
    m.round = round;
    try {
      m.student_epochs = train_student(student, data.public_set, p_agg, st);
    } catch (const NumericError& e) {
      throw NumericError("student, round " + std::to_string(round) + ": " + e.what());
    }
    for (const auto& losses : teacher_losses) m.local_losses.push_back(losses.back());
    m.student = student_losses(student, data.public_set, p_agg, loss);
    const Evaluation eval = evaluate(student, data.test_set, classes);
    m.test_accuracy = eval.accuracy;
    m.test_loss = eval.loss;
    const RoundTotals totals = round_totals(report.ledger, Protocol::kFkd, round);
    m.upload_bytes = totals.upload;
    m.download_bytes = totals.download;
    report.rounds.push_back(std::move(m));
  }
  report.final_model = std::move(student);
  return report;
}

}  // namespace fedkd
