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

#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "fedkd/errors.hpp"
#include "fedkd/seed.hpp"
#include "test_support.hpp"

namespace fedkd {
namespace {

ModelSpec tiny_spec(std::size_t classes = 3) {
  ModelSpec s;
  s.input_shape = {8, 8, 1};
  s.layers = {Conv2D{6, 3, 2, Padding::kSame}, BatchNorm{}, LeakyReLU{0.01},
              MaxPool2D{2, 2, true}, GlobalAvgPool{}, Dense{classes}};
  return s;
}

ModelSpec flat_spec(std::size_t classes = 3) {
  ModelSpec s;
  s.input_shape = {8, 8, 1};
  s.layers = {Dense{classes}};
  return s;
}

std::shared_ptr<const LabeledDataset> toy(std::size_t classes, std::size_t per_class,
                                          double noise, std::uint64_t seed) {
  SyntheticOptions o;
  o.classes = classes;
  o.per_class = per_class;
  o.height = 8;
  o.width = 8;
  o.noise = noise;
  o.seed = seed;
  return std::make_shared<const LabeledDataset>(generate_synthetic(o));
}

ExperimentData toy_data(std::uint64_t seed = 1) {
  return split_dataset(toy(3, 40, 0.1, seed), SplitSpec{0.8, 0.5, 0.5, false, seed});
}

DistillConfig toy_config() {
  DistillConfig cfg;
  cfg.num_teachers = 2;
  cfg.rounds = 2;
  cfg.local_epochs = 2;
  cfg.student_epochs = 2;
  cfg.teacher_spec = tiny_spec();
  cfg.student_spec = tiny_spec();
  cfg.teacher_optimizer = {0.05, 0.9};
  cfg.student_optimizer = {0.05, 0.9};
  cfg.batch_size = 8;
  cfg.seed = 3;
  return cfg;
}

Partition toy_partition(const ExperimentData& d, std::size_t clients) {
  return dirichlet_partition(d.private_pool.labels(), PartitionConfig{clients, 10000.0, 4, 1});
}

SoftLabelBatch batch_of(Tensor p, double T = 2.0, std::string source = "t") {
  return {std::move(p), T, std::move(source)};
}

TEST(SoftLabelTest, ZeroModelGivesUniformRows) {
  const ExperimentData d = toy_data();
  const ModelState zero = ModelState::zeros(flat_spec());
  const SoftLabelBatch s = generate_soft_labels(zero, d.public_set, 10.0, 3);
  EXPECT_EQ(s.probabilities.dim(0), d.public_set.size());
  for (double v : s.probabilities.data()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(SoftLabelTest, TemperatureBehaviour) {
  const ExperimentData d = toy_data();
  const ModelState m = ModelState::initialize(tiny_spec(), 2);
  const SoftLabelBatch hot = generate_soft_labels(m, d.public_set, 1e6, 3);
  for (double v : hot.probabilities.data()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-6);
  const SoftLabelBatch one = generate_soft_labels(m, d.public_set, 1.0, 3);
  std::vector<std::size_t> all(d.public_set.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const Tensor plain = softmax_rows(forward(m, d.public_set.batch(all), Mode::kEval), 1.0, 3);
  for (std::size_t i = 0; i < plain.size(); ++i) {
    EXPECT_NEAR(one.probabilities[i], plain[i], 1e-14);
  }
  for (std::size_t r = 0; r < one.probabilities.dim(0); ++r) {
    double sum = 0.0;
    for (double v : one.probabilities.row(r)) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
  EXPECT_THROW(generate_soft_labels(m, d.public_set, 0.0, 3), DomainError);
}

TEST(AggregateTest, MeanExamples) {
  const Tensor p = testing::random_distribution(4, 3, 1);
  const SoftLabelBatch single[] = {batch_of(p)};
  EXPECT_EQ(aggregate_soft_labels(single).probabilities, p);
  EXPECT_EQ(aggregate_soft_labels(single).source, "aggregate");
  const SoftLabelBatch twins[] = {batch_of(p), batch_of(p)};
  EXPECT_EQ(aggregate_soft_labels(twins).probabilities, p);
  const SoftLabelBatch corners[] = {batch_of(Tensor({1, 2}, std::vector<double>{1, 0})),
                                    batch_of(Tensor({1, 2}, std::vector<double>{0, 1}))};
  EXPECT_EQ(aggregate_soft_labels(corners).probabilities,
            Tensor({1, 2}, std::vector<double>{0.5, 0.5}));
}

TEST(AggregateTest, RowStochasticAndPermutationInvariant) {
  std::vector<SoftLabelBatch> in;
  for (std::uint64_t s = 0; s < 5; ++s) in.push_back(batch_of(testing::random_distribution(6, 4, s)));
  const Tensor forward_order = aggregate_soft_labels(in).probabilities;
  std::reverse(in.begin(), in.end());
  const Tensor reversed = aggregate_soft_labels(in).probabilities;
  for (std::size_t i = 0; i < forward_order.size(); ++i) {
    EXPECT_NEAR(forward_order[i], reversed[i], 1e-15);
  }
  for (std::size_t r = 0; r < 6; ++r) {
    double sum = 0.0;
    for (double v : forward_order.row(r)) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(AggregateTest, Errors) {
  EXPECT_THROW(aggregate_soft_labels({}), DomainError);
  const SoftLabelBatch shapes[] = {batch_of(testing::random_distribution(2, 3, 1)),
                                   batch_of(testing::random_distribution(3, 3, 2))};
  EXPECT_THROW(aggregate_soft_labels(shapes), ShapeError);
  const SoftLabelBatch temps[] = {batch_of(testing::random_distribution(2, 3, 1), 2.0),
                                  batch_of(testing::random_distribution(2, 3, 2), 3.0)};
  EXPECT_THROW(aggregate_soft_labels(temps), ConfigError);
}

TEST(StudentLossTest, FormulaAndEndpoints) {
  const ExperimentData d = toy_data();
  const ModelState student = ModelState::initialize(tiny_spec(), 5);
  const SoftLabelBatch p = batch_of(testing::random_distribution(d.public_set.size(), 3, 6), 10.0);
  const LossValue v = student_losses(student, d.public_set, p, distill_loss_spec(0.1, 10.0));
  EXPECT_NEAR(v.total, 0.1 * v.student + 0.9 * v.distill, 1e-12);
  const LossValue hard = student_losses(student, d.public_set, p, distill_loss_spec(1.0, 10.0));
  EXPECT_EQ(hard.total, hard.student);
  const SoftLabelBatch wrong = batch_of(testing::random_distribution(3, 3, 6), 10.0);
  EXPECT_THROW(student_losses(student, d.public_set, wrong, distill_loss_spec(0.1, 10.0)),
               ShapeError);
}

TEST(TrainTeacherTest, ZeroEpochsIsNoOp) {
  const ExperimentData d = toy_data();
  ModelState m = ModelState::initialize(tiny_spec(), 1);
  const ModelState before = m;
  EXPECT_TRUE(train_teacher(m, d.private_pool, LocalTraining{0, 8, {}, 1}).empty());
  EXPECT_TRUE(m == before);
}

TEST(TrainTeacherTest, IdenticalInputsGiveIdenticalTeachers) {
  const ExperimentData d = toy_data();
  ModelState a = ModelState::initialize(tiny_spec(), 1);
  ModelState b = ModelState::initialize(tiny_spec(), 1);
  const LocalTraining opts{2, 8, {0.05, 0.9}, 7};
  EXPECT_EQ(train_teacher(a, d.private_pool, opts), train_teacher(b, d.private_pool, opts));
  EXPECT_TRUE(a == b);
}

TEST(TrainTeacherTest, LearnsSeparableData) {
  const auto ds = toy(2, 60, 0.05, 9);
  const DatasetView all = DatasetView::all(ds);
  ModelState m = ModelState::initialize(tiny_spec(2), 3);
  const auto losses = train_teacher(m, all, LocalTraining{5, 8, {0.05, 0.9}, 4});
  ASSERT_EQ(losses.size(), 5u);
  EXPECT_LE(losses.back(), losses.front());
  EXPECT_GT(evaluate(m, all, 2).accuracy, 0.95);
}

TEST(TrainTeacherTest, EmptyDataIsRejected) {
  ModelState m = ModelState::initialize(tiny_spec(), 1);
  EXPECT_THROW(train_teacher(m, DatasetView(), LocalTraining{1, 8, {}, 0}), DomainError);
}

TEST(TrainStudentTest, ZeroLearningRateLeavesStudentAndTraceConstant) {
  const ExperimentData d = toy_data();
  ModelState student = ModelState::initialize(flat_spec(), 2);
  const ModelState before = student;
  const SoftLabelBatch p = batch_of(testing::random_distribution(d.public_set.size(), 3, 3), 10.0);
  StudentTraining opts{3, 8, {0.0, 0.0}, distill_loss_spec(0.1, 10.0), 5};
  const auto trace = train_student(student, d.public_set, p, opts);
  EXPECT_TRUE(student == before);
  ASSERT_EQ(trace.size(), 3u);
  for (const LossValue& v : trace) {
    EXPECT_NEAR(v.total, trace[0].total, 1e-12);
    EXPECT_NEAR(v.total, 0.1 * v.student + 0.9 * v.distill, 1e-15);
  }
}

TEST(EvaluateTest, TiesGoToLowestIndex) {
  const ExperimentData d = toy_data();
  const ModelState zero = ModelState::zeros(flat_spec());
  const auto labels = d.test_set.labels();
  const double zeros = static_cast<double>(std::count(labels.begin(), labels.end(), 0u));
  const Evaluation e = evaluate(zero, d.test_set, 3);
  EXPECT_DOUBLE_EQ(e.accuracy, zeros / static_cast<double>(labels.size()));
  EXPECT_NEAR(e.loss, std::log(3.0), 1e-12);
}

TEST(EvaluateTest, PerfectModelAndEmptySet) {
  // One-hot inputs through an identity dense layer.
  auto ds = std::make_shared<LabeledDataset>();
  ds->class_names = {"a", "b", "c"};
  for (std::size_t i = 0; i < 9; ++i) {
    Tensor x({3});
    x[i % 3] = 1.0;
    ds->images.push_back(x);
    ds->labels.push_back(i % 3);
  }
  ModelSpec spec;
  spec.input_shape = {3};
  spec.layers = {Dense{3}};
  ModelState m = ModelState::zeros(spec);
  for (std::size_t k = 0; k < 3; ++k) m.param("dense_1/kernel")[k * 3 + k] = 5.0;
  const std::shared_ptr<const LabeledDataset> base = ds;
  EXPECT_EQ(evaluate(m, DatasetView::all(base), 3).accuracy, 1.0);
  EXPECT_THROW(evaluate(m, DatasetView(base, {}), 3), ShapeError);
}

TEST(RunFkdTest, ReportShapeAndInvariants) {
  const ExperimentData d = toy_data();
  const DistillConfig cfg = toy_config();
  const ExperimentReport r = run_fkd_experiment(cfg, d, toy_partition(d, 2));
  ASSERT_EQ(r.rounds.size(), 2u);
  for (const RoundMetrics& m : r.rounds) {
    ASSERT_TRUE(m.student.has_value());
    EXPECT_LT(std::abs(m.student->total - (cfg.alpha * m.student->student +
                                           (1 - cfg.alpha) * m.student->distill)),
              1e-9);
    EXPECT_EQ(m.local_losses.size(), 2u);
    EXPECT_EQ(m.student_epochs.size(), cfg.student_epochs);
    EXPECT_EQ(m.upload_bytes, 2 * soft_label_payload(d.public_set.size(), 3, cfg.encoding));
    EXPECT_EQ(m.download_bytes, soft_label_payload(d.public_set.size(), 3, cfg.encoding));
    EXPECT_GE(m.test_accuracy, 0.0);
    EXPECT_LE(m.test_accuracy, 1.0);
  }
  EXPECT_EQ(r.ledger.entries().size(), 6u);
  EXPECT_EQ(r.final_model.spec(), cfg.student_spec);
}

TEST(RunFkdTest, DeterministicAndThreadIndependent) {
  const ExperimentData d = toy_data();
  DistillConfig cfg = toy_config();
  cfg.num_teachers = 3;
  const Partition p = toy_partition(d, 3);
  const ExperimentReport a = run_fkd_experiment(cfg, d, p);
  const ExperimentReport b = run_fkd_experiment(cfg, d, p);
  cfg.threads = 3;
  const ExperimentReport c = run_fkd_experiment(cfg, d, p);
  EXPECT_EQ(report_to_json_string(a), report_to_json_string(b));
  EXPECT_EQ(report_to_json_string(a), report_to_json_string(c));
  EXPECT_TRUE(a.final_model == c.final_model);
}

TEST(RunFkdTest, AlphaOneMakesDistillationInert) {
  // With alpha = 1 the student never sees the teachers, so changing how the
  // teachers train must not change any student metric.
  const ExperimentData d = toy_data();
  DistillConfig cfg = toy_config();
  cfg.num_teachers = 1;
  cfg.rounds = 1;
  cfg.alpha = 1.0;
  const Partition p = toy_partition(d, 1);
  const ExperimentReport a = run_fkd_experiment(cfg, d, p);
  cfg.teacher_optimizer = {0.2, 0.0};
  cfg.local_epochs = 1;
  const ExperimentReport b = run_fkd_experiment(cfg, d, p);
  EXPECT_EQ(a.rounds[0].test_accuracy, b.rounds[0].test_accuracy);
  EXPECT_EQ(a.rounds[0].test_loss, b.rounds[0].test_loss);
  EXPECT_EQ(a.rounds[0].student->student, b.rounds[0].student->student);
  EXPECT_TRUE(a.final_model == b.final_model);
  EXPECT_NE(a.rounds[0].local_losses, b.rounds[0].local_losses);

  // And it equals plain supervised training on the public set.
  ModelState plain = ModelState::initialize(cfg.student_spec, derive_seed(cfg.seed, {2}));
  StudentTraining st{cfg.student_epochs, cfg.batch_size, cfg.student_optimizer,
                     distill_loss_spec(1.0, cfg.temperature), derive_seed(cfg.seed, {4, 1})};
  const SoftLabelBatch uniform =
      batch_of(Tensor({d.public_set.size(), 3}, 1.0 / 3.0), cfg.temperature);
  train_student(plain, d.public_set, uniform, st);
  EXPECT_TRUE(plain == a.final_model);
}

TEST(RunFkdTest, TeacherFailuresCarryContext) {
  const ExperimentData d = toy_data();
  DistillConfig cfg = toy_config();
  ModelSpec wrong = tiny_spec();
  wrong.input_shape = {8, 8, 3};
  cfg.teacher_spec = wrong;
  try {
    run_fkd_experiment(cfg, d, toy_partition(d, 2));
    FAIL();
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("teacher 0"), std::string::npos) << msg;
    EXPECT_NE(msg.find("teacher 1"), std::string::npos) << msg;
  }
}

TEST(RunFkdTest, ConfigValidation) {
  const ExperimentData d = toy_data();
  DistillConfig cfg = toy_config();
  EXPECT_THROW(run_fkd_experiment(cfg, d, toy_partition(d, 3)), ConfigError);
  cfg.temperature = 0.0;
  EXPECT_THROW(validate_distill_config(cfg), ConfigError);
  cfg = toy_config();
  cfg.alpha = 1.5;
  EXPECT_THROW(validate_distill_config(cfg), ConfigError);
  cfg = toy_config();
  cfg.rounds = 0;
  EXPECT_THROW(validate_distill_config(cfg), ConfigError);
}

TEST(RunFkdTest, ResetTeachersOnlyAffectsLaterRounds) {
  const ExperimentData d = toy_data();
  DistillConfig cfg = toy_config();
  const ExperimentReport kept = run_fkd_experiment(cfg, d, toy_partition(d, 2));
  cfg.reset_teachers = true;
  const ExperimentReport reset = run_fkd_experiment(cfg, d, toy_partition(d, 2));
  EXPECT_EQ(kept.rounds[0].local_losses, reset.rounds[0].local_losses);
  EXPECT_NE(kept.rounds[1].local_losses, reset.rounds[1].local_losses);
}

TEST(RunFkdTest, StudentTracksWellTrainedTeacher) {
  const auto ds = toy(3, 80, 0.05, 21);
  const ExperimentData d = split_dataset(ds, SplitSpec{0.8, 0.5, 0.5, false, 22});
  DistillConfig cfg = toy_config();
  cfg.num_teachers = 1;
  cfg.rounds = 10;
  cfg.local_epochs = 2;
  cfg.student_epochs = 3;
  const ExperimentReport r = run_fkd_experiment(cfg, d, toy_partition(d, 1));

  // The run's teacher: same init and shuffles, trained outside the protocol.
  ModelState teacher = ModelState::initialize(cfg.teacher_spec, derive_seed(cfg.seed, {1, 0}));
  for (std::size_t round = 1; round <= cfg.rounds; ++round) {
    train_teacher(teacher, d.private_pool,
                  LocalTraining{cfg.local_epochs, cfg.batch_size, cfg.teacher_optimizer,
                                derive_seed(cfg.seed, {3, round, 0})});
  }
  const double teacher_acc = evaluate(teacher, d.test_set, 3).accuracy;
  EXPECT_GT(teacher_acc, 0.9);
  EXPECT_GE(r.rounds.back().test_accuracy, teacher_acc - 0.05)
      << "teacher " << teacher_acc << " student " << r.rounds.back().test_accuracy;
}

}  // namespace
}  // namespace fedkd
