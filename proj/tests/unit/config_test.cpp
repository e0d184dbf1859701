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

#include "fedkd/config.hpp"

#include <fstream>

#include <gtest/gtest.h>

#include "fedkd/errors.hpp"
#include "fedkd/spec_io.hpp"
#include "test_support.hpp"

namespace fedkd {
namespace {

std::string error_of(std::string_view text, bool json = false) {
  try {
    parse_config(text, json);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p) << text;
}

TEST(ConfigTest, EmptyTextGivesDefaults) {
  const ExperimentConfig c = parse_config("");
  EXPECT_EQ(c.clients, 2u);
  EXPECT_EQ(c.dirichlet_alpha, 10000.0);
  EXPECT_EQ(c.distill.rounds, 10u);
  EXPECT_EQ(c.distill.temperature, 10.0);
  EXPECT_EQ(c.distill.alpha, 0.1);
  EXPECT_EQ(c.distill.local_epochs, 5u);
  EXPECT_EQ(c.split.private_fraction, 0.8);
  EXPECT_EQ(c.split.public_fraction, 0.5);
  EXPECT_EQ(c.split.test_fraction, 0.5);
  EXPECT_EQ(c.encoding.bytes_per_value, 4u);
}

TEST(ConfigTest, ReadsSectionsAndComments) {
  const ExperimentConfig c = parse_config(
      "# comment\n[experiment]\nseed = 9 ; trailing\n[distill]\nalpha = 0.25\n"
      "temperature=20\n[partition]\nclients = 5\nalpha = 0.5\n[comms]\nunit = MB\n");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.distill.alpha, 0.25);
  EXPECT_EQ(c.distill.temperature, 20.0);
  EXPECT_EQ(c.clients, 5u);
  EXPECT_EQ(c.dirichlet_alpha, 0.5);
  EXPECT_EQ(c.encoding.unit, Unit::kMegabytes);
}

TEST(ConfigTest, ErrorsNameTheKeyPath) {
  EXPECT_EQ(error_of("[distill]\nalpha = 1.5\n").rfind("distill.alpha", 0), 0u);
  EXPECT_EQ(error_of("[distill]\ntemperature = 0\n").rfind("distill.temperature", 0), 0u);
  EXPECT_EQ(error_of("[distill]\ncolour = red\n"), "distill.colour: unknown key");
  EXPECT_EQ(error_of("[experiment]\nseed = 1\nseed = 2\n").rfind("experiment.seed", 0), 0u);
  EXPECT_EQ(error_of("[partition]\nclients = two\n").rfind("partition.clients", 0), 0u);
  EXPECT_EQ(error_of("[fedavg]\nweighting = median\n").rfind("fedavg.weighting", 0), 0u);
  EXPECT_NE(error_of("seed = 1\n").find("line 1"), std::string::npos);
  EXPECT_NE(error_of("[data\n").find("line 1"), std::string::npos);
  EXPECT_EQ(error_of("[data]\nsource = manifest\n").rfind("data.manifest", 0), 0u);
}

TEST(ConfigTest, JsonMatchesIni) {
  const std::string ini =
      "[experiment]\nseed = 4\n[distill]\nalpha = 0.3\nscale_t2 = true\n"
      "[fedavg]\nmodel_spec = builtin:student\n";
  const std::string json =
      R"({"experiment": {"seed": 4}, "distill": {"alpha": 0.3, "scale_t2": true},)"
      R"( "fedavg": {"model_spec": "builtin:student"}})";
  EXPECT_EQ(canonical_config(parse_config(ini)), canonical_config(parse_config(json, true)));
  EXPECT_EQ(error_of(R"({"distill": {"alpha": 2}})", true).rfind("distill.alpha", 0), 0u);
  EXPECT_FALSE(error_of("[1, 2]", true).empty());
  EXPECT_FALSE(error_of("{", true).empty());
}

TEST(ConfigTest, CanonicalFormRoundTrips) {
  const ExperimentConfig c = parse_config(
      "[experiment]\nseed = 123\nthreads = 3\n[data]\nnoise = 0.125\nclahe_clip = 3.5\n"
      "[split]\ndisjoint = true\nprivate = 0.3\npublic = 0.3\ntest = 0.3\n"
      "[distill]\nteacher_lr = 0.001\ntarget = double_softmax\n[comms]\nscope = all\n");
  const std::string text = canonical_config(c);
  EXPECT_EQ(canonical_config(parse_config(text)), text);
  EXPECT_NE(text.find("seed = 123"), std::string::npos);
  EXPECT_NE(text.find("target = double_softmax"), std::string::npos);
}

TEST(ConfigTest, DerivedConfigs) {
  const ExperimentConfig c = parse_config(
      "[experiment]\nseed = 5\nthreads = 2\n[partition]\nclients = 4\nalpha = 0.7\n"
      "[distill]\nstudent_spec = builtin:student\n");
  const DistillConfig d = make_distill_config(c);
  EXPECT_EQ(d.num_teachers, 4u);
  EXPECT_EQ(d.threads, 2u);
  EXPECT_EQ(d.student_spec, canonical_student_spec());
  const PartitionConfig p = make_partition_config(c);
  EXPECT_EQ(p.num_clients, 4u);
  EXPECT_EQ(p.alpha, 0.7);
  EXPECT_NE(p.seed, make_split_spec(c).seed);
  EXPECT_EQ(make_fedavg_config(c).num_clients, 4u);
}

TEST(ConfigTest, RelativePathsResolveAgainstConfigFile) {
  testing::TempDir dir;
  const ModelSpec spec = testing::small_conv_spec();
  std::filesystem::create_directories(dir.path() / "specs");
  write_model_spec(dir.path() / "specs" / "m.spec", spec);
  write_file(dir.path() / "cfg" / "run.cfg",
             "[distill]\nteacher_spec = ../specs/m.spec\nstudent_spec = ../specs/m.spec\n");
  const ExperimentConfig c = load_config(dir.path() / "cfg" / "run.cfg");
  EXPECT_EQ(make_distill_config(c).teacher_spec, spec);

  write_file(dir.path() / "cfg" / "bad.cfg", "[distill]\nteacher_spec = missing.spec\n");
  try {
    make_distill_config(load_config(dir.path() / "cfg" / "bad.cfg"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("distill.teacher_spec", 0), 0u) << e.what();
  }
}

TEST(ConfigTest, JsonFileDetected) {
  testing::TempDir dir;
  write_file(dir.path() / "a.json", R"({"experiment": {"seed": 77}})");
  EXPECT_EQ(load_config(dir.path() / "a.json").seed, 77u);
  write_file(dir.path() / "b.cfg", "  {\"experiment\": {\"seed\": 78}}");
  EXPECT_EQ(load_config(dir.path() / "b.cfg").seed, 78u);
  EXPECT_THROW(load_config(dir.path() / "none.cfg"), ConfigError);
}

TEST(ConfigTest, DatasetLoading) {
  testing::TempDir dir;
  const ExperimentConfig syn = parse_config(
      "[data]\nclasses = 2\nper_class = 3\nheight = 8\nwidth = 8\nchannels = 3\n");
  const auto ds = load_dataset(syn);
  EXPECT_EQ(ds->size(), 6u);
  EXPECT_EQ(ds->image_shape(), (Shape{8, 8, 3}));

  write_file(dir.path() / "run.cfg", "[data]\nsource = manifest\nmanifest = data/manifest.csv\n");
  try {
    load_dataset(load_config(dir.path() / "run.cfg"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("data.manifest", 0), 0u) << e.what();
  }

  SyntheticOptions o;
  o.classes = 2;
  o.per_class = 2;
  o.height = 6;
  o.width = 6;
  write_dataset_tree(generate_synthetic(o), dir.path() / "data");
  write_file(dir.path() / "run.cfg",
             "[data]\nsource = manifest\nmanifest = data/manifest.csv\n"
             "resize_height = 4\nresize_width = 4\nchannels = 1\n"
             "clahe_tile_rows = 2\nclahe_tile_cols = 2\n");
  const auto loaded = load_dataset(load_config(dir.path() / "run.cfg"));
  EXPECT_EQ(loaded->size(), 4u);
  EXPECT_EQ(loaded->image_shape(), (Shape{4, 4, 1}));
}

TEST(ConfigTest, BundledConfigsParse) {
  for (const char* name : {"toy-iid.cfg", "toy-noniid.cfg", "toy-fedavg.cfg", "smoke.cfg"}) {
    const ExperimentConfig c = load_config(testing::source_dir() / "configs" / name);
    EXPECT_NO_THROW(make_distill_config(c)) << name;
    EXPECT_NO_THROW(make_fedavg_config(c)) << name;
  }
}

}  // namespace
}  // namespace fedkd
