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

#include "fedkd/checkpoint.hpp"

#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "fedkd/errors.hpp"
#include "fedkd/train.hpp"
#include "test_support.hpp"

namespace fedkd {
namespace {

TEST(CheckpointTest, RoundTripIsBitExact) {
  testing::TempDir dir("ckpt");
  ModelState m = ModelState::initialize(testing::small_conv_spec(), 4);
  // Move the BN statistics away from their defaults.
  Sgd sgd({0.01, 0.0});
  train_step(m, testing::random_tensor({3, 8, 8, 1}, 5), Targets{{0, 1, 2}, {}, 3}, LossSpec{},
             sgd);
  save_checkpoint(dir.path() / "model", m);
  const ModelState loaded = load_checkpoint(dir.path() / "model");
  EXPECT_TRUE(loaded.spec() == m.spec());
  ASSERT_EQ(loaded.values().size(), m.values().size());
  for (std::size_t i = 0; i < m.values().size(); ++i) {
    EXPECT_TRUE(loaded.values()[i] == m.values()[i]) << m.layout()[i].name;
  }
}

TEST(CheckpointTest, ManifestListsNamedOffsets) {
  testing::TempDir dir("ckpt");
  const ModelState m = ModelState::initialize(testing::dense_spec(3, 2, 2), 1);
  save_checkpoint(dir.path() / "m", m);
  std::ifstream in(dir.path() / "m.manifest.csv");
  std::string header, first, second;
  std::getline(in, header);
  std::getline(in, first);
  std::getline(in, second);
  EXPECT_EQ(header, "name,offset,count,shape,trainable");
  EXPECT_EQ(first, "dense_1/kernel,0,6,3x2,1");
  EXPECT_EQ(second, "dense_1/bias,6,2,2,1");
  EXPECT_EQ(std::filesystem::file_size(dir.path() / "m.bin"), 8u * (6 + 2 + 4 + 2));
}

TEST(CheckpointTest, TruncatedBlobIsRejected) {
  testing::TempDir dir("ckpt");
  save_checkpoint(dir.path() / "m", ModelState::initialize(testing::dense_spec(3, 2, 2), 1));
  std::filesystem::resize_file(dir.path() / "m.bin", 16);
  EXPECT_THROW(load_checkpoint(dir.path() / "m"), FormatError);
  EXPECT_THROW(load_checkpoint(dir.path() / "missing"), IoError);
}

}  // namespace
}  // namespace fedkd
