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

#ifndef FEDKD_CHECKPOINT_HPP_
#define FEDKD_CHECKPOINT_HPP_

#include <filesystem>

#include "fedkd/model.hpp"

namespace fedkd {

// A checkpoint is three files sharing a stem:
//   <stem>.spec          model spec text
//   <stem>.bin           every parameter tensor, little-endian float64, in
//                        layout order
//   <stem>.manifest.csv  name,offset,count,shape,trainable (offsets in values)
void save_checkpoint(const std::filesystem::path& stem, const ModelState& model);
ModelState load_checkpoint(const std::filesystem::path& stem);

}  // namespace fedkd

#endif  // FEDKD_CHECKPOINT_HPP_
