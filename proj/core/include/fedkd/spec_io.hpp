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

#ifndef FEDKD_SPEC_IO_HPP_
#define FEDKD_SPEC_IO_HPP_

#include <filesystem>
#include <string>
#include <string_view>

#include "fedkd/model_spec.hpp"

namespace fedkd {

// Plain-text model document, one layer per line:
//
//   input shape=224,224,3
//   conv2d filters=32 kernel=3 stride=2 padding=same
//   batchnorm epsilon=1e-05 momentum=0.9
//   leaky_relu slope=0.01
//   maxpool2d window=2 stride=2 ceil=true
//   global_avg_pool
//   dense units=10
//
// '#' starts a comment. Omitted hyperparameters take their defaults, except
// conv2d filters and dense units which are required. Parse failures throw
// FormatError with the 1-based line number.
ModelSpec parse_model_spec(std::string_view text);
std::string format_model_spec(const ModelSpec& spec);

ModelSpec read_model_spec(const std::filesystem::path& path);
void write_model_spec(const std::filesystem::path& path, const ModelSpec& spec);

// Resolves "builtin:<name>" or a filesystem path. Known builtins: student,
// student-32 (student at 32x32x3), teacher-small, teacher-large (over 1M
// parameters, used for communication-cost comparisons).
ModelSpec resolve_model_spec(std::string_view ref);

}  // namespace fedkd

#endif  // FEDKD_SPEC_IO_HPP_
