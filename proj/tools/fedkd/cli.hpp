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

#ifndef FEDKD_TOOLS_CLI_HPP_
#define FEDKD_TOOLS_CLI_HPP_

#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

namespace fedkd::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;    // bad flags, config, spec or report
inline constexpr int kExitRuntime = 2;  // failures while running

// Entry point shared by the binary and the tests. args[0] is the program name.
int run(const std::vector<std::string_view>& args, std::ostream& out, std::ostream& err);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace fedkd::cli

#endif  // FEDKD_TOOLS_CLI_HPP_
