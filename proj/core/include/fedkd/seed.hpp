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

#ifndef FEDKD_SEED_HPP_
#define FEDKD_SEED_HPP_

#include <cstdint>
#include <initializer_list>

namespace fedkd {

// Derives independent, reproducible sub-seeds from a base seed and a path of
// stream ids (e.g. {round, teacher}), using the splitmix64 finalizer.
constexpr std::uint64_t derive_seed(std::uint64_t base,
                                    std::initializer_list<std::uint64_t> streams) {
  std::uint64_t z = base;
  for (std::uint64_t s : streams) {
    z += 0x9E3779B97F4A7C15ULL ^ (s * 0xBF58476D1CE4E5B9ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z ^= z >> 31;
  }
  return z;
}

}  // namespace fedkd

#endif  // FEDKD_SEED_HPP_
