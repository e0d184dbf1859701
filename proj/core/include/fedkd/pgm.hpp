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

#ifndef FEDKD_PGM_HPP_
#define FEDKD_PGM_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace fedkd {

/// Grayscale image with integer levels in [0, 2^bit_depth - 1].
struct RawImage {
  std::size_t height = 0;
  std::size_t width = 0;
  unsigned bit_depth = 8;  // 8 or 16
  std::vector<std::uint16_t> pixels;
  friend bool operator==(const RawImage&, const RawImage&) = default;
};

// Binary PGM (P5). maxval <= 255 reads as 8-bit, otherwise 16-bit big-endian.
// Throws IoError when the file cannot be opened, FormatError when it is not
// a valid P5 image.
RawImage read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const RawImage& image);

}  // namespace fedkd

#endif  // FEDKD_PGM_HPP_
