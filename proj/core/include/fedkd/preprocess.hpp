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

#ifndef FEDKD_PREPROCESS_HPP_
#define FEDKD_PREPROCESS_HPP_

#include <cstddef>
#include <vector>

#include "fedkd/pgm.hpp"
#include "fedkd/tensor.hpp"

namespace fedkd {

/// Grayscale image with intensities in [0, 1], row-major.
struct GrayImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;

  double at(std::size_t y, std::size_t x) const { return pixels[y * width + x]; }
  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

struct ClaheConfig {
  // Multiple of the uniform bin height (tile area / bins).
  double clip_limit = 2.0;
  std::size_t tile_rows = 8;
  std::size_t tile_cols = 8;
  std::size_t bins = 256;
};

void validate_clahe_config(const ClaheConfig& cfg);

// pixel / (2^bits - 1). DomainError if a pixel exceeds the bit depth.
GrayImage normalize(const RawImage& image);

// Rounds to the nearest level at the given bit depth.
RawImage quantize(const GrayImage& image, unsigned bit_depth);

// Corner-aligned bilinear interpolation: output corners sample input corners.
// Source and target extents must be at least 2.
GrayImage resize_bilinear(const GrayImage& image, std::size_t height, std::size_t width);

// (H, W, channels) tensor with every channel a copy of the image.
Tensor replicate_channels(const GrayImage& image, std::size_t channels);

/// Contrast-limited adaptive histogram equalization.
///
/// Pixels are quantized to `bins` levels. The image is split into a
/// tile_rows x tile_cols grid (edge-replicated up to a multiple of the grid
/// and cropped back). Each tile histogram is clipped at
/// clip_limit * area / bins and the excess spread uniformly over all bins,
/// repeating until no bin exceeds the limit. The tile mapping is
/// cdf(level) * (bins - 1) / area, except that a tile whose histogram
/// occupies a single bin maps identically. Output pixels bilinearly
/// interpolate the mappings of the four nearest tile centres.
GrayImage clahe(const GrayImage& image, const ClaheConfig& cfg);

enum class PipelineOrder { kClaheThenResize, kResizeThenClahe };

struct PipelineOptions {
  std::size_t height = 224;
  std::size_t width = 224;
  bool apply_clahe = true;
  PipelineOrder order = PipelineOrder::kClaheThenResize;
  ClaheConfig clahe;
};

// normalize, then CLAHE and resize in the configured order.
GrayImage preprocess_image(const RawImage& image, const PipelineOptions& options);

}  // namespace fedkd

#endif  // FEDKD_PREPROCESS_HPP_
