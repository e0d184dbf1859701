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

#include "fedkd/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fedkd/errors.hpp"

namespace fedkd {

GrayImage normalize(const RawImage& image) {
  if (image.bit_depth != 8 && image.bit_depth != 16) {
    throw DomainError("bit depth must be 8 or 16");
  }
  if (image.pixels.size() != image.height * image.width) {
    throw DomainError("pixel count does not match image extent");
  }
  const std::uint32_t max_level = (1u << image.bit_depth) - 1u;
  GrayImage out{image.height, image.width, std::vector<double>(image.pixels.size())};
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    if (image.pixels[i] > max_level) {
      throw DomainError("pixel " + std::to_string(image.pixels[i]) + " exceeds " +
                        std::to_string(image.bit_depth) + "-bit range");
    }
    out.pixels[i] = static_cast<double>(image.pixels[i]) / static_cast<double>(max_level);
  }
  return out;
}

RawImage quantize(const GrayImage& image, unsigned bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw DomainError("bit depth must be 8 or 16");
  const double max_level = static_cast<double>((1u << bit_depth) - 1u);
  RawImage out{image.height, image.width, bit_depth, {}};
  out.pixels.reserve(image.pixels.size());
  for (double v : image.pixels) {
    out.pixels.push_back(
        static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * max_level)));
  }
  return out;
}

GrayImage resize_bilinear(const GrayImage& image, std::size_t height, std::size_t width) {
  if (image.height < 2 || image.width < 2) {
    throw DomainError("resize source must be at least 2x2");
  }
  if (height < 2 || width < 2) throw DomainError("resize target must be at least 2x2");
  if (height == image.height && width == image.width) return image;
  GrayImage out{height, width, std::vector<double>(height * width)};
  const double sy = static_cast<double>(image.height - 1) / static_cast<double>(height - 1);
  const double sx = static_cast<double>(image.width - 1) / static_cast<double>(width - 1);
  for (std::size_t y = 0; y < height; ++y) {
    const double fy = static_cast<double>(y) * sy;
    const std::size_t y0 = std::min(static_cast<std::size_t>(fy), image.height - 2);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < width; ++x) {
      const double fx = static_cast<double>(x) * sx;
      const std::size_t x0 = std::min(static_cast<std::size_t>(fx), image.width - 2);
      const double wx = fx - static_cast<double>(x0);
      const double top = image.at(y0, x0) * (1.0 - wx) + image.at(y0, x0 + 1) * wx;
      const double bottom = image.at(y0 + 1, x0) * (1.0 - wx) + image.at(y0 + 1, x0 + 1) * wx;
      out.pixels[y * width + x] = std::clamp(top * (1.0 - wy) + bottom * wy, 0.0, 1.0);
    }
  }
  return out;
}

Tensor replicate_channels(const GrayImage& image, std::size_t channels) {
  if (channels == 0) throw DomainError("channel count must be positive");
  Tensor out({image.height, image.width, channels});
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    for (std::size_t c = 0; c < channels; ++c) out[i * channels + c] = image.pixels[i];
  }
  return out;
}

GrayImage preprocess_image(const RawImage& image, const PipelineOptions& options) {
  GrayImage img = normalize(image);
  if (options.apply_clahe && options.order == PipelineOrder::kClaheThenResize) {
    img = clahe(img, options.clahe);
  }
  img = resize_bilinear(img, options.height, options.width);
  if (options.apply_clahe && options.order == PipelineOrder::kResizeThenClahe) {
    img = clahe(img, options.clahe);
  }
  return img;
}

}  // namespace fedkd
