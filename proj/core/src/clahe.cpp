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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "fedkd/errors.hpp"
#include "fedkd/preprocess.hpp"

namespace fedkd {

namespace {

// Clips at `clip` and spreads the excess uniformly until nothing exceeds the
// limit. The fixed point of that process is min(clip, h + r) for the unique
// r that conserves mass, so it is solved for directly.
void clip_histogram(std::vector<double>& hist, double clip, double area) {
  const std::size_t bins = hist.size();
  if (std::all_of(hist.begin(), hist.end(), [&](double h) { return h <= clip; })) return;
  if (clip * static_cast<double>(bins) <= area) {
    std::fill(hist.begin(), hist.end(), area / static_cast<double>(bins));
    return;
  }
  std::vector<double> sorted = hist;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> prefix(bins + 1, 0.0);
  for (std::size_t i = 0; i < bins; ++i) prefix[i + 1] = prefix[i] + sorted[i];
  double raise = 0.0;
  // k bins stay below the limit after raising; the rest sit at the limit.
  for (std::size_t k = bins - 1; k >= 1; --k) {
    const double r =
        (area - static_cast<double>(bins - k) * clip - prefix[k]) / static_cast<double>(k);
    const double tol = 1e-9 * clip;
    if (sorted[k - 1] + r <= clip + tol && sorted[k] + r >= clip - tol) {
      raise = r;
      break;
    }
  }
  for (double& h : hist) h = std::min(clip, h + raise);
}

struct Axis {
  std::size_t lo;
  std::size_t hi;
  double weight;  // weight of `hi`
};

Axis tile_axis(std::size_t pos, std::size_t tile, std::size_t tiles) {
  const double g = (static_cast<double>(pos) + 0.5) / static_cast<double>(tile) - 0.5;
  if (g <= 0.0) return {0, 0, 0.0};
  const double last = static_cast<double>(tiles - 1);
  if (g >= last) return {tiles - 1, tiles - 1, 0.0};
  const auto lo = static_cast<std::size_t>(std::floor(g));
  return {lo, lo + 1, g - static_cast<double>(lo)};
}

}  // namespace

void validate_clahe_config(const ClaheConfig& cfg) {
  if (!(cfg.clip_limit >= 1.0) || !std::isfinite(cfg.clip_limit)) {
    throw DomainError("clahe clip_limit must be >= 1");
  }
  if (cfg.tile_rows == 0 || cfg.tile_cols == 0) throw DomainError("clahe tile grid must be positive");
  if (cfg.bins < 2) throw DomainError("clahe needs at least 2 bins");
}

GrayImage clahe(const GrayImage& image, const ClaheConfig& cfg) {
  validate_clahe_config(cfg);
  if (image.height < cfg.tile_rows || image.width < cfg.tile_cols) {
    throw DomainError("image " + std::to_string(image.height) + "x" +
                      std::to_string(image.width) + " is smaller than one tile of a " +
                      std::to_string(cfg.tile_rows) + "x" + std::to_string(cfg.tile_cols) +
                      " grid");
  }
  const std::size_t bins = cfg.bins;
  const double top_level = static_cast<double>(bins - 1);
  const std::size_t th = (image.height + cfg.tile_rows - 1) / cfg.tile_rows;
  const std::size_t tw = (image.width + cfg.tile_cols - 1) / cfg.tile_cols;
  const double area = static_cast<double>(th * tw);

  std::vector<std::size_t> levels(image.pixels.size());
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const double v = std::clamp(image.pixels[i], 0.0, 1.0);
    levels[i] = std::min(bins - 1, static_cast<std::size_t>(std::lround(v * top_level)));
  }

  std::vector<std::vector<double>> luts(cfg.tile_rows * cfg.tile_cols);
  for (std::size_t ty = 0; ty < cfg.tile_rows; ++ty) {
    for (std::size_t tx = 0; tx < cfg.tile_cols; ++tx) {
      std::vector<double> hist(bins, 0.0);
      for (std::size_t y = ty * th; y < (ty + 1) * th; ++y) {
        const std::size_t sy = std::min(y, image.height - 1);
        for (std::size_t x = tx * tw; x < (tx + 1) * tw; ++x) {
          const std::size_t sx = std::min(x, image.width - 1);
          hist[levels[sy * image.width + sx]] += 1.0;
        }
      }
      std::vector<double>& lut = luts[ty * cfg.tile_cols + tx];
      lut.resize(bins);
      const auto occupied = std::count_if(hist.begin(), hist.end(), [](double h) { return h > 0.0; });
      if (occupied <= 1) {
        std::iota(lut.begin(), lut.end(), 0.0);
        continue;
      }
      clip_histogram(hist, cfg.clip_limit * area / static_cast<double>(bins), area);
      double cdf = 0.0;
      for (std::size_t b = 0; b < bins; ++b) {
        cdf += hist[b];
        lut[b] = std::min(top_level, cdf * top_level / area);
      }
    }
  }

  GrayImage out{image.height, image.width, std::vector<double>(image.pixels.size())};
  for (std::size_t y = 0; y < image.height; ++y) {
    const Axis ay = tile_axis(y, th, cfg.tile_rows);
    for (std::size_t x = 0; x < image.width; ++x) {
      const Axis ax = tile_axis(x, tw, cfg.tile_cols);
      const std::size_t level = levels[y * image.width + x];
      const auto map = [&](std::size_t ty, std::size_t tx) {
        return luts[ty * cfg.tile_cols + tx][level];
      };
      const double top = map(ay.lo, ax.lo) * (1.0 - ax.weight) + map(ay.lo, ax.hi) * ax.weight;
      const double bottom = map(ay.hi, ax.lo) * (1.0 - ax.weight) + map(ay.hi, ax.hi) * ax.weight;
      const double v = top * (1.0 - ay.weight) + bottom * ay.weight;
      out.pixels[y * image.width + x] = std::clamp(v / top_level, 0.0, 1.0);
    }
  }
  return out;
}

}  // namespace fedkd
