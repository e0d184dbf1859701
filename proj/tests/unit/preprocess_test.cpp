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

#include <cmath>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "fedkd/errors.hpp"
#include "fedkd/pgm.hpp"
#include "test_support.hpp"

namespace fedkd {
namespace {

RawImage random_raw(std::size_t h, std::size_t w, unsigned depth, std::uint64_t seed,
                    std::uint16_t lo = 0, std::uint16_t hi = 255) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> d(lo, hi);
  RawImage img{h, w, depth, {}};
  for (std::size_t i = 0; i < h * w; ++i) img.pixels.push_back(static_cast<std::uint16_t>(d(rng)));
  return img;
}

// Global histogram equalization written as directly as possible: each pixel
// maps to (number of pixels <= it) * 255 / N.
std::vector<double> brute_force_equalize(const RawImage& img) {
  std::vector<double> out;
  const double n = static_cast<double>(img.pixels.size());
  for (std::uint16_t v : img.pixels) {
    std::size_t le = 0;
    for (std::uint16_t u : img.pixels) le += u <= v;
    out.push_back(static_cast<double>(le) * 255.0 / n);
  }
  return out;
}

TEST(PgmTest, RoundTrip8And16Bit) {
  testing::TempDir dir("pgm");
  for (unsigned depth : {8u, 16u}) {
    const RawImage img = random_raw(5, 7, depth, depth, 0, depth == 8 ? 255 : 65535);
    write_pgm(dir.path() / "a.pgm", img);
    const RawImage back = read_pgm(dir.path() / "a.pgm");
    EXPECT_EQ(back.height, 5u);
    EXPECT_EQ(back.width, 7u);
    EXPECT_EQ(back.bit_depth, depth);
    EXPECT_EQ(back.pixels, img.pixels);
  }
}

TEST(PgmTest, HeaderCommentsAreSkipped) {
  testing::TempDir dir("pgm");
  std::ofstream(dir.path() / "c.pgm", std::ios::binary) << "P5\n# made by hand\n2 1\n255\n\x01\x02";
  const RawImage img = read_pgm(dir.path() / "c.pgm");
  EXPECT_EQ(img.pixels, (std::vector<std::uint16_t>{1, 2}));
}

TEST(PgmTest, CorruptFilesNameThePath) {
  testing::TempDir dir("pgm");
  const auto bad = dir.path() / "broken.pgm";
  std::ofstream(bad, std::ios::binary) << "P5\n4 4\n255\n\x01\x02";
  try {
    read_pgm(bad);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("broken.pgm"), std::string::npos);
  }
  std::ofstream(bad, std::ios::binary) << "P2\n1 1\n255\n1\n";
  EXPECT_THROW(read_pgm(bad), FormatError);
  EXPECT_THROW(read_pgm(dir.path() / "absent.pgm"), IoError);
}

TEST(NormalizeTest, ScalesByBitDepth) {
  const GrayImage g8 = normalize(RawImage{1, 2, 8, {0, 255}});
  EXPECT_EQ(g8.pixels, (std::vector<double>{0.0, 1.0}));
  const GrayImage g16 = normalize(RawImage{1, 2, 16, {0, 65535}});
  EXPECT_EQ(g16.pixels[1], 1.0);
  EXPECT_THROW(normalize(RawImage{1, 1, 8, {256}}), DomainError);
  const RawImage back = quantize(normalize(random_raw(4, 4, 8, 3)), 8);
  EXPECT_EQ(back.pixels, random_raw(4, 4, 8, 3).pixels);
}

TEST(ResizeTest, CornersAndIdentity) {
  const GrayImage src = normalize(random_raw(6, 5, 8, 4));
  const GrayImage same = resize_bilinear(src, 6, 5);
  for (std::size_t i = 0; i < src.pixels.size(); ++i) EXPECT_NEAR(same.pixels[i], src.pixels[i], 1e-15);
  const GrayImage big = resize_bilinear(src, 11, 9);
  EXPECT_DOUBLE_EQ(big.at(0, 0), src.at(0, 0));
  EXPECT_DOUBLE_EQ(big.at(10, 8), src.at(5, 4));
  EXPECT_DOUBLE_EQ(big.at(0, 8), src.at(0, 4));
  // Midpoint of a 2x upsample is the average of neighbours.
  EXPECT_NEAR(big.at(1, 0), 0.5 * (src.at(0, 0) + src.at(1, 0)), 1e-15);
  EXPECT_THROW(resize_bilinear(src, 1, 5), DomainError);
}

TEST(ResizeTest, PreservesRange) {
  const GrayImage src = normalize(random_raw(9, 9, 8, 6));
  const GrayImage out = resize_bilinear(src, 17, 4);
  for (double v : out.pixels) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(ClaheTest, SingleTileWithoutClipIsGlobalEqualization) {
  ClaheConfig cfg{256.0, 1, 1, 256};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const RawImage raw = random_raw(16, 12, 8, seed, 30, 200);
    const std::vector<double> oracle = brute_force_equalize(raw);
    const GrayImage out = clahe(normalize(raw), cfg);
    for (std::size_t i = 0; i < oracle.size(); ++i) {
      EXPECT_LE(std::abs(out.pixels[i] * 255.0 - oracle[i]), 1.0) << seed << " " << i;
    }
  }
}

TEST(ClaheTest, ConstantImagesAreFixedPoints) {
  for (double level : {0.0, 0.2, 0.5, 1.0}) {
    GrayImage img{10, 10, std::vector<double>(100, level)};
    for (ClaheConfig cfg : {ClaheConfig{2.0, 2, 2, 256}, ClaheConfig{300.0, 1, 1, 256}}) {
      const GrayImage out = clahe(img, cfg);
      for (double v : out.pixels) EXPECT_NEAR(v, level, 1.0 / 255.0 / 2.0 + 1e-12);
    }
  }
}

TEST(ClaheTest, OutputStaysInRangeAndIsMonotoneWithinATile) {
  const GrayImage img = normalize(random_raw(32, 32, 8, 9));
  const GrayImage out = clahe(img, ClaheConfig{2.0, 4, 4, 256});
  for (double v : out.pixels) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  const GrayImage global = clahe(img, ClaheConfig{2.0, 1, 1, 256});
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    for (std::size_t j = 0; j < img.pixels.size(); j += 37) {
      if (img.pixels[i] < img.pixels[j]) {
        EXPECT_LE(global.pixels[i], global.pixels[j]);
      }
    }
  }
}

TEST(ClaheTest, LowerClipLimitsContrastStretch) {
  // Narrow-band input: full equalization stretches it; clip 1 keeps it
  // close to the identity mapping.
  const RawImage raw = random_raw(32, 32, 8, 12, 100, 140);
  const GrayImage img = normalize(raw);
  auto spread = [](const GrayImage& g) {
    const auto [lo, hi] = std::minmax_element(g.pixels.begin(), g.pixels.end());
    return *hi - *lo;
  };
  const double open = spread(clahe(img, ClaheConfig{256.0, 1, 1, 256}));
  const double tight = spread(clahe(img, ClaheConfig{1.0, 1, 1, 256}));
  EXPECT_GT(open, 0.9);
  EXPECT_LT(tight, open);
  EXPECT_NEAR(tight, spread(img), 0.05);
}

TEST(ClaheTest, Validation) {
  const GrayImage img{4, 4, std::vector<double>(16, 0.5)};
  EXPECT_THROW(clahe(img, ClaheConfig{0.5, 1, 1, 256}), DomainError);
  EXPECT_THROW(clahe(img, ClaheConfig{2.0, 8, 8, 256}), DomainError);
  EXPECT_THROW(clahe(img, ClaheConfig{2.0, 1, 1, 1}), DomainError);
}

TEST(PipelineTest, NoClaheEqualsNormalizeThenResize) {
  const RawImage raw = random_raw(20, 24, 8, 13);
  PipelineOptions opt;
  opt.height = 10;
  opt.width = 12;
  opt.apply_clahe = false;
  const GrayImage out = preprocess_image(raw, opt);
  EXPECT_EQ(out, resize_bilinear(normalize(raw), 10, 12));
}

TEST(PipelineTest, OrderIsConfigurable) {
  const RawImage raw = random_raw(32, 32, 8, 14);
  PipelineOptions opt;
  opt.height = 16;
  opt.width = 16;
  opt.clahe = ClaheConfig{2.0, 2, 2, 256};
  const GrayImage a = preprocess_image(raw, opt);
  EXPECT_EQ(a, resize_bilinear(clahe(normalize(raw), opt.clahe), 16, 16));
  opt.order = PipelineOrder::kResizeThenClahe;
  const GrayImage b = preprocess_image(raw, opt);
  EXPECT_EQ(b, clahe(resize_bilinear(normalize(raw), 16, 16), opt.clahe));
}

TEST(PipelineTest, ReplicateChannels) {
  const GrayImage g{1, 2, {0.25, 0.75}};
  const Tensor t = replicate_channels(g, 3);
  EXPECT_EQ(t.shape(), (Shape{1, 2, 3}));
  EXPECT_EQ(t[4], 0.75);
}

}  // namespace
}  // namespace fedkd
