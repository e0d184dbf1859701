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

#include "fedkd/pgm.hpp"

#include <cctype>
#include <fstream>
#include <iterator>
#include <string>

#include "fedkd/errors.hpp"

namespace fedkd {

namespace {

class HeaderReader {
 public:
  HeaderReader(const std::string& data, const std::filesystem::path& path)
      : data_(data), path_(path) {}

  std::size_t number() {
    skip_space();
    std::size_t v = 0;
    bool any = false;
    while (pos_ < data_.size() && std::isdigit(static_cast<unsigned char>(data_[pos_]))) {
      v = v * 10 + static_cast<std::size_t>(data_[pos_] - '0');
      any = true;
      ++pos_;
      if (v > 1'000'000) fail("header value too large");
    }
    if (!any) fail("malformed header");
    return v;
  }

  std::size_t end_header() {
    if (pos_ >= data_.size() || !std::isspace(static_cast<unsigned char>(data_[pos_]))) {
      fail("malformed header");
    }
    return pos_ + 1;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw FormatError(path_.string() + ": " + msg);
  }

 private:
  void skip_space() {
    while (pos_ < data_.size()) {
      if (data_[pos_] == '#') {
        while (pos_ < data_.size() && data_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(data_[pos_]))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& data_;
  const std::filesystem::path& path_;
  std::size_t pos_ = 2;
};

}  // namespace

RawImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  HeaderReader header(data, path);
  if (data.size() < 2 || data[0] != 'P' || data[1] != '5') header.fail("not a binary PGM (P5)");
  RawImage img;
  img.width = header.number();
  img.height = header.number();
  const std::size_t maxval = header.number();
  if (img.width == 0 || img.height == 0) header.fail("zero image extent");
  if (maxval == 0 || maxval > 65535) header.fail("maxval out of range");
  img.bit_depth = maxval <= 255 ? 8 : 16;
  const std::size_t start = header.end_header();
  const std::size_t bytes_per = img.bit_depth == 8 ? 1 : 2;
  const std::size_t count = img.width * img.height;
  if (data.size() - start < count * bytes_per) header.fail("truncated pixel data");
  img.pixels.resize(count);
  const auto* p = reinterpret_cast<const unsigned char*>(data.data() + start);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint16_t v =
        bytes_per == 1 ? p[i] : static_cast<std::uint16_t>((p[2 * i] << 8) | p[2 * i + 1]);
    if (v > maxval) header.fail("pixel exceeds maxval");
    img.pixels[i] = v;
  }
  return img;
}

void write_pgm(const std::filesystem::path& path, const RawImage& image) {
  if (image.pixels.size() != image.width * image.height) {
    throw FormatError("pixel count does not match image extent");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const unsigned maxval = image.bit_depth == 8 ? 255u : 65535u;
  out << "P5\n" << image.width << ' ' << image.height << '\n' << maxval << '\n';
  for (std::uint16_t v : image.pixels) {
    if (image.bit_depth == 8) {
      out.put(static_cast<char>(v & 0xFF));
    } else {
      out.put(static_cast<char>(v >> 8));
      out.put(static_cast<char>(v & 0xFF));
    }
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace fedkd
