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

#include "fedkd/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "fedkd/errors.hpp"
#include "fedkd/spec_io.hpp"

namespace fedkd {

namespace {

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* suffix) {
  return std::filesystem::path(stem.string() + suffix);
}

std::string shape_field(const Shape& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out;
}

void put_le(std::ostream& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

double get_le(const unsigned char* bytes) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& stem, const ModelState& model) {
  write_model_spec(with_suffix(stem, ".spec"), model.spec());
  std::ofstream bin(with_suffix(stem, ".bin"), std::ios::binary);
  std::ofstream manifest(with_suffix(stem, ".manifest.csv"));
  if (!bin || !manifest) throw IoError("cannot write checkpoint " + stem.string());
  manifest << "name,offset,count,shape,trainable\n";
  std::size_t offset = 0;
  for (std::size_t i = 0; i < model.values().size(); ++i) {
    const Tensor& t = model.values()[i];
    const ParamInfo& info = model.layout()[i];
    manifest << info.name << ',' << offset << ',' << t.size() << ','
             << shape_field(t.shape()) << ',' << (info.trainable ? 1 : 0) << '\n';
    for (double v : t.data()) put_le(bin, v);
    offset += t.size();
  }
}

ModelState load_checkpoint(const std::filesystem::path& stem) {
  const ModelSpec spec = read_model_spec(with_suffix(stem, ".spec"));
  ModelState model = ModelState::zeros(spec);
  const auto bin_path = with_suffix(stem, ".bin");
  std::ifstream bin(bin_path, std::ios::binary);
  std::ifstream manifest(with_suffix(stem, ".manifest.csv"));
  if (!bin || !manifest) throw IoError("cannot read checkpoint " + stem.string());
  std::string blob((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
  const auto* bytes = reinterpret_cast<const unsigned char*>(blob.data());
  const std::size_t count = blob.size() / 8;

  std::string line;
  std::getline(manifest, line);
  std::size_t row = 1;
  std::vector<bool> loaded(model.values().size(), false);
  while (std::getline(manifest, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string name, offset_s, count_s;
    std::getline(ss, name, ',');
    std::getline(ss, offset_s, ',');
    std::getline(ss, count_s, ',');
    std::size_t offset = 0, n = 0;
    try {
      offset = std::stoull(offset_s);
      n = std::stoull(count_s);
    } catch (const std::exception&) {
      throw FormatError("checkpoint manifest row " + std::to_string(row) + " is malformed");
    }
    std::size_t index = 0;
    try {
      index = model.index_of(name);
    } catch (const DomainError&) {
      throw FormatError("checkpoint manifest row " + std::to_string(row) +
                        " names unknown parameter '" + name + "'");
    }
    Tensor& t = model.values()[index];
    loaded[index] = true;
    if (n != t.size() || offset + n > count) {
      throw FormatError("checkpoint manifest row " + std::to_string(row) +
                        " does not match the model spec");
    }
    for (std::size_t j = 0; j < n; ++j) t[j] = get_le(bytes + 8 * (offset + j));
  }
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    if (!loaded[i]) {
      throw FormatError("checkpoint " + stem.string() + " is missing " + model.layout()[i].name);
    }
  }
  return model;
}

}  // namespace fedkd
