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

#include "fedkd/spec_io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fedkd/errors.hpp"

namespace fedkd {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

class LineArgs {
 public:
  LineArgs(std::size_t line, std::map<std::string, std::string> kv)
      : line_(line), kv_(std::move(kv)) {}

  [[noreturn]] void fail(const std::string& msg) const {
    throw FormatError("line " + std::to_string(line_) + ": " + msg);
  }

  std::size_t size_or(const std::string& key, std::size_t fallback) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    std::size_t v = 0;
    const std::string s = take(it);
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || v == 0) {
      fail("'" + key + "' must be a positive integer, got '" + s + "'");
    }
    return v;
  }

  std::size_t required_size(const std::string& key) {
    if (!kv_.contains(key)) fail("missing required '" + key + "'");
    return size_or(key, 0);
  }

  double double_or(const std::string& key, double fallback) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    double v = 0.0;
    const std::string s = take(it);
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
      fail("'" + key + "' must be a number, got '" + s + "'");
    }
    return v;
  }

  bool bool_or(const std::string& key, bool fallback) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    const std::string s = take(it);
    if (s == "true") return true;
    if (s == "false") return false;
    fail("'" + key + "' must be true or false, got '" + s + "'");
  }

  std::string string_or(const std::string& key, std::string fallback) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    return take(it);
  }

  void finish() const {
    if (!kv_.empty()) fail("unknown hyperparameter '" + kv_.begin()->first + "'");
  }

 private:
  std::string take(std::map<std::string, std::string>::iterator it) {
    std::string v = it->second;
    kv_.erase(it);
    return v;
  }

  std::size_t line_;
  std::map<std::string, std::string> kv_;
};

Shape parse_shape(const std::string& s, const LineArgs& args) {
  Shape shape;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc() || p != part.data() + part.size() || v == 0) {
      args.fail("bad shape '" + s + "'");
    }
    shape.push_back(v);
  }
  if (shape.empty()) args.fail("empty shape");
  return shape;
}

}  // namespace

ModelSpec parse_model_spec(std::string_view text) {
  ModelSpec spec;
  bool have_input = false;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;

    std::istringstream tokens(line);
    std::string kind;
    tokens >> kind;
    std::map<std::string, std::string> kv;
    std::string tok;
    while (tokens >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos || eq == 0 || eq + 1 == tok.size()) {
        throw FormatError("line " + std::to_string(line_no) +
                          ": expected key=value, got '" + tok + "'");
      }
      if (!kv.emplace(tok.substr(0, eq), tok.substr(eq + 1)).second) {
        throw FormatError("line " + std::to_string(line_no) +
                          ": duplicate key '" + tok.substr(0, eq) + "'");
      }
    }
    LineArgs args(line_no, std::move(kv));

    if (kind == "input") {
      if (have_input) args.fail("duplicate input line");
      const std::string s = args.string_or("shape", "");
      if (s.empty()) args.fail("missing required 'shape'");
      spec.input_shape = parse_shape(s, args);
      have_input = true;
    } else if (!have_input) {
      args.fail("the first entry must be 'input'");
    } else if (kind == "conv2d") {
      Conv2D c;
      c.filters = args.required_size("filters");
      c.kernel = args.size_or("kernel", c.kernel);
      c.stride = args.size_or("stride", c.stride);
      const std::string pad = args.string_or("padding", "same");
      if (pad == "same") {
        c.padding = Padding::kSame;
      } else if (pad == "valid") {
        c.padding = Padding::kValid;
      } else {
        args.fail("padding must be same or valid, got '" + pad + "'");
      }
      spec.layers.emplace_back(c);
    } else if (kind == "batchnorm") {
      BatchNorm b;
      b.epsilon = args.double_or("epsilon", b.epsilon);
      b.momentum = args.double_or("momentum", b.momentum);
      spec.layers.emplace_back(b);
    } else if (kind == "leaky_relu") {
      LeakyReLU r;
      r.slope = args.double_or("slope", r.slope);
      spec.layers.emplace_back(r);
    } else if (kind == "maxpool2d") {
      MaxPool2D p;
      p.window = args.size_or("window", p.window);
      p.stride = args.size_or("stride", p.stride);
      p.ceil_mode = args.bool_or("ceil", p.ceil_mode);
      spec.layers.emplace_back(p);
    } else if (kind == "global_avg_pool") {
      spec.layers.emplace_back(GlobalAvgPool{});
    } else if (kind == "dense") {
      spec.layers.emplace_back(Dense{args.required_size("units")});
    } else {
      args.fail("unknown layer kind '" + kind + "'");
    }
    args.finish();
  }
  if (!have_input) throw FormatError("model spec has no input line");
  try {
    validate_model_spec(spec);
  } catch (const Error& e) {
    throw FormatError(std::string("invalid model spec: ") + e.what());
  }
  return spec;
}

std::string format_model_spec(const ModelSpec& spec) {
  std::ostringstream out;
  out << "input shape=";
  for (std::size_t i = 0; i < spec.input_shape.size(); ++i) {
    out << (i ? "," : "") << spec.input_shape[i];
  }
  out << "\n";
  for (const LayerSpec& layer : spec.layers) {
    out << layer_kind_name(layer);
    std::visit(
        Overloaded{
            [&](const Conv2D& c) {
              out << " filters=" << c.filters << " kernel=" << c.kernel
                  << " stride=" << c.stride << " padding="
                  << (c.padding == Padding::kSame ? "same" : "valid");
            },
            [&](const BatchNorm& b) {
              out << " epsilon=" << format_double(b.epsilon)
                  << " momentum=" << format_double(b.momentum);
            },
            [&](const LeakyReLU& r) { out << " slope=" << format_double(r.slope); },
            [&](const MaxPool2D& p) {
              out << " window=" << p.window << " stride=" << p.stride
                  << " ceil=" << (p.ceil_mode ? "true" : "false");
            },
            [](const GlobalAvgPool&) {},
            [&](const Dense& d) { out << " units=" << d.units; },
        },
        layer);
    out << "\n";
  }
  return out.str();
}

ModelSpec read_model_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model spec " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_model_spec(buf.str());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_model_spec(const std::filesystem::path& path, const ModelSpec& spec) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write model spec " + path.string());
  out << format_model_spec(spec);
}

ModelSpec resolve_model_spec(std::string_view ref) {
  constexpr std::string_view kPrefix = "builtin:";
  if (!ref.starts_with(kPrefix)) return read_model_spec(std::filesystem::path(ref));
  const std::string_view name = ref.substr(kPrefix.size());
  if (name == "student") return canonical_student_spec();
  if (name == "student-32") return canonical_student_spec(32, 32, 3, 10);
  if (name == "teacher-small") {
    ModelSpec spec;
    spec.input_shape = {32, 32, 3};
    spec.layers = {Conv2D{16, 3, 2, Padding::kSame}, BatchNorm{}, LeakyReLU{},
                   MaxPool2D{}, Conv2D{32, 3, 1, Padding::kSame}, BatchNorm{},
                   LeakyReLU{}, MaxPool2D{}, GlobalAvgPool{}, Dense{3}};
    return spec;
  }
  if (name == "teacher-large") {
    ModelSpec spec;
    spec.input_shape = {32, 32, 3};
    spec.layers = {Conv2D{64, 3, 1, Padding::kSame}, BatchNorm{}, LeakyReLU{},
                   MaxPool2D{}, Conv2D{128, 3, 1, Padding::kSame}, BatchNorm{},
                   LeakyReLU{}, MaxPool2D{}, Conv2D{256, 3, 1, Padding::kSame},
                   BatchNorm{}, LeakyReLU{}, MaxPool2D{}, Conv2D{512, 3, 1, Padding::kSame},
                   BatchNorm{}, LeakyReLU{}, GlobalAvgPool{}, Dense{3}};
    return spec;
  }
  throw FormatError("unknown builtin model spec '" + std::string(name) + "'");
}

}  // namespace fedkd
