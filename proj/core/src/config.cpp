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

#include "fedkd/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "fedkd/errors.hpp"
#include "fedkd/seed.hpp"
#include "fedkd/spec_io.hpp"

namespace fedkd {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string fmt(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::uint64_t to_u64(const std::string& path, std::string_view v) {
  std::uint64_t out = 0;
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size()) {
    fail(path, "expected a non-negative integer, got '" + std::string(v) + "'");
  }
  return out;
}

std::size_t to_count(const std::string& path, std::string_view v, std::size_t min,
                     std::size_t max = SIZE_MAX) {
  const std::uint64_t n = to_u64(path, v);
  if (n < min || n > max) {
    fail(path, "must lie in [" + std::to_string(min) + ", " +
                   (max == SIZE_MAX ? std::string("inf") : std::to_string(max)) + "], got " +
                   std::string(v));
  }
  return static_cast<std::size_t>(n);
}

double to_double(const std::string& path, std::string_view v) {
  double out = 0.0;
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size() || !std::isfinite(out)) {
    fail(path, "expected a finite number, got '" + std::string(v) + "'");
  }
  return out;
}

double in_closed(const std::string& path, std::string_view v, double lo, double hi) {
  const double x = to_double(path, v);
  if (x < lo || x > hi) {
    fail(path, "must lie in [" + fmt(lo) + ", " + fmt(hi) + "], got " + std::string(v));
  }
  return x;
}

double positive(const std::string& path, std::string_view v) {
  const double x = to_double(path, v);
  if (!(x > 0.0)) fail(path, "must be positive, got " + std::string(v));
  return x;
}

double fraction(const std::string& path, std::string_view v) {
  const double x = to_double(path, v);
  if (!(x > 0.0 && x <= 1.0)) fail(path, "must lie in (0, 1], got " + std::string(v));
  return x;
}

bool to_bool(const std::string& path, std::string_view v) {
  if (v == "true") return true;
  if (v == "false") return false;
  fail(path, "expected true or false, got '" + std::string(v) + "'");
}

std::string_view b(bool v) { return v ? "true" : "false"; }

template <typename E, std::size_t N>
E to_enum(const std::string& path, std::string_view v,
          const std::pair<std::string_view, E> (&options)[N]) {
  std::string names;
  for (const auto& [name, value] : options) {
    if (v == name) return value;
    if (!names.empty()) names += ", ";
    names += name;
  }
  fail(path, "expected one of {" + names + "}, got '" + std::string(v) + "'");
}

template <typename E, std::size_t N>
std::string from_enum(E e, const std::pair<std::string_view, E> (&options)[N]) {
  for (const auto& [name, value] : options) {
    if (value == e) return std::string(name);
  }
  return {};
}

constexpr std::pair<std::string_view, DataSourceKind> kSources[] = {
    {"synthetic", DataSourceKind::kSynthetic}, {"manifest", DataSourceKind::kManifest}};
constexpr std::pair<std::string_view, PipelineOrder> kOrders[] = {
    {"clahe_then_resize", PipelineOrder::kClaheThenResize},
    {"resize_then_clahe", PipelineOrder::kResizeThenClahe}};
constexpr std::pair<std::string_view, DistillTarget> kTargets[] = {
    {"direct", DistillTarget::kDirect}, {"double_softmax", DistillTarget::kDoubleSoftmax}};
constexpr std::pair<std::string_view, Weighting> kWeightings[] = {
    {"uniform", Weighting::kUniform}, {"by_sample_count", Weighting::kBySampleCount}};
constexpr std::pair<std::string_view, ParamScope> kScopes[] = {
    {"all", ParamScope::kAll}, {"trainable", ParamScope::kTrainableOnly}};
constexpr std::pair<std::string_view, DownloadConvention> kDownloads[] = {
    {"broadcast_once", DownloadConvention::kBroadcastOnce},
    {"per_recipient", DownloadConvention::kPerRecipient}};
constexpr std::pair<std::string_view, Unit> kUnits[] = {
    {"B", Unit::kBytes}, {"MB", Unit::kMegabytes}, {"Mb", Unit::kMegabits}};

struct Field {
  std::string path;
  std::function<void(ExperimentConfig&, const std::string& path, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define FEDKD_FIELD(key, setter, getter)                                   \
  Field {                                                                  \
    key,                                                                   \
        [](ExperimentConfig& c, [[maybe_unused]] const std::string& p,     \
           std::string_view v) { setter; },                                \
        [](const ExperimentConfig& c) -> std::string { return getter; }    \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      FEDKD_FIELD("experiment.seed", c.seed = to_u64(p, v), std::to_string(c.seed)),
      FEDKD_FIELD("experiment.threads", c.threads = to_count(p, v, 1, 256),
                  std::to_string(c.threads)),

      FEDKD_FIELD("data.source", c.data.source = to_enum(p, v, kSources),
                  from_enum(c.data.source, kSources)),
      FEDKD_FIELD("data.classes", c.data.classes = to_count(p, v, 2, 1000),
                  std::to_string(c.data.classes)),
      FEDKD_FIELD("data.per_class", c.data.per_class = to_count(p, v, 1),
                  std::to_string(c.data.per_class)),
      FEDKD_FIELD("data.height", c.data.height = to_count(p, v, 4, 4096),
                  std::to_string(c.data.height)),
      FEDKD_FIELD("data.width", c.data.width = to_count(p, v, 4, 4096),
                  std::to_string(c.data.width)),
      FEDKD_FIELD("data.channels", c.data.channels = to_count(p, v, 1, 4),
                  std::to_string(c.data.channels)),
      FEDKD_FIELD("data.noise", c.data.noise = in_closed(p, v, 0.0, 1.0), fmt(c.data.noise)),
      FEDKD_FIELD("data.manifest", c.data.manifest = std::string(v), c.data.manifest),
      FEDKD_FIELD("data.preprocess", c.data.preprocess = to_bool(p, v),
                  std::string(b(c.data.preprocess))),
      FEDKD_FIELD("data.resize_height", c.data.pipeline.height = to_count(p, v, 2, 4096),
                  std::to_string(c.data.pipeline.height)),
      FEDKD_FIELD("data.resize_width", c.data.pipeline.width = to_count(p, v, 2, 4096),
                  std::to_string(c.data.pipeline.width)),
      FEDKD_FIELD("data.clahe", c.data.pipeline.apply_clahe = to_bool(p, v),
                  std::string(b(c.data.pipeline.apply_clahe))),
      FEDKD_FIELD("data.clahe_clip", c.data.pipeline.clahe.clip_limit = in_closed(p, v, 1.0, 1e6),
                  fmt(c.data.pipeline.clahe.clip_limit)),
      FEDKD_FIELD("data.clahe_tile_rows", c.data.pipeline.clahe.tile_rows = to_count(p, v, 1, 256),
                  std::to_string(c.data.pipeline.clahe.tile_rows)),
      FEDKD_FIELD("data.clahe_tile_cols", c.data.pipeline.clahe.tile_cols = to_count(p, v, 1, 256),
                  std::to_string(c.data.pipeline.clahe.tile_cols)),
      FEDKD_FIELD("data.clahe_bins", c.data.pipeline.clahe.bins = to_count(p, v, 2, 65536),
                  std::to_string(c.data.pipeline.clahe.bins)),
      FEDKD_FIELD("data.order", c.data.pipeline.order = to_enum(p, v, kOrders),
                  from_enum(c.data.pipeline.order, kOrders)),

      FEDKD_FIELD("split.private", c.split.private_fraction = fraction(p, v),
                  fmt(c.split.private_fraction)),
      FEDKD_FIELD("split.public", c.split.public_fraction = fraction(p, v),
                  fmt(c.split.public_fraction)),
      FEDKD_FIELD("split.test", c.split.test_fraction = fraction(p, v),
                  fmt(c.split.test_fraction)),
      FEDKD_FIELD("split.disjoint", c.split.disjoint = to_bool(p, v),
                  std::string(b(c.split.disjoint))),

      FEDKD_FIELD("partition.clients", c.clients = to_count(p, v, 1, 1000),
                  std::to_string(c.clients)),
      FEDKD_FIELD("partition.alpha", c.dirichlet_alpha = positive(p, v), fmt(c.dirichlet_alpha)),
      FEDKD_FIELD("partition.min_per_client", c.min_per_client = to_count(p, v, 1),
                  std::to_string(c.min_per_client)),

      FEDKD_FIELD("distill.rounds", c.distill.rounds = to_count(p, v, 1),
                  std::to_string(c.distill.rounds)),
      FEDKD_FIELD("distill.local_epochs", c.distill.local_epochs = to_count(p, v, 1),
                  std::to_string(c.distill.local_epochs)),
      FEDKD_FIELD("distill.student_epochs", c.distill.student_epochs = to_count(p, v, 1),
                  std::to_string(c.distill.student_epochs)),
      FEDKD_FIELD("distill.temperature", c.distill.temperature = positive(p, v),
                  fmt(c.distill.temperature)),
      FEDKD_FIELD("distill.alpha", c.distill.alpha = in_closed(p, v, 0.0, 1.0),
                  fmt(c.distill.alpha)),
      FEDKD_FIELD("distill.batch_size", c.distill.batch_size = to_count(p, v, 1),
                  std::to_string(c.distill.batch_size)),
      FEDKD_FIELD("distill.teacher_spec", c.distill.teacher_spec = std::string(v),
                  c.distill.teacher_spec),
      FEDKD_FIELD("distill.student_spec", c.distill.student_spec = std::string(v),
                  c.distill.student_spec),
      FEDKD_FIELD("distill.teacher_lr",
                  c.distill.teacher_optimizer.learning_rate = in_closed(p, v, 0.0, 10.0),
                  fmt(c.distill.teacher_optimizer.learning_rate)),
      FEDKD_FIELD("distill.teacher_momentum",
                  c.distill.teacher_optimizer.momentum = in_closed(p, v, 0.0, 0.999),
                  fmt(c.distill.teacher_optimizer.momentum)),
      FEDKD_FIELD("distill.student_lr",
                  c.distill.student_optimizer.learning_rate = in_closed(p, v, 0.0, 10.0),
                  fmt(c.distill.student_optimizer.learning_rate)),
      FEDKD_FIELD("distill.student_momentum",
                  c.distill.student_optimizer.momentum = in_closed(p, v, 0.0, 0.999),
                  fmt(c.distill.student_optimizer.momentum)),
      FEDKD_FIELD("distill.target", c.distill.target = to_enum(p, v, kTargets),
                  from_enum(c.distill.target, kTargets)),
      FEDKD_FIELD("distill.scale_t2", c.distill.scale_t2 = to_bool(p, v),
                  std::string(b(c.distill.scale_t2))),
      FEDKD_FIELD("distill.reset_teachers", c.distill.reset_teachers = to_bool(p, v),
                  std::string(b(c.distill.reset_teachers))),

      FEDKD_FIELD("fedavg.rounds", c.fedavg.rounds = to_count(p, v, 1),
                  std::to_string(c.fedavg.rounds)),
      FEDKD_FIELD("fedavg.local_epochs", c.fedavg.local_epochs = to_count(p, v, 1),
                  std::to_string(c.fedavg.local_epochs)),
      FEDKD_FIELD("fedavg.batch_size", c.fedavg.batch_size = to_count(p, v, 1),
                  std::to_string(c.fedavg.batch_size)),
      FEDKD_FIELD("fedavg.model_spec", c.fedavg.model_spec = std::string(v), c.fedavg.model_spec),
      FEDKD_FIELD("fedavg.learning_rate",
                  c.fedavg.optimizer.learning_rate = in_closed(p, v, 0.0, 10.0),
                  fmt(c.fedavg.optimizer.learning_rate)),
      FEDKD_FIELD("fedavg.momentum", c.fedavg.optimizer.momentum = in_closed(p, v, 0.0, 0.999),
                  fmt(c.fedavg.optimizer.momentum)),
      FEDKD_FIELD("fedavg.weighting", c.fedavg.weighting = to_enum(p, v, kWeightings),
                  from_enum(c.fedavg.weighting, kWeightings)),

      FEDKD_FIELD("comms.bytes_per_value", c.encoding.bytes_per_value = to_count(p, v, 1, 8);
                  if (c.encoding.bytes_per_value != 2 && c.encoding.bytes_per_value != 4 &&
                      c.encoding.bytes_per_value != 8) fail(p, "must be 2, 4 or 8"),
                  std::to_string(c.encoding.bytes_per_value)),
      FEDKD_FIELD("comms.unit", c.encoding.unit = to_enum(p, v, kUnits),
                  from_enum(c.encoding.unit, kUnits)),
      FEDKD_FIELD("comms.overhead_bytes", c.encoding.overhead_bytes_per_message = to_count(p, v, 0),
                  std::to_string(c.encoding.overhead_bytes_per_message)),
      FEDKD_FIELD("comms.scope", c.encoding.scope = to_enum(p, v, kScopes),
                  from_enum(c.encoding.scope, kScopes)),
      FEDKD_FIELD("comms.download", c.encoding.download = to_enum(p, v, kDownloads),
                  from_enum(c.encoding.download, kDownloads)),
  };
  return table;
}

#undef FEDKD_FIELD

using FlatMap = std::vector<std::pair<std::string, std::string>>;

FlatMap flatten_ini(std::string_view text) {
  FlatMap out;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  for (std::size_t line_no = 1; std::getline(in, raw); ++line_no) {
    const auto hash = raw.find_first_of("#;");
    const std::string line = trim(std::string_view(raw).substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ConfigError("line " + std::to_string(line_no) + ": malformed section header");
      }
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    if (section.empty()) {
      throw ConfigError("line " + std::to_string(line_no) + ": key '" + key +
                        "' appears before any [section]");
    }
    out.emplace_back(section + "." + key, trim(std::string_view(line).substr(eq + 1)));
  }
  return out;
}

void flatten_json(const nlohmann::json& j, const std::string& prefix, FlatMap& out) {
  if (j.is_object()) {
    for (const auto& [key, value] : j.items()) {
      flatten_json(value, prefix.empty() ? key : prefix + "." + key, out);
    }
    return;
  }
  if (prefix.empty()) throw ConfigError("JSON config must be an object");
  if (j.is_string()) {
    out.emplace_back(prefix, j.get<std::string>());
  } else if (j.is_boolean() || j.is_number()) {
    out.emplace_back(prefix, j.dump());
  } else {
    fail(prefix, "unsupported JSON value " + j.dump());
  }
}

ExperimentConfig apply(const FlatMap& entries) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  for (const auto& [path, value] : entries) {
    const auto& table = fields();
    auto it = std::find_if(table.begin(), table.end(),
                           [&](const Field& f) { return f.path == path; });
    if (it == table.end()) fail(path, "unknown key");
    if (!seen.insert(path).second) fail(path, "given more than once");
    it->set(cfg, path, value);
  }
  if (cfg.data.source == DataSourceKind::kManifest && cfg.data.manifest.empty()) {
    fail("data.manifest", "required when data.source = manifest");
  }
  return cfg;
}

std::string resolve_ref(const ExperimentConfig& cfg, const std::string& ref) {
  if (ref.starts_with("builtin:")) return ref;
  const std::filesystem::path p(ref);
  return p.is_absolute() ? ref : (cfg.base_dir / p).string();
}

ModelSpec spec_for(const ExperimentConfig& cfg, const std::string& path, const std::string& ref) {
  try {
    return resolve_model_spec(resolve_ref(cfg, ref));
  } catch (const FormatError& e) {
    fail(path, e.what());
  } catch (const IoError& e) {
    fail(path, e.what());
  } catch (const ConfigError& e) {
    fail(path, e.what());
  }
}

}  // namespace

ExperimentConfig parse_config(std::string_view text, bool json) {
  if (!json) return apply(flatten_ini(text));
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("JSON config must be an object");
  FlatMap entries;
  flatten_json(doc, "", entries);
  return apply(entries);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  const bool json = path.extension() == ".json" || (first != std::string::npos && text[first] == '{');
  ExperimentConfig cfg = parse_config(text, json);
  cfg.base_dir = path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path();
  return cfg;
}

std::string canonical_config(const ExperimentConfig& cfg) {
  std::string out;
  std::string section;
  for (const Field& f : fields()) {
    const auto dot = f.path.find('.');
    const std::string sec = f.path.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out += '\n';
      out += "[" + sec + "]\n";
      section = sec;
    }
    out += f.path.substr(dot + 1) + " = " + f.get(cfg) + "\n";
  }
  return out;
}

std::shared_ptr<const LabeledDataset> load_dataset(const ExperimentConfig& cfg) {
  if (cfg.data.source == DataSourceKind::kSynthetic) {
    SyntheticOptions o;
    o.classes = cfg.data.classes;
    o.per_class = cfg.data.per_class;
    o.height = cfg.data.height;
    o.width = cfg.data.width;
    o.channels = cfg.data.channels;
    o.noise = cfg.data.noise;
    o.seed = derive_seed(cfg.seed, {10});
    return std::make_shared<const LabeledDataset>(generate_synthetic(o));
  }
  const std::filesystem::path manifest = resolve_ref(cfg, cfg.data.manifest);
  if (!std::filesystem::exists(manifest)) {
    fail("data.manifest", "file '" + manifest.string() + "' does not exist");
  }
  ManifestOptions o;
  if (cfg.data.preprocess) o.pipeline = cfg.data.pipeline;
  o.channels = cfg.data.channels;
  return std::make_shared<const LabeledDataset>(load_manifest(manifest, o));
}

SplitSpec make_split_spec(const ExperimentConfig& cfg) {
  SplitSpec s = cfg.split;
  s.seed = derive_seed(cfg.seed, {11});
  return s;
}

PartitionConfig make_partition_config(const ExperimentConfig& cfg) {
  PartitionConfig p;
  p.num_clients = cfg.clients;
  p.alpha = cfg.dirichlet_alpha;
  p.min_per_client = cfg.min_per_client;
  p.seed = derive_seed(cfg.seed, {12});
  return p;
}

DistillConfig make_distill_config(const ExperimentConfig& cfg) {
  DistillConfig d;
  d.num_teachers = cfg.clients;
  d.rounds = cfg.distill.rounds;
  d.local_epochs = cfg.distill.local_epochs;
  d.student_epochs = cfg.distill.student_epochs;
  d.temperature = cfg.distill.temperature;
  d.alpha = cfg.distill.alpha;
  d.teacher_spec = spec_for(cfg, "distill.teacher_spec", cfg.distill.teacher_spec);
  d.student_spec = spec_for(cfg, "distill.student_spec", cfg.distill.student_spec);
  d.teacher_optimizer = cfg.distill.teacher_optimizer;
  d.student_optimizer = cfg.distill.student_optimizer;
  d.batch_size = cfg.distill.batch_size;
  d.seed = derive_seed(cfg.seed, {13});
  d.distill_target = cfg.distill.target;
  d.scale_distill_by_t2 = cfg.distill.scale_t2;
  d.reset_teachers = cfg.distill.reset_teachers;
  d.threads = cfg.threads;
  d.encoding = cfg.encoding;
  return d;
}

FedAvgConfig make_fedavg_config(const ExperimentConfig& cfg) {
  FedAvgConfig f;
  f.num_clients = cfg.clients;
  f.rounds = cfg.fedavg.rounds;
  f.local_epochs = cfg.fedavg.local_epochs;
  f.model_spec = spec_for(cfg, "fedavg.model_spec", cfg.fedavg.model_spec);
  f.optimizer = cfg.fedavg.optimizer;
  f.batch_size = cfg.fedavg.batch_size;
  f.seed = derive_seed(cfg.seed, {14});
  f.weighting = cfg.fedavg.weighting;
  f.threads = cfg.threads;
  f.encoding = cfg.encoding;
  return f;
}

}  // namespace fedkd
