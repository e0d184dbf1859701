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

#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fedkd/checkpoint.hpp"
#include "fedkd/config.hpp"
#include "fedkd/errors.hpp"
#include "fedkd/pgm.hpp"
#include "fedkd/report.hpp"
#include "fedkd/spec_io.hpp"

namespace fedkd::cli {

namespace fs = std::filesystem;

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

// Thrown for problems with the command's inputs; maps to exit code 1.
class InputError : public Error {
 public:
  using Error::Error;
};

void write_text(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::string format_amount(std::uint64_t bytes, Unit unit) {
  if (unit == Unit::kBytes) return std::to_string(bytes);
  return fixed(convert_bytes(bytes, unit), 2);
}

std::string pad(std::string s, std::size_t width, bool left = false) {
  if (s.size() >= width) return s;
  return left ? s + std::string(width - s.size(), ' ') : std::string(width - s.size(), ' ') + s;
}

using Row = std::vector<std::string>;

// `align` holds 'l' or 'r' per column; by default only the first column is
// left-aligned.
void print_table(std::ostream& out, const Row& header, const std::vector<Row>& rows,
                 std::string align = {}) {
  align.resize(header.size(), 'r');
  if (align.front() == 'r' && align.find('l') == std::string::npos) align.front() = 'l';
  std::vector<std::size_t> widths(header.size(), 0);
  auto measure = [&](const Row& r) {
    for (std::size_t i = 0; i < r.size(); ++i) widths[i] = std::max(widths[i], r[i].size());
  };
  measure(header);
  for (const Row& r : rows) measure(r);
  auto emit = [&](const Row& r) {
    std::string line;
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i > 0) line += "  ";
      line += pad(r[i], widths[i], align[i] == 'l');
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << '\n';
  };
  emit(header);
  for (const Row& r : rows) emit(r);
}

struct RunOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "runs";
  std::optional<std::size_t> threads;
  bool force = false;
};

ExperimentConfig load_effective_config(const RunOptions& o) {
  ExperimentConfig cfg = load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.threads) {
    if (*o.threads == 0) throw ConfigError("--threads: must be at least 1");
    cfg.threads = *o.threads;
  }
  return cfg;
}

// Run directories are keyed by everything that can change the results;
// the thread count is not part of the key.
fs::path run_directory(const RunOptions& o, const ExperimentConfig& cfg, Protocol protocol) {
  ExperimentConfig keyed = cfg;
  keyed.threads = 1;
  const std::string name = std::string(to_string(protocol)) + "-" +
                           hex16(fnv1a64(canonical_config(keyed))) + "-s" +
                           std::to_string(cfg.seed);
  return fs::path(o.out) / name;
}

void prepare_run_directory(const fs::path& dir, bool force) {
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!force) {
      throw InputError("run directory " + dir.string() +
                       " already exists; pass --force to overwrite it");
    }
    fs::remove_all(dir);
  }
  fs::create_directories(dir);
}

int cmd_run(const RunOptions& o, Protocol protocol, std::ostream& out) {
  const ExperimentConfig cfg = load_effective_config(o);
  auto dataset = load_dataset(cfg);
  const ExperimentData data = split_dataset(dataset, make_split_spec(cfg));
  const Partition partition =
      dirichlet_partition(data.private_pool.labels(), make_partition_config(cfg));

  ExperimentReport report;
  if (protocol == Protocol::kFkd) {
    const DistillConfig dc = make_distill_config(cfg);
    validate_distill_config(dc);
    const fs::path dir = run_directory(o, cfg, protocol);
    prepare_run_directory(dir, o.force);
    report = run_fkd_experiment(dc, data, partition);
    save_checkpoint(dir / "student", report.final_model);
    write_text(dir / "config.cfg", canonical_config(cfg));
    write_text(dir / "report.json", report_to_json_string(report));
    write_text(dir / "rounds.csv", rounds_csv(report));
    report.ledger.write_csv(dir / "ledger.csv");
    out << dir.string() << '\n';
  } else {
    const FedAvgConfig fc = make_fedavg_config(cfg);
    validate_fedavg_config(fc);
    const fs::path dir = run_directory(o, cfg, protocol);
    prepare_run_directory(dir, o.force);
    report = run_fedavg_experiment(fc, data, partition);
    save_checkpoint(dir / "global", report.final_model);
    write_text(dir / "config.cfg", canonical_config(cfg));
    write_text(dir / "report.json", report_to_json_string(report));
    write_text(dir / "rounds.csv", rounds_csv(report));
    report.ledger.write_csv(dir / "ledger.csv");
    out << dir.string() << '\n';
  }
  return kExitOk;
}

ExperimentReport load_report(const std::string& where) {
  fs::path path(where);
  if (fs::is_directory(path)) path /= "report.json";
  const std::string text = read_text(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(path.string() + ": not valid JSON: " + e.what());
  }
  try {
    return report_from_json(j);
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

struct CompareRow {
  std::string metric;
  std::string a;
  std::string b;
};

std::string accuracy_at(const ExperimentReport& r, std::size_t round) {
  for (const RoundMetrics& m : r.rounds) {
    if (m.round == round) return fixed(100.0 * m.test_accuracy, 2);
  }
  return "n/a";
}

int cmd_compare(const std::string& a_path, const std::string& b_path, Unit unit,
                const std::string& csv_path, std::ostream& out) {
  const ExperimentReport a = load_report(a_path);
  const ExperimentReport b = load_report(b_path);
  auto last = [](const ExperimentReport& r) -> const RoundMetrics& {
    if (r.rounds.empty()) throw SchemaError("report has no rounds");
    return r.rounds.back();
  };
  const std::string u(unit_label(unit));
  const std::vector<CompareRow> rows = {
      {"protocol", std::string(to_string(a.protocol)), std::string(to_string(b.protocol))},
      {"participants", std::to_string(a.participants), std::to_string(b.participants)},
      {"rounds", std::to_string(a.rounds.size()), std::to_string(b.rounds.size())},
      {"round_10_accuracy_pct", accuracy_at(a, 10), accuracy_at(b, 10)},
      {"last_round_accuracy_pct", fixed(100.0 * last(a).test_accuracy, 2),
       fixed(100.0 * last(b).test_accuracy, 2)},
      {"upload_per_round_" + u, format_amount(last(a).upload_bytes, unit),
       format_amount(last(b).upload_bytes, unit)},
      {"download_per_round_" + u, format_amount(last(a).download_bytes, unit),
       format_amount(last(b).download_bytes, unit)},
  };

  std::vector<Row> table;
  for (const CompareRow& r : rows) table.push_back({r.metric, r.a, r.b});
  print_table(out, {"metric", a_path, b_path}, table);

  std::ostringstream csv;
  csv << "metric,a,b\n";
  for (const CompareRow& r : rows) csv << r.metric << ',' << r.a << ',' << r.b << '\n';
  write_text(csv_path, csv.str());
  return kExitOk;
}

int cmd_partition_report(const RunOptions& o, const std::string& csv_path, std::ostream& out) {
  const ExperimentConfig cfg = load_effective_config(o);
  auto dataset = load_dataset(cfg);
  const ExperimentData data = split_dataset(dataset, make_split_spec(cfg));
  const std::vector<std::size_t> labels = data.private_pool.labels();
  const Partition partition = dirichlet_partition(labels, make_partition_config(cfg));
  const PartitionReport rep = partition_stats(partition, labels);

  const std::size_t classes = rep.global_distribution.size();
  Row header = {"client", "size"};
  for (std::size_t k = 0; k < classes; ++k) header.push_back("p_" + std::to_string(k));
  header.push_back("tv");

  std::vector<Row> table;
  std::ostringstream csv;
  for (std::size_t i = 0; i < header.size(); ++i) csv << (i ? "," : "") << header[i];
  csv << '\n';
  auto emit = [&](const std::string& who, std::size_t size, const std::vector<double>& p,
                  std::optional<double> tv) {
    Row row = {who, std::to_string(size)};
    csv << who << ',' << size;
    for (double v : p) {
      row.push_back(fixed(v, 4));
      csv << ',' << fixed(v, 6);
    }
    row.push_back(tv ? fixed(*tv, 4) : "");
    csv << ',' << (tv ? fixed(*tv, 6) : "") << '\n';
    table.push_back(std::move(row));
  };
  for (std::size_t c = 0; c < rep.sizes.size(); ++c) {
    emit(std::to_string(c), rep.sizes[c], rep.class_proportions[c], rep.client_tv[c]);
  }
  emit("global", labels.size(), rep.global_distribution, std::nullopt);
  print_table(out, header, table);
  out << "heterogeneity " << fixed(rep.heterogeneity, 6) << '\n';
  csv << "heterogeneity,,";
  for (std::size_t k = 0; k < classes; ++k) csv << ',';
  csv << fixed(rep.heterogeneity, 6) << '\n';
  write_text(csv_path, csv.str());
  return kExitOk;
}

int cmd_audit_model(const std::string& ref, std::ostream& out) {
  ModelSpec spec;
  try {
    spec = resolve_model_spec(ref);
  } catch (const IoError& e) {
    throw InputError(e.what());
  }
  const std::vector<LayerAudit> rows = audit_model(spec);
  std::vector<Row> table;
  ParamCounts totals;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const LayerAudit& r = rows[i];
    table.push_back({std::to_string(i + 1), r.name, r.kind, shape_to_string(r.output_shape),
                     std::to_string(r.params.total)});
    totals.total += r.params.total;
    totals.trainable += r.params.trainable;
    totals.non_trainable += r.params.non_trainable;
  }
  print_table(out, {"#", "layer", "type", "output shape", "params"}, table, "rlllr");
  out << "total params: " << totals.total << '\n'
      << "trainable params: " << totals.trainable << '\n'
      << "non-trainable params: " << totals.non_trainable << '\n';
  return kExitOk;
}

struct PreprocessOptions {
  std::string in_dir;
  std::string out_dir;
  PipelineOptions pipeline;
  bool no_clahe = false;
  bool force = false;
};

int cmd_preprocess(PreprocessOptions o, std::ostream& out, std::ostream& err) {
  if (!fs::is_directory(o.in_dir)) throw InputError("input directory " + o.in_dir + " not found");
  o.pipeline.apply_clahe = !o.no_clahe;
  validate_clahe_config(o.pipeline.clahe);

  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(o.in_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") {
      files.push_back(fs::relative(entry.path(), o.in_dir));
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw InputError("no .pgm files under " + o.in_dir);
  if (fs::exists(o.out_dir) && !fs::is_empty(o.out_dir) && !o.force) {
    throw InputError("output directory " + o.out_dir + " is not empty; pass --force");
  }
  fs::create_directories(o.out_dir);

  std::ostringstream manifest;
  manifest << "path,label\n";
  for (const fs::path& rel : files) {
    const fs::path src = fs::path(o.in_dir) / rel;
    GrayImage processed;
    try {
      processed = preprocess_image(read_pgm(src), o.pipeline);
    } catch (const Error& e) {
      err << "fedkd: failed to preprocess " << src.string() << ": " << e.what() << '\n';
      return kExitRuntime;
    }
    const fs::path dst = fs::path(o.out_dir) / rel;
    fs::create_directories(dst.parent_path());
    write_pgm(dst, quantize(processed, 8));
    const std::string label =
        rel.has_parent_path() ? rel.parent_path().generic_string() : std::string("unlabeled");
    manifest << rel.generic_string() << ',' << label << '\n';
  }
  write_text(fs::path(o.out_dir) / "manifest.csv", manifest.str());
  out << "processed " << files.size() << " images into " << o.out_dir << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string_view>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Federated knowledge distillation simulator"};
  app.name(args.empty() ? "fedkd" : std::string(args.front()));
  app.require_subcommand(1);

  RunOptions fkd_opts, avg_opts, part_opts;
  auto add_run_flags = [](CLI::App* sub, RunOptions& o) {
    sub->add_option("--config", o.config, "Experiment config (sectioned text or JSON)")
        ->required();
    sub->add_option("--seed", o.seed, "Override experiment.seed");
    sub->add_option("--threads", o.threads, "Worker threads for teachers or clients");
  };
  CLI::App* run_fkd = app.add_subcommand("run-fkd", "Run a distillation experiment");
  add_run_flags(run_fkd, fkd_opts);
  run_fkd->add_option("--out", fkd_opts.out, "Parent directory for run directories");
  run_fkd->add_flag("--force", fkd_opts.force, "Overwrite an existing run directory");

  CLI::App* run_avg = app.add_subcommand("run-fedavg", "Run the parameter-averaging baseline");
  add_run_flags(run_avg, avg_opts);
  run_avg->add_option("--out", avg_opts.out, "Parent directory for run directories");
  run_avg->add_flag("--force", avg_opts.force, "Overwrite an existing run directory");

  std::string cmp_a, cmp_b, cmp_unit = "Mb", cmp_csv = "compare.csv";
  CLI::App* compare = app.add_subcommand("compare", "Compare two experiment reports");
  compare->add_option("report_a", cmp_a, "report.json or run directory")->required();
  compare->add_option("report_b", cmp_b, "report.json or run directory")->required();
  compare->add_option("--unit", cmp_unit, "Traffic unit")
      ->check(CLI::IsMember({"B", "MB", "Mb"}));
  compare->add_option("--out", cmp_csv, "CSV output path");

  std::string part_csv = "partition_report.csv";
  CLI::App* partition = app.add_subcommand("partition-report", "Show client label skew");
  add_run_flags(partition, part_opts);
  partition->add_option("--out", part_csv, "CSV output path");

  std::string audit_ref;
  CLI::App* audit = app.add_subcommand("audit-model", "Print layer shapes and parameter counts");
  audit->add_option("spec", audit_ref, "Spec file or builtin:<name>")->required();

  PreprocessOptions pre;
  CLI::App* preprocess = app.add_subcommand("preprocess", "Normalize, CLAHE and resize PGMs");
  preprocess->add_option("input", pre.in_dir, "Directory of PGM files")->required();
  preprocess->add_option("output", pre.out_dir, "Output directory")->required();
  preprocess->add_option("--height", pre.pipeline.height, "Output height");
  preprocess->add_option("--width", pre.pipeline.width, "Output width");
  preprocess->add_option("--clip", pre.pipeline.clahe.clip_limit, "CLAHE clip limit");
  preprocess->add_option("--tiles", pre.pipeline.clahe.tile_rows, "CLAHE tile grid (square)")
      ->each([&](const std::string&) { pre.pipeline.clahe.tile_cols = pre.pipeline.clahe.tile_rows; });
  preprocess->add_flag("--no-clahe", pre.no_clahe, "Skip CLAHE");
  preprocess->add_flag("--force", pre.force, "Write into a non-empty output directory");

  SyntheticOptions syn;
  syn.per_class = 300;
  std::string syn_out;
  bool syn_force = false;
  CLI::App* gen = app.add_subcommand("gen-synthetic", "Write the synthetic dataset as PGMs");
  gen->add_option("--out", syn_out, "Output directory")->required();
  gen->add_option("--classes", syn.classes, "Number of classes");
  gen->add_option("--per-class", syn.per_class, "Images per class");
  gen->add_option("--height", syn.height, "Image height");
  gen->add_option("--width", syn.width, "Image width");
  gen->add_option("--noise", syn.noise, "Pixel noise standard deviation");
  gen->add_option("--seed", syn.seed, "Generator seed");
  gen->add_flag("--force", syn_force, "Write into a non-empty output directory");

  std::vector<std::string> argv;
  for (std::size_t i = args.size(); i > 1; --i) argv.emplace_back(args[i - 1]);
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*run_fkd) return cmd_run(fkd_opts, Protocol::kFkd, out);
    if (*run_avg) return cmd_run(avg_opts, Protocol::kFedAvg, out);
    if (*compare) return cmd_compare(cmp_a, cmp_b, parse_unit(cmp_unit), cmp_csv, out);
    if (*partition) return cmd_partition_report(part_opts, part_csv, out);
    if (*audit) return cmd_audit_model(audit_ref, out);
    if (*preprocess) return cmd_preprocess(pre, out, err);
    if (*gen) {
      if (fs::exists(syn_out) && !fs::is_empty(syn_out) && !syn_force) {
        throw InputError("output directory " + syn_out + " is not empty; pass --force");
      }
      syn.channels = 1;
      write_dataset_tree(generate_synthetic(syn), syn_out);
      out << "wrote " << syn.classes * syn.per_class << " images to " << syn_out << '\n';
      return kExitOk;
    }
  } catch (const InputError& e) {
    err << "fedkd: " << e.what() << '\n';
    return kExitInput;
  } catch (const ConfigError& e) {
    err << "fedkd: config error: " << e.what() << '\n';
    return kExitInput;
  } catch (const FormatError& e) {
    err << "fedkd: " << e.what() << '\n';
    return kExitInput;
  } catch (const SchemaError& e) {
    err << "fedkd: schema error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "fedkd: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitInput;
}

}  // namespace fedkd::cli
