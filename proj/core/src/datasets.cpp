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

#include "fedkd/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "fedkd/errors.hpp"
#include "fedkd/pgm.hpp"
#include "fedkd/seed.hpp"

namespace fedkd {

const Shape& LabeledDataset::image_shape() const {
  if (images.empty()) throw ShapeError("dataset is empty");
  return images.front().shape();
}

void LabeledDataset::validate() const {
  if (images.size() != labels.size()) {
    throw ShapeError("dataset has " + std::to_string(images.size()) + " images and " +
                     std::to_string(labels.size()) + " labels");
  }
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].shape() != images.front().shape()) {
      throw ShapeError("image " + std::to_string(i) + " has shape " +
                       shape_to_string(images[i].shape()) + ", expected " +
                       shape_to_string(images.front().shape()));
    }
    if (labels[i] >= class_names.size()) {
      throw DomainError("label " + std::to_string(labels[i]) + " out of range");
    }
  }
}

DatasetView::DatasetView(std::shared_ptr<const LabeledDataset> base,
                         std::vector<std::size_t> indices)
    : base_(std::move(base)), indices_(std::move(indices)) {
  for (std::size_t i : indices_) {
    if (i >= base_->size()) throw DomainError("dataset view index out of range");
  }
}

DatasetView DatasetView::all(std::shared_ptr<const LabeledDataset> base) {
  std::vector<std::size_t> idx(base->size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return DatasetView(std::move(base), std::move(idx));
}

std::vector<std::size_t> DatasetView::labels() const {
  std::vector<std::size_t> out;
  out.reserve(indices_.size());
  for (std::size_t i : indices_) out.push_back(base_->labels[i]);
  return out;
}

DatasetView DatasetView::subset(std::span<const std::size_t> positions) const {
  std::vector<std::size_t> idx;
  idx.reserve(positions.size());
  for (std::size_t p : positions) idx.push_back(indices_.at(p));
  return DatasetView(base_, std::move(idx));
}

Tensor DatasetView::batch(std::span<const std::size_t> positions) const {
  std::vector<const Tensor*> items;
  items.reserve(positions.size());
  for (std::size_t p : positions) items.push_back(&image(p));
  return stack(items);
}

std::vector<std::size_t> DatasetView::batch_labels(std::span<const std::size_t> positions) const {
  std::vector<std::size_t> out;
  out.reserve(positions.size());
  for (std::size_t p : positions) out.push_back(label(p));
  return out;
}

LabeledDataset generate_synthetic(const SyntheticOptions& o) {
  if (o.classes < 2) throw DomainError("synthetic data needs at least 2 classes");
  if (o.per_class < 1) throw DomainError("synthetic data needs at least 1 sample per class");
  if (o.height < 4 || o.width < 4 || o.channels < 1) {
    throw DomainError("synthetic images must be at least 4x4 with one channel");
  }
  if (!(o.noise >= 0.0)) throw DomainError("noise scale must be non-negative");

  LabeledDataset ds;
  ds.provenance = Provenance::kSynthetic;
  for (std::size_t c = 0; c < o.classes; ++c) ds.class_names.push_back("class_" + std::to_string(c));

  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double extent = static_cast<double>(std::min(o.height, o.width));
  const double radius = 0.25 * extent;
  const double sigma = 0.12 * extent;
  const double jitter = 0.05 * extent;
  const double k = static_cast<double>(o.classes);

  for (std::size_t c = 0; c < o.classes; ++c) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) / k;
    const double orient = std::numbers::pi * static_cast<double>(c) / k;
    const double freq = 2.0 * std::numbers::pi * static_cast<double>(2 + c % 3) / extent;
    for (std::size_t s = 0; s < o.per_class; ++s) {
      const double cy = 0.5 * static_cast<double>(o.height) + radius * std::sin(angle) +
                        jitter * (2.0 * unit(rng) - 1.0);
      const double cx = 0.5 * static_cast<double>(o.width) + radius * std::cos(angle) +
                        jitter * (2.0 * unit(rng) - 1.0);
      const double phase = 2.0 * std::numbers::pi * unit(rng);
      Tensor img({o.height, o.width, o.channels});
      for (std::size_t y = 0; y < o.height; ++y) {
        for (std::size_t x = 0; x < o.width; ++x) {
          const double dy = static_cast<double>(y) - cy;
          const double dx = static_cast<double>(x) - cx;
          const double blob = 0.5 * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
          const double along = static_cast<double>(x) * std::cos(orient) +
                               static_cast<double>(y) * std::sin(orient);
          const double grating = 0.1 * std::sin(freq * along + phase);
          const double v = std::clamp(0.25 + blob + grating + o.noise * gauss(rng), 0.0, 1.0);
          for (std::size_t ch = 0; ch < o.channels; ++ch) {
            img[(y * o.width + x) * o.channels + ch] = v;
          }
        }
      }
      ds.images.push_back(std::move(img));
      ds.labels.push_back(c);
    }
  }
  return ds;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

GrayImage tensor_to_gray(const Tensor& t) {
  GrayImage g{t.dim(0), t.dim(1), std::vector<double>(t.dim(0) * t.dim(1))};
  const std::size_t ch = t.dim(2);
  for (std::size_t i = 0; i < g.pixels.size(); ++i) g.pixels[i] = t[i * ch];
  return g;
}

}  // namespace

LabeledDataset load_manifest(const std::filesystem::path& manifest,
                             const ManifestOptions& options) {
  std::ifstream in(manifest);
  if (!in) throw IoError("cannot open manifest " + manifest.string());
  const auto root = manifest.parent_path();
  LabeledDataset ds;
  ds.provenance = Provenance::kManifest;
  std::map<std::string, std::size_t> class_index;
  std::string line;
  std::size_t row = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++row;
    line = trim(line);
    if (line.empty()) continue;
    if (!header) {
      if (line != "path,label") {
        throw FormatError(manifest.string() + " row " + std::to_string(row) +
                          ": expected header 'path,label'");
      }
      header = true;
      continue;
    }
    const auto comma = line.rfind(',');
    if (comma == std::string::npos || comma == 0 || comma + 1 == line.size()) {
      throw FormatError(manifest.string() + " row " + std::to_string(row) +
                        ": expected 'path,label'");
    }
    const std::string rel = trim(line.substr(0, comma));
    const std::string label = trim(line.substr(comma + 1));
    auto [it, inserted] = class_index.emplace(label, ds.class_names.size());
    if (inserted) ds.class_names.push_back(label);

    const RawImage raw = read_pgm(root / rel);
    const GrayImage gray =
        options.pipeline ? preprocess_image(raw, *options.pipeline) : normalize(raw);
    Tensor img = replicate_channels(gray, options.channels);
    if (!ds.images.empty() && img.shape() != ds.images.front().shape()) {
      throw ShapeError(manifest.string() + " row " + std::to_string(row) + ": image " + rel +
                       " has shape " + shape_to_string(img.shape()) + ", expected " +
                       shape_to_string(ds.images.front().shape()));
    }
    ds.images.push_back(std::move(img));
    ds.labels.push_back(it->second);
  }
  if (ds.images.empty()) throw FormatError(manifest.string() + ": manifest has no images");
  return ds;
}

void write_dataset_tree(const LabeledDataset& dataset, const std::filesystem::path& out_dir) {
  dataset.validate();
  std::filesystem::create_directories(out_dir);
  std::ofstream manifest(out_dir / "manifest.csv");
  if (!manifest) throw IoError("cannot write " + (out_dir / "manifest.csv").string());
  manifest << "path,label\n";
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const std::string& cls = dataset.class_names[dataset.labels[i]];
    std::filesystem::create_directories(out_dir / cls);
    std::ostringstream name;
    name << cls << '/' << i << ".pgm";
    write_pgm(out_dir / name.str(), quantize(tensor_to_gray(dataset.images[i]), 8));
    manifest << name.str() << ',' << cls << '\n';
  }
}

void validate_split_spec(const SplitSpec& s) {
  for (double f : {s.private_fraction, s.public_fraction, s.test_fraction}) {
    if (!(f > 0.0 && f <= 1.0)) throw DomainError("split fractions must be in (0,1]");
  }
  if (s.disjoint && s.private_fraction + s.public_fraction + s.test_fraction > 1.0 + 1e-12) {
    throw DomainError("disjoint split fractions sum to more than 1");
  }
}

std::size_t split_size(double fraction, std::size_t n) {
  const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
  return std::max<std::size_t>(1, std::min(k, n));
}

ExperimentData split_dataset(std::shared_ptr<const LabeledDataset> dataset,
                             const SplitSpec& spec) {
  validate_split_spec(spec);
  const std::size_t n = dataset->size();
  if (n == 0) throw DomainError("cannot split an empty dataset");
  const std::size_t sizes[3] = {split_size(spec.private_fraction, n),
                                split_size(spec.public_fraction, n),
                                split_size(spec.test_fraction, n)};
  std::vector<std::size_t> parts[3];
  if (spec.disjoint) {
    if (sizes[0] + sizes[1] + sizes[2] > n) {
      throw DomainError("dataset too small for a disjoint split");
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(derive_seed(spec.seed, {0}));
    std::shuffle(perm.begin(), perm.end(), rng);
    std::size_t offset = 0;
    for (int d = 0; d < 3; ++d) {
      parts[d].assign(perm.begin() + static_cast<std::ptrdiff_t>(offset),
                      perm.begin() + static_cast<std::ptrdiff_t>(offset + sizes[d]));
      offset += sizes[d];
    }
  } else {
    for (int d = 0; d < 3; ++d) {
      std::vector<std::size_t> perm(n);
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      std::mt19937_64 rng(derive_seed(spec.seed, {static_cast<std::uint64_t>(d + 1)}));
      std::shuffle(perm.begin(), perm.end(), rng);
      parts[d].assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(sizes[d]));
    }
  }
  for (auto& p : parts) std::sort(p.begin(), p.end());
  return {DatasetView(dataset, std::move(parts[0])), DatasetView(dataset, std::move(parts[1])),
          DatasetView(dataset, std::move(parts[2]))};
}

}  // namespace fedkd
