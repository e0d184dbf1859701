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

#ifndef FEDKD_DATASETS_HPP_
#define FEDKD_DATASETS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedkd/preprocess.hpp"
#include "fedkd/tensor.hpp"

namespace fedkd {

enum class Provenance { kSynthetic, kManifest };

/// Images of one shared (H, W, C) shape with class-index labels.
struct LabeledDataset {
  std::vector<Tensor> images;
  std::vector<std::size_t> labels;
  std::vector<std::string> class_names;
  Provenance provenance = Provenance::kSynthetic;

  std::size_t size() const noexcept { return images.size(); }
  const Shape& image_shape() const;
  // Throws ShapeError / DomainError when the invariants do not hold.
  void validate() const;
};

/// Read-only index view into a shared dataset. Views are cheap to copy and
/// safe to read from several threads.
class DatasetView {
 public:
  DatasetView() = default;
  DatasetView(std::shared_ptr<const LabeledDataset> base, std::vector<std::size_t> indices);
  static DatasetView all(std::shared_ptr<const LabeledDataset> base);

  std::size_t size() const noexcept { return indices_.size(); }
  bool empty() const noexcept { return indices_.empty(); }
  const Tensor& image(std::size_t i) const { return base_->images[indices_.at(i)]; }
  std::size_t label(std::size_t i) const { return base_->labels[indices_.at(i)]; }
  std::vector<std::size_t> labels() const;
  std::size_t num_classes() const { return base_->class_names.size(); }
  const Shape& image_shape() const { return base_->image_shape(); }
  // Indices into the underlying dataset.
  const std::vector<std::size_t>& indices() const noexcept { return indices_; }

  // Positions are relative to this view.
  DatasetView subset(std::span<const std::size_t> positions) const;
  Tensor batch(std::span<const std::size_t> positions) const;
  std::vector<std::size_t> batch_labels(std::span<const std::size_t> positions) const;

 private:
  std::shared_ptr<const LabeledDataset> base_;
  std::vector<std::size_t> indices_;
};

struct SyntheticOptions {
  std::size_t classes = 3;
  std::size_t per_class = 100;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t channels = 1;
  double noise = 0.05;  // standard deviation of the additive pixel noise
  std::uint64_t seed = 0;
};

// Class c draws a Gaussian blob at a class-specific angle around the image
// centre plus a grating at a class-specific orientation, with per-sample
// jitter, random grating phase and Gaussian pixel noise, clamped to [0,1].
// Samples are ordered class by class.
LabeledDataset generate_synthetic(const SyntheticOptions& options);

struct ManifestOptions {
  // Applied to every image after loading; none keeps the normalized source.
  std::optional<PipelineOptions> pipeline;
  std::size_t channels = 1;
};

/// Loads "path,label" rows (header required; paths relative to the manifest)
/// in file order. Labels become indices in order of first appearance.
LabeledDataset load_manifest(const std::filesystem::path& manifest,
                             const ManifestOptions& options = {});

// Writes every image (channel 0, 8-bit) as <out>/<class>/<index>.pgm and a
// manifest.csv describing them.
void write_dataset_tree(const LabeledDataset& dataset, const std::filesystem::path& out_dir);

struct SplitSpec {
  double private_fraction = 0.8;
  double public_fraction = 0.5;
  double test_fraction = 0.5;
  bool disjoint = false;
  std::uint64_t seed = 0;
};

void validate_split_spec(const SplitSpec& spec);

struct ExperimentData {
  DatasetView private_pool;
  DatasetView public_set;
  DatasetView test_set;
};

// Draw sizes are max(1, floor(fraction * N)). Independent draws (the
// default) sample without replacement separately and may overlap; disjoint
// draws take consecutive slices of one shuffle.
ExperimentData split_dataset(std::shared_ptr<const LabeledDataset> dataset,
                             const SplitSpec& spec);

std::size_t split_size(double fraction, std::size_t n);

}  // namespace fedkd

#endif  // FEDKD_DATASETS_HPP_
