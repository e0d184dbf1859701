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

#include "fedkd/partition.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

#include "fedkd/errors.hpp"
#include "fedkd/seed.hpp"

namespace fedkd {

namespace {

constexpr int kMaxRedraws = 100;

std::size_t class_count(std::span<const std::size_t> labels) {
  return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
}

std::vector<double> dirichlet(std::size_t k, double alpha, std::mt19937_64& rng) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> p(k);
  double sum = 0.0;
  for (double& v : p) {
    v = gamma(rng);
    sum += v;
  }
  if (!(sum > 0.0)) {
    // All draws underflowed (tiny alpha); fall back to a uniform share.
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(k));
    return p;
  }
  for (double& v : p) v /= sum;
  return p;
}

std::vector<std::size_t> largest_remainder(const std::vector<double>& shares, std::size_t n) {
  const std::size_t k = shares.size();
  std::vector<std::size_t> counts(k);
  std::vector<double> rem(k);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double exact = shares[i] * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    rem[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++counts[order[i % k]];
  return counts;
}

std::vector<std::vector<std::size_t>> draw(const std::vector<std::vector<std::size_t>>& by_class,
                                           const PartitionConfig& cfg, std::mt19937_64& rng) {
  std::vector<std::vector<std::size_t>> clients(cfg.num_clients);
  for (const auto& members : by_class) {
    if (members.empty()) continue;
    const auto shares = dirichlet(cfg.num_clients, cfg.alpha, rng);
    const auto counts = largest_remainder(shares, members.size());
    std::vector<std::size_t> shuffled = members;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    std::size_t offset = 0;
    for (std::size_t c = 0; c < cfg.num_clients; ++c) {
      clients[c].insert(clients[c].end(), shuffled.begin() + static_cast<std::ptrdiff_t>(offset),
                        shuffled.begin() + static_cast<std::ptrdiff_t>(offset + counts[c]));
      offset += counts[c];
    }
  }
  return clients;
}

bool satisfies_minimum(const std::vector<std::vector<std::size_t>>& clients, std::size_t min) {
  return std::all_of(clients.begin(), clients.end(),
                     [&](const auto& c) { return c.size() >= min; });
}

}  // namespace

void validate_partition_config(const PartitionConfig& cfg) {
  if (cfg.num_clients < 1) throw DomainError("partition needs at least one client");
  if (!(cfg.alpha > 0.0) || !std::isfinite(cfg.alpha)) {
    throw DomainError("Dirichlet alpha must be positive");
  }
  if (cfg.min_per_client < 1) throw DomainError("min_per_client must be at least 1");
}

Partition dirichlet_partition(std::span<const std::size_t> labels, const PartitionConfig& cfg) {
  validate_partition_config(cfg);
  if (labels.size() < cfg.num_clients * cfg.min_per_client) {
    throw DomainError("pool of " + std::to_string(labels.size()) + " samples cannot give " +
                      std::to_string(cfg.num_clients) + " clients at least " +
                      std::to_string(cfg.min_per_client) + " each");
  }
  const std::size_t k = class_count(labels);
  std::vector<std::vector<std::size_t>> by_class(k);
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

  std::mt19937_64 rng(derive_seed(cfg.seed, {0x70a7}));
  std::vector<std::vector<std::size_t>> clients;
  for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
    clients = draw(by_class, cfg, rng);
    if (satisfies_minimum(clients, cfg.min_per_client)) break;
  }
  while (!satisfies_minimum(clients, cfg.min_per_client)) {
    auto smallest = std::min_element(clients.begin(), clients.end(),
                                     [](const auto& a, const auto& b) { return a.size() < b.size(); });
    auto largest = std::max_element(clients.begin(), clients.end(),
                                    [](const auto& a, const auto& b) { return a.size() < b.size(); });
    smallest->push_back(largest->back());
    largest->pop_back();
  }

  Partition out;
  out.assignments = std::move(clients);
  out.class_proportions.assign(cfg.num_clients, std::vector<double>(k, 0.0));
  for (std::size_t c = 0; c < cfg.num_clients; ++c) {
    auto& idx = out.assignments[c];
    std::sort(idx.begin(), idx.end());
    for (std::size_t i : idx) out.class_proportions[c][labels[i]] += 1.0;
    for (double& v : out.class_proportions[c]) v /= static_cast<double>(idx.size());
  }
  return out;
}

PartitionReport partition_stats(const Partition& partition,
                                std::span<const std::size_t> global_labels) {
  PartitionReport r;
  const std::size_t k = class_count(global_labels);
  r.global_distribution.assign(k, 0.0);
  for (std::size_t l : global_labels) r.global_distribution[l] += 1.0;
  for (double& v : r.global_distribution) v /= static_cast<double>(global_labels.size());
  r.class_proportions = partition.class_proportions;
  for (std::size_t c = 0; c < partition.assignments.size(); ++c) {
    r.sizes.push_back(partition.assignments[c].size());
    auto& row = r.class_proportions[c];
    row.resize(std::max(row.size(), k), 0.0);
    double tv = 0.0;
    for (std::size_t j = 0; j < k; ++j) tv += std::abs(row[j] - r.global_distribution[j]);
    r.client_tv.push_back(0.5 * tv);
  }
  if (!r.client_tv.empty()) {
    r.heterogeneity = std::accumulate(r.client_tv.begin(), r.client_tv.end(), 0.0) /
                      static_cast<double>(r.client_tv.size());
  }
  return r;
}

void write_partition_csv(const std::filesystem::path& path, const Partition& partition) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "client_id,sample_index\n";
  for (std::size_t c = 0; c < partition.assignments.size(); ++c) {
    for (std::size_t i : partition.assignments[c]) out << c << ',' << i << '\n';
  }
}

}  // namespace fedkd
