// Copyright 2026 The pushpull Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Dataset synthesis and IDX ingestion, Dirichlet label-skew partitioning,
// straggler / privacy-noise heterogeneity, and stratified splits.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "pushpull/compute.hpp"
#include "pushpull/dataset.hpp"
#include "pushpull/rng.hpp"

namespace pushpull {

struct PartitionSpec {
  std::size_t clients = 50;         // K
  double alpha = 1.0;               // Dirichlet concentration
  double straggler_fraction = 0.5;
  double sigma = 0.1;               // largest privacy-noise level
  std::uint64_t seed = 0;

  void validate() const {
    if (clients == 0) throw std::invalid_argument("partition: client count K must be positive");
    if (!(alpha > 0.0) || !std::isfinite(alpha))
      throw std::invalid_argument("partition: Dirichlet alpha must be positive");
    if (!(straggler_fraction >= 0.0 && straggler_fraction <= 1.0))
      throw std::invalid_argument("partition: straggler fraction must lie in [0, 1]");
    if (!(sigma >= 0.0)) throw std::invalid_argument("partition: sigma must be non-negative");
  }
};

struct ClientProfile {
  ClientId id = 0;  // 1-based
  LabeledDataset data;
  bool straggler = false;
  double noise_sigma = 0.0;
  ComputeProfile compute;

  std::size_t samples() const { return data.size(); }
};

// Gaussian class clusters. Class c is centred at (s / sqrt 2) e_c when C <= d,
// so that any two centres are exactly s apart; for C > d centres are random
// directions of the same norm. Noise is unit-variance isotropic. Labels are
// balanced (counts differ by at most one) and rows are shuffled.
inline LabeledDataset generate_synthetic(std::size_t n, std::size_t dim, std::size_t classes,
                                         double separation, std::uint64_t seed) {
  if (classes < 2) throw std::invalid_argument("generate_synthetic: need at least 2 classes");
  if (dim == 0) throw std::invalid_argument("generate_synthetic: feature dimension must be positive");
  if (n < classes) throw std::invalid_argument("generate_synthetic: need n >= C samples");
  if (!(separation > 0.0)) throw std::invalid_argument("generate_synthetic: separation must be positive");

  Rng rng = make_rng(seed, Stream::data);
  std::normal_distribution<double> g(0.0, 1.0);
  const double radius = separation / std::sqrt(2.0);
  std::vector<double> centers(classes * dim, 0.0);
  for (std::size_t c = 0; c < classes; ++c) {
    if (classes <= dim) {
      centers[c * dim + c] = radius;
    } else {
      double norm = 0.0;
      for (std::size_t j = 0; j < dim; ++j) norm += std::pow(centers[c * dim + j] = g(rng), 2);
      for (std::size_t j = 0; j < dim; ++j) centers[c * dim + j] *= radius / std::sqrt(norm);
    }
  }
  std::vector<std::uint32_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<std::uint32_t>(i % classes);
  std::shuffle(labels.begin(), labels.end(), rng);

  LabeledDataset out{dim, classes, std::vector<double>(n * dim), std::move(labels)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dim; ++j)
      out.features[i * dim + j] = centers[out.labels[i] * dim + j] + g(rng);
  return out;
}

namespace detail {

inline std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("idx: cannot open " + path);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

inline std::string hex32(std::uint32_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s = "0x";
  for (int shift = 28; shift >= 0; shift -= 4) s += digits[(v >> shift) & 0xf];
  return s;
}

inline std::uint32_t read_be32(const std::vector<unsigned char>& b, std::size_t offset,
                               const std::string& path) {
  if (offset + 4 > b.size())
    throw std::runtime_error("idx: " + path + " truncated at byte offset " + std::to_string(offset) +
                             " (header needs 4 more bytes, file has " + std::to_string(b.size()) + ")");
  return (std::uint32_t{b[offset]} << 24) | (std::uint32_t{b[offset + 1]} << 16) |
         (std::uint32_t{b[offset + 2]} << 8) | std::uint32_t{b[offset + 3]};
}

}  // namespace detail

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

// Reads an IDX image/label pair (e.g. MNIST). Pixels are scaled to [0, 1];
// the class count is one more than the largest label (at least 2).
inline LabeledDataset ingest_idx(const std::string& images_path, const std::string& labels_path) {
  const auto img = detail::read_file(images_path);
  const auto lab = detail::read_file(labels_path);

  const auto im_magic = detail::read_be32(img, 0, images_path);
  if (im_magic != kIdxImageMagic)
    throw std::runtime_error("idx: " + images_path + " has magic " + detail::hex32(im_magic) +
                             " at offset 0, expected 0x00000803 (unsigned byte, 3 dims)");
  const std::size_t n = detail::read_be32(img, 4, images_path);
  const std::size_t rows = detail::read_be32(img, 8, images_path);
  const std::size_t cols = detail::read_be32(img, 12, images_path);

  const auto lb_magic = detail::read_be32(lab, 0, labels_path);
  if (lb_magic != kIdxLabelMagic)
    throw std::runtime_error("idx: " + labels_path + " has magic " + detail::hex32(lb_magic) +
                             " at offset 0, expected 0x00000801 (unsigned byte, 1 dim)");
  const std::size_t nl = detail::read_be32(lab, 4, labels_path);
  if (nl != n)
    throw std::runtime_error("idx: label file declares " + std::to_string(nl) +
                             " items but image file declares " + std::to_string(n));

  const std::size_t dim = rows * cols;
  if (dim == 0) throw std::runtime_error("idx: " + images_path + " declares zero-sized images");
  const std::size_t img_need = 16 + n * dim, lab_need = 8 + n;
  if (img.size() < img_need)
    throw std::runtime_error("idx: " + images_path + " truncated at byte offset " +
                             std::to_string(img.size()) + ", expected " + std::to_string(img_need) +
                             " bytes");
  if (lab.size() < lab_need)
    throw std::runtime_error("idx: " + labels_path + " truncated at byte offset " +
                             std::to_string(lab.size()) + ", expected " + std::to_string(lab_need) +
                             " bytes");

  LabeledDataset out{dim, 0, std::vector<double>(n * dim), std::vector<std::uint32_t>(n)};
  for (std::size_t i = 0; i < n * dim; ++i) out.features[i] = img[16 + i] / 255.0;
  std::uint32_t max_label = 0;
  for (std::size_t i = 0; i < n; ++i) max_label = std::max<std::uint32_t>(max_label, out.labels[i] = lab[8 + i]);
  out.classes = std::max<std::size_t>(2, max_label + 1);
  return out;
}

// Label-skew split: for each class, client shares are drawn from
// Dirichlet(alpha, ..., alpha) and that class's (shuffled) samples are cut at
// the cumulative shares. Draws leaving some client empty are repeated, up to
// 100 attempts.
inline std::vector<LabeledDataset> dirichlet_partition(const LabeledDataset& data,
                                                       const PartitionSpec& spec) {
  spec.validate();
  if (data.empty()) throw std::invalid_argument("dirichlet_partition: dataset is empty");
  const std::size_t k = spec.clients;
  if (k > data.size())
    throw std::invalid_argument("dirichlet_partition: K = " + std::to_string(k) +
                                " clients exceed the " + std::to_string(data.size()) + " samples");

  std::vector<std::vector<std::size_t>> by_class(data.classes);
  for (std::size_t i = 0; i < data.size(); ++i) by_class[data.labels[i]].push_back(i);

  constexpr int kRetries = 100;
  for (int attempt = 0; attempt < kRetries; ++attempt) {
    Rng rng = make_rng(spec.seed, Stream::partition, {static_cast<std::uint64_t>(attempt)});
    std::gamma_distribution<double> gamma(spec.alpha, 1.0);
    std::vector<std::vector<std::size_t>> assigned(k);
    for (auto members : by_class) {
      if (members.empty()) continue;
      std::shuffle(members.begin(), members.end(), rng);
      std::vector<double> share(k);
      double total = 0.0;
      for (auto& s : share) total += (s = gamma(rng));
      if (!(total > 0.0)) {  // every draw underflowed; fall back to one random owner
        std::fill(share.begin(), share.end(), 0.0);
        share[std::uniform_int_distribution<std::size_t>(0, k - 1)(rng)] = 1.0;
        total = 1.0;
      }
      double cum = 0.0;
      std::size_t lo = 0;
      for (std::size_t c = 0; c < k; ++c) {
        cum += share[c] / total;
        std::size_t hi = c + 1 == k ? members.size()
                                    : std::min(members.size(), static_cast<std::size_t>(
                                                                   std::floor(cum * members.size() + 0.5)));
        hi = std::max(hi, lo);
        assigned[c].insert(assigned[c].end(), members.begin() + lo, members.begin() + hi);
        lo = hi;
      }
    }
    if (std::any_of(assigned.begin(), assigned.end(), [](const auto& a) { return a.empty(); })) continue;
    std::vector<LabeledDataset> parts;
    parts.reserve(k);
    for (auto& a : assigned) {
      std::sort(a.begin(), a.end());
      parts.push_back(data.subset(a));
    }
    return parts;
  }
  throw std::runtime_error("dirichlet_partition: every one of 100 draws left some client without "
                           "samples; increase the sample count or alpha, or reduce K");
}

struct ComputeDefaults {
  double gamma_shape = 2.0;
  double gamma_scale = 1.0;
  double frequency_hz = 1.0;
  double bits_per_sample = 1.0;
  double straggler_slowdown = 1.0;  // stragglers compute this many times slower
};

// Flags exactly floor(fraction * K) stragglers chosen uniformly by seed and
// assigns sigma_k = (k - 1) sigma / K to client k (1-based). Stragglers get
// a CPU `straggler_slowdown` times slower than the others.
inline std::vector<ClientProfile> assign_heterogeneity(std::vector<LabeledDataset> clients,
                                                       const PartitionSpec& spec,
                                                       const ComputeDefaults& compute = {}) {
  spec.validate();
  if (clients.empty()) throw std::invalid_argument("assign_heterogeneity: no clients");
  const std::size_t k = clients.size();
  const auto stragglers = static_cast<std::size_t>(std::floor(spec.straggler_fraction * k + 1e-9));
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_rng(spec.seed, Stream::heterogeneity);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<ClientProfile> out(k);
  for (std::size_t i = 0; i < k; ++i) {
    auto& c = out[i];
    c.id = i + 1;
    c.data = std::move(clients[i]);
    c.noise_sigma = static_cast<double>(i) * spec.sigma / static_cast<double>(k);
    c.compute.gamma_shape = compute.gamma_shape;
    c.compute.gamma_scale = compute.gamma_scale;
    c.compute.frequency_hz = compute.frequency_hz;
    c.compute.data_bits = std::max(1.0, compute.bits_per_sample * static_cast<double>(c.data.size()));
    c.compute.cycles_per_bit = compute.gamma_shape * compute.gamma_scale;
  }
  for (std::size_t i = 0; i < stragglers; ++i) {
    out[order[i]].straggler = true;
    out[order[i]].compute.frequency_hz /= compute.straggler_slowdown;
  }
  return out;
}

struct Split {
  LabeledDataset train;
  LabeledDataset val;
};

// Stratified split: each class contributes round(fraction * n_c) samples to
// the validation part.
inline Split validation_split(const LabeledDataset& data, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::invalid_argument("validation_split: fraction must lie in (0, 1)");
  std::vector<std::vector<std::size_t>> by_class(data.classes);
  for (std::size_t i = 0; i < data.size(); ++i) by_class[data.labels[i]].push_back(i);
  Rng rng = make_rng(seed, Stream::split);
  std::vector<std::size_t> train_idx, val_idx;
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    const auto take = static_cast<std::size_t>(std::llround(fraction * members.size()));
    val_idx.insert(val_idx.end(), members.begin(), members.begin() + take);
    train_idx.insert(train_idx.end(), members.begin() + take, members.end());
  }
  if (train_idx.empty() || val_idx.empty())
    throw std::invalid_argument("validation_split: fraction " + std::to_string(fraction) + " on " +
                                std::to_string(data.size()) + " samples leaves an empty part");
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(val_idx.begin(), val_idx.end());
  return {data.subset(train_idx), data.subset(val_idx)};
}

}  // namespace pushpull
