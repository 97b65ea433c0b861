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

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pushpull {

using ClientId = std::size_t;  // 1-based in scenarios

// Row-major feature matrix with integer class labels in [0, classes).
struct LabeledDataset {
  std::size_t dim = 0;
  std::size_t classes = 0;
  std::vector<double> features;
  std::vector<std::uint32_t> labels;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }

  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * dim, dim};
  }

  void validate() const {
    if (features.size() != labels.size() * dim)
      throw std::invalid_argument("dataset: feature matrix holds " +
                                  std::to_string(features.size()) + " values, expected " +
                                  std::to_string(labels.size()) + " x " + std::to_string(dim));
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] >= classes)
        throw std::invalid_argument("dataset: label " + std::to_string(labels[i]) + " at row " +
                                    std::to_string(i) + " is outside [0, " +
                                    std::to_string(classes) + ")");
  }

  std::vector<std::size_t> class_counts() const {
    std::vector<std::size_t> counts(classes, 0);
    for (auto y : labels) ++counts[y];
    return counts;
  }

  LabeledDataset subset(std::span<const std::size_t> indices) const {
    LabeledDataset out{dim, classes, {}, {}};
    out.features.reserve(indices.size() * dim);
    out.labels.reserve(indices.size());
    for (std::size_t i : indices) {
      auto r = row(i);
      out.features.insert(out.features.end(), r.begin(), r.end());
      out.labels.push_back(labels[i]);
    }
    return out;
  }

  void append(const LabeledDataset& other) {
    if (other.dim != dim || other.classes != classes)
      throw std::invalid_argument("dataset: cannot append a dataset of different shape");
    features.insert(features.end(), other.features.begin(), other.features.end());
    labels.insert(labels.end(), other.labels.begin(), other.labels.end());
  }

  bool operator==(const LabeledDataset&) const = default;
};

}  // namespace pushpull
