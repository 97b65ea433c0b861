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

// Supervised-learning engine used by every client and by the parameter server:
// dense softmax classifiers (multinomial logistic regression or an MLP with
// ReLU hidden layers), mini-batch SGD with momentum, weighted model averaging
// and validation-set evaluation. Everything is a pure function of its inputs
// plus an explicit seed.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pushpull/dataset.hpp"
#include "pushpull/rng.hpp"

namespace pushpull {

struct Architecture {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden;  // empty => multinomial logistic regression
  std::size_t classes = 0;

  static Architecture linear(std::size_t input_dim, std::size_t classes) {
    return {input_dim, {}, classes};
  }
  static Architecture mlp(std::size_t input_dim, std::size_t hidden_width, std::size_t classes) {
    return {input_dim, {hidden_width}, classes};
  }

  // Widths of every layer, input first.
  std::vector<std::size_t> widths() const {
    std::vector<std::size_t> w{input_dim};
    w.insert(w.end(), hidden.begin(), hidden.end());
    w.push_back(classes);
    return w;
  }

  std::size_t param_count() const {
    auto w = widths();
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < w.size(); ++l) n += w[l] * w[l + 1] + w[l + 1];
    return n;
  }

  void validate() const {
    if (input_dim == 0) throw std::invalid_argument("architecture: input dimension must be positive");
    if (classes == 0) throw std::invalid_argument("architecture: class count must be positive");
    for (std::size_t i = 0; i < hidden.size(); ++i)
      if (hidden[i] == 0)
        throw std::invalid_argument("architecture: hidden layer " + std::to_string(i) +
                                    " has zero width");
  }

  std::string describe() const {
    std::string s = std::to_string(input_dim);
    for (auto h : hidden) s += "->" + std::to_string(h);
    return s + "->" + std::to_string(classes);
  }

  bool operator==(const Architecture&) const = default;
};

// Flat parameter vector. Layer l stores its weight matrix (out x in, row-major)
// followed by its bias vector.
struct ModelParams {
  Architecture arch;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  bool operator==(const ModelParams&) const = default;
};

struct TrainConfig {
  int epochs = 1;
  int batches_per_epoch = 1;
  double learning_rate = 0.1;
  double momentum = 0.0;

  void validate() const {
    if (epochs < 1) throw std::invalid_argument("train: epochs must be positive");
    if (batches_per_epoch < 1) throw std::invalid_argument("train: batches per epoch must be positive");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
      throw std::invalid_argument("train: learning rate must be finite and non-negative");
    if (!(momentum >= 0.0 && momentum < 1.0))
      throw std::invalid_argument("train: momentum must lie in [0, 1)");
  }
};

struct EvalReport {
  double loss = 0.0;
  double accuracy = 0.0;
  std::size_t samples = 0;

  bool operator==(const EvalReport&) const = default;
};

namespace detail {

struct LayerView {
  std::size_t in, out, weight_offset, bias_offset;
};

inline std::vector<LayerView> layer_views(const Architecture& arch) {
  auto w = arch.widths();
  std::vector<LayerView> layers;
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    LayerView v{w[l], w[l + 1], off, off + w[l] * w[l + 1]};
    off = v.bias_offset + v.out;
    layers.push_back(v);
  }
  return layers;
}

inline void check_params(const ModelParams& p) {
  if (p.values.size() != p.arch.param_count())
    throw std::invalid_argument("model: parameter vector has " + std::to_string(p.values.size()) +
                                " entries but architecture " + p.arch.describe() + " needs " +
                                std::to_string(p.arch.param_count()));
}

inline void check_input(const ModelParams& p, const LabeledDataset& data, const char* what) {
  if (data.empty()) throw std::invalid_argument(std::string(what) + ": dataset is empty");
  if (data.dim != p.arch.input_dim)
    throw std::invalid_argument(std::string(what) + ": dataset has " + std::to_string(data.dim) +
                                " features, model expects " + std::to_string(p.arch.input_dim));
  if (data.classes > p.arch.classes)
    throw std::invalid_argument(std::string(what) + ": dataset has " +
                                std::to_string(data.classes) + " classes, model outputs " +
                                std::to_string(p.arch.classes));
}

// Activations of one forward pass; acts[0] is the input row.
struct Forward {
  std::vector<std::vector<double>> acts;
};

inline void forward(const std::vector<LayerView>& layers, std::span<const double> w,
                    std::span<const double> x, Forward& fw) {
  fw.acts.resize(layers.size() + 1);
  fw.acts[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& L = layers[l];
    const auto& in = fw.acts[l];
    auto& out = fw.acts[l + 1];
    out.assign(L.out, 0.0);
    for (std::size_t o = 0; o < L.out; ++o) {
      const double* wr = w.data() + L.weight_offset + o * L.in;
      double s = w[L.bias_offset + o];
      for (std::size_t i = 0; i < L.in; ++i) s += wr[i] * in[i];
      out[o] = (l + 1 < layers.size()) ? std::max(0.0, s) : s;
    }
  }
}

// Softmax probabilities and the cross-entropy of `label`, via log-sum-exp.
inline double softmax_xent(std::span<const double> logits, std::uint32_t label,
                           std::vector<double>& probs) {
  double mx = *std::max_element(logits.begin(), logits.end());
  probs.resize(logits.size());
  double z = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) z += (probs[c] = std::exp(logits[c] - mx));
  for (auto& p : probs) p /= z;
  return -(logits[label] - mx - std::log(z));
}

inline std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace detail

inline ModelParams init_model(const Architecture& arch, std::uint64_t seed) {
  arch.validate();
  ModelParams p{arch, std::vector<double>(arch.param_count(), 0.0)};
  Rng rng = make_rng(seed, Stream::init);
  for (const auto& L : detail::layer_views(arch)) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(L.in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (std::size_t i = L.weight_offset; i < L.bias_offset + L.out; ++i) p.values[i] = u(rng);
  }
  return p;
}

// Per-class scores (pre-softmax) for one input row.
inline std::vector<double> predict_logits(const ModelParams& params, std::span<const double> x) {
  detail::check_params(params);
  detail::Forward fw;
  detail::forward(detail::layer_views(params.arch), params.values, x, fw);
  return fw.acts.back();
}

inline EvalReport evaluate(const ModelParams& params, const LabeledDataset& data) {
  detail::check_params(params);
  detail::check_input(params, data, "evaluate");
  const auto layers = detail::layer_views(params.arch);
  detail::Forward fw;
  std::vector<double> probs;
  double loss = 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    detail::forward(layers, params.values, data.row(i), fw);
    const auto& logits = fw.acts.back();
    loss += detail::softmax_xent(logits, data.labels[i], probs);
    if (detail::argmax(logits) == data.labels[i]) ++correct;
  }
  const double n = static_cast<double>(data.size());
  return {loss / n, static_cast<double>(correct) / n, data.size()};
}

// Mini-batch SGD with heavy-ball momentum (v <- m v + g; w <- w - lr v).
// Each epoch reshuffles the sample order and splits it into
// cfg.batches_per_epoch nearly equal batches.
inline ModelParams local_train(const ModelParams& params, const LabeledDataset& data,
                               const TrainConfig& cfg, int effective_epochs, std::uint64_t seed) {
  cfg.validate();
  detail::check_params(params);
  detail::check_input(params, data, "local_train");
  if (effective_epochs < 1 || effective_epochs > cfg.epochs)
    throw std::invalid_argument("local_train: effective epochs " + std::to_string(effective_epochs) +
                                " outside [1, " + std::to_string(cfg.epochs) + "]");

  ModelParams out = params;
  if (cfg.learning_rate == 0.0) return out;

  const auto layers = detail::layer_views(params.arch);
  const std::size_t n = data.size();
  const std::size_t batches = std::min<std::size_t>(cfg.batches_per_epoch, n);
  std::vector<double> grad(out.values.size()), velocity(out.values.size(), 0.0);
  std::vector<std::size_t> order(n);
  std::vector<std::vector<double>> delta(layers.size());
  std::vector<double> probs;
  detail::Forward fw;
  Rng rng = make_rng(seed, Stream::train);

  for (int epoch = 0; epoch < effective_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t lo = b * n / batches, hi = (b + 1) * n / batches;
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t s = lo; s < hi; ++s) {
        const std::size_t i = order[s];
        detail::forward(layers, out.values, data.row(i), fw);
        detail::softmax_xent(fw.acts.back(), data.labels[i], probs);
        // Backprop: delta of the output layer is p - onehot(y).
        delta.back() = probs;
        delta.back()[data.labels[i]] -= 1.0;
        for (std::size_t l = layers.size(); l-- > 0;) {
          const auto& L = layers[l];
          const auto& in = fw.acts[l];
          const auto& d = delta[l];
          for (std::size_t o = 0; o < L.out; ++o) {
            double* gr = grad.data() + L.weight_offset + o * L.in;
            for (std::size_t k = 0; k < L.in; ++k) gr[k] += d[o] * in[k];
            grad[L.bias_offset + o] += d[o];
          }
          if (l > 0) {
            auto& prev = delta[l - 1];
            prev.assign(L.in, 0.0);
            for (std::size_t o = 0; o < L.out; ++o) {
              const double* wr = out.values.data() + L.weight_offset + o * L.in;
              for (std::size_t k = 0; k < L.in; ++k) prev[k] += wr[k] * d[o];
            }
            for (std::size_t k = 0; k < L.in; ++k)
              if (in[k] <= 0.0) prev[k] = 0.0;
          }
        }
      }
      const double scale = 1.0 / static_cast<double>(hi - lo);
      for (std::size_t j = 0; j < grad.size(); ++j) {
        velocity[j] = cfg.momentum * velocity[j] + grad[j] * scale;
        out.values[j] -= cfg.learning_rate * velocity[j];
      }
    }
  }
  for (double v : out.values)
    if (!std::isfinite(v))
      throw std::runtime_error("local_train: parameters diverged (non-finite); lower the learning rate");
  return out;
}

struct WeightedModel {
  double weight;
  const ModelParams* params;
};

// Coordinatewise (sum_k N_k w_k) / (sum_k N_k).
inline ModelParams fed_average(std::span<const WeightedModel> entries) {
  if (entries.empty()) throw std::invalid_argument("fed_average: no models to average");
  const Architecture& arch = entries.front().params->arch;
  double total = 0.0;
  for (const auto& e : entries) {
    if (e.params->arch != arch)
      throw std::invalid_argument("fed_average: architecture mismatch (" + arch.describe() +
                                  " vs " + e.params->arch.describe() + ")");
    detail::check_params(*e.params);
    if (!(e.weight > 0.0) || !std::isfinite(e.weight))
      throw std::invalid_argument("fed_average: weights must be positive and finite");
    total += e.weight;
  }
  ModelParams out{arch, std::vector<double>(arch.param_count(), 0.0)};
  for (const auto& e : entries) {
    const double a = e.weight / total;
    for (std::size_t j = 0; j < out.values.size(); ++j) out.values[j] += a * e.params->values[j];
  }
  // Clamp rounding drift so the average never leaves the inputs' hull.
  for (std::size_t j = 0; j < out.values.size(); ++j) {
    double lo = entries.front().params->values[j], hi = lo;
    for (const auto& e : entries) {
      lo = std::min(lo, e.params->values[j]);
      hi = std::max(hi, e.params->values[j]);
    }
    out.values[j] = std::clamp(out.values[j], lo, hi);
  }
  return out;
}

inline ModelParams add_noise(const ModelParams& params, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw std::invalid_argument("add_noise: noise level must be finite and non-negative, got " +
                                std::to_string(sigma));
  ModelParams out = params;
  if (sigma == 0.0) return out;
  Rng rng = make_rng(seed, Stream::noise);
  std::normal_distribution<double> g(0.0, sigma);
  for (auto& v : out.values) v += g(rng);
  return out;
}

}  // namespace pushpull
