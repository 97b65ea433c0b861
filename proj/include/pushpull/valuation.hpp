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

// Shapley-value valuation of client updates.
//
// A game is any callable `double(Coalition)` over bitmasks of player indices
// 0..n-1. Two sources are provided: TabularGame (an explicit table, for tests
// and the `valuate` tool) and ModelUtility (validation accuracy of the
// weighted average of a coalition's updates). Estimators map player indices
// back to client ids in the returned ShapleyEstimate.

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "pushpull/dataset.hpp"
#include "pushpull/model.hpp"
#include "pushpull/rng.hpp"

namespace pushpull {

using Coalition = std::uint64_t;

inline constexpr std::size_t kMaxPlayers = 63;
inline constexpr std::size_t kMaxExactPlayers = 12;

inline constexpr Coalition full_coalition(std::size_t players) {
  return players == 0 ? 0 : (~Coalition{0} >> (64 - players));
}

enum class ShapleyMethod { exact, truncated_mc };

struct ShapleyEstimate {
  std::map<ClientId, double> values;
  ShapleyMethod method = ShapleyMethod::exact;
  std::size_t permutations_used = 0;
  std::size_t truncation_events = 0;
  std::size_t utility_evaluations = 0;
};

// ---------------------------------------------------------------------------
// Tabular games

// Explicit utility table indexed by coalition bitmask (bit i = player i).
struct TabularGame {
  std::size_t players = 0;
  std::vector<double> values;  // size 2^players

  TabularGame() = default;
  explicit TabularGame(std::size_t n) : players(n), values(std::size_t{1} << n, 0.0) {
    if (n > 20) throw std::invalid_argument("tabular game: at most 20 players supported");
  }

  double operator()(Coalition s) const { return values.at(static_cast<std::size_t>(s)); }
  double& operator[](Coalition s) { return values.at(static_cast<std::size_t>(s)); }

  // Text format, one entry per line: `<bitmask>,<value>` where the bitmask is
  // written `0b1010` (bit 0 rightmost) or as a plain decimal integer. Blank
  // lines and lines starting with '#' are ignored. Every one of the 2^n
  // coalitions must appear exactly once; n is inferred from the entry count.
  static TabularGame parse(std::istream& in) {
    std::map<Coalition, double> entries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      auto comma = line.find(',');
      auto where = [&] { return "tabular game line " + std::to_string(lineno) + ": "; };
      if (comma == std::string::npos) throw std::invalid_argument(where() + "expected `mask,value`");
      std::string mask = line.substr(first, comma - first);
      while (!mask.empty() && (mask.back() == ' ' || mask.back() == '\t')) mask.pop_back();
      Coalition s = 0;
      try {
        std::size_t used = 0;
        if (mask.rfind("0b", 0) == 0 || mask.rfind("0B", 0) == 0) {
          if (mask.size() <= 2) throw std::invalid_argument("empty");
          s = std::stoull(mask.substr(2), &used, 2);
          used += 2;
        } else {
          s = std::stoull(mask, &used, 10);
        }
        if (used != mask.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw std::invalid_argument(where() + "bad coalition mask `" + mask + "`");
      }
      double v = 0.0;
      try {
        std::size_t used = 0;
        std::string val = line.substr(comma + 1);
        v = std::stod(val, &used);
        if (val.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw std::invalid_argument(where() + "bad utility value");
      }
      if (!entries.emplace(s, v).second)
        throw std::invalid_argument(where() + "duplicate coalition " + std::to_string(s));
    }
    const std::size_t count = entries.size();
    if (count == 0 || !std::has_single_bit(count))
      throw std::invalid_argument("tabular game: expected 2^n entries, found " + std::to_string(count));
    TabularGame g(static_cast<std::size_t>(std::countr_zero(count)));
    for (const auto& [s, v] : entries) {
      if (s >= count)
        throw std::invalid_argument("tabular game: coalition " + std::to_string(s) +
                                    " exceeds the player count");
      g[s] = v;
    }
    return g;
  }

  std::string to_text() const {
    std::ostringstream os;
    os.precision(17);
    for (Coalition s = 0; s < values.size(); ++s) {
      std::string bits;
      for (std::size_t i = players; i-- > 0;) bits += ((s >> i) & 1) ? '1' : '0';
      if (bits.empty()) bits = "0";
      os << "0b" << bits << ',' << values[s] << '\n';
    }
    return os.str();
  }
};

// ---------------------------------------------------------------------------
// Model-based utility

struct ClientUpdate {
  ClientId id = 0;
  double samples = 0.0;  // N_k, aggregation weight
  ModelParams params;
};

// Base model w^(t), the updates under valuation and the PS validation set.
struct UtilityContext {
  const ModelParams* base = nullptr;
  std::vector<ClientUpdate> updates;
  const LabeledDataset* validation = nullptr;

  void validate() const {
    if (base == nullptr || validation == nullptr)
      throw std::invalid_argument("utility context: base model and validation set are required");
    if (updates.empty()) throw std::invalid_argument("utility context: no updates to value");
    if (updates.size() > kMaxPlayers)
      throw std::invalid_argument("utility context: at most 63 updates can be valued at once");
    for (const auto& u : updates)
      if (u.params.arch != base->arch)
        throw std::invalid_argument("utility context: update from client " + std::to_string(u.id) +
                                    " has a different architecture");
  }

  std::vector<ClientId> ids() const {
    std::vector<ClientId> v;
    for (const auto& u : updates) v.push_back(u.id);
    return v;
  }
};

// U(S): validation accuracy of fed_average over S's updates; U(empty) is the
// base model's accuracy. Results are memoized per coalition.
class ModelUtility {
 public:
  explicit ModelUtility(const UtilityContext& ctx) : ctx_(&ctx) { ctx.validate(); }

  double operator()(Coalition s) const {
    if (auto it = cache_.find(s); it != cache_.end()) return it->second;
    double u;
    if (s == 0) {
      u = evaluate(*ctx_->base, *ctx_->validation).accuracy;
    } else {
      std::vector<WeightedModel> members;
      for (std::size_t i = 0; i < ctx_->updates.size(); ++i)
        if ((s >> i) & 1) members.push_back({ctx_->updates[i].samples, &ctx_->updates[i].params});
      u = evaluate(fed_average(members), *ctx_->validation).accuracy;
    }
    ++evaluations_;
    cache_.emplace(s, u);
    return u;
  }

  std::size_t evaluations() const { return evaluations_; }

 private:
  const UtilityContext* ctx_;
  mutable std::unordered_map<Coalition, double> cache_;
  mutable std::size_t evaluations_ = 0;
};

// Utility of a set of client ids; insertion order is irrelevant.
inline double utility(const UtilityContext& ctx, std::span<const ClientId> members) {
  ctx.validate();
  Coalition s = 0;
  for (ClientId id : members) {
    auto it = std::find_if(ctx.updates.begin(), ctx.updates.end(),
                           [&](const ClientUpdate& u) { return u.id == id; });
    if (it == ctx.updates.end())
      throw std::invalid_argument("utility: client " + std::to_string(id) + " has no update in this context");
    s |= Coalition{1} << (it - ctx.updates.begin());
  }
  return ModelUtility(ctx)(s);
}

// ---------------------------------------------------------------------------
// Estimators

namespace detail {

inline std::vector<ClientId> default_ids(std::size_t n) {
  std::vector<ClientId> ids(n);
  std::iota(ids.begin(), ids.end(), ClientId{0});
  return ids;
}

inline double binomial(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

}  // namespace detail

// Subset form: nu_k = (1/Y) sum_{S subset of [Y]\k} (U(S u k) - U(S)) / C(Y-1, |S|).
template <class Utility>
ShapleyEstimate exact_shapley(std::span<const ClientId> ids, Utility&& u) {
  const std::size_t n = ids.size();
  if (n == 0) throw std::invalid_argument("exact_shapley: no players");
  if (n > kMaxExactPlayers)
    throw std::invalid_argument("exact_shapley: " + std::to_string(n) +
                                " players exceed the exact-enumeration limit of 12; use gtg_shapley");
  std::vector<double> table(std::size_t{1} << n);
  for (Coalition s = 0; s < table.size(); ++s) table[s] = u(s);

  std::vector<double> weight(n);  // 1 / (Y * C(Y-1, |S|))
  for (std::size_t k = 0; k < n; ++k) weight[k] = 1.0 / (n * detail::binomial(n - 1, k));

  ShapleyEstimate est;
  est.method = ShapleyMethod::exact;
  est.utility_evaluations = table.size();
  for (std::size_t k = 0; k < n; ++k) {
    const Coalition bit = Coalition{1} << k;
    double v = 0.0;
    for (Coalition s = 0; s < table.size(); ++s)
      if (!(s & bit)) v += (table[s | bit] - table[s]) * weight[std::popcount(s)];
    est.values[ids[k]] = v;
  }
  return est;
}

inline ShapleyEstimate exact_shapley(const TabularGame& g) {
  auto ids = detail::default_ids(g.players);
  return exact_shapley(ids, g);
}

inline ShapleyEstimate exact_shapley(const UtilityContext& ctx) {
  ModelUtility u(ctx);
  auto ids = ctx.ids();
  auto est = exact_shapley(ids, u);
  est.utility_evaluations = u.evaluations();
  return est;
}

struct GtgOptions {
  std::size_t max_permutations = 50;
  double tolerance = 1e-3;             // within-permutation truncation and convergence
  std::size_t convergence_window = 5;

  void validate() const {
    if (max_permutations == 0) throw std::invalid_argument("gtg: max_permutations must be positive");
    if (!(tolerance >= 0.0)) throw std::invalid_argument("gtg: tolerance must be non-negative");
    if (convergence_window == 0) throw std::invalid_argument("gtg: convergence window must be positive");
  }
};

// Truncated Monte-Carlo permutation sampling.
//
// Each permutation p draws its order from its own substream (seed, p). Its
// prefixes are scanned accumulating U(prefix + k) - U(prefix); once
// |U(full) - U(prefix)| < tolerance the remaining players get a zero marginal
// for that permutation (a truncation event). Sampling stops after
// max_permutations, or once every running mean has moved by less than
// tolerance across the last convergence_window permutations. When
// max_permutations covers all n! orders they are enumerated exactly once in
// lexicographic order instead of sampled.
template <class Utility>
ShapleyEstimate gtg_shapley(std::span<const ClientId> ids, Utility&& u, const GtgOptions& opt,
                            std::uint64_t seed) {
  opt.validate();
  const std::size_t n = ids.size();
  if (n == 0) throw std::invalid_argument("gtg_shapley: no players");
  if (n > kMaxPlayers) throw std::invalid_argument("gtg_shapley: too many players");

  bool enumerate = false;
  {
    double fact = 1.0;
    for (std::size_t i = 2; i <= n; ++i) fact *= static_cast<double>(i);
    enumerate = fact <= static_cast<double>(opt.max_permutations);
  }
  const double full_value = u(full_coalition(n));

  ShapleyEstimate est;
  est.method = ShapleyMethod::truncated_mc;
  std::vector<double> sum(n, 0.0);
  std::vector<std::vector<double>> history;  // running means after each permutation
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t p = 0; p < opt.max_permutations; ++p) {
    if (enumerate) {
      if (p > 0 && !std::next_permutation(order.begin(), order.end())) break;
    } else {
      std::iota(order.begin(), order.end(), std::size_t{0});
      Rng rng = make_rng(seed, Stream::permutation, {p});
      std::shuffle(order.begin(), order.end(), rng);
    }
    Coalition prefix = 0;
    double prev = u(prefix);
    for (std::size_t pos = 0; pos < n; ++pos) {
      if (std::abs(full_value - prev) < opt.tolerance) {
        ++est.truncation_events;
        break;
      }
      prefix |= Coalition{1} << order[pos];
      const double cur = u(prefix);
      sum[order[pos]] += cur - prev;
      prev = cur;
    }
    ++est.permutations_used;

    std::vector<double> mean(n);
    for (std::size_t k = 0; k < n; ++k) mean[k] = sum[k] / static_cast<double>(est.permutations_used);
    history.push_back(std::move(mean));
    const std::size_t w = opt.convergence_window;
    if (!enumerate && history.size() > w) {
      const auto& now = history.back();
      const auto& then = history[history.size() - 1 - w];
      double drift = 0.0;
      for (std::size_t k = 0; k < n; ++k) drift = std::max(drift, std::abs(now[k] - then[k]));
      if (drift < opt.tolerance) break;
    }
  }
  for (std::size_t k = 0; k < n; ++k)
    est.values[ids[k]] = sum[k] / static_cast<double>(est.permutations_used);
  return est;
}

inline ShapleyEstimate gtg_shapley(const TabularGame& g, const GtgOptions& opt, std::uint64_t seed) {
  auto ids = detail::default_ids(g.players);
  return gtg_shapley(ids, g, opt, seed);
}

inline ShapleyEstimate gtg_shapley(const UtilityContext& ctx, const GtgOptions& opt,
                                   std::uint64_t seed) {
  ModelUtility u(ctx);
  auto ids = ctx.ids();
  auto est = gtg_shapley(ids, u, opt, seed);
  est.utility_evaluations = u.evaluations();
  return est;
}

// zeta * nu_prev + (1 - zeta) * nu_round
inline double exp_average(double previous, double current, double zeta) {
  if (!(zeta >= 0.0 && zeta <= 1.0))
    throw std::invalid_argument("exp_average: zeta must lie in [0, 1], got " + std::to_string(zeta));
  return zeta * previous + (1.0 - zeta) * current;
}

}  // namespace pushpull
