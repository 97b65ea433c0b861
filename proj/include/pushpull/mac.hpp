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

// Frame/slot structure of the push-pull uplink and its analytics.
//
// A frame is one downlink slot followed by M uplink slots. The first Q uplink
// slots are the pull region (scheduled, one device each); the remaining M - Q
// form a framed-ALOHA push region on a collision channel. Slot indices are
// 1-based within each region. All time costs are in uplink-slot units.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "pushpull/rng.hpp"

namespace pushpull {

struct FrameConfig {
  int slots = 20;            // M
  int pull_slots = 10;       // Q
  double slot_seconds = 1.0; // tau
  int warmup_rounds = 20;    // r_th

  int push_slots() const { return slots - pull_slots; }
  double frame_seconds() const { return slots * slot_seconds; }       // T_F
  double pull_seconds() const { return pull_slots * slot_seconds; }   // T_Q
  double push_seconds() const { return push_slots() * slot_seconds; } // T_C

  void validate() const {
    if (slots < 1) throw std::invalid_argument("frame: M (uplink slots) must be positive");
    if (pull_slots < 0 || pull_slots > slots)
      throw std::invalid_argument("frame: Q (pull slots) must lie in [0, M], got " +
                                  std::to_string(pull_slots));
    if (!(slot_seconds > 0.0)) throw std::invalid_argument("frame: slot length must be positive");
    if (warmup_rounds < 0) throw std::invalid_argument("frame: warmup rounds must be non-negative");
  }
};

struct PushOutcome {
  std::vector<int> slot;        // chosen slot per contender, in [1, slots]
  std::vector<bool> success;    // unique chooser of its slot
  std::size_t successes = 0;    // N'
  std::vector<int> collided_slots;

  // Highest slot index that carried a packet, 0 if none did.
  int max_success_slot() const {
    int m = 0;
    for (std::size_t i = 0; i < slot.size(); ++i)
      if (success[i]) m = std::max(m, slot[i]);
    return m;
  }
};

namespace detail {
inline void check_push_region(int m, int q) {
  if (q < 0 || m < 1) throw std::invalid_argument("mac: need M >= 1 and Q >= 0");
  if (m <= q)
    throw std::invalid_argument("mac: M = " + std::to_string(m) + ", Q = " + std::to_string(q) +
                                " leaves no push slots");
}
}  // namespace detail

// p_s = (1 - 1/(M-Q))^(N-1)
inline double success_prob(int m, int q, int n) {
  detail::check_push_region(m, q);
  if (n < 1) throw std::invalid_argument("success_prob: need at least one contender");
  return std::pow(1.0 - 1.0 / static_cast<double>(m - q), n - 1);
}

// Success flags are derived from the slot choices alone: a packet survives iff
// no other contender picked its slot.
inline PushOutcome resolve_collisions(std::vector<int> choices, int slots) {
  PushOutcome out;
  out.slot = std::move(choices);
  std::vector<int> load(static_cast<std::size_t>(slots) + 1, 0);
  for (int s : out.slot) {
    if (s < 1 || s > slots) throw std::invalid_argument("push frame: slot index out of range");
    ++load[s];
  }
  out.success.resize(out.slot.size());
  for (std::size_t i = 0; i < out.slot.size(); ++i) {
    out.success[i] = load[out.slot[i]] == 1;
    if (out.success[i]) ++out.successes;
  }
  for (int s = 1; s <= slots; ++s)
    if (load[s] > 1) out.collided_slots.push_back(s);
  return out;
}

inline PushOutcome simulate_push_frame(int contenders, int slots, std::uint64_t seed) {
  if (slots < 1) throw std::invalid_argument("simulate_push_frame: need at least one push slot");
  if (contenders < 0) throw std::invalid_argument("simulate_push_frame: negative contender count");
  Rng rng = make_rng(seed, Stream::aloha);
  std::uniform_int_distribution<int> pick(1, slots);
  std::vector<int> choices(static_cast<std::size_t>(contenders));
  for (auto& c : choices) c = pick(rng);
  return resolve_collisions(std::move(choices), slots);
}

// Mean index of the iota-th highest of N uniform slot picks (continuous
// order-statistic approximation): (M-Q+1)(N-iota+1)/(N+1).
inline double slot_index_mean(int m, int q, int n, int iota) {
  detail::check_push_region(m, q);
  if (n < 1 || iota < 1 || iota > n)
    throw std::invalid_argument("slot_index_mean: order index " + std::to_string(iota) +
                                " outside [1, " + std::to_string(n) + "]");
  return (m - q + 1.0) * (n - iota + 1.0) / (n + 1.0);
}

// Expected per-frame cost  Q(1-p_s)^N + sum_{i=1..N} (Q + l_i) p_s (1-p_s)^(i-1),
// with the order-statistic index identified with the summation index.
inline double expected_time_cost(int m, int q, int n) {
  const double ps = success_prob(m, q, n);
  double cost = q * std::pow(1.0 - ps, n);
  double fail_run = 1.0;  // (1-p_s)^(i-1)
  for (int i = 1; i <= n; ++i) {
    cost += (q + slot_index_mean(m, q, n, i)) * ps * fail_run;
    fail_run *= 1.0 - ps;
  }
  return cost;
}

struct MonteCarloCost {
  double mean = 0.0;
  double stderr_ = 0.0;
  double success_rate = 0.0;  // per-contender success frequency
  double success_stderr = 0.0;
  std::size_t trials = 0;
};

// Monte-Carlo counterpart of expected_time_cost: Q plus the highest
// successful push slot index, or Q when every contender collides.
inline MonteCarloCost monte_carlo_time_cost(int m, int q, int n, std::size_t trials,
                                            std::uint64_t seed) {
  detail::check_push_region(m, q);
  if (n < 1 || trials < 2) throw std::invalid_argument("monte_carlo_time_cost: need N >= 1, trials >= 2");
  double sum = 0.0, sum2 = 0.0, succ = 0.0, succ2 = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const PushOutcome o = simulate_push_frame(n, m - q, derive_seed(seed, {t}));
    const double cost = q + o.max_success_slot();
    sum += cost;
    sum2 += cost * cost;
    const double rate = static_cast<double>(o.successes) / n;
    succ += rate;
    succ2 += rate * rate;
  }
  const double k = static_cast<double>(trials);
  MonteCarloCost r;
  r.trials = trials;
  r.mean = sum / k;
  r.stderr_ = std::sqrt(std::max(0.0, (sum2 / k - r.mean * r.mean) * k / (k - 1)) / k);
  r.success_rate = succ / k;
  r.success_stderr = std::sqrt(std::max(0.0, (succ2 / k - r.success_rate * r.success_rate) * k / (k - 1)) / k);
  return r;
}

struct PullAccess {
  int slot;  // zeta, 1-based within the pull region
};
struct PushAccess {};
using Access = std::variant<PullAccess, PushAccess>;

// Discrete per-device cost in slots: pull in slot zeta costs zeta + 1; a push
// device costs Q + 1 if its computation ends within the pull period, otherwise
// ceil(T_comp / tau) + 1.
inline int time_cost_ue(const Access& access, double compute_seconds, const FrameConfig& cfg) {
  if (!(compute_seconds >= 0.0)) throw std::invalid_argument("time_cost_ue: negative compute time");
  if (const auto* pull = std::get_if<PullAccess>(&access)) {
    if (pull->slot < 1 || pull->slot > cfg.pull_slots)
      throw std::invalid_argument("time_cost_ue: pull slot " + std::to_string(pull->slot) +
                                  " outside [1, " + std::to_string(cfg.pull_slots) + "]");
    return pull->slot + 1;
  }
  if (compute_seconds <= cfg.pull_seconds()) return cfg.pull_slots + 1;
  const double x = compute_seconds / cfg.slot_seconds;
  const double r = std::round(x);
  const double slots = std::abs(x - r) < 1e-9 * std::max(1.0, r) ? r : std::ceil(x);
  return static_cast<int>(slots) + 1;
}

// T_cost = max_k T_k over the delivered set.
inline int frame_time_cost(std::span<const int> costs) {
  if (costs.empty()) throw std::invalid_argument("frame_time_cost: no delivered updates");
  return *std::max_element(costs.begin(), costs.end());
}

}  // namespace pushpull
