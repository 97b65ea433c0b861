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

// Frame-by-frame federated training over the push-pull uplink.
//
// One round is one frame: the parameter server picks the pull set, broadcasts
// the global model, scheduled devices train and upload in pull slots 1..Q,
// every other device that finishes its local computation within the frame
// contends in the framed-ALOHA push region, delivered updates are averaged
// with N_k weights, and (for valuation-based policies) Shapley values of the
// valued updates are folded into each device's running score.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pushpull/compute.hpp"
#include "pushpull/data.hpp"
#include "pushpull/dataset.hpp"
#include "pushpull/mac.hpp"
#include "pushpull/model.hpp"
#include "pushpull/rng.hpp"
#include "pushpull/valuation.hpp"

namespace pushpull {

// ---------------------------------------------------------------------------
// Policies

enum class PolicyKind { proposed, greedy_shap, fedavg_random, centralized, only_pull };

inline constexpr PolicyKind kAllPolicies[] = {PolicyKind::proposed, PolicyKind::greedy_shap,
                                             PolicyKind::fedavg_random, PolicyKind::centralized,
                                             PolicyKind::only_pull};

inline std::string_view to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::proposed: return "proposed";
    case PolicyKind::greedy_shap: return "greedy_shap";
    case PolicyKind::fedavg_random: return "fedavg_random";
    case PolicyKind::centralized: return "centralized";
    case PolicyKind::only_pull: return "only_pull";
  }
  return "unknown";
}

inline PolicyKind parse_policy(std::string_view name) {
  for (PolicyKind k : kAllPolicies)
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown policy `" + std::string(name) +
                              "` (expected proposed, greedy_shap, fedavg_random, centralized or only_pull)");
}

struct Policy {
  PolicyKind kind = PolicyKind::proposed;
  int pull_slots = 10;    // Q once warmup is over
  bool push_enabled = true;
  int warmup_rounds = 0;  // leading all-pull frames (round-robin cohorts)

  bool valuation_based() const {
    return kind == PolicyKind::proposed || kind == PolicyKind::greedy_shap ||
           kind == PolicyKind::only_pull;
  }

  // Proposed: r_th all-pull frames, then the configured pull/push split.
  // GreedyShap: ceil(K/M) full passes, then the top-M devices, no push.
  // OnlyPull: as Proposed but every slot stays pull.
  // FedAvgRandom, Centralized: all M slots pull, no push.
  static Policy make(PolicyKind kind, const FrameConfig& frame, std::size_t clients) {
    Policy p;
    p.kind = kind;
    p.pull_slots = frame.slots;
    p.push_enabled = false;
    switch (kind) {
      case PolicyKind::proposed:
        p.pull_slots = frame.pull_slots;
        p.push_enabled = frame.pull_slots < frame.slots;
        p.warmup_rounds = frame.warmup_rounds;
        break;
      case PolicyKind::greedy_shap:
        p.warmup_rounds = static_cast<int>((clients + frame.slots - 1) / frame.slots);
        break;
      case PolicyKind::only_pull:
        p.warmup_rounds = frame.warmup_rounds;
        break;
      case PolicyKind::fedavg_random:
      case PolicyKind::centralized:
        break;
    }
    return p;
  }

  void validate(const FrameConfig& frame) const {
    if (pull_slots < 0 || pull_slots > frame.slots)
      throw std::invalid_argument("policy: pull budget Q must lie in [0, M]");
    if (push_enabled && pull_slots == frame.slots)
      throw std::invalid_argument("policy: push enabled but no push slots remain (Q = M)");
    if (kind == PolicyKind::only_pull && (push_enabled || pull_slots != frame.slots))
      throw std::invalid_argument("policy: only_pull requires Q = M and push disabled");
    if (warmup_rounds < 0) throw std::invalid_argument("policy: warmup rounds must be non-negative");
  }
};

// ---------------------------------------------------------------------------
// Configuration

enum class ValuationSet { pull_only, all_received };

struct DatasetSpec {
  enum class Kind { synthetic, idx } kind = Kind::synthetic;
  std::size_t samples = 5000;
  std::size_t dim = 20;
  std::size_t classes = 4;
  double separation = 3.0;
  std::string images_path, labels_path;
  double test_fraction = 0.1;
  double validation_fraction = 0.1;
};

struct ComputeSettings {
  double gamma_shape = 2.0;
  double gamma_scale = 1.0;
  double epsilon = 0.1;
  double p_scale = 1.0;
  double frequency_hz = 0.0;  // 0: calibrate so the median latency is about T_Q
  double bits_per_sample = 0.0;  // 0: 32 bits per feature
  double straggler_slowdown = 4.0;
};

struct ValuationSettings {
  double zeta = 0.5;
  GtgOptions gtg;
  ValuationSet set = ValuationSet::pull_only;  // pull deliveries only; all_received also values pushes
};

struct SimulationConfig {
  DatasetSpec dataset;
  PartitionSpec partition;
  std::vector<std::size_t> hidden;  // empty: logistic regression
  TrainConfig train{5, 4, 0.1, 0.5};
  FrameConfig frame;
  int rounds = 60;
  ComputeSettings compute;
  ValuationSettings valuation;
  std::optional<int> fixed_push_n;
  bool reoffer_collided = false;   // keep a collided update and offer it again
  bool pull_forfeit_late = false;  // pull device whose computation misses its slot sends nothing
  double centralized_fraction = 0.1;
  std::optional<double> target_accuracy;

  void validate() const {
    frame.validate();
    partition.validate();
    train.validate();
    if (rounds < 0) throw std::invalid_argument("rounds: must be non-negative");
    if (dataset.kind == DatasetSpec::Kind::synthetic) {
      if (dataset.classes < 2) throw std::invalid_argument("dataset.classes: need at least 2");
      if (dataset.dim == 0) throw std::invalid_argument("dataset.dim: must be positive");
      if (!(dataset.separation > 0)) throw std::invalid_argument("dataset.separation: must be positive");
    } else if (dataset.images_path.empty() || dataset.labels_path.empty()) {
      throw std::invalid_argument("dataset: idx datasets need images and labels paths");
    }
    if (!(dataset.test_fraction > 0 && dataset.test_fraction < 1))
      throw std::invalid_argument("dataset.test_fraction: must lie in (0, 1)");
    if (!(dataset.validation_fraction > 0 && dataset.validation_fraction < 1))
      throw std::invalid_argument("dataset.validation_fraction: must lie in (0, 1)");
    for (auto h : hidden)
      if (h == 0) throw std::invalid_argument("model.hidden: widths must be positive");
    if (!(compute.gamma_shape > 0 && compute.gamma_scale > 0))
      throw std::invalid_argument("compute: Gamma shape and scale must be positive");
    if (!(compute.epsilon > 0 && compute.epsilon < 1))
      throw std::invalid_argument("compute.epsilon: must lie in (0, 1)");
    if (!(compute.p_scale > 0)) throw std::invalid_argument("compute.p_scale: must be positive");
    if (!(compute.straggler_slowdown >= 1))
      throw std::invalid_argument("compute.straggler_slowdown: must be at least 1");
    if (compute.frequency_hz < 0 || compute.bits_per_sample < 0)
      throw std::invalid_argument("compute: frequency and bits per sample must be non-negative");
    if (!(valuation.zeta >= 0 && valuation.zeta <= 1))
      throw std::invalid_argument("valuation.zeta: must lie in [0, 1]");
    valuation.gtg.validate();
    if (fixed_push_n && *fixed_push_n < 0)
      throw std::invalid_argument("fixed_push_n: must be non-negative");
    if (!(centralized_fraction > 0 && centralized_fraction <= 1))
      throw std::invalid_argument("centralized_fraction: must lie in (0, 1]");
    if (target_accuracy && !(*target_accuracy > 0 && *target_accuracy < 1))
      throw std::invalid_argument("target_accuracy: must lie in (0, 1)");
  }
};

// ---------------------------------------------------------------------------
// Scenario

struct Federation {
  std::vector<ClientProfile> clients;  // clients[k - 1] has id k
  LabeledDataset validation;           // held by the PS, used for valuation
  LabeledDataset test;                 // reporting only
  Architecture arch;

  std::size_t size() const { return clients.size(); }
  const ClientProfile& client(ClientId id) const { return clients.at(id - 1); }
};

inline LabeledDataset load_dataset(const DatasetSpec& spec, std::uint64_t seed) {
  if (spec.kind == DatasetSpec::Kind::idx) return ingest_idx(spec.images_path, spec.labels_path);
  return generate_synthetic(spec.samples, spec.dim, spec.classes, spec.separation, seed);
}

// Splits `full` into test / validation / client shards and attaches the
// heterogeneity profile. All randomness derives from `seed`.
inline Federation build_federation(const SimulationConfig& cfg, const LabeledDataset& full,
                                   std::uint64_t seed) {
  cfg.validate();
  auto [rest, test] = validation_split(full, cfg.dataset.test_fraction, derive_seed(seed, {1}));
  auto [train, val] = validation_split(rest, cfg.dataset.validation_fraction, derive_seed(seed, {2}));

  PartitionSpec part = cfg.partition;
  part.seed = derive_seed(seed, {3});
  auto shards = dirichlet_partition(train, part);

  ComputeDefaults cd;
  cd.gamma_shape = cfg.compute.gamma_shape;
  cd.gamma_scale = cfg.compute.gamma_scale;
  cd.straggler_slowdown = cfg.compute.straggler_slowdown;
  cd.bits_per_sample = cfg.compute.bits_per_sample > 0 ? cfg.compute.bits_per_sample
                                                       : 32.0 * static_cast<double>(full.dim);
  if (cfg.compute.frequency_hz > 0) {
    cd.frequency_hz = cfg.compute.frequency_hz;
  } else {
    // Place the median latency of an average-sized client at T_Q (T_F / 2 if Q = 0).
    const double mean_bits = cd.bits_per_sample * static_cast<double>(train.size()) /
                             static_cast<double>(shards.size());
    const double target = cfg.frame.pull_slots > 0 ? cfg.frame.pull_seconds() : cfg.frame.frame_seconds() / 2;
    cd.frequency_hz = local_iterations(cfg.compute.epsilon, cfg.compute.p_scale) * mean_bits *
                      gamma_median(cd.gamma_shape, cd.gamma_scale) / target;
  }

  Federation fed;
  fed.clients = assign_heterogeneity(std::move(shards), part, cd);
  fed.validation = std::move(val);
  fed.test = std::move(test);
  fed.arch = Architecture{full.dim, cfg.hidden, full.classes};
  return fed;
}

// ---------------------------------------------------------------------------
// State and records

struct FederationState {
  std::size_t round = 0;
  ModelParams global;
  std::map<ClientId, double> shapley;            // running nu_k, 0 until first valued
  std::map<ClientId, ModelParams> held_updates;  // collided updates awaiting re-offer
};

struct RoundRecord {
  std::size_t round = 0;
  bool warmup = false;
  int pull_region = 0;  // pull slots in this frame
  int push_region = 0;  // push slots in this frame
  std::vector<ClientId> pull_set;          // schedule order: slot 1, 2, ...
  std::vector<ClientId> pull_forfeits;
  std::vector<ClientId> push_contenders;   // ascending id, aligned with push.slot
  PushOutcome push;
  std::vector<ClientId> delivered;         // [Y], ascending id
  std::map<ClientId, int> slot_cost;       // T_k of every delivered update
  int time_cost = 0;                       // T_cost, slots
  bool degenerate = false;                 // nothing delivered
  EvalReport eval;
  std::vector<ClientId> valued;
  std::size_t permutations_used = 0;
  std::size_t truncation_events = 0;
  std::map<ClientId, double> shapley;      // nu after this round's update
};

struct RunTrace {
  PolicyKind policy = PolicyKind::proposed;
  std::uint64_t seed = 0;
  std::vector<RoundRecord> rounds;
  long long cumulative_slots = 0;
  std::string fingerprint;
  EvalReport initial_eval;
  ModelParams final_model;
};

// ---------------------------------------------------------------------------
// Scheduling

inline bool in_warmup(const Policy& policy, std::size_t t) {
  return policy.valuation_based() && t < static_cast<std::size_t>(policy.warmup_rounds);
}

// Pull set in schedule order.
//  - warmup of valuation-based policies: round-robin blocks of M ids,
//    block t mod ceil(K/M) (the last block of a pass may be shorter);
//  - afterwards: the Q highest running Shapley values, ties by ascending id;
//  - FedAvgRandom / Centralized: uniform sample of min(Q, K) ids, ascending.
inline std::vector<ClientId> select_pull_set(const Policy& policy, std::size_t t,
                                             const std::map<ClientId, double>& values,
                                             std::size_t clients, int slots, int pull_slots,
                                             std::uint64_t seed) {
  if (pull_slots < 0 || pull_slots > slots)
    throw std::invalid_argument("select_pull_set: need 0 <= Q <= M");
  std::vector<ClientId> out;
  if (clients == 0) return out;
  if (in_warmup(policy, t)) {
    const std::size_t m = static_cast<std::size_t>(slots);
    const std::size_t blocks = (clients + m - 1) / m;
    const std::size_t b = t % blocks;
    for (std::size_t id = b * m + 1; id <= std::min(clients, (b + 1) * m); ++id) out.push_back(id);
    return out;
  }
  const std::size_t q = std::min<std::size_t>(static_cast<std::size_t>(pull_slots), clients);
  if (policy.valuation_based()) {
    std::vector<std::pair<double, ClientId>> ranked;
    for (ClientId id = 1; id <= clients; ++id) {
      auto it = values.find(id);
      ranked.emplace_back(it == values.end() ? 0.0 : it->second, id);
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    for (std::size_t i = 0; i < q; ++i) out.push_back(ranked[i].second);
    return out;
  }
  std::vector<ClientId> ids(clients);
  std::iota(ids.begin(), ids.end(), ClientId{1});
  Rng rng = make_rng(seed, Stream::select, {t});
  for (std::size_t i = 0; i < q; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, clients - 1);
    std::swap(ids[i], ids[pick(rng)]);
  }
  out.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(q));
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Rounds

namespace detail {

inline double sample_compute_seconds(const ClientProfile& c, const SimulationConfig& cfg,
                                     std::uint64_t seed, std::size_t t) {
  ComputeProfile prof = c.compute;
  prof.cycles_per_bit =
      sample_cycles(prof.gamma_shape, prof.gamma_scale, derive_seed(seed, Stream::compute, {t, c.id}));
  return local_latency(prof, cfg.compute.epsilon, cfg.compute.p_scale);
}

// Broadcast model -> local SGD (stragglers: uniform epochs in [1, E]) -> noise.
inline ModelParams client_update(const ClientProfile& c, const ModelParams& global,
                                 const SimulationConfig& cfg, std::uint64_t seed, std::size_t t) {
  int epochs = cfg.train.epochs;
  if (c.straggler) {
    Rng rng = make_rng(seed, Stream::epochs, {t, c.id});
    epochs = std::uniform_int_distribution<int>(1, cfg.train.epochs)(rng);
  }
  auto trained = local_train(global, c.data, cfg.train, epochs, derive_seed(seed, Stream::train, {t, c.id}));
  return add_noise(trained, c.noise_sigma, derive_seed(seed, Stream::noise, {t, c.id}));
}

}  // namespace detail

struct RoundResult {
  FederationState state;
  RoundRecord record;
};

inline RoundResult run_round(const FederationState& state, const Federation& fed,
                             const SimulationConfig& cfg, const Policy& policy, std::uint64_t seed) {
  const std::size_t t = state.round;
  const int m = cfg.frame.slots;
  RoundResult res{state, {}};
  RoundRecord& rec = res.record;
  FederationState& next = res.state;
  rec.round = t;
  rec.warmup = in_warmup(policy, t);
  rec.pull_region = rec.warmup ? m : policy.pull_slots;
  rec.push_region = (!rec.warmup && policy.push_enabled) ? m - policy.pull_slots : 0;

  FrameConfig frame = cfg.frame;
  frame.pull_slots = rec.pull_region;

  std::map<ClientId, ModelParams> received;
  std::vector<ClientId> pull_delivered;

  // Pull region.
  rec.pull_set = select_pull_set(policy, t, state.shapley, fed.size(), m, rec.pull_region, seed);
  for (std::size_t i = 0; i < rec.pull_set.size(); ++i) {
    const ClientId id = rec.pull_set[i];
    const int zeta = static_cast<int>(i) + 1;
    next.held_updates.erase(id);
    const auto& c = fed.client(id);
    if (cfg.pull_forfeit_late &&
        detail::sample_compute_seconds(c, cfg, seed, t) > zeta * cfg.frame.slot_seconds) {
      rec.pull_forfeits.push_back(id);
      continue;
    }
    received.emplace(id, detail::client_update(c, state.global, cfg, seed, t));
    rec.slot_cost[id] = time_cost_ue(PullAccess{zeta}, 0.0, frame);
    pull_delivered.push_back(id);
  }

  // Push region: framed ALOHA among devices that finished within the frame.
  if (rec.push_region > 0) {
    const std::set<ClientId> pulled(rec.pull_set.begin(), rec.pull_set.end());
    std::vector<ClientId> candidates;
    std::map<ClientId, double> compute_s;
    for (const auto& c : fed.clients) {
      if (pulled.count(c.id)) continue;
      candidates.push_back(c.id);
      compute_s[c.id] = detail::sample_compute_seconds(c, cfg, seed, t);
    }
    if (cfg.fixed_push_n) {
      // The N earliest finishers contend, whether or not they beat T_F.
      const std::size_t n = std::min<std::size_t>(*cfg.fixed_push_n, candidates.size());
      std::stable_sort(candidates.begin(), candidates.end(),
                       [&](ClientId a, ClientId b) { return compute_s[a] < compute_s[b]; });
      candidates.resize(n);
      std::sort(candidates.begin(), candidates.end());
      // Forced contenders are treated as having finished by the end of the frame.
      for (ClientId id : candidates) compute_s[id] = std::min(compute_s[id], cfg.frame.frame_seconds());
      rec.push_contenders = candidates;
    } else {
      for (ClientId id : candidates)
        if (compute_s[id] <= cfg.frame.frame_seconds()) rec.push_contenders.push_back(id);
    }
    rec.push = simulate_push_frame(static_cast<int>(rec.push_contenders.size()), rec.push_region,
                                   derive_seed(seed, Stream::aloha, {t}));
    for (std::size_t i = 0; i < rec.push_contenders.size(); ++i) {
      const ClientId id = rec.push_contenders[i];
      const auto& c = fed.client(id);
      auto held = next.held_updates.find(id);
      if (rec.push.success[i]) {
        if (held != next.held_updates.end()) {
          received.emplace(id, std::move(held->second));
          next.held_updates.erase(held);
        } else {
          received.emplace(id, detail::client_update(c, state.global, cfg, seed, t));
        }
        rec.slot_cost[id] = time_cost_ue(PushAccess{}, compute_s[id], frame);
      } else if (cfg.reoffer_collided && held == next.held_updates.end()) {
        next.held_updates.emplace(id, detail::client_update(c, state.global, cfg, seed, t));
      }
    }
  }

  for (const auto& [id, params] : received) rec.delivered.push_back(id);

  if (received.empty()) {
    rec.degenerate = true;
    rec.time_cost = m;
  } else {
    std::vector<WeightedModel> entries;
    for (const auto& [id, params] : received)
      entries.push_back({static_cast<double>(fed.client(id).samples()), &params});
    next.global = fed_average(entries);

    if (policy.valuation_based()) {
      const auto& valued_ids = cfg.valuation.set == ValuationSet::pull_only ? pull_delivered : rec.delivered;
      if (!valued_ids.empty()) {
        UtilityContext ctx;
        ctx.base = &state.global;
        ctx.validation = &fed.validation;
        std::vector<ClientId> sorted_ids = valued_ids;
        std::sort(sorted_ids.begin(), sorted_ids.end());
        for (ClientId id : sorted_ids)
          ctx.updates.push_back({id, static_cast<double>(fed.client(id).samples()), received.at(id)});
        const auto est = gtg_shapley(ctx, cfg.valuation.gtg, derive_seed(seed, Stream::valuation, {t}));
        for (const auto& [id, v] : est.values)
          next.shapley[id] = exp_average(next.shapley[id], v, cfg.valuation.zeta);
        rec.valued = sorted_ids;
        rec.permutations_used = est.permutations_used;
        rec.truncation_events = est.truncation_events;
      }
    }
    std::vector<int> costs;
    for (const auto& [id, k] : rec.slot_cost) costs.push_back(k);
    rec.time_cost = frame_time_cost(costs);
  }

  rec.eval = evaluate(next.global, fed.test);
  rec.shapley = next.shapley;
  next.round = t + 1;
  return res;
}

// ---------------------------------------------------------------------------
// Runs

inline std::vector<ClientId> centralized_sample(std::size_t clients, double fraction,
                                                std::uint64_t seed) {
  const std::size_t n = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(clients))), 1, clients);
  std::vector<ClientId> ids(clients);
  std::iota(ids.begin(), ids.end(), ClientId{1});
  Rng rng = make_rng(seed, Stream::centralized);
  std::shuffle(ids.begin(), ids.end(), rng);
  ids.resize(n);
  std::sort(ids.begin(), ids.end());
  return ids;
}

inline FederationState initial_state(const Federation& fed, std::uint64_t seed) {
  FederationState s;
  s.global = init_model(fed.arch, derive_seed(seed, Stream::init));
  return s;
}

inline RunTrace run_training(const SimulationConfig& cfg, const Federation& fed, const Policy& policy,
                             std::uint64_t seed) {
  cfg.validate();
  policy.validate(cfg.frame);
  RunTrace trace;
  trace.policy = policy.kind;
  trace.seed = seed;
  FederationState state = initial_state(fed, seed);
  trace.initial_eval = evaluate(state.global, fed.test);

  std::vector<ClientId> pooled_ids;
  LabeledDataset pooled{fed.arch.input_dim, fed.arch.classes, {}, {}};
  if (policy.kind == PolicyKind::centralized) {
    pooled_ids = centralized_sample(fed.size(), cfg.centralized_fraction, seed);
    for (ClientId id : pooled_ids) pooled.append(fed.client(id).data);
  }

  for (int t = 0; t < cfg.rounds; ++t) {
    RoundRecord rec;
    if (policy.kind == PolicyKind::centralized) {
      rec.round = state.round;
      rec.pull_region = policy.pull_slots;
      rec.pull_set = pooled_ids;
      state.global = local_train(state.global, pooled, cfg.train, 1,
                                 derive_seed(seed, Stream::train, {state.round, 0}));
      rec.time_cost = policy.pull_slots;
      rec.eval = evaluate(state.global, fed.test);
      ++state.round;
    } else {
      auto res = run_round(state, fed, cfg, policy, seed);
      state = std::move(res.state);
      rec = std::move(res.record);
    }
    trace.cumulative_slots += rec.time_cost;
    const bool stop = cfg.target_accuracy && rec.eval.accuracy >= *cfg.target_accuracy;
    trace.rounds.push_back(std::move(rec));
    if (stop) break;
  }
  trace.final_model = std::move(state.global);
  return trace;
}

inline RunTrace run_training(const SimulationConfig& cfg, const Policy& policy, std::uint64_t seed) {
  cfg.validate();
  const auto full = load_dataset(cfg.dataset, derive_seed(seed, Stream::data));
  const auto fed = build_federation(cfg, full, seed);
  return run_training(cfg, fed, policy, seed);
}

// Cumulative T_cost through the first round whose accuracy reaches theta.
inline std::optional<long long> time_to_accuracy(const RunTrace& trace, double theta) {
  long long slots = 0;
  for (const auto& r : trace.rounds) {
    slots += r.time_cost;
    if (r.eval.accuracy >= theta) return slots;
  }
  return std::nullopt;
}

}  // namespace pushpull
