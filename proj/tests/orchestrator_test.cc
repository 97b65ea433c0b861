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

#include "pushpull/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "gtest/gtest.h"

namespace pushpull {
namespace {

// Small, fast scenario: K clients on 2-D synthetic data.
SimulationConfig small_config(std::size_t k, int m, int q) {
  SimulationConfig cfg;
  cfg.dataset.samples = 60 * k;
  cfg.dataset.dim = 2;
  cfg.dataset.classes = 2;
  cfg.dataset.separation = 4.0;
  cfg.partition.clients = k;
  cfg.partition.alpha = 5.0;
  cfg.partition.straggler_fraction = 0.0;
  cfg.partition.sigma = 0.0;
  cfg.train = TrainConfig{2, 2, 0.1, 0.0};
  cfg.frame.slots = m;
  cfg.frame.pull_slots = q;
  cfg.frame.warmup_rounds = 0;
  cfg.rounds = 4;
  cfg.valuation.gtg.max_permutations = 10;
  return cfg;
}

Federation federation(const SimulationConfig& cfg, std::uint64_t seed) {
  return build_federation(cfg, load_dataset(cfg.dataset, derive_seed(seed, Stream::data)), seed);
}

TEST(SelectPullSetTest, WarmupRoundRobinBlocks) {
  Policy p{PolicyKind::proposed, 3, false, 5};
  EXPECT_EQ(select_pull_set(p, 0, {}, 6, 3, 3, 1), (std::vector<ClientId>{1, 2, 3}));
  EXPECT_EQ(select_pull_set(p, 1, {}, 6, 3, 3, 1), (std::vector<ClientId>{4, 5, 6}));
  EXPECT_EQ(select_pull_set(p, 2, {}, 6, 3, 3, 1), (std::vector<ClientId>{1, 2, 3}));
  // The last block of a pass may be short.
  EXPECT_EQ(select_pull_set(p, 2, {}, 7, 3, 3, 1), (std::vector<ClientId>{7}));
}

TEST(SelectPullSetTest, TopQWithIdTieBreak) {
  Policy p{PolicyKind::proposed, 2, true, 0};
  const std::map<ClientId, double> nu{{1, 0.5}, {2, 0.1}, {3, 0.5}, {4, 0.2}};
  EXPECT_EQ(select_pull_set(p, 7, nu, 4, 4, 2, 1), (std::vector<ClientId>{1, 3}));
}

TEST(SelectPullSetTest, RandomPolicyIsSeededSample) {
  Policy p = Policy::make(PolicyKind::fedavg_random, FrameConfig{}, 50);
  const auto a = select_pull_set(p, 3, {}, 50, 20, 20, 9);
  EXPECT_EQ(a, select_pull_set(p, 3, {}, 50, 20, 20, 9));
  EXPECT_NE(a, select_pull_set(p, 4, {}, 50, 20, 20, 9));
  EXPECT_EQ(a.size(), 20u);
  EXPECT_EQ(std::set<ClientId>(a.begin(), a.end()).size(), 20u);
  EXPECT_EQ(select_pull_set(p, 0, {}, 5, 20, 20, 9).size(), 5u);
}

TEST(PolicyTest, BaselineShapes) {
  const FrameConfig f;
  const auto only = Policy::make(PolicyKind::only_pull, f, 50);
  EXPECT_FALSE(only.push_enabled);
  EXPECT_EQ(only.pull_slots, f.slots);
  EXPECT_EQ(Policy::make(PolicyKind::greedy_shap, f, 50).warmup_rounds, 3);
  EXPECT_EQ(Policy::make(PolicyKind::proposed, f, 50).warmup_rounds, 20);
  EXPECT_TRUE(Policy::make(PolicyKind::proposed, f, 50).push_enabled);
  EXPECT_THROW((Policy{PolicyKind::only_pull, 10, false, 0}.validate(f)), std::invalid_argument);
  EXPECT_EQ(parse_policy("greedy_shap"), PolicyKind::greedy_shap);
  EXPECT_THROW(parse_policy("fedprox"), std::invalid_argument);
}

TEST(RunRoundTest, OnlyPullDeliversExactlyThePullSet) {
  auto cfg = small_config(12, 6, 6);
  const auto fed = federation(cfg, 3);
  const auto policy = Policy::make(PolicyKind::only_pull, cfg.frame, fed.size());
  auto state = initial_state(fed, 3);
  for (int t = 0; t < 3; ++t) {
    auto res = run_round(state, fed, cfg, policy, 3);
    auto scheduled = res.record.pull_set;
    std::sort(scheduled.begin(), scheduled.end());
    EXPECT_EQ(res.record.delivered, scheduled);
    EXPECT_TRUE(res.record.push_contenders.empty());
    EXPECT_LE(res.record.time_cost, 1 + cfg.frame.slots);
    state = res.state;
  }
}

TEST(RunRoundTest, LonePushContenderAlwaysDelivered) {
  auto cfg = small_config(3, 4, 2);
  cfg.fixed_push_n = 1;
  cfg.compute.frequency_hz = 1e15;  // finishes well inside the pull period
  const auto fed = federation(cfg, 5);
  const auto policy = Policy::make(PolicyKind::proposed, cfg.frame, fed.size());
  auto state = initial_state(fed, 5);
  for (int t = 0; t < 5; ++t) {
    auto res = run_round(state, fed, cfg, policy, 5);
    ASSERT_EQ(res.record.push_contenders.size(), 1u);
    const ClientId lone = res.record.push_contenders[0];
    EXPECT_TRUE(res.record.push.success[0]);
    EXPECT_EQ(res.record.slot_cost.at(lone), cfg.frame.pull_slots + 1);
    EXPECT_EQ(res.record.delivered.size(), 3u);
    state = res.state;
  }
}

TEST(RunRoundTest, Deterministic) {
  auto cfg = small_config(10, 6, 3);
  cfg.partition.sigma = 0.3;
  cfg.partition.straggler_fraction = 0.5;
  const auto fed = federation(cfg, 8);
  const auto policy = Policy::make(PolicyKind::proposed, cfg.frame, fed.size());
  const auto s0 = initial_state(fed, 8);
  const auto a = run_round(s0, fed, cfg, policy, 8);
  const auto b = run_round(s0, fed, cfg, policy, 8);
  EXPECT_EQ(a.state.global, b.state.global);
  EXPECT_EQ(a.record.delivered, b.record.delivered);
  EXPECT_EQ(a.record.push.slot, b.record.push.slot);
  EXPECT_EQ(a.record.shapley, b.record.shapley);
  EXPECT_EQ(a.record.eval, b.record.eval);
}

TEST(RunRoundTest, RecordInvariants) {
  auto cfg = small_config(16, 8, 4);
  cfg.partition.straggler_fraction = 0.5;
  cfg.frame.warmup_rounds = 2;
  cfg.rounds = 8;
  const auto fed = federation(cfg, 2);
  const auto trace = run_training(cfg, fed, Policy::make(PolicyKind::proposed, cfg.frame, fed.size()), 2);
  long long sum = 0;
  for (const auto& r : trace.rounds) {
    sum += r.time_cost;
    EXPECT_GE(r.time_cost, 1);
    EXPECT_LE(r.time_cost, cfg.frame.slots + 1);
    EXPECT_LE(r.delivered.size(), static_cast<std::size_t>(cfg.frame.slots));
    std::set<ClientId> expect(r.pull_set.begin(), r.pull_set.end());
    for (ClientId f : r.pull_forfeits) expect.erase(f);
    for (std::size_t i = 0; i < r.push_contenders.size(); ++i) {
      if (r.push.success[i]) {
        EXPECT_TRUE(expect.insert(r.push_contenders[i]).second) << "duplicate delivery";
      }
    }
    EXPECT_EQ(std::vector<ClientId>(expect.begin(), expect.end()), r.delivered);
    EXPECT_LE(r.pull_set.size(), static_cast<std::size_t>(r.pull_region));
  }
  EXPECT_EQ(trace.cumulative_slots, sum);
  EXPECT_TRUE(trace.rounds[0].warmup);
  EXPECT_FALSE(trace.rounds[2].warmup);
}

TEST(RunRoundTest, ForfeitFlagDropsLatePullDevices) {
  auto cfg = small_config(8, 4, 4);
  cfg.pull_forfeit_late = true;
  cfg.compute.frequency_hz = 1e-3;  // nobody finishes in time
  const auto fed = federation(cfg, 1);
  const auto res = run_round(initial_state(fed, 1), fed, cfg,
                             Policy::make(PolicyKind::fedavg_random, cfg.frame, fed.size()), 1);
  EXPECT_EQ(res.record.pull_forfeits.size(), 4u);
  EXPECT_TRUE(res.record.degenerate);
  EXPECT_EQ(res.record.time_cost, cfg.frame.slots);
  EXPECT_EQ(res.state.global, initial_state(fed, 1).global);
}

// Proposed during warmup, without push, stragglers or noise, is FedAvg over
// round-robin cohorts. The reference below re-implements that loop directly.
TEST(RunTrainingTest, WarmupMatchesReferenceFedAvg) {
  auto cfg = small_config(9, 3, 3);
  cfg.frame.warmup_rounds = 100;
  cfg.rounds = 5;
  cfg.train = TrainConfig{3, 2, 0.2, 0.5};
  const std::uint64_t seed = 21;
  const auto fed = federation(cfg, seed);
  const auto trace = run_training(cfg, fed, Policy::make(PolicyKind::proposed, cfg.frame, fed.size()), seed);

  ModelParams w = init_model(fed.arch, derive_seed(seed, Stream::init));
  for (std::size_t t = 0; t < 5; ++t) {
    std::vector<ModelParams> locals;
    std::vector<double> n;
    for (ClientId id = 3 * (t % 3) + 1; id <= 3 * (t % 3) + 3; ++id) {
      const auto& c = fed.client(id);
      locals.push_back(local_train(w, c.data, cfg.train, 3, derive_seed(seed, Stream::train, {t, id})));
      n.push_back(static_cast<double>(c.samples()));
    }
    std::vector<double> next(w.values.size(), 0.0);
    const double total = n[0] + n[1] + n[2];
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < next.size(); ++j) next[j] += n[i] / total * locals[i].values[j];
    w.values = next;
    EXPECT_EQ(trace.rounds[t].pull_set, (std::vector<ClientId>{3 * (t % 3) + 1, 3 * (t % 3) + 2, 3 * (t % 3) + 3}));
    EXPECT_NEAR(trace.rounds[t].eval.loss, evaluate(w, fed.test).loss, 1e-12);
  }
  for (std::size_t j = 0; j < w.values.size(); ++j) EXPECT_NEAR(trace.final_model.values[j], w.values[j], 1e-12);
}

// Mean delivered push updates per frame against N p_s.
TEST(RunTrainingTest, PushDeliveriesMatchSuccessProbability) {
  auto cfg = small_config(12, 6, 2);
  cfg.fixed_push_n = 4;
  cfg.rounds = 300;
  cfg.train = TrainConfig{1, 1, 0.05, 0.0};
  cfg.valuation.gtg.max_permutations = 2;
  const auto fed = federation(cfg, 4);
  const auto trace = run_training(cfg, fed, Policy::make(PolicyKind::proposed, cfg.frame, fed.size()), 4);
  std::vector<double> pushed;
  for (const auto& r : trace.rounds) pushed.push_back(static_cast<double>(r.push.successes));
  double mean = 0, ss = 0;
  for (double x : pushed) mean += x;
  mean /= pushed.size();
  for (double x : pushed) ss += (x - mean) * (x - mean);
  const double se = std::sqrt(ss / (pushed.size() - 1) / pushed.size());
  EXPECT_NEAR(mean, 4 * success_prob(6, 2, 4), 3 * se);
}

TEST(RunTrainingTest, ZeroRoundsAndEarlyStop) {
  auto cfg = small_config(6, 3, 3);
  cfg.rounds = 0;
  const auto fed = federation(cfg, 1);
  const auto policy = Policy::make(PolicyKind::fedavg_random, cfg.frame, fed.size());
  const auto empty = run_training(cfg, fed, policy, 1);
  EXPECT_TRUE(empty.rounds.empty());
  EXPECT_EQ(empty.final_model, initial_state(fed, 1).global);

  cfg.rounds = 20;
  cfg.target_accuracy = 0.6;
  const auto stopped = run_training(cfg, fed, policy, 1);
  ASSERT_FALSE(stopped.rounds.empty());
  EXPECT_LT(stopped.rounds.size(), 20u);
  EXPECT_GE(stopped.rounds.back().eval.accuracy, 0.6);
}

TEST(RunTrainingTest, CentralizedChargesQPerFrame) {
  auto cfg = small_config(10, 4, 2);
  const auto fed = federation(cfg, 2);
  const auto policy = Policy::make(PolicyKind::centralized, cfg.frame, fed.size());
  const auto trace = run_training(cfg, fed, policy, 2);
  for (const auto& r : trace.rounds) {
    EXPECT_EQ(r.time_cost, policy.pull_slots);
    EXPECT_EQ(r.pull_set.size(), 1u);  // 10% of 10 clients
  }
}

TEST(RunTrainingTest, ReproducibleFromConfigAndSeed) {
  auto cfg = small_config(10, 6, 3);
  cfg.partition.sigma = 0.2;
  cfg.partition.straggler_fraction = 0.5;
  const auto policy = Policy::make(PolicyKind::proposed, cfg.frame, 10);
  const auto a = run_training(cfg, policy, 6);
  const auto b = run_training(cfg, policy, 6);
  EXPECT_EQ(a.final_model, b.final_model);
  EXPECT_EQ(a.cumulative_slots, b.cumulative_slots);
}

TEST(TimeToAccuracyTest, Examples) {
  RunTrace t;
  for (double a : {0.4, 0.55, 0.5, 0.7}) {
    RoundRecord r;
    r.time_cost = 10;
    r.eval.accuracy = a;
    t.rounds.push_back(r);
  }
  EXPECT_EQ(time_to_accuracy(t, 0.3), 10);
  EXPECT_EQ(time_to_accuracy(t, 0.55), 20);
  EXPECT_EQ(time_to_accuracy(t, 0.6), 40);
  EXPECT_EQ(time_to_accuracy(t, 1.0), std::nullopt);
  long long prev = 0;
  for (int i = 1; i <= 14; ++i) {
    const auto s = time_to_accuracy(t, 0.05 * i - 1e-12);
    ASSERT_TRUE(s);
    EXPECT_GE(*s, prev);
    prev = *s;
  }
}

}  // namespace
}  // namespace pushpull
