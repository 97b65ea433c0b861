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

#include "pushpull/mac.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "gtest/gtest.h"

namespace pushpull {
namespace {

TEST(SuccessProbTest, Examples) {
  EXPECT_EQ(success_prob(20, 10, 1), 1.0);
  EXPECT_EQ(success_prob(20, 10, 2), 0.9);
  EXPECT_NEAR(success_prob(20, 10, 10), 0.387420489, 1e-9);
  EXPECT_THROW(success_prob(10, 10, 1), std::invalid_argument);
}

TEST(SuccessProbTest, Monotone) {
  for (int n = 2; n < 30; ++n) {
    EXPECT_LT(success_prob(20, 10, n), success_prob(20, 10, n - 1));
    EXPECT_GT(success_prob(20, 10, n), 0.0);
    EXPECT_GT(success_prob(21, 10, n), success_prob(20, 10, n));
  }
}

TEST(PushFrameTest, TrivialCases) {
  const auto one = simulate_push_frame(1, 10, 3);
  EXPECT_EQ(one.successes, 1u);
  EXPECT_TRUE(one.success[0]);
  const auto two = simulate_push_frame(2, 1, 3);
  EXPECT_EQ(two.successes, 0u);
  EXPECT_EQ(two.collided_slots, std::vector<int>{1});
  EXPECT_EQ(simulate_push_frame(7, 10, 5).slot, simulate_push_frame(7, 10, 5).slot);
}

TEST(PushFrameTest, AtMostOneSuccessPerSlot) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto o = simulate_push_frame(12, 10, s);
    std::set<int> used;
    for (std::size_t i = 0; i < o.slot.size(); ++i) {
      if (o.success[i]) {
        EXPECT_TRUE(used.insert(o.slot[i]).second);
      }
    }
    EXPECT_EQ(resolve_collisions(o.slot, 10).success, o.success);
  }
}

TEST(PushFrameTest, EmpiricalSuccessRateTwoContenders) {
  const auto mc = monte_carlo_time_cost(20, 10, 2, 100000, 17);
  EXPECT_NEAR(mc.success_rate, 0.9, 0.01);
}

TEST(SlotIndexMeanTest, Examples) {
  EXPECT_DOUBLE_EQ(slot_index_mean(20, 10, 1, 1), 5.5);
  EXPECT_DOUBLE_EQ(slot_index_mean(20, 10, 6, 6), 11.0 / 7.0);
  for (int i = 2; i <= 6; ++i) EXPECT_LT(slot_index_mean(20, 10, 6, i), slot_index_mean(20, 10, 6, i - 1));
  EXPECT_THROW(slot_index_mean(20, 10, 6, 7), std::invalid_argument);
  EXPECT_THROW(slot_index_mean(20, 10, 6, 0), std::invalid_argument);
}

TEST(ExpectedTimeCostTest, HandValues) {
  EXPECT_DOUBLE_EQ(expected_time_cost(20, 10, 1), 15.5);
  EXPECT_DOUBLE_EQ(expected_time_cost(20, 0, 1), 10.5);
}

// The lone contender's slot is uniform on 1..M-Q, so the oracle is exact at N=1.
TEST(ExpectedTimeCostTest, MonteCarloOracle) {
  const auto lone = monte_carlo_time_cost(20, 10, 1, 100000, 2);
  EXPECT_NEAR(lone.mean, 15.5, 4 * lone.stderr_);
  const auto five = monte_carlo_time_cost(20, 10, 5, 100000, 3);
  EXPECT_NEAR(expected_time_cost(20, 10, 5), five.mean, 0.1 * five.mean);
}

TEST(ExpectedTimeCostTest, Bounds) {
  for (int n = 1; n <= 40; ++n) {
    const double ps = success_prob(20, 10, n);
    const double c = expected_time_cost(20, 10, n);
    EXPECT_GE(c, 10 * std::pow(1 - ps, n));
    EXPECT_LE(c, 20.0);
  }
}

TEST(TimeCostUeTest, Examples) {
  FrameConfig cfg;
  cfg.slots = 20;
  cfg.pull_slots = 10;
  EXPECT_EQ(time_cost_ue(PushAccess{}, 4.0, cfg), 11);
  EXPECT_EQ(time_cost_ue(PushAccess{}, 10.0, cfg), 11);
  EXPECT_EQ(time_cost_ue(PullAccess{1}, 0.0, cfg), 2);
  cfg.pull_slots = 2;
  EXPECT_EQ(time_cost_ue(PushAccess{}, 3.2, cfg), 5);
  EXPECT_EQ(time_cost_ue(PushAccess{}, 3.0, cfg), 4);
  EXPECT_THROW(time_cost_ue(PullAccess{3}, 0.0, cfg), std::invalid_argument);
  EXPECT_THROW(time_cost_ue(PullAccess{0}, 0.0, cfg), std::invalid_argument);
}

TEST(FrameTimeCostTest, Max) {
  std::vector<int> c{2, 11, 5};
  EXPECT_EQ(frame_time_cost(c), 11);
  std::reverse(c.begin(), c.end());
  EXPECT_EQ(frame_time_cost(c), 11);
  EXPECT_EQ(frame_time_cost(std::vector<int>{7}), 7);
  EXPECT_THROW(frame_time_cost(std::vector<int>{}), std::invalid_argument);
}

TEST(FrameConfigTest, Validation) {
  FrameConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_DOUBLE_EQ(cfg.frame_seconds(), 20.0);
  cfg.pull_slots = 21;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace pushpull
