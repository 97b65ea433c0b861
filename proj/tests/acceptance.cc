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

// Exit gate. Prints one PASS/FAIL line per criterion and exits non-zero if
// any criterion fails. Criteria 7-10 drive the command-line tool on the
// default desk scenario.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pushpull/compute.hpp"
#include "pushpull/experiment.hpp"
#include "pushpull/mac.hpp"
#include "pushpull/valuation.hpp"

namespace fs = std::filesystem;
using namespace pushpull;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void run(int id, const std::string& title, double limit_seconds, const std::function<Verdict()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > limit_seconds) {
    v.pass = false;
    v.detail += " [over time limit " + format_double(limit_seconds) + " s]";
  }
  if (!v.pass) ++failures;
  std::printf("%s criterion %2d: %s (%.1f s) %s\n", v.pass ? "PASS" : "FAIL", id, title.c_str(), secs,
              v.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(double v, int digits = 4) {
  char b[64];
  std::snprintf(b, sizeof b, "%.*f", digits, v);
  return b;
}

// ---------------------------------------------------------------------------
// Tabular game helpers

TabularGame random_game(std::size_t n, std::uint64_t seed) {
  TabularGame g(n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& v : g.values) v = u(rng);
  return g;
}

// Random game where players 0 and 1 are interchangeable and the last player
// adds nothing to any coalition.
TabularGame structured_game(std::size_t n, std::uint64_t seed) {
  TabularGame g = random_game(n, seed);
  const Coalition a = 1, b = 2, null = Coalition{1} << (n - 1);
  for (Coalition s = 0; s < g.values.size(); ++s)
    if ((s & a) && !(s & b)) g[(s & ~a) | b] = g(s);
  for (Coalition s = 0; s < g.values.size(); ++s)
    if (s & null) g[s] = g(s & ~null);
  return g;
}

double factorial(std::size_t n) {
  double f = 1.0;
  for (std::size_t i = 2; i <= n; ++i) f *= static_cast<double>(i);
  return f;
}

// ---------------------------------------------------------------------------
// Command-line helpers

int cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(PUSHPULL_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const fs::path& work_dir() {
  static const fs::path d = [] {
    auto p = fs::temp_directory_path() / ("pushpull_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return d;
}

// The desk scenario run shared by criteria 7-9.
constexpr const char* kMainPolicies = "proposed,greedy_shap,fedavg_random";

std::string desk_args(const fs::path& out) {
  return std::string("simulate --config ") + PUSHPULL_DEFAULT_CONFIG + " --policies " + kMainPolicies +
         " --out " + out.string();
}

const fs::path& desk_run() {
  static const fs::path out = [] {
    const auto dir = work_dir() / "desk_a";
    const auto log = work_dir() / "desk_a.log";
    if (cli(desk_args(dir), log) != 0) {
      auto msg = slurp(log);
      while (!msg.empty() && msg.back() == '\n') msg.pop_back();
      throw std::runtime_error("simulate failed: " + msg);
    }
    return dir;
  }();
  return out;
}

std::map<std::string, double> final_means(const fs::path& dir) {
  const auto t = read_csv(dir / "accuracy_vs_round.csv");
  std::map<std::string, std::map<std::string, std::pair<long long, double>>> last;
  for (const auto& r : t.rows) {
    auto& cell = last[r[0]][r[1]];
    const long long round = std::stoll(r[2]);
    if (round >= cell.first) cell = {round, std::stod(r[4])};
  }
  std::map<std::string, double> out;
  for (const auto& [policy, seeds] : last) {
    double s = 0.0;
    for (const auto& [seed, v] : seeds) s += v.second;
    out[policy] = s / static_cast<double>(seeds.size());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Criteria

Verdict success_probability_vs_monte_carlo() {
  Verdict v;
  for (int n : {1, 2, 5, 10, 40}) {
    const auto mc = monte_carlo_time_cost(20, 10, n, 100000, derive_seed(11, Stream::aloha, {std::uint64_t(n)}));
    const double ps = success_prob(20, 10, n);
    const double z = mc.success_stderr > 0 ? std::abs(mc.success_rate - ps) / mc.success_stderr
                                           : (mc.success_rate == ps ? 0.0 : INFINITY);
    v.detail += "N=" + std::to_string(n) + ":z=" + fmt(z, 2) + " ";
    if (z > 3.0) v.pass = false;
  }
  return v;
}

Verdict frame_cost_vs_monte_carlo() {
  Verdict v;
  for (auto [m, tol] : {std::pair{20, 0.10}, std::pair{110, 0.03}}) {
    for (int n : {1, 2, 3, 5, 8, 10}) {
      const auto mc =
          monte_carlo_time_cost(m, 10, n, 100000, derive_seed(12, Stream::aloha, {std::uint64_t(m), std::uint64_t(n)}));
      const double rel = std::abs(expected_time_cost(m, 10, n) - mc.mean) / mc.mean;
      if (rel > tol) {
        v.pass = false;
        v.detail += "M-Q=" + std::to_string(m - 10) + ",N=" + std::to_string(n) + ":rel=" + fmt(rel) + " ";
      }
      if (n == 10) v.detail += "M-Q=" + std::to_string(m - 10) + ",N=10:rel=" + fmt(rel) + " ";
    }
  }
  return v;
}

Verdict closed_form_examples() {
  const double cost = expected_time_cost(20, 10, 1);
  const double ps = success_prob(20, 10, 2);
  return {cost == 15.5 && ps == 0.9, "cost=" + format_double(cost) + " p_s=" + format_double(ps)};
}

Verdict full_enumeration_and_axioms() {
  Verdict v;
  double worst = 0.0;
  for (std::size_t n = 4; n <= 6; ++n) {
    for (std::uint64_t s = 0; s < 10; ++s) {
      const auto g = random_game(n, 1000 * n + s);
      const auto ex = exact_shapley(g);
      const auto mc = gtg_shapley(g, GtgOptions{static_cast<std::size_t>(factorial(n)), 0.0, 5}, s);
      for (std::size_t k = 0; k < n; ++k) worst = std::max(worst, std::abs(ex.values.at(k) - mc.values.at(k)));
    }
  }
  if (worst > 1e-9) v.pass = false;
  v.detail = "max|gtg-exact|=" + fmt(worst, 12);

  std::mt19937_64 rng(77);
  int bad = 0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 4 + rng() % 3;
    const auto g = structured_game(n, rng());
    for (const auto& est : {exact_shapley(g), gtg_shapley(g, GtgOptions{static_cast<std::size_t>(factorial(n)), 0.0, 5}, 1)}) {
      double sum = 0.0;
      for (const auto& [k, x] : est.values) sum += x;
      const bool efficient = std::abs(sum - (g(full_coalition(n)) - g(0))) < 1e-9;
      const bool symmetric = std::abs(est.values.at(0) - est.values.at(1)) < 1e-9;
      const bool null_player = std::abs(est.values.at(static_cast<ClientId>(n - 1))) < 1e-9;
      if (!(efficient && symmetric && null_player)) ++bad;
    }
  }
  if (bad) v.pass = false;
  v.detail += " axiom violations=" + std::to_string(bad) + "/200";
  return v;
}

Verdict eight_player_sampling_error() {
  Verdict v;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto g = random_game(8, 100 + seed);
    const auto ex = exact_shapley(g);
    const auto mc = gtg_shapley(g, GtgOptions{2000, 0.0, 5}, seed);
    if (mc.permutations_used != 2000) v.pass = false;
    for (int k = 0; k < 8; ++k) worst = std::max(worst, std::abs(mc.values.at(k) - ex.values.at(k)));
  }
  if (worst >= 0.05) v.pass = false;
  v.detail = "max error=" + fmt(worst);
  return v;
}

// Latencies follow the desk compute model: T = I_l(eps) c / f with c drawn
// from Gamma(2, 2) cycles per bit, one bit, f = 1 Hz; frame T_F = 20 s and
// budget T_max = 60 frames.
Verdict latency_bound_covers_mean() {
  const double eps = 0.1, p = 1.0, frame = 20.0, budget = 60 * frame;
  const int iters = local_iterations(eps, p);
  std::mt19937_64 rng(2024);
  std::gamma_distribution<double> gamma(2.0, 2.0);
  auto draw = [&] { return iters * gamma(rng); };

  std::vector<double> big(1000000);
  for (auto& t : big) t = draw();
  clamp_latencies(big, p, eps, frame);
  double pop_mean = 0.0;
  for (double t : big) pop_mean += t;
  pop_mean /= static_cast<double>(big.size());

  int below = 0;
  double min_margin = INFINITY;
  for (int rep = 0; rep < 1000; ++rep) {
    LatencyBoundInputs in;
    in.latencies.resize(50);
    for (auto& t : in.latencies) t = draw();
    in.epsilon = eps;
    in.theta = 0.9;
    in.p = p;
    in.q = 1.0;
    in.frame_seconds = frame;
    in.time_budget = budget;
    const auto b = hoeffding_bound(in);
    // Both the replication's own clamped mean and the population mean must
    // stay under the bound.
    min_margin = std::min({min_margin, b.value - pop_mean, b.value - b.mean_latency});
    if (b.value < pop_mean || b.value < b.mean_latency) ++below;
  }
  return {below == 0, "population mean=" + fmt(pop_mean, 3) + " s, min margin=" + fmt(min_margin, 3) +
                          " s, violations=" + std::to_string(below) + "/1000"};
}

Verdict proposed_vs_baselines() {
  const auto fin = final_means(desk_run());
  const double p = fin.at("proposed"), g = fin.at("greedy_shap"), r = fin.at("fedavg_random");
  return {p >= r + 0.02 && std::abs(p - g) <= 0.03,
          "proposed=" + fmt(p) + " greedy_shap=" + fmt(g) + " fedavg_random=" + fmt(r) +
              " gap to random=" + fmt(p - r) + " |gap to greedy|=" + fmt(std::abs(p - g))};
}

Verdict push_population_trend() {
  const auto t = read_csv(desk_run() / "accuracy_vs_push_n.csv");
  std::map<std::string, std::map<int, double>> by;
  for (const auto& r : t.rows)
    if (std::stoi(r[1]) > 0) by[r[0]][std::stoi(r[1])] = std::stod(r[2]);
  Verdict v;
  if (by.empty()) return {false, "no push-enabled policy in the table"};
  for (const auto& [policy, pts] : by) {
    int violations = 0;
    double worst = 0.0;
    std::optional<double> prev;
    v.detail += policy + ":";
    for (const auto& [n, acc] : pts) {
      v.detail += " N" + std::to_string(n) + "=" + fmt(acc);
      if (prev && acc > *prev) {
        ++violations;
        worst = std::max(worst, acc - *prev);
      }
      prev = acc;
    }
    if (pts.size() < 4 || violations > 1 || worst > 0.005) v.pass = false;
    v.detail += " rises=" + std::to_string(violations) + " largest=" + fmt(worst) + "; ";
  }
  return v;
}

Verdict time_to_accuracy_shape() {
  const auto t = read_csv(desk_run() / "time_to_accuracy.csv");
  std::map<std::string, std::map<double, std::optional<double>>> by;
  for (const auto& r : t.rows)
    by[r[0]][std::stod(r[1])] = r[2].empty() ? std::nullopt : std::optional<double>(std::stod(r[2]));
  Verdict v;
  for (const auto& [policy, pts] : by) {
    std::optional<double> prev;
    bool unreached = false;
    for (const auto& [theta, s] : pts) {
      if (unreached && s) v.pass = false;
      if (!s) unreached = true;
      if (s && prev && *s < *prev) v.pass = false;
      if (s) prev = s;
    }
  }
  if (!v.pass) v.detail += "non-monotone threshold curve; ";
  const auto& prop = by.at("proposed");
  const auto& greedy = by.at("greedy_shap");
  const auto& random = by.at("fedavg_random");
  const double top = prop.rbegin()->first;
  std::optional<double> highest;
  for (const auto& [theta, s] : prop)
    if (s) highest = theta;
  if (!highest) return {false, v.detail + "proposed reached no threshold"};
  const auto ps = *prop.at(*highest);
  const auto gs = greedy.count(*highest) ? greedy.at(*highest) : std::nullopt;
  if (gs && ps > *gs) v.pass = false;
  if (random.at(top)) v.pass = false;
  v.detail += "highest reached theta=" + format_double(*highest) + ": proposed=" + fmt(ps, 1) +
              " greedy_shap=" + (gs ? fmt(*gs, 1) : std::string("none")) + "; fedavg_random at theta=" +
              format_double(top) + ": " + (random.at(top) ? fmt(*random.at(top), 1) : std::string("none"));
  return v;
}

Verdict reruns_are_byte_identical() {
  const auto b = work_dir() / "desk_b";
  if (cli(desk_args(b), work_dir() / "desk_b.log") != 0) return {false, "second simulate failed"};
  Verdict v;
  int files = 0;
  for (const char* name : {"accuracy_vs_round.csv", "accuracy_vs_push_n.csv", "time_to_accuracy.csv",
                           "mac_analytics.csv"}) {
    ++files;
    const auto x = slurp(desk_run() / name), y = slurp(b / name);
    if (x.empty() || x != y) {
      v.pass = false;
      v.detail += std::string(name) + " differs; ";
    }
  }
  v.detail += std::to_string(files) + " tables compared";
  return v;
}

}  // namespace

int main() {
  run(1, "push success probability against Monte Carlo within 3 SE", 10, success_probability_vs_monte_carlo);
  run(2, "expected frame cost against Monte Carlo (10% / 3%)", 30, frame_cost_vs_monte_carlo);
  run(3, "closed-form cost and success examples are exact", 1, closed_form_examples);
  run(4, "full permutation enumeration equals exact Shapley, axioms hold", 10, full_enumeration_and_axioms);
  run(5, "8-player sampled Shapley error below 0.05", 10, eight_player_sampling_error);
  run(6, "latency bound covers the mean latency", 5, latency_bound_covers_mean);
  // Criterion 7's limit covers the shared desk run, which it triggers.
  run(7, "proposed beats random selection and tracks greedy Shapley", 300, proposed_vs_baselines);
  run(8, "final accuracy non-increasing in push contenders", 10, push_population_trend);
  run(9, "time to accuracy grows with the threshold; proposed fastest", 10, time_to_accuracy_shape);
  run(10, "identical simulate runs give identical tables", 600, reruns_are_byte_identical);
  fs::remove_all(work_dir());
  std::printf("%s: %d criterion failure(s)\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
