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

// Experiment drivers behind the command-line tool. Runs fan out over a worker
// pool; output order is canonical and never depends on thread timing.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "pushpull/config.hpp"
#include "pushpull/orchestrator.hpp"

namespace pushpull {

// ---------------------------------------------------------------------------
// Parallel map

// Runs fn(i) for i in [0, n) on up to `workers` threads and returns the
// results by index. The first exception (lowest index) is rethrown.
template <class Fn>
auto parallel_map(std::size_t n, std::size_t workers, Fn&& fn) {
  using R = decltype(fn(std::size_t{0}));
  std::vector<std::optional<R>> out(n);
  std::vector<std::exception_ptr> errors(n);
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, std::max<std::size_t>(n, 1));
  std::atomic<std::size_t> next{0};
  auto body = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        out[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<R> res;
  res.reserve(n);
  for (auto& o : out) res.push_back(std::move(*o));
  return res;
}

// ---------------------------------------------------------------------------
// Output files

// Collects files under a directory and only moves them into place on
// commit(); anything written by an uncommitted set is removed.
class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {}
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;
  ~OutputSet() {
    if (!committed_) discard();
  }

  const std::filesystem::path& dir() const { return dir_; }

  void write(const std::string& name, const std::string& content) {
    const auto final_path = dir_ / name;
    std::filesystem::create_directories(final_path.parent_path());
    auto tmp = final_path;
    tmp += ".partial";
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << content;
    f.close();
    if (!f) throw std::runtime_error("write failed for " + tmp.string());
    pending_.push_back({tmp, final_path});
  }

  std::vector<std::filesystem::path> commit() {
    std::vector<std::filesystem::path> done;
    for (const auto& [tmp, dst] : pending_) {
      std::filesystem::rename(tmp, dst);
      done.push_back(dst);
    }
    pending_.clear();
    committed_ = true;
    return done;
  }

  void discard() noexcept {
    std::error_code ec;
    for (const auto& [tmp, dst] : pending_) std::filesystem::remove(tmp, ec);
    pending_.clear();
  }

 private:
  std::filesystem::path dir_;
  std::vector<std::pair<std::filesystem::path, std::filesystem::path>> pending_;
  bool committed_ = false;
};

// CSV text with the fingerprint comment and header already in place. LF only.
class CsvText {
 public:
  CsvText(const std::string& fp, const std::string& header) {
    text_ = "# config fingerprint " + fp + "\n" + header + "\n";
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) text_ += (i ? "," : "") + cells[i];
    text_ += "\n";
  }
  const std::string& str() const { return text_; }

 private:
  std::string text_;
};

inline constexpr const char* kRoundHeader = "policy,seed,round,cum_slots,accuracy";
inline constexpr const char* kPushHeader = "policy,push_n,mean_accuracy,stderr";
inline constexpr const char* kTimeHeader = "policy,theta_th,slots";
inline constexpr const char* kMacHeader = "M,Q,N,p_s,expected_cost,mc_cost,mc_stderr";

// ---------------------------------------------------------------------------
// Replicated runs

struct RunKey {
  PolicyKind policy;
  std::uint64_t seed;
  std::optional<int> push_n;
};

// Sorted by policy name, then by seed.
inline std::vector<PolicyKind> sorted_policies(std::vector<PolicyKind> ps) {
  std::sort(ps.begin(), ps.end(), [](PolicyKind a, PolicyKind b) { return to_string(a) < to_string(b); });
  ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
  return ps;
}

inline std::vector<std::uint64_t> sorted_seeds(std::vector<std::uint64_t> s) {
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

// Federations are built once per seed and shared by every policy.
inline std::map<std::uint64_t, Federation> build_federations(const ExperimentConfig& cfg) {
  const auto seeds = sorted_seeds(cfg.seeds);
  auto feds = parallel_map(seeds.size(), cfg.workers, [&](std::size_t i) {
    const auto full = load_dataset(cfg.sim.dataset, derive_seed(seeds[i], Stream::data));
    return build_federation(cfg.sim, full, seeds[i]);
  });
  std::map<std::uint64_t, Federation> out;
  for (std::size_t i = 0; i < seeds.size(); ++i) out.emplace(seeds[i], std::move(feds[i]));
  return out;
}

inline std::vector<RunTrace> run_all(const ExperimentConfig& cfg, const std::map<std::uint64_t, Federation>& feds,
                                     const std::vector<RunKey>& keys, const std::string& fp) {
  return parallel_map(keys.size(), cfg.workers, [&](std::size_t i) {
    SimulationConfig sim = cfg.sim;
    if (keys[i].push_n) sim.fixed_push_n = *keys[i].push_n;
    const auto& fed = feds.at(keys[i].seed);
    auto trace = run_training(sim, fed, Policy::make(keys[i].policy, sim.frame, fed.size()), keys[i].seed);
    trace.fingerprint = fp;
    return trace;
  });
}

inline double final_accuracy(const RunTrace& t) {
  return t.rounds.empty() ? t.initial_eval.accuracy : t.rounds.back().eval.accuracy;
}

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
};

inline MeanStderr mean_stderr(const std::vector<double>& xs) {
  MeanStderr r;
  if (xs.empty()) return r;
  for (double x : xs) r.mean += x;
  r.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - r.mean) * (x - r.mean);
    r.stderr_ = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  }
  return r;
}

// Mean slot count over seeds; none unless every seed reached theta.
inline std::optional<double> mean_time_to_accuracy(const std::vector<const RunTrace*>& traces, double theta) {
  double sum = 0.0;
  for (const auto* t : traces) {
    const auto s = time_to_accuracy(*t, theta);
    if (!s) return std::nullopt;
    sum += static_cast<double>(*s);
  }
  return traces.empty() ? std::nullopt : std::optional<double>(sum / static_cast<double>(traces.size()));
}

// ---------------------------------------------------------------------------
// Tables

inline std::string accuracy_vs_round_csv(const std::vector<RunTrace>& traces, const std::string& fp) {
  std::vector<const RunTrace*> order;
  for (const auto& t : traces) order.push_back(&t);
  std::stable_sort(order.begin(), order.end(), [](const RunTrace* a, const RunTrace* b) {
    if (a->policy != b->policy) return to_string(a->policy) < to_string(b->policy);
    return a->seed < b->seed;
  });
  CsvText csv(fp, kRoundHeader);
  for (const auto* t : order) {
    long long cum = 0;
    for (const auto& r : t->rounds) {
      cum += r.time_cost;
      csv.row({std::string(to_string(t->policy)), std::to_string(t->seed), std::to_string(r.round),
               std::to_string(cum), format_double(r.eval.accuracy)});
    }
  }
  return csv.str();
}

inline std::string time_to_accuracy_csv(const std::vector<RunTrace>& traces, const std::vector<double>& thetas,
                                        const std::string& fp) {
  std::map<std::string, std::vector<const RunTrace*>> by_policy;
  for (const auto& t : traces) by_policy[std::string(to_string(t.policy))].push_back(&t);
  auto grid = thetas;
  std::sort(grid.begin(), grid.end());
  CsvText csv(fp, kTimeHeader);
  for (const auto& [name, ts] : by_policy)
    for (double th : grid) {
      const auto s = mean_time_to_accuracy(ts, th);
      csv.row({name, format_double(th), s ? format_double(*s) : ""});
    }
  return csv.str();
}

struct PushPoint {
  std::string policy;
  int push_n;
  MeanStderr acc;
};

inline std::string accuracy_vs_push_n_csv(const std::vector<PushPoint>& pts, const std::string& fp) {
  auto sorted = pts;
  std::stable_sort(sorted.begin(), sorted.end(), [](const PushPoint& a, const PushPoint& b) {
    return a.policy != b.policy ? a.policy < b.policy : a.push_n < b.push_n;
  });
  CsvText csv(fp, kPushHeader);
  for (const auto& p : sorted)
    csv.row({p.policy, std::to_string(p.push_n), format_double(p.acc.mean), format_double(p.acc.stderr_)});
  return csv.str();
}

inline std::string mac_analytics_csv(const MacGrid& grid, const FrameConfig& frame, const std::string& fp) {
  auto ms = grid.slots.empty() ? std::vector<int>{frame.slots} : grid.slots;
  auto qs = grid.pull_slots.empty() ? std::vector<int>{frame.pull_slots} : grid.pull_slots;
  auto ns = grid.contenders;
  std::sort(ms.begin(), ms.end());
  std::sort(qs.begin(), qs.end());
  std::sort(ns.begin(), ns.end());
  CsvText csv(fp, kMacHeader);
  for (int m : ms)
    for (int q : qs) {
      if (m <= q) continue;
      for (int n : ns) {
        const auto mc = monte_carlo_time_cost(m, q, n, grid.trials,
                                              derive_seed(grid.seed, Stream::aloha,
                                                          {static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(q),
                                                           static_cast<std::uint64_t>(n)}));
        csv.row({std::to_string(m), std::to_string(q), std::to_string(n), format_double(success_prob(m, q, n)),
                 format_double(expected_time_cost(m, q, n)), format_double(mc.mean), format_double(mc.stderr_)});
      }
    }
  return csv.str();
}

// ---------------------------------------------------------------------------
// Snapshots for offline valuation

inline nlohmann::json params_json(const ModelParams& p) {
  return {{"input_dim", p.arch.input_dim}, {"hidden", p.arch.hidden}, {"classes", p.arch.classes},
          {"values", p.values}};
}

inline ModelParams params_from_json(const nlohmann::json& j) {
  ModelParams p;
  p.arch.input_dim = j.at("input_dim").get<std::size_t>();
  p.arch.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  p.arch.classes = j.at("classes").get<std::size_t>();
  p.values = j.at("values").get<std::vector<double>>();
  p.arch.validate();
  if (p.values.size() != p.arch.param_count())
    throw std::invalid_argument("snapshot: parameter vector has " + std::to_string(p.values.size()) +
                                " entries, architecture needs " + std::to_string(p.arch.param_count()));
  return p;
}

struct Snapshot {
  std::string policy;
  std::uint64_t seed = 0;
  std::size_t round = 0;
  ModelParams base;
  std::vector<ClientUpdate> updates;
  LabeledDataset validation;
  GtgOptions gtg;
  std::uint64_t valuation_seed = 0;
};

inline nlohmann::json snapshot_json(const Snapshot& s) {
  nlohmann::json ups = nlohmann::json::array();
  for (const auto& u : s.updates) ups.push_back({{"id", u.id}, {"samples", u.samples}, {"params", params_json(u.params)}});
  return {{"policy", s.policy},
          {"seed", s.seed},
          {"round", s.round},
          {"base", params_json(s.base)},
          {"updates", ups},
          {"validation",
           {{"dim", s.validation.dim},
            {"classes", s.validation.classes},
            {"features", s.validation.features},
            {"labels", s.validation.labels}}},
          {"gtg",
           {{"max_permutations", s.gtg.max_permutations},
            {"tolerance", s.gtg.tolerance},
            {"convergence_window", s.gtg.convergence_window},
            {"seed", s.valuation_seed}}}};
}

inline Snapshot snapshot_from_json(const nlohmann::json& j) {
  Snapshot s;
  s.policy = j.value("policy", "");
  s.seed = j.value("seed", std::uint64_t{0});
  s.round = j.value("round", std::size_t{0});
  s.base = params_from_json(j.at("base"));
  for (const auto& u : j.at("updates"))
    s.updates.push_back({u.at("id").get<ClientId>(), u.at("samples").get<double>(), params_from_json(u.at("params"))});
  const auto& v = j.at("validation");
  s.validation.dim = v.at("dim").get<std::size_t>();
  s.validation.classes = v.at("classes").get<std::size_t>();
  s.validation.features = v.at("features").get<std::vector<double>>();
  s.validation.labels = v.at("labels").get<std::vector<std::uint32_t>>();
  s.validation.validate();
  if (j.contains("gtg")) {
    const auto& g = j.at("gtg");
    s.gtg.max_permutations = g.value("max_permutations", s.gtg.max_permutations);
    s.gtg.tolerance = g.value("tolerance", s.gtg.tolerance);
    s.gtg.convergence_window = g.value("convergence_window", s.gtg.convergence_window);
    s.valuation_seed = g.value("seed", std::uint64_t{0});
  }
  return s;
}

// Re-runs a training trace up to round `round` and captures the valuation
// inputs of that frame (base model, the valued updates, validation set).
inline std::optional<Snapshot> capture_snapshot(const SimulationConfig& sim, const Federation& fed,
                                                const Policy& policy, std::uint64_t seed, std::size_t round) {
  if (!policy.valuation_based() || static_cast<int>(round) >= sim.rounds) return std::nullopt;
  FederationState state = initial_state(fed, seed);
  for (std::size_t t = 0; t < round; ++t) state = run_round(state, fed, sim, policy, seed).state;
  const auto res = run_round(state, fed, sim, policy, seed);
  if (res.record.valued.empty()) return std::nullopt;
  Snapshot s;
  s.policy = std::string(to_string(policy.kind));
  s.seed = seed;
  s.round = round;
  s.base = state.global;
  s.validation = fed.validation;
  s.gtg = sim.valuation.gtg;
  s.valuation_seed = derive_seed(seed, Stream::valuation, {round});
  // Rebuild the valued updates exactly as run_round produced them.
  for (ClientId id : res.record.valued) {
    const auto& c = fed.client(id);
    s.updates.push_back({id, static_cast<double>(c.samples()), detail::client_update(c, state.global, sim, seed, round)});
  }
  return s;
}

// ---------------------------------------------------------------------------
// Scenario driver

struct ScenarioResult {
  std::vector<RunTrace> traces;
  std::vector<PushPoint> push_points;
  std::string fingerprint;
};

inline ScenarioResult run_scenario(const ExperimentConfig& cfg, OutputSet& out) {
  cfg.validate();
  ScenarioResult res;
  res.fingerprint = fingerprint(cfg);
  const auto feds = build_federations(cfg);
  const auto policies = sorted_policies(cfg.policies);
  const auto seeds = sorted_seeds(cfg.seeds);

  std::vector<RunKey> keys;
  for (auto p : policies)
    for (auto s : seeds) keys.push_back({p, s, std::nullopt});
  // Push-population sweep, only for policies that have a push region.
  auto push_ns = cfg.push_n;
  std::sort(push_ns.begin(), push_ns.end());
  push_ns.erase(std::unique(push_ns.begin(), push_ns.end()), push_ns.end());
  const std::size_t k = cfg.sim.partition.clients;
  for (auto p : policies) {
    if (!Policy::make(p, cfg.sim.frame, k).push_enabled) continue;
    for (int n : push_ns)
      for (auto s : seeds) keys.push_back({p, s, n});
  }
  auto traces = run_all(cfg, feds, keys, res.fingerprint);

  std::map<std::pair<std::string, int>, std::vector<double>> finals;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const std::string name(to_string(keys[i].policy));
    if (keys[i].push_n) {
      finals[{name, *keys[i].push_n}].push_back(final_accuracy(traces[i]));
    } else if (!Policy::make(keys[i].policy, cfg.sim.frame, k).push_enabled) {
      finals[{name, 0}].push_back(final_accuracy(traces[i]));
    }
  }
  for (const auto& [key, xs] : finals) res.push_points.push_back({key.first, key.second, mean_stderr(xs)});

  for (std::size_t i = 0; i < keys.size(); ++i)
    if (!keys[i].push_n) res.traces.push_back(std::move(traces[i]));

  out.write("accuracy_vs_round.csv", accuracy_vs_round_csv(res.traces, res.fingerprint));
  out.write("accuracy_vs_push_n.csv", accuracy_vs_push_n_csv(res.push_points, res.fingerprint));
  out.write("time_to_accuracy.csv", time_to_accuracy_csv(res.traces, cfg.theta, res.fingerprint));
  out.write("mac_analytics.csv", mac_analytics_csv(cfg.mac, cfg.sim.frame, res.fingerprint));
  out.write("config.resolved.toml", "# config fingerprint " + res.fingerprint + "\n" + canonical_text(cfg));

  if (!cfg.snapshot_rounds.empty()) {
    std::vector<std::tuple<PolicyKind, std::uint64_t, int>> jobs;
    for (auto p : policies)
      for (auto s : seeds)
        for (int r : cfg.snapshot_rounds) jobs.emplace_back(p, s, r);
    auto snaps = parallel_map(jobs.size(), cfg.workers, [&](std::size_t i) {
      const auto& [p, s, r] = jobs[i];
      const auto& fed = feds.at(s);
      return capture_snapshot(cfg.sim, fed, Policy::make(p, cfg.sim.frame, fed.size()), s,
                              static_cast<std::size_t>(r));
    });
    for (const auto& snap : snaps)
      if (snap)
        out.write("snapshots/" + snap->policy + "_seed" + std::to_string(snap->seed) + "_round" +
                      std::to_string(snap->round) + ".json",
                  snapshot_json(*snap).dump() + "\n");
  }
  return res;
}

// ---------------------------------------------------------------------------
// Plot data

struct CsvTable {
  std::string fingerprint;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  cells.push_back(cur);
  return cells;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  CsvTable t;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("#", 0) == 0) {
      const std::string tag = "# config fingerprint ";
      if (line.rfind(tag, 0) == 0) t.fingerprint = line.substr(tag.size());
      continue;
    }
    if (line.empty()) continue;
    if (t.header.empty()) {
      t.header = split_csv_line(line);
    } else {
      t.rows.push_back(split_csv_line(line));
      if (t.rows.back().size() != t.header.size())
        throw std::runtime_error(path.string() + ": row " + std::to_string(t.rows.size()) + " has " +
                                 std::to_string(t.rows.back().size()) + " cells, header has " +
                                 std::to_string(t.header.size()));
    }
  }
  if (t.header.empty()) throw std::runtime_error(path.string() + ": no header row");
  return t;
}

enum class PlotKind { round, push_n, time, mac };

inline PlotKind plot_kind_for_header(const std::vector<std::string>& header, const std::string& path) {
  std::string joined;
  for (std::size_t i = 0; i < header.size(); ++i) joined += (i ? "," : "") + header[i];
  if (joined == kRoundHeader) return PlotKind::round;
  if (joined == kPushHeader) return PlotKind::push_n;
  if (joined == kTimeHeader) return PlotKind::time;
  if (joined == kMacHeader) return PlotKind::mac;
  throw std::runtime_error(path + ": unrecognised header `" + joined + "`");
}

inline PlotKind parse_plot_kind(const std::string& s) {
  if (s == "round") return PlotKind::round;
  if (s == "push_n") return PlotKind::push_n;
  if (s == "time") return PlotKind::time;
  if (s == "mac") return PlotKind::mac;
  throw ConfigError("plot kind `" + s + "`: expected round, push_n, time or mac");
}

struct PlotFiles {
  std::string data;
  std::string script;
};

// Gnuplot data (blocks separated by two blank lines, one per series) and a
// script that plots them. `stem` names the data file referenced by the script.
inline PlotFiles emit_plot_data(const CsvTable& t, PlotKind kind, const std::string& stem) {
  const std::string dat = stem + ".dat";
  std::ostringstream d, g;
  d << "# config fingerprint " << t.fingerprint << "\n";
  g << "# config fingerprint " << t.fingerprint << "\n";
  g << "set datafile missing '?'\nset key outside right\nset grid\n";
  auto num = [](const std::string& s) { return std::stod(s); };
  std::vector<std::string> titles;

  switch (kind) {
    case PlotKind::round: {
      // Seed means per (policy, round).
      std::map<std::string, std::map<long long, std::pair<std::vector<double>, std::vector<double>>>> acc;
      for (const auto& r : t.rows) {
        auto& cell = acc[r[0]][std::stoll(r[2])];
        cell.first.push_back(num(r[4]));
        cell.second.push_back(num(r[3]));
      }
      for (const auto& [policy, rounds] : acc) {
        d << "# " << policy << "\n# round mean_accuracy mean_cum_slots\n";
        for (const auto& [round, v] : rounds)
          d << round << " " << format_double(mean_stderr(v.first).mean) << " "
            << format_double(mean_stderr(v.second).mean) << "\n";
        d << "\n\n";
        titles.push_back(policy);
      }
      g << "set xlabel 'round'\nset ylabel 'test accuracy'\nplot ";
      for (std::size_t i = 0; i < titles.size(); ++i)
        g << (i ? ", \\\n     " : "") << "'" << dat << "' index " << i << " using 1:2 with lines title '" << titles[i] << "'";
      g << "\n";
      break;
    }
    case PlotKind::push_n: {
      std::map<std::string, std::vector<const std::vector<std::string>*>> by;
      for (const auto& r : t.rows) by[r[0]].push_back(&r);
      for (const auto& [policy, rows] : by) {
        d << "# " << policy << "\n# push_n mean_accuracy stderr\n";
        for (const auto* r : rows) d << (*r)[1] << " " << (*r)[2] << " " << (*r)[3] << "\n";
        d << "\n\n";
        titles.push_back(policy);
      }
      g << "set xlabel 'push contenders N'\nset ylabel 'final test accuracy'\nplot ";
      for (std::size_t i = 0; i < titles.size(); ++i)
        g << (i ? ", \\\n     " : "") << "'" << dat << "' index " << i << " using 1:2:3 with yerrorlines title '"
          << titles[i] << "'";
      g << "\n";
      break;
    }
    case PlotKind::time: {
      std::vector<std::string> policies, thetas;
      std::map<std::pair<std::string, std::string>, std::string> cell;
      for (const auto& r : t.rows) {
        if (std::find(policies.begin(), policies.end(), r[0]) == policies.end()) policies.push_back(r[0]);
        if (std::find(thetas.begin(), thetas.end(), r[1]) == thetas.end()) thetas.push_back(r[1]);
        cell[{r[0], r[1]}] = r[2];
      }
      d << "# theta_th";
      for (const auto& p : policies) d << " " << p;
      d << "\n";
      for (const auto& th : thetas) {
        d << th;
        for (const auto& p : policies) {
          const auto& v = cell[{p, th}];
          d << " " << (v.empty() ? "?" : v);
          if (v.empty()) g << "# note: " << p << " never reached theta_th = " << th << "; bar omitted\n";
        }
        d << "\n";
      }
      g << "set style data histograms\nset style histogram clustered\nset style fill solid 0.8\n"
        << "set xlabel 'accuracy threshold'\nset ylabel 'slots to reach threshold'\nplot ";
      for (std::size_t i = 0; i < policies.size(); ++i)
        g << (i ? ", \\\n     " : "") << "'" << dat << "' using " << i + 2 << (i ? "" : ":xtic(1)") << " title '"
          << policies[i] << "'";
      g << "\n";
      break;
    }
    case PlotKind::mac: {
      std::map<std::pair<int, int>, std::vector<const std::vector<std::string>*>> by;
      for (const auto& r : t.rows) by[{std::stoi(r[0]), std::stoi(r[1])}].push_back(&r);
      for (const auto& [mq, rows] : by) {
        d << "# M=" << mq.first << " Q=" << mq.second << "\n# N expected_cost mc_cost mc_stderr\n";
        for (const auto* r : rows) d << (*r)[2] << " " << (*r)[4] << " " << (*r)[5] << " " << (*r)[6] << "\n";
        d << "\n\n";
        titles.push_back("M=" + std::to_string(mq.first) + " Q=" + std::to_string(mq.second));
      }
      g << "set xlabel 'push contenders N'\nset ylabel 'expected frame cost (slots)'\nplot ";
      for (std::size_t i = 0; i < titles.size(); ++i)
        g << (i ? ", \\\n     " : "") << "'" << dat << "' index " << i << " using 1:2 with lines title '" << titles[i]
          << " analytic', '" << dat << "' index " << i << " using 1:3:4 with yerrorbars title '" << titles[i]
          << " Monte Carlo'";
      g << "\n";
      break;
    }
  }
  return {d.str(), g.str()};
}

}  // namespace pushpull
