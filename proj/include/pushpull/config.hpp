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

// Experiment configuration: a TOML tree, dotted-path overrides, strict
// conversion into ExperimentConfig, and a canonical dump whose FNV-1a hash is
// the config fingerprint stamped on every output file.

#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pushpull/orchestrator.hpp"
#include "toml.hpp"

namespace pushpull {

// Anything wrong with the configuration itself (as opposed to the run).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MacGrid {
  std::vector<int> slots;      // M values; empty: the frame's M
  std::vector<int> pull_slots; // Q values; empty: the frame's Q
  std::vector<int> contenders{1, 2, 5, 10, 20, 40};
  std::size_t trials = 100000;
  std::uint64_t seed = 0;
};

// One sweep axis: a dotted config key and the TOML literals it takes.
struct SweepAxis {
  std::string key;
  std::vector<std::string> values;
};

struct ExperimentConfig {
  std::string scenario = "desk";
  SimulationConfig sim;
  std::vector<PolicyKind> policies{std::begin(kAllPolicies), std::end(kAllPolicies)};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<int> push_n{5, 10, 20, 40};
  std::vector<double> theta{0.5, 0.6, 0.7, 0.75, 0.8};
  MacGrid mac;
  std::vector<int> snapshot_rounds;
  std::size_t workers = 0;  // 0: hardware concurrency
  std::vector<SweepAxis> axes;

  void validate() const {
    try {
      sim.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (policies.empty()) throw ConfigError("policies: at least one policy is required");
    if (seeds.empty()) throw ConfigError("seeds: at least one seed is required");
    for (int n : push_n)
      if (n < 0) throw ConfigError("sweep.push_n: values must be non-negative");
    for (double t : theta)
      if (!(t > 0 && t < 1)) throw ConfigError("sweep.theta: thresholds must lie in (0, 1)");
    if (mac.contenders.empty()) throw ConfigError("mac.contenders: need at least one N");
    for (int n : mac.contenders)
      if (n < 1) throw ConfigError("mac.contenders: N must be at least 1");
    if (mac.trials < 2) throw ConfigError("mac.trials: need at least 2 trials");
    for (int r : snapshot_rounds)
      if (r < 0) throw ConfigError("output.snapshot_rounds: rounds must be non-negative");
    for (const auto& a : axes)
      if (a.values.empty()) throw ConfigError("sweep.axes." + a.key + ": axis has no values");
  }
};

// ---------------------------------------------------------------------------
// Formatting helpers shared with the writers.

// Shortest decimal text that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, end);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Tree manipulation

namespace detail {

// `a.b."c.d"` -> {a, b, c.d}
inline std::vector<std::string> split_dotted(std::string_view key) {
  std::vector<std::string> parts(1);
  bool quoted = false;
  for (char c : key) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == '.' && !quoted) {
      parts.emplace_back();
    } else {
      parts.back() += c;
    }
  }
  for (const auto& p : parts)
    if (p.empty() || quoted) throw ConfigError("malformed dotted key `" + std::string(key) + "`");
  return parts;
}

inline std::string where(const toml::node& n) {
  const auto line = n.source().begin.line;
  return line ? " (line " + std::to_string(line) + ")" : " (override)";
}

}  // namespace detail

// Sets `dotted.key` to a TOML literal, creating intermediate tables.
inline void apply_override(toml::table& root, std::string_view dotted, std::string_view literal) {
  const auto parts = detail::split_dotted(dotted);
  toml::table* t = &root;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    toml::node* child = t->get(parts[i]);
    if (child == nullptr) {
      t->insert(parts[i], toml::table{});
      child = t->get(parts[i]);
    }
    if (!child->is_table())
      throw ConfigError("override " + std::string(dotted) + ": `" + parts[i] + "` is not a table");
    t = child->as_table();
  }
  // Bare words that are not TOML literals become strings.
  toml::table tmp;
  try {
    tmp = toml::parse("v = " + std::string(literal));
  } catch (const toml::parse_error&) {
    tmp.insert("v", std::string(literal));
  }
  tmp.get("v")->visit([&](auto&& n) { t->insert_or_assign(parts.back(), std::move(n)); });
}

// `key=value`
inline void apply_override(toml::table& root, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ConfigError("override `" + std::string(assignment) + "`: expected key=value");
  std::string key(assignment.substr(0, eq));
  while (!key.empty() && key.back() == ' ') key.pop_back();
  std::string_view value = assignment.substr(eq + 1);
  while (!value.empty() && value.front() == ' ') value.remove_prefix(1);
  apply_override(root, key, value);
}

inline toml::table parse_config_text(std::string_view text, std::string_view source) {
  try {
    return toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << source << ":" << e.source().begin.line << ":" << e.source().begin.column << ": "
        << e.description();
    throw ConfigError(msg.str());
  }
}

inline toml::table parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

// ---------------------------------------------------------------------------
// Conversion

namespace detail {

// Pulls typed fields out of a table and remembers every key it was asked
// about, so that leftovers can be reported as unknown.
class Reader {
 public:
  Reader(const toml::table& root, std::set<std::string>& known) : root_(&root), known_(&known) {}

  const toml::node* find(const std::string& dotted) const {
    known_->insert(dotted);
    const toml::node* n = root_;
    for (const auto& part : split_dotted(dotted)) {
      if (n == nullptr || !n->is_table()) return nullptr;
      n = n->as_table()->get(part);
    }
    return n;
  }

  void table(const std::string& dotted) const { known_->insert(dotted); }

  template <class T>
  void get(const std::string& key, T& out) const {
    if (const auto* n = find(key)) out = convert<T>(*n, key);
  }

  template <class T>
  void get(const std::string& key, std::optional<T>& out) const {
    if (const auto* n = find(key)) out = convert<T>(*n, key);
  }

  template <class T>
  void get(const std::string& key, std::vector<T>& out) const {
    const auto* n = find(key);
    if (n == nullptr) return;
    const auto* arr = n->as_array();
    if (arr == nullptr) throw ConfigError(key + where(*n) + ": expected an array");
    out.clear();
    for (const auto& e : *arr) out.push_back(convert<T>(e, key));
  }

 private:
  template <class T>
  static T convert(const toml::node& n, const std::string& key) {
    if constexpr (std::is_same_v<T, bool>) {
      if (auto v = n.value_exact<bool>()) return *v;
      throw ConfigError(key + where(n) + ": expected true or false");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (auto v = n.value_exact<std::string>()) return *v;
      throw ConfigError(key + where(n) + ": expected a string");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (n.is_floating_point()) return static_cast<T>(n.as_floating_point()->get());
      if (n.is_integer()) return static_cast<T>(n.as_integer()->get());
      throw ConfigError(key + where(n) + ": expected a number");
    } else {
      static_assert(std::is_integral_v<T>);
      if (!n.is_integer()) throw ConfigError(key + where(n) + ": expected an integer");
      const std::int64_t v = n.as_integer()->get();
      if (v < static_cast<std::int64_t>(std::numeric_limits<T>::min()) ||
          (v > 0 && static_cast<std::uint64_t>(v) > std::numeric_limits<T>::max()))
        throw ConfigError(key + where(n) + ": value " + std::to_string(v) + " out of range");
      return static_cast<T>(v);
    }
  }

  const toml::table* root_;
  std::set<std::string>* known_;
};

inline void reject_unknown(const toml::table& t, const std::string& prefix, const std::set<std::string>& known) {
  for (auto&& [k, v] : t) {
    const std::string full = prefix.empty() ? std::string(k.str()) : prefix + "." + std::string(k.str());
    if (!known.count(full)) {
      throw ConfigError("unknown config key `" + full + "`" + where(v));
    }
    if (const auto* sub = v.as_table(); sub && full != "sweep.axes") reject_unknown(*sub, full, known);
  }
}

inline std::string node_literal(const toml::node& n) {
  std::ostringstream ss;
  n.visit([&](auto&& v) {
    if constexpr (toml::is_string<decltype(v)>)
      ss << '"' << v.get() << '"';
    else if constexpr (toml::is_floating_point<decltype(v)>)
      ss << format_double(v.get());
    else
      ss << toml::toml_formatter(v, toml::format_flags::none);
  });
  return ss.str();
}

}  // namespace detail

inline ExperimentConfig to_experiment(const toml::table& root) {
  ExperimentConfig cfg;
  std::set<std::string> known;
  detail::Reader r(root, known);
  auto& s = cfg.sim;

  r.get("scenario", cfg.scenario);
  std::vector<std::string> policy_names;
  if (r.find("policies")) {
    r.get("policies", policy_names);
    cfg.policies.clear();
    for (const auto& p : policy_names) {
      try {
        cfg.policies.push_back(parse_policy(p));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("policies: ") + e.what());
      }
    }
  }
  r.get("seeds", cfg.seeds);
  r.get("rounds", s.rounds);
  r.get("workers", cfg.workers);

  r.table("dataset");
  std::string kind = "synthetic";
  r.get("dataset.kind", kind);
  if (kind == "synthetic") {
    s.dataset.kind = DatasetSpec::Kind::synthetic;
  } else if (kind == "idx") {
    s.dataset.kind = DatasetSpec::Kind::idx;
  } else {
    throw ConfigError("dataset.kind: expected \"synthetic\" or \"idx\", got \"" + kind + "\"");
  }
  r.get("dataset.samples", s.dataset.samples);
  r.get("dataset.dim", s.dataset.dim);
  r.get("dataset.classes", s.dataset.classes);
  r.get("dataset.separation", s.dataset.separation);
  r.get("dataset.images", s.dataset.images_path);
  r.get("dataset.labels", s.dataset.labels_path);
  r.get("dataset.test_fraction", s.dataset.test_fraction);
  r.get("dataset.validation_fraction", s.dataset.validation_fraction);

  r.table("partition");
  r.get("partition.clients", s.partition.clients);
  r.get("partition.alpha", s.partition.alpha);
  r.get("partition.straggler_fraction", s.partition.straggler_fraction);
  r.get("partition.sigma", s.partition.sigma);

  r.table("model");
  r.get("model.hidden", s.hidden);

  r.table("train");
  r.get("train.epochs", s.train.epochs);
  r.get("train.batches_per_epoch", s.train.batches_per_epoch);
  r.get("train.learning_rate", s.train.learning_rate);
  r.get("train.momentum", s.train.momentum);

  r.table("frame");
  r.get("frame.slots", s.frame.slots);
  r.get("frame.pull_slots", s.frame.pull_slots);
  r.get("frame.slot_seconds", s.frame.slot_seconds);
  r.get("frame.warmup_rounds", s.frame.warmup_rounds);

  r.table("compute");
  r.get("compute.gamma_shape", s.compute.gamma_shape);
  r.get("compute.gamma_scale", s.compute.gamma_scale);
  r.get("compute.epsilon", s.compute.epsilon);
  r.get("compute.p_scale", s.compute.p_scale);
  r.get("compute.frequency_hz", s.compute.frequency_hz);
  r.get("compute.bits_per_sample", s.compute.bits_per_sample);
  r.get("compute.straggler_slowdown", s.compute.straggler_slowdown);

  r.table("valuation");
  r.get("valuation.zeta", s.valuation.zeta);
  r.get("valuation.max_permutations", s.valuation.gtg.max_permutations);
  r.get("valuation.tolerance", s.valuation.gtg.tolerance);
  r.get("valuation.convergence_window", s.valuation.gtg.convergence_window);
  std::string vset = s.valuation.set == ValuationSet::pull_only ? "pull_only" : "all_received";
  r.get("valuation.set", vset);
  if (vset == "pull_only") {
    s.valuation.set = ValuationSet::pull_only;
  } else if (vset == "all_received") {
    s.valuation.set = ValuationSet::all_received;
  } else {
    throw ConfigError("valuation.set: expected \"pull_only\" or \"all_received\", got \"" + vset + "\"");
  }

  r.table("push");
  r.get("push.fixed_n", s.fixed_push_n);
  r.get("push.reoffer_collided", s.reoffer_collided);
  r.get("push.pull_forfeit_late", s.pull_forfeit_late);

  r.table("centralized");
  r.get("centralized.fraction", s.centralized_fraction);

  r.table("stop");
  r.get("stop.target_accuracy", s.target_accuracy);

  r.table("sweep");
  r.get("sweep.push_n", cfg.push_n);
  r.get("sweep.theta", cfg.theta);
  if (const auto* axes = r.find("sweep.axes")) {
    const auto* t = axes->as_table();
    if (t == nullptr) throw ConfigError("sweep.axes" + detail::where(*axes) + ": expected a table");
    for (auto&& [k, v] : *t) {
      SweepAxis axis{std::string(k.str()), {}};
      if (const auto* arr = v.as_array()) {
        for (const auto& e : *arr) axis.values.push_back(detail::node_literal(e));
      } else {
        throw ConfigError("sweep.axes." + axis.key + detail::where(v) + ": expected an array of values");
      }
      cfg.axes.push_back(std::move(axis));
    }
  }

  r.table("mac");
  r.get("mac.slots", cfg.mac.slots);
  r.get("mac.pull_slots", cfg.mac.pull_slots);
  r.get("mac.contenders", cfg.mac.contenders);
  r.get("mac.trials", cfg.mac.trials);
  r.get("mac.seed", cfg.mac.seed);

  r.table("output");
  r.get("output.snapshot_rounds", cfg.snapshot_rounds);

  detail::reject_unknown(root, "", known);
  cfg.validate();
  return cfg;
}

// Every effective setting, one `key = value` line each, in a fixed order.
// Two configs with the same canonical text run identically.
inline std::string canonical_text(const ExperimentConfig& cfg) {
  std::ostringstream o;
  auto num = [](double v) { return format_double(v); };
  auto list = [](const auto& xs, auto fmt) {
    std::string s = "[";
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + fmt(xs[i]);
    return s + "]";
  };
  auto ints = [](auto v) { return std::to_string(v); };
  const auto& s = cfg.sim;
  o << "scenario = \"" << cfg.scenario << "\"\n";
  o << "policies = " << list(cfg.policies, [](PolicyKind k) { return "\"" + std::string(to_string(k)) + "\""; }) << "\n";
  o << "seeds = " << list(cfg.seeds, ints) << "\n";
  o << "rounds = " << s.rounds << "\n";
  o << "dataset.kind = \"" << (s.dataset.kind == DatasetSpec::Kind::idx ? "idx" : "synthetic") << "\"\n";
  o << "dataset.samples = " << s.dataset.samples << "\n";
  o << "dataset.dim = " << s.dataset.dim << "\n";
  o << "dataset.classes = " << s.dataset.classes << "\n";
  o << "dataset.separation = " << num(s.dataset.separation) << "\n";
  o << "dataset.images = \"" << s.dataset.images_path << "\"\n";
  o << "dataset.labels = \"" << s.dataset.labels_path << "\"\n";
  o << "dataset.test_fraction = " << num(s.dataset.test_fraction) << "\n";
  o << "dataset.validation_fraction = " << num(s.dataset.validation_fraction) << "\n";
  o << "partition.clients = " << s.partition.clients << "\n";
  o << "partition.alpha = " << num(s.partition.alpha) << "\n";
  o << "partition.straggler_fraction = " << num(s.partition.straggler_fraction) << "\n";
  o << "partition.sigma = " << num(s.partition.sigma) << "\n";
  o << "model.hidden = " << list(s.hidden, ints) << "\n";
  o << "train.epochs = " << s.train.epochs << "\n";
  o << "train.batches_per_epoch = " << s.train.batches_per_epoch << "\n";
  o << "train.learning_rate = " << num(s.train.learning_rate) << "\n";
  o << "train.momentum = " << num(s.train.momentum) << "\n";
  o << "frame.slots = " << s.frame.slots << "\n";
  o << "frame.pull_slots = " << s.frame.pull_slots << "\n";
  o << "frame.slot_seconds = " << num(s.frame.slot_seconds) << "\n";
  o << "frame.warmup_rounds = " << s.frame.warmup_rounds << "\n";
  o << "compute.gamma_shape = " << num(s.compute.gamma_shape) << "\n";
  o << "compute.gamma_scale = " << num(s.compute.gamma_scale) << "\n";
  o << "compute.epsilon = " << num(s.compute.epsilon) << "\n";
  o << "compute.p_scale = " << num(s.compute.p_scale) << "\n";
  o << "compute.frequency_hz = " << num(s.compute.frequency_hz) << "\n";
  o << "compute.bits_per_sample = " << num(s.compute.bits_per_sample) << "\n";
  o << "compute.straggler_slowdown = " << num(s.compute.straggler_slowdown) << "\n";
  o << "valuation.zeta = " << num(s.valuation.zeta) << "\n";
  o << "valuation.max_permutations = " << s.valuation.gtg.max_permutations << "\n";
  o << "valuation.tolerance = " << num(s.valuation.gtg.tolerance) << "\n";
  o << "valuation.convergence_window = " << s.valuation.gtg.convergence_window << "\n";
  o << "valuation.set = \"" << (s.valuation.set == ValuationSet::pull_only ? "pull_only" : "all_received") << "\"\n";
  if (s.fixed_push_n) o << "push.fixed_n = " << *s.fixed_push_n << "\n";
  o << "push.reoffer_collided = " << (s.reoffer_collided ? "true" : "false") << "\n";
  o << "push.pull_forfeit_late = " << (s.pull_forfeit_late ? "true" : "false") << "\n";
  o << "centralized.fraction = " << num(s.centralized_fraction) << "\n";
  if (s.target_accuracy) o << "stop.target_accuracy = " << num(*s.target_accuracy) << "\n";
  o << "sweep.push_n = " << list(cfg.push_n, ints) << "\n";
  o << "sweep.theta = " << list(cfg.theta, num) << "\n";
  for (const auto& a : cfg.axes)
    o << "sweep.axes.\"" << a.key << "\" = " << list(a.values, [](const std::string& v) { return v; }) << "\n";
  o << "mac.slots = " << list(cfg.mac.slots, ints) << "\n";
  o << "mac.pull_slots = " << list(cfg.mac.pull_slots, ints) << "\n";
  o << "mac.contenders = " << list(cfg.mac.contenders, ints) << "\n";
  o << "mac.trials = " << cfg.mac.trials << "\n";
  o << "mac.seed = " << cfg.mac.seed << "\n";
  o << "output.snapshot_rounds = " << list(cfg.snapshot_rounds, ints) << "\n";
  return o.str();
}

// Worker count is an execution detail and deliberately not fingerprinted.
inline std::string fingerprint(const ExperimentConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical_text(cfg))));
  return buf;
}

struct LoadedConfig {
  toml::table tree;
  ExperimentConfig config;
};

// Takes the tree by value: copies of toml++ nodes lose their source
// positions, so callers should move a freshly parsed tree in.
inline LoadedConfig load_config(toml::table base, const std::vector<std::string>& overrides) {
  LoadedConfig out{std::move(base), {}};
  for (const auto& o : overrides) apply_override(out.tree, o);
  out.config = to_experiment(out.tree);
  return out;
}

}  // namespace pushpull
