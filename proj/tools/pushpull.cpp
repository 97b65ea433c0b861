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

// pushpull: experiment driver for the push-pull federated learning simulator.
//
//   pushpull simulate    --config configs/desk.toml --out out/
//   pushpull sweep       --config c.toml --axis 'partition.sigma=[0.5, 1.0]'
//   pushpull mac-analyze --override 'mac.slots=[20, 110]'
//   pushpull valuate     --snapshot out/snapshots/proposed_seed1_round30.json
//   pushpull plot        --csv out/time_to_accuracy.csv
//
// Exit status: 0 success, 1 configuration error, 2 runtime error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pushpull/config.hpp"
#include "pushpull/experiment.hpp"
#include "pushpull/valuation.hpp"

namespace fs = std::filesystem;
using namespace pushpull;

namespace {

struct CommonOptions {
  std::string config;
  std::string out = "out";
  std::string policies;
  std::string seeds;
  std::vector<std::string> overrides;
  std::size_t workers = 0;
  bool workers_set = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "TOML scenario file (built-in desk defaults if omitted)");
  cmd->add_option("--out", o.out, "output directory")->capture_default_str();
  cmd->add_option("--policies", o.policies, "comma-separated policy list");
  cmd->add_option("--seeds", o.seeds, "comma-separated seed list");
  cmd->add_option("--override", o.overrides, "dotted-path override key=value (repeatable)");
  cmd->add_option("--workers", o.workers, "worker threads (0: all cores)");
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    item.erase(0, item.find_first_not_of(' '));
    item.erase(item.find_last_not_of(' ') + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

LoadedConfig load(const CommonOptions& o) {
  toml::table base = o.config.empty() ? toml::table{} : parse_config_file(o.config);
  std::vector<std::string> ov = o.overrides;
  if (!o.policies.empty()) {
    std::string list = "policies=[";
    const auto names = split_commas(o.policies);
    for (std::size_t i = 0; i < names.size(); ++i) list += (i ? ", \"" : "\"") + names[i] + "\"";
    ov.push_back(list + "]");
  }
  if (!o.seeds.empty()) {
    std::string list = "seeds=[";
    const auto items = split_commas(o.seeds);
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (items[i].find_first_not_of("0123456789") != std::string::npos)
        throw ConfigError("--seeds: `" + items[i] + "` is not a non-negative integer");
      list += (i ? ", " : "") + items[i];
    }
    ov.push_back(list + "]");
  }
  auto loaded = load_config(std::move(base), ov);
  if (o.workers_set) loaded.config.workers = o.workers;
  return loaded;
}

void report(const std::vector<fs::path>& files) {
  for (const auto& f : files) std::cout << f.string() << "\n";
}

int cmd_simulate(const CommonOptions& o) {
  const auto loaded = load(o);
  OutputSet out(o.out);
  run_scenario(loaded.config, out);
  report(out.commit());
  return 0;
}

// Cartesian product of the configured axes; each point is a full scenario in
// its own directory, plus a summary of final accuracies.
int cmd_sweep(const CommonOptions& o, const std::vector<std::string>& extra_axes) {
  auto loaded = load(o);
  for (const auto& a : extra_axes) {
    const auto eq = a.find('=');
    if (eq == std::string::npos) throw ConfigError("--axis `" + a + "`: expected key=[v1, v2, ...]");
    apply_override(loaded.tree, "sweep.axes.\"" + a.substr(0, eq) + "\"", a.substr(eq + 1));
  }
  loaded.config = to_experiment(loaded.tree);
  if (o.workers_set) loaded.config.workers = o.workers;
  const auto axes = loaded.config.axes;
  if (axes.empty()) throw ConfigError("sweep: no axes configured (set sweep.axes or pass --axis)");

  std::size_t points = 1;
  for (const auto& a : axes) points *= a.values.size();
  // Validate every point before running any of them.
  std::vector<ExperimentConfig> configs;
  for (std::size_t p = 0; p < points; ++p) {
    toml::table tree = loaded.tree;
    if (auto* sw = tree.get_as<toml::table>("sweep")) sw->erase("axes");
    std::size_t rem = p;
    for (std::size_t i = axes.size(); i-- > 0;) {
      apply_override(tree, axes[i].key, axes[i].values[rem % axes[i].values.size()]);
      rem /= axes[i].values.size();
    }
    configs.push_back(to_experiment(tree));
    if (o.workers_set) configs.back().workers = o.workers;
  }

  const std::string fp = fingerprint(loaded.config);
  std::string header = "point";
  for (const auto& a : axes) header += "," + a.key;
  header += ",policy,mean_final_accuracy,stderr";
  CsvText summary(fp, header);
  OutputSet out(o.out);
  std::vector<std::unique_ptr<OutputSet>> subs;
  for (std::size_t p = 0; p < points; ++p) {
    char name[32];
    std::snprintf(name, sizeof name, "point_%03zu", p);
    subs.push_back(std::make_unique<OutputSet>(fs::path(o.out) / name));
    const auto res = run_scenario(configs[p], *subs.back());
    std::map<std::string, std::vector<double>> finals;
    for (const auto& t : res.traces) finals[std::string(to_string(t.policy))].push_back(final_accuracy(t));
    for (const auto& [policy, xs] : finals) {
      std::vector<std::string> row{name};
      std::size_t rem = p;
      std::vector<std::string> vals(axes.size());
      for (std::size_t i = axes.size(); i-- > 0;) {
        vals[i] = axes[i].values[rem % axes[i].values.size()];
        rem /= axes[i].values.size();
      }
      for (auto& v : vals) {
        if (v.find(',') != std::string::npos) v = "\"" + v + "\"";
        row.push_back(v);
      }
      const auto ms = mean_stderr(xs);
      row.insert(row.end(), {policy, format_double(ms.mean), format_double(ms.stderr_)});
      summary.row(row);
    }
  }
  // Nothing is moved into place until every point has finished.
  for (auto& sub : subs) report(sub->commit());
  out.write("sweep_summary.csv", summary.str());
  report(out.commit());
  return 0;
}

int cmd_mac(const CommonOptions& o) {
  const auto loaded = load(o);
  OutputSet out(o.out);
  const std::string fp = fingerprint(loaded.config);
  out.write("mac_analytics.csv", mac_analytics_csv(loaded.config.mac, loaded.config.sim.frame, fp));
  report(out.commit());
  return 0;
}

std::string read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_valuate(const CommonOptions& o, const std::string& snapshot, const std::string& game,
                const std::string& method, std::uint64_t seed) {
  if (snapshot.empty() == game.empty()) throw ConfigError("valuate: pass exactly one of --snapshot or --game");
  if (method != "gtg" && method != "exact") throw ConfigError("valuate: --method must be gtg or exact");
  const auto loaded = load(o);
  ShapleyEstimate est;
  std::string source;
  std::string fp_input;
  if (!game.empty()) {
    source = game;
    fp_input = read_all(game);
    std::istringstream in(fp_input);
    TabularGame g;
    try {
      g = TabularGame::parse(in);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(game + ": " + e.what());
    }
    est = method == "exact" ? exact_shapley(g) : gtg_shapley(g, loaded.config.sim.valuation.gtg, seed);
  } else {
    source = snapshot;
    fp_input = read_all(snapshot);
    Snapshot snap;
    try {
      snap = snapshot_from_json(nlohmann::json::parse(fp_input));
    } catch (const std::exception& e) {
      throw std::runtime_error(snapshot + ": " + e.what());
    }
    UtilityContext ctx;
    ctx.base = &snap.base;
    ctx.validation = &snap.validation;
    ctx.updates = snap.updates;
    est = method == "exact" ? exact_shapley(ctx) : gtg_shapley(ctx, snap.gtg, snap.valuation_seed);
  }
  char fp[17];
  std::snprintf(fp, sizeof fp, "%016llx",
                static_cast<unsigned long long>(fnv1a64(fp_input + "\n" + method + "\n" + canonical_text(loaded.config))));
  CsvText csv(fp, "client,shapley");
  for (const auto& [id, v] : est.values) csv.row({std::to_string(id), format_double(v)});
  std::string text = csv.str();
  text += "# method " + method + ", permutations " + std::to_string(est.permutations_used) + ", truncations " +
          std::to_string(est.truncation_events) + ", source " + fs::path(source).filename().string() + "\n";
  OutputSet out(o.out);
  out.write("valuation.csv", text);
  report(out.commit());
  return 0;
}

int cmd_plot(const std::string& csv_path, const std::string& kind, const std::string& out_dir) {
  if (!fs::exists(csv_path)) throw std::runtime_error("plot: no such file " + csv_path);
  const auto table = read_csv(csv_path);
  const auto detected = plot_kind_for_header(table.header, csv_path);
  if (!kind.empty() && parse_plot_kind(kind) != detected)
    throw std::runtime_error("plot: " + csv_path + " header does not match kind `" + kind + "`");
  const std::string stem = fs::path(csv_path).stem().string();
  const auto files = emit_plot_data(table, detected, stem);
  OutputSet out(out_dir.empty() ? fs::path(csv_path).parent_path() : fs::path(out_dir));
  out.write(stem + ".dat", files.data);
  out.write(stem + ".gp", files.script);
  report(out.commit());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Push-pull federated learning simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "pushpull 0.1.0");

  CommonOptions sim_o, sweep_o, mac_o, val_o;
  auto* sim = app.add_subcommand("simulate", "run one scenario and write the four result tables");
  add_common(sim, sim_o);
  auto* sweep = app.add_subcommand("sweep", "run a scenario at every point of the configured axes");
  add_common(sweep, sweep_o);
  std::vector<std::string> axes;
  sweep->add_option("--axis", axes, "extra sweep axis key=[v1, v2, ...] (repeatable)");
  auto* mac = app.add_subcommand("mac-analyze", "push-channel cost analytics against Monte Carlo");
  add_common(mac, mac_o);
  auto* val = app.add_subcommand("valuate", "Shapley values for a saved round snapshot or a tabular game");
  add_common(val, val_o);
  std::string snapshot, game, method = "gtg";
  std::uint64_t game_seed = 0;
  val->add_option("--snapshot", snapshot, "round snapshot (JSON) written by simulate");
  val->add_option("--game", game, "tabular game file, one `mask,value` line per coalition");
  val->add_option("--method", method, "gtg or exact")->capture_default_str();
  val->add_option("--seed", game_seed, "permutation seed for tabular games")->capture_default_str();
  auto* plot = app.add_subcommand("plot", "gnuplot data file and script for a result table");
  std::string csv, kind, plot_out;
  plot->add_option("--csv", csv, "result CSV")->required();
  plot->add_option("--kind", kind, "round, push_n, time or mac (default: from the header)");
  plot->add_option("--out", plot_out, "output directory (default: next to the CSV)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  for (auto* o : {&sim_o, &sweep_o, &mac_o, &val_o}) o->workers_set = o->workers != 0;

  try {
    if (*sim) return cmd_simulate(sim_o);
    if (*sweep) return cmd_sweep(sweep_o, axes);
    if (*mac) return cmd_mac(mac_o);
    if (*val) return cmd_valuate(val_o, snapshot, game, method, game_seed);
    if (*plot) return cmd_plot(csv, kind, plot_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
