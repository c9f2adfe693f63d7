/*
 * Copyright 2026 The defnoc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// nocsim: run one configuration, or sweep it over injection rates, and
// write the summary rows as CSV.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "defnoc/config.hpp"
#include "defnoc/experiment.hpp"

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kSimulation = 3, kIo = 4 };

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cycle-accurate simulator for deflection-routed rings and meshes"};

  std::string config_path;
  std::optional<std::string> topology, pattern, guarantees, rate_sweep, out_path;
  std::optional<int> nodes;
  std::optional<double> rate;
  std::optional<std::int64_t> cycles, warmup;
  std::optional<std::uint64_t> seed;
  bool strict_chipper = false;
  int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  app.add_option("--config", config_path, "Config file (sections [network] [guarantees] [traffic] [run])")
      ->check(CLI::ExistingFile);
  app.add_option("--topology", topology, "single_ring | hird | mesh_chipper | mesh_minbd");
  app.add_option("--nodes", nodes, "Node count");
  app.add_option("--pattern", pattern, "uniform_random | bit_complement | transpose | adversarial_starve | trace");
  auto* rate_opt = app.add_option("--rate", rate, "Offered load, flits/node/cycle");
  app.add_option("--rate-sweep", rate_sweep, "Sweep a:b:step (inclusive); stops after the first saturated rate")
      ->excludes(rate_opt);
  app.add_option("--cycles", cycles, "Total simulated cycles");
  app.add_option("--warmup", warmup, "Cycles excluded from statistics");
  app.add_option("--seed", seed, "Seed (falls back to NOC_SEED, then the config)");
  app.add_option("--guarantees", guarantees, "on | off | injection-only | transfer-only");
  app.add_option("--out", out_path, "CSV output path (default: stdout)");
  app.add_option("--workers", workers, "Worker threads for sweeps")->check(CLI::PositiveNumber);
  app.add_flag("--strict-chipper", strict_chipper, "Single ejector per router in CHIPPER mode");

  CLI11_PARSE(app, argc, argv);

  defnoc::ExperimentConfig cfg;
  std::vector<double> rates;
  try {
    if (!config_path.empty()) cfg = defnoc::load_config(config_path);
    if (topology) cfg.topology = defnoc::parse_topology(*topology);
    if (nodes) cfg.nodes = *nodes;
    if (pattern) cfg.pattern = defnoc::parse_pattern(*pattern);
    if (rate) cfg.rate = *rate;
    if (cycles) cfg.cycles = *cycles;
    if (warmup) cfg.warmup = *warmup;
    if (guarantees) defnoc::set_guarantees(cfg, *guarantees);
    if (strict_chipper) cfg.strict_chipper = true;
    if (seed) {
      cfg.seed = *seed;
    } else if (const char* env = std::getenv("NOC_SEED"); env != nullptr && *env != '\0') {
      cfg.seed = defnoc::detail::parse_number<std::uint64_t>("NOC_SEED", env);
    }
    cfg.validate();
    rates = rate_sweep ? defnoc::parse_rate_sweep(*rate_sweep) : std::vector<double>{cfg.rate};
  } catch (const std::exception& e) {
    std::cerr << "nocsim: " << e.what() << '\n';
    return kConfig;
  }

  std::vector<defnoc::ResultRow> rows;
  try {
    rows = defnoc::run_sweep(cfg, rates, workers);
  } catch (const defnoc::SimulationError& e) {
    std::cerr << "nocsim: invariant violation: " << e.what() << '\n';
    return kSimulation;
  } catch (const defnoc::ConfigError& e) {
    std::cerr << "nocsim: " << e.what() << '\n';
    return kConfig;
  }

  try {
    if (out_path) {
      defnoc::write_csv_file(*out_path, rows);
    } else {
      defnoc::write_csv(std::cout, rows);
      std::cout.flush();
    }
  } catch (const std::exception& e) {
    std::cerr << "nocsim: " << e.what() << '\n';
    return kIo;
  }
  for (const auto& r : rows)
    if (r.saturated) std::cerr << "nocsim: saturated at rate " << defnoc::format_g6(r.rate) << '\n';
  return kOk;
}
