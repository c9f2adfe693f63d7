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

// Runs configured experiments: one simulation per (config, rate), optional
// rate sweeps on a worker pool, and CSV output of the summary rows.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "defnoc/config.hpp"
#include "defnoc/mesh_network.hpp"
#include "defnoc/ring_network.hpp"
#include "defnoc/rng.hpp"
#include "defnoc/simulator.hpp"
#include "defnoc/traffic.hpp"

namespace defnoc {

inline constexpr std::uint64_t kTrafficStream = 1;
inline constexpr std::uint64_t kArbitrationStream = 2;

inline std::string guarantees_name(const ExperimentConfig& c) {
  if (c.injection && c.transfer) return "on";
  if (c.injection) return "injection-only";
  if (c.transfer) return "transfer-only";
  return "off";
}

inline void set_guarantees(ExperimentConfig& c, const std::string& mode) {
  if (mode == "on") {
    c.injection = c.transfer = true;
  } else if (mode == "off") {
    c.injection = c.transfer = false;
  } else if (mode == "injection-only") {
    c.injection = true;
    c.transfer = false;
  } else if (mode == "transfer-only") {
    c.injection = false;
    c.transfer = true;
  } else {
    throw ConfigError("guarantees: expected on, off, injection-only or transfer-only, got '" + mode + "'");
  }
}

inline RingParams ring_params(const ExperimentConfig& c) {
  RingParams p;
  p.injection_guarantee = c.injection;
  p.transfer_guarantee = c.transfer;
  p.injection_threshold = c.injection_threshold;
  p.retry_threshold = c.retry_threshold;
  p.throttle_latency = c.throttle_latency;
  p.fifo_up_depth = c.fifo_up;
  p.fifo_down_depth = c.fifo_down;
  return p;
}

inline MeshParams mesh_params(const ExperimentConfig& c) {
  MeshParams p;
  p.mode = c.topology == Topology::MeshChipper ? MeshMode::Chipper : MeshMode::MinBD;
  p.strict_chipper = c.strict_chipper;
  p.side_buffer_depth = c.side_buffer;
  p.c_threshold = c.c_threshold;
  p.hop_latency = c.hop_latency;
  p.golden_epoch = c.golden_epoch;
  return p;
}

inline HirdShape hird_shape(const ExperimentConfig& c) {
  HirdShape s;
  s.nodes = c.nodes;
  s.bridges = c.bridges;
  s.lane_ratio = c.lane_ratio;
  s.local_hop = c.local_hop;
  s.global_hop = c.global_hop;
  return s;
}

inline Network build_network(const ExperimentConfig& c) {
  c.validate();
  switch (c.topology) {
    case Topology::Hird: return build_hird(hird_shape(c), ring_params(c));
    case Topology::SingleRing: return build_single_ring(c.nodes, c.lanes, c.hop_latency, ring_params(c));
    case Topology::MeshChipper:
    case Topology::MeshMinBD: {
      const int k = exact_sqrt(c.nodes);
      return MeshNetwork(k, k, mesh_params(c), derive_seed(c.seed, kArbitrationStream));
    }
  }
  throw ConfigError("unknown topology");
}

inline Simulator build_simulator(const ExperimentConfig& c) {
  Network net = build_network(c);
  const RingTopology* topo = nullptr;
  if (const auto* ring = std::get_if<RingNetwork>(&net)) topo = &ring->topology();
  TrafficSpec spec;
  spec.pattern = c.pattern;
  spec.rate = c.rate;
  spec.packet_flits = c.packet_flits;
  spec.trace_path = c.trace;
  TrafficGenerator traffic(spec, c.nodes, derive_seed(c.seed, kTrafficStream), topo);
  SimOptions opt;
  opt.warmup = c.warmup;
  opt.reassembly_slots = c.reassembly_slots;
  opt.check_interval = c.check_interval;
  return Simulator(std::move(net), std::move(traffic), opt);
}

/// One CSV row: the summary of a single simulation.
struct ResultRow {
  std::uint64_t config_hash = 0;
  std::string topology;
  int nodes = 0;
  std::string pattern;
  std::string guarantees;
  std::uint64_t seed = 0;
  double rate = 0.0;
  double offered = 0.0;   // flits/node/cycle generated after warmup
  double accepted = 0.0;  // flits/node/cycle accepted at destinations
  double avg_latency = 0.0;
  std::int64_t p95_latency = 0;
  std::int64_t max_latency = 0;
  double avg_net_latency = 0.0;
  std::int64_t p95_net_latency = 0;
  std::int64_t max_net_latency = 0;
  std::vector<double> ring_throughput;  // per node ring, source attributed
  std::uint64_t deflections = 0;
  std::uint64_t ring_retries = 0;
  double deflected_fraction = 0.0;  // measured flits deflected at least once
  double deflections_per_hop = 0.0;
  std::int64_t max_ring_retries = 0;
  double fifo_wait_avg = 0.0;
  std::int64_t fifo_wait_max = 0;
  std::int64_t fifo_head_wait_max = 0;
  std::uint64_t drops = 0;
  std::uint64_t retransmits = 0;
  std::uint64_t swaps = 0;
  std::uint64_t throttle_events = 0;
  std::uint64_t reservations = 0;
  std::uint64_t redirections = 0;
  std::uint64_t silver_violations = 0;
  std::uint64_t undelivered = 0;  // packets enqueued after warmup, not delivered by the end
  bool saturated = false;
  std::int64_t cycles = 0;
};

/// Means of the post-warmup queue-occupancy samples over `windows` equal windows.
inline std::vector<double> occupancy_windows(const std::vector<std::uint64_t>& samples, int windows) {
  std::vector<double> out;
  const std::size_t n = samples.size();
  if (windows < 1 || n < static_cast<std::size_t>(windows)) return out;
  for (int w = 0; w < windows; ++w) {
    const std::size_t b = n * static_cast<std::size_t>(w) / static_cast<std::size_t>(windows);
    const std::size_t e = n * static_cast<std::size_t>(w + 1) / static_cast<std::size_t>(windows);
    double sum = 0.0;
    for (std::size_t i = b; i < e; ++i) sum += static_cast<double>(samples[i]);
    out.push_back(sum / static_cast<double>(e - b));
  }
  return out;
}

/// Saturated: average latency above the threshold, or injection queues that
/// kept growing over the last three windows and ended above one flit per node.
inline bool is_saturated(const Metrics& m, int nodes, double sat_threshold) {
  if (m.flit_latency.count() > 0 && m.flit_latency.mean() > sat_threshold) return true;
  const auto w = occupancy_windows(m.queue_samples, 10);
  if (w.size() < 3) return false;
  const std::size_t k = w.size();
  return w[k - 3] < w[k - 2] && w[k - 2] < w[k - 1] && w[k - 1] > static_cast<double>(nodes);
}

/// Packets enqueued in [from, before) that were never delivered.
inline std::uint64_t undelivered_between(const Simulator& sim, Cycle from, Cycle before) {
  std::uint64_t n = 0;
  for (const auto& p : sim.reassembly().undelivered())
    if (p.enqueue_cycle >= from && p.enqueue_cycle < before) ++n;
  return n;
}

/// Summarizes a finished (finalized) simulation.
inline ResultRow summarize(const ExperimentConfig& c, const Simulator& sim) {
  const Metrics& m = sim.metrics();
  ResultRow r;
  r.config_hash = config_hash(c);
  r.topology = std::string(topology_name(c.topology));
  r.nodes = c.nodes;
  r.pattern = std::string(pattern_name(c.pattern));
  r.guarantees = guarantees_name(c);
  r.seed = c.seed;
  r.rate = c.rate;
  const double span = static_cast<double>(sim.now() - c.warmup) * c.nodes;
  r.offered = static_cast<double>(m.offered_flits) / span;
  r.accepted = static_cast<double>(m.flits_accepted) / span;
  r.avg_latency = m.flit_latency.mean();
  r.p95_latency = m.flit_latency.percentile(95).value_or(0);
  r.max_latency = m.flit_latency.max();
  r.avg_net_latency = m.net_latency.mean();
  r.p95_net_latency = m.net_latency.percentile(95).value_or(0);
  r.max_net_latency = m.net_latency.max();
  if (const auto* ring = std::get_if<RingNetwork>(&sim.network())) {
    const Cycle bucket = m.bucket_cycles();
    const Cycle from = (c.warmup + bucket - 1) / bucket * bucket;
    const Cycle to = sim.now() / bucket * bucket;
    if (to > from)
      for (const auto& nodes : ring->topology().node_rings()) r.ring_throughput.push_back(m.source_throughput(nodes, from, to));
  }
  r.deflections = m.total_deflections;
  r.ring_retries = m.total_ring_retries;
  r.deflected_fraction = m.flits_accepted ? static_cast<double>(m.deflected_flits) / static_cast<double>(m.flits_accepted) : 0.0;
  r.deflections_per_hop = m.flit_hops ? static_cast<double>(m.total_deflections + m.total_ring_retries) / static_cast<double>(m.flit_hops) : 0.0;
  r.max_ring_retries = m.max_ring_retries();
  r.fifo_wait_avg = m.fifo_wait.mean();
  r.fifo_wait_max = m.max_fifo_wait();
  r.fifo_head_wait_max = m.max_fifo_head_wait();
  r.drops = m.flits_dropped;
  r.retransmits = m.retransmits;
  r.swaps = m.swaps;
  r.throttle_events = m.throttle_events;
  r.reservations = m.reservations;
  r.redirections = m.redirections;
  r.silver_violations = m.silver_violations;
  r.undelivered = undelivered_between(sim, c.warmup, sim.now());
  r.saturated = is_saturated(m, c.nodes, c.sat_threshold);
  r.cycles = sim.now();
  return r;
}

inline ResultRow run_experiment(const ExperimentConfig& c) {
  Simulator sim = build_simulator(c);
  sim.run_until(c.cycles);
  sim.finalize();
  return summarize(c, sim);
}

/// Parses "a:b:step" into a b-inclusive list of rates.
inline std::vector<double> parse_rate_sweep(const std::string& s) {
  const auto c1 = s.find(':');
  const auto c2 = c1 == std::string::npos ? std::string::npos : s.find(':', c1 + 1);
  if (c2 == std::string::npos) throw ConfigError("rate-sweep: expected a:b:step, got '" + s + "'");
  const double a = detail::parse_number<double>("rate-sweep", s.substr(0, c1));
  const double b = detail::parse_number<double>("rate-sweep", s.substr(c1 + 1, c2 - c1 - 1));
  const double step = detail::parse_number<double>("rate-sweep", s.substr(c2 + 1));
  if (!(step > 0.0) || b < a || a < 0.0 || b > 1.0) throw ConfigError("rate-sweep: need 0 <= a <= b <= 1 and step > 0");
  std::vector<double> out;
  const auto n = static_cast<long>(std::floor((b - a) / step + 1e-9));
  for (long i = 0; i <= n; ++i) out.push_back(std::round((a + static_cast<double>(i) * step) * 1e9) / 1e9);
  return out;
}

/// Runs `base` at each rate (ascending) on `workers` threads. Rates above the
/// first saturated one are dropped, so the result does not depend on the
/// number of workers or on scheduling.
inline std::vector<ResultRow> run_sweep(const ExperimentConfig& base, std::vector<double> rates, int workers) {
  std::sort(rates.begin(), rates.end());
  rates.erase(std::unique(rates.begin(), rates.end()), rates.end());
  const std::size_t n = rates.size();
  std::vector<ResultRow> rows(n);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> first_saturated{n};
  std::mutex error_mu;
  std::exception_ptr error;

  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      if (i > first_saturated.load()) continue;
      try {
        ExperimentConfig c = base;
        c.rate = rates[i];
        rows[i] = run_experiment(c);
        if (rows[i].saturated) {
          std::size_t cur = first_saturated.load();
          while (i < cur && !first_saturated.compare_exchange_weak(cur, i)) {
          }
        }
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
        next.store(n);
      }
    }
  };

  const int threads = std::max(1, std::min<int>(workers, static_cast<int>(n)));
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
  const std::size_t keep = std::min(n, first_saturated.load() + 1);
  rows.resize(keep);
  return rows;
}

// ------------------------------------------------------------------ CSV

inline constexpr const char* kCsvSchema = "defnoc-results-1";

inline const char* csv_header() {
  return "schema,config_hash,topology,nodes,pattern,guarantees,seed,rate,offered,accepted,"
         "avg_latency,p95_latency,max_latency,avg_net_latency,p95_net_latency,max_net_latency,"
         "ring_throughput,deflections,ring_retries,deflected_fraction,deflections_per_hop,max_ring_retries,"
         "fifo_wait_avg,fifo_wait_max,fifo_head_wait_max,drops,retransmits,swaps,throttle_events,"
         "reservations,redirections,silver_violations,undelivered,saturated,cycles";
}

inline std::string format_g6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string csv_line(const ResultRow& r) {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(r.config_hash));
  std::string rings;
  for (std::size_t i = 0; i < r.ring_throughput.size(); ++i) {
    if (i) rings += ';';
    rings += format_g6(r.ring_throughput[i]);
  }
  std::string s;
  auto col = [&](const std::string& v) {
    if (!s.empty()) s += ',';
    s += v;
  };
  auto num = [&](auto v) { col(std::to_string(v)); };
  col(kCsvSchema);
  col(hash);
  col(r.topology);
  num(r.nodes);
  col(r.pattern);
  col(r.guarantees);
  num(r.seed);
  col(format_g6(r.rate));
  col(format_g6(r.offered));
  col(format_g6(r.accepted));
  col(format_g6(r.avg_latency));
  num(r.p95_latency);
  num(r.max_latency);
  col(format_g6(r.avg_net_latency));
  num(r.p95_net_latency);
  num(r.max_net_latency);
  col(rings);
  num(r.deflections);
  num(r.ring_retries);
  col(format_g6(r.deflected_fraction));
  col(format_g6(r.deflections_per_hop));
  num(r.max_ring_retries);
  col(format_g6(r.fifo_wait_avg));
  num(r.fifo_wait_max);
  num(r.fifo_head_wait_max);
  num(r.drops);
  num(r.retransmits);
  num(r.swaps);
  num(r.throttle_events);
  num(r.reservations);
  num(r.redirections);
  num(r.silver_violations);
  num(r.undelivered);
  num(static_cast<int>(r.saturated));
  num(r.cycles);
  return s;
}

/// Header plus one line per row, sorted by (config hash, rate), LF endings.
inline void write_csv(std::ostream& out, std::vector<ResultRow> rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return a.config_hash != b.config_hash ? a.config_hash < b.config_hash : a.rate < b.rate;
  });
  out << csv_header() << '\n';
  for (const auto& r : rows) out << csv_line(r) << '\n';
}

inline void write_csv_file(const std::string& path, const std::vector<ResultRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_csv(out, rows);
  out.flush();
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace defnoc
