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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "defnoc/types.hpp"

namespace defnoc {

/// Nearest-rank percentile: the value at 1-based rank ceil(p/100 * n) of the
/// sorted samples. No interpolation. Empty input yields nullopt.
inline std::optional<std::int64_t> percentile(std::span<const std::int64_t> samples, double p) {
  if (samples.empty()) return std::nullopt;
  if (!(p > 0.0 && p <= 100.0)) throw std::invalid_argument("percentile: p must be in (0, 100]");
  std::vector<std::int64_t> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(p * n / 100.0));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

/// Exact distribution of non-negative integer samples (cycle counts), so
/// percentiles agree with percentile() without storing every sample.
class Histogram {
 public:
  void add(std::int64_t v, std::uint64_t weight = 1) {
    if (v < 0) throw std::invalid_argument("Histogram: negative sample");
    const auto i = static_cast<std::size_t>(v);
    if (i >= counts_.size()) counts_.resize(std::max(i + 1, counts_.size() * 2), 0);
    counts_[i] += weight;
    n_ += weight;
    sum_ += static_cast<long double>(v) * static_cast<long double>(weight);
    max_ = std::max(max_, v);
  }

  std::uint64_t count() const { return n_; }
  bool empty() const { return n_ == 0; }
  std::int64_t max() const { return max_; }
  double mean() const { return n_ == 0 ? 0.0 : static_cast<double>(sum_ / static_cast<long double>(n_)); }

  std::optional<std::int64_t> percentile(double p) const {
    if (n_ == 0) return std::nullopt;
    if (!(p > 0.0 && p <= 100.0)) throw std::invalid_argument("percentile: p must be in (0, 100]");
    auto rank = static_cast<std::uint64_t>(std::ceil(p * static_cast<double>(n_) / 100.0));
    rank = std::clamp<std::uint64_t>(rank, 1, n_);
    std::uint64_t seen = 0;
    for (std::size_t i = 0; i < counts_.size(); ++i) {
      seen += counts_[i];
      if (seen >= rank) return static_cast<std::int64_t>(i);
    }
    return max_;
  }

 private:
  std::vector<std::uint64_t> counts_;
  std::uint64_t n_ = 0;
  long double sum_ = 0;
  std::int64_t max_ = 0;
};

/// Running count/sum/max of a wait-time quantity.
struct WaitStats {
  std::uint64_t count = 0;
  std::uint64_t sum = 0;
  std::int64_t max = 0;

  void add(std::int64_t v) {
    ++count;
    sum += static_cast<std::uint64_t>(v);
    max = std::max(max, v);
  }
  double mean() const { return count == 0 ? 0.0 : static_cast<double>(sum) / static_cast<double>(count); }
};

/// Everything one simulation instance measures. Latency and per-flit
/// deflection samples come only from packets enqueued at or after `warmup`;
/// structural counters (FIFO waits) clip their intervals to the measured
/// region.
class Metrics {
 public:
  Metrics() = default;
  Metrics(int num_nodes, Cycle warmup, Cycle bucket_cycles = 1000)
      : warmup_(warmup), bucket_(bucket_cycles), delivered_by_src_(static_cast<std::size_t>(num_nodes)) {
    if (bucket_cycles <= 0) throw std::invalid_argument("Metrics: bucket must be positive");
  }

  Cycle warmup() const { return warmup_; }
  Cycle bucket_cycles() const { return bucket_; }
  bool measured(const Flit& f) const { return f.enqueue_cycle >= warmup_; }

  // -- events reported by the reassembly layer ------------------------------
  void on_flit_accepted(const Flit& f, Cycle now) {
    auto& row = delivered_by_src_[f.src().index()];
    const auto b = static_cast<std::size_t>(now / bucket_);
    if (b >= row.size()) row.resize(b + 1, 0);
    ++row[b];
    if (!measured(f)) return;
    ++flits_accepted;
    flit_latency.add(now - f.enqueue_cycle);
    if (f.inject_cycle != kNoCycle) net_latency.add(now - f.inject_cycle);
    const std::uint64_t events = std::uint64_t{f.deflections} + f.ring_retries;
    deflection_events += events;
    if (events > 0) ++deflected_flits;
    ring_retries.add(f.ring_retries);
  }
  void on_packet_delivered(Cycle enqueue_cycle, Cycle now) {
    if (enqueue_cycle < warmup_) return;
    ++packets_delivered;
    packet_latency.add(now - enqueue_cycle);
  }
  void on_flit_dropped() { ++flits_dropped; }
  void on_flit_duplicate() { ++flits_duplicate; }
  void on_retransmit() { ++retransmits; }

  // -- events reported by networks ------------------------------------------
  void on_fifo_leave(Cycle enter, Cycle head_since, Cycle now) {
    if (now < warmup_) return;
    fifo_wait.add(now - std::max(enter, warmup_));
    fifo_head_wait.add(now - std::max(head_since, warmup_));
  }
  /// A flit still waiting at end of run still counts toward the maxima.
  void on_fifo_unfinished(Cycle enter, Cycle head_since, Cycle now, bool at_head) {
    if (now < warmup_) return;
    fifo_wait_max_open = std::max(fifo_wait_max_open, now - std::max(enter, warmup_));
    if (at_head) fifo_head_wait_max_open = std::max(fifo_head_wait_max_open, now - std::max(head_since, warmup_));
  }
  void on_in_flight_flit(const Flit& f) {
    max_ring_retries_open = std::max<std::int64_t>(max_ring_retries_open, f.ring_retries);
  }

  void sample_queue_occupancy(std::uint64_t queued_flits) { queue_samples.push_back(queued_flits); }

  /// Flits per node per cycle accepted at their destinations, attributed to
  /// source nodes in `sources`, over [from, to). Both ends must be multiples
  /// of the bucket length.
  double source_throughput(std::span<const NodeId> sources, Cycle from, Cycle to) const {
    if (to <= from || from % bucket_ != 0 || to % bucket_ != 0 || sources.empty())
      throw std::invalid_argument("source_throughput: window must be non-empty and bucket aligned");
    std::uint64_t total = 0;
    for (NodeId n : sources) {
      const auto& row = delivered_by_src_.at(n.index());
      for (auto b = static_cast<std::size_t>(from / bucket_); b < static_cast<std::size_t>(to / bucket_) && b < row.size(); ++b)
        total += row[b];
    }
    return static_cast<double>(total) / (static_cast<double>(sources.size()) * static_cast<double>(to - from));
  }

  std::int64_t max_ring_retries() const { return std::max(ring_retries.max(), max_ring_retries_open); }
  std::int64_t max_fifo_wait() const { return std::max(fifo_wait.max, fifo_wait_max_open); }
  std::int64_t max_fifo_head_wait() const { return std::max(fifo_head_wait.max, fifo_head_wait_max_open); }

  Histogram flit_latency;
  Histogram net_latency;
  Histogram packet_latency;
  Histogram ring_retries;
  WaitStats fifo_wait;
  WaitStats fifo_head_wait;
  std::int64_t fifo_wait_max_open = 0;
  std::int64_t fifo_head_wait_max_open = 0;
  std::int64_t max_ring_retries_open = 0;

  std::uint64_t flits_accepted = 0;
  std::uint64_t packets_delivered = 0;
  std::uint64_t flits_dropped = 0;
  std::uint64_t flits_duplicate = 0;
  std::uint64_t retransmits = 0;
  std::uint64_t deflection_events = 0;  // per-flit deflections + ring retries, measured flits
  std::uint64_t deflected_flits = 0;

  // Whole-run event counters, monotone over the run.
  std::uint64_t total_deflections = 0;
  std::uint64_t total_ring_retries = 0;
  std::uint64_t flit_hops = 0;
  std::uint64_t swaps = 0;
  std::uint64_t throttle_events = 0;
  std::uint64_t reservations = 0;
  std::uint64_t redirections = 0;
  std::uint64_t side_buffered = 0;
  std::int64_t max_side_residence = 0;
  std::uint64_t silver_violations = 0;
  std::uint64_t golden_deflected_by_nongolden = 0;

  std::uint64_t offered_flits = 0;  // generated after warmup
  std::vector<std::uint64_t> queue_samples;

 private:
  Cycle warmup_ = 0;
  Cycle bucket_ = 1000;
  std::vector<std::vector<std::uint32_t>> delivered_by_src_;
};

}  // namespace defnoc
