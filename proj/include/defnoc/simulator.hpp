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

// One simulation instance: network, traffic source, reassembly and metrics
// advanced together one cycle at a time. An instance is a plain value, so
// copying it takes a snapshot that can be resumed independently.

#pragma once

#include <cstdint>
#include <tuple>
#include <variant>
#include <vector>

#include "defnoc/mesh_network.hpp"
#include "defnoc/metrics.hpp"
#include "defnoc/reassembly.hpp"
#include "defnoc/ring_network.hpp"
#include "defnoc/traffic.hpp"
#include "defnoc/types.hpp"

namespace defnoc {

using Network = std::variant<RingNetwork, MeshNetwork>;

struct SimOptions {
  Cycle warmup = 0;
  int reassembly_slots = 16;
  Cycle check_interval = 1024;  // full in-flight enumeration every this many cycles; 1 = every cycle
  Cycle sample_interval = 100;  // injection-queue occupancy samples after warmup
};

class Simulator {
 public:
  Simulator(Network net, TrafficGenerator traffic, SimOptions opt = {})
      : net_(std::move(net)), traffic_(std::move(traffic)), opt_(opt) {
    n_ = std::visit([](const auto& n) { return n.num_nodes(); }, net_);
    metrics_ = Metrics(n_, opt_.warmup);
    reassembly_ = Reassembly(n_, opt_.reassembly_slots);
    next_txn_.assign(static_cast<std::size_t>(n_), 0);
    if (opt_.check_interval < 1 || opt_.sample_interval < 1) throw ConfigError("intervals must be >= 1");
  }

  Cycle now() const { return now_; }
  int num_nodes() const { return n_; }
  Network& network() { return net_; }
  const Network& network() const { return net_; }
  Metrics& metrics() { return metrics_; }
  const Metrics& metrics() const { return metrics_; }
  const Reassembly& reassembly() const { return reassembly_; }
  const SimOptions& options() const { return opt_; }

  /// Enqueues a packet outside the traffic generator (scripted scenarios).
  PacketId send(NodeId src, NodeId dst, int num_flits) { return create_packet(src, dst, num_flits); }

  /// Exactly one cycle: new packets, one network step, consumption of every
  /// ejected flit, conservation check.
  void advance() {
    traffic_.generate(
        now_, [&](NodeId s, NodeId d, int f) { create_packet(s, d, f); },
        [&](NodeId s) { return queued_flits(s) == 0; });

    ejected_.clear();
    std::visit([&](auto& n) { n.step(now_, ejected_, metrics_); }, net_);

    resend_.clear();
    for (const Flit& f : ejected_) reassembly_.receive_flit(f.dst, f, now_, metrics_, resend_);
    for (const QueuedPacket& p : resend_) {
      std::visit([&](auto& n) { n.enqueue(p, true); }, net_);
      queued_total_ += static_cast<std::uint64_t>(p.num_flits);
    }

    check_conservation((now_ + 1) % opt_.check_interval == 0);
    if (now_ >= opt_.warmup && (now_ - opt_.warmup) % opt_.sample_interval == 0)
      metrics_.sample_queue_occupancy(queued_flits());
    ++now_;
  }

  void run_until(Cycle end) {
    while (now_ < end) advance();
  }

  /// Stops new injections and runs until the network holds no flits, or
  /// `limit` cycles pass. Returns the number of cycles taken, or -1.
  Cycle drain(Cycle limit) {
    std::visit([](auto& n) { n.set_injection_enabled(false); }, net_);
    const Cycle start = now_;
    while (in_flight() != 0) {
      if (now_ - start >= limit) return -1;
      advance();
    }
    return now_ - start;
  }

  std::uint64_t in_flight() const {
    return std::visit([](const auto& n) { return n.in_flight(); }, net_);
  }
  std::uint64_t total_slots() const {
    return std::visit([](const auto& n) { return n.total_slots(); }, net_);
  }
  /// Flits waiting in injection queues, network-wide.
  std::uint64_t queued_flits() const {
    return queued_total_ - std::visit([](const auto& n) { return n.injected_total(); }, net_);
  }
  std::uint64_t queued_flits(NodeId n) const {
    return std::visit([&](const auto& net) { return net.queued_flits(n); }, net_);
  }

  void check_conservation(bool enumerate) const {
    const auto [inj, ej, flight] = std::visit(
        [](const auto& n) { return std::tuple(n.injected_total(), n.ejected_total(), n.in_flight()); }, net_);
    if (inj != ej + flight) throw SimulationError("flit conservation violated", now_);
    if (!enumerate) return;
    const std::uint64_t counted = std::visit([](const auto& n) { return n.count_in_flight(); }, net_);
    if (counted != flight)
      throw SimulationError("flit conservation violated: " + std::to_string(counted) + " flits in the network, " +
                                std::to_string(flight) + " expected",
                            now_);
  }

  /// Folds end-of-run state (flits still in flight or waiting) into metrics.
  void finalize() {
    std::visit([&](const auto& n) { n.finalize(now_, metrics_); }, net_);
  }

 private:
  PacketId create_packet(NodeId src, NodeId dst, int num_flits) {
    if (src == dst) throw ConfigError("packet source equals destination");
    if (src.value < 0 || src.value >= n_ || dst.value < 0 || dst.value >= n_) throw ConfigError("node id out of range");
    QueuedPacket p;
    p.id = PacketId{src, next_txn_[src.index()]++};
    p.dst = dst;
    p.num_flits = static_cast<std::uint16_t>(num_flits);
    p.enqueue_cycle = now_;
    reassembly_.retain(p);
    std::visit([&](auto& n) { n.enqueue(p); }, net_);
    queued_total_ += static_cast<std::uint64_t>(num_flits);
    if (now_ >= opt_.warmup) metrics_.offered_flits += static_cast<std::uint64_t>(num_flits);
    return p.id;
  }

  Network net_;
  TrafficGenerator traffic_;
  SimOptions opt_;
  Metrics metrics_;
  Reassembly reassembly_;
  int n_ = 0;
  Cycle now_ = 0;
  std::vector<std::uint32_t> next_txn_;
  std::uint64_t queued_total_ = 0;
  std::vector<Flit> ejected_;
  std::vector<QueuedPacket> resend_;
};

}  // namespace defnoc
