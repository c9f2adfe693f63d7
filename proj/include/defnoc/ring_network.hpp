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

// Cycle-level model of bufferless rings: node routers, bridge routers with
// transfer FIFOs, the swap rule, and the injection/transfer guarantees.
//
// Ring registers never move in memory. A ring lane of N registers is a
// circular array; at cycle t stop k owns register (k*hop - t) mod N in the
// CW direction and (k*hop + t) mod N in the CCW direction, so advancing the
// clock is what moves every flit one register. Each stop touches only the
// register it owns in a given cycle, which makes the update two-phase by
// construction.

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "defnoc/metrics.hpp"
#include "defnoc/ring_topology.hpp"
#include "defnoc/types.hpp"

namespace defnoc {

struct RingParams {
  bool injection_guarantee = true;
  bool transfer_guarantee = true;
  int injection_threshold = 100;  // starved cycles before throttling
  int retry_threshold = 2;        // observed round trips before reserving a FIFO entry
  int throttle_latency = 1;       // cycles per hierarchy level for throttle signals
  int fifo_up_depth = 1;          // local-to-global, per ring interface
  int fifo_down_depth = 4;        // global-to-local, per ring interface
};

/// Which transfer direction of a bridge router.
enum class Transfer : std::uint8_t { Up = 0, Down = 1 };

class RingNetwork {
 public:
  struct FifoEntry {
    Flit flit;
    Cycle enter = 0;
    Cycle head_since = 0;
  };

  struct TransferFifo {
    std::deque<FifoEntry> entries;
    int depth = 1;
    int starve = 0;  // cycles the head could not inject

    bool full() const { return static_cast<int>(entries.size()) >= depth; }
    int free() const { return depth - static_cast<int>(entries.size()); }
  };

  struct Reservation {
    PacketId packet;
    std::uint16_t seq = 0;
    int observer = 0;
  };

  /// One transfer queue: a FIFO per ring interface of the wider ring, with a
  /// single reservation slot shared by all of them.
  struct FifoSet {
    std::vector<TransferFifo> fifos;
    std::optional<Reservation> reserved;

    int occupancy() const {
      int n = 0;
      for (const auto& f : fifos) n += static_cast<int>(f.entries.size());
      return n;
    }
    int capacity() const {
      int n = 0;
      for (const auto& f : fifos) n += f.depth;
      return n;
    }
  };

  /// Watches one ring register position; three counters in hardware.
  struct SlotObserver {
    int observed_slot = -1;  // register position, -1 until the first observation
    bool fresh = true;       // next visit is a first observation
    bool has_flit = false;
    PacketId packet;
    std::uint16_t seq = 0;
    int circles = 0;
  };

  RingNetwork() = default;

  RingNetwork(RingTopology topology, RingParams params) : topo_(std::move(topology)), params_(params) {
    validate();
    const int n = topo_.num_nodes();
    rings_.resize(static_cast<std::size_t>(topo_.num_rings()));
    for (std::size_t r = 0; r < rings_.size(); ++r) {
      const auto& d = topo_.rings[r];
      auto& rs = rings_[r];
      rs.positions = d.positions();
      rs.lanes = d.lanes;
      rs.hop = d.hop_latency;
      rs.stops = d.num_stops();
      rs.slots.assign(static_cast<std::size_t>(kDirs * d.lanes * rs.positions), std::nullopt);
      build_routes(static_cast<int>(r));
    }
    nodes_.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      nodes_[static_cast<std::size_t>(i)].ring = topo_.node_stop[static_cast<std::size_t>(i)].first;
      nodes_[static_cast<std::size_t>(i)].stop = topo_.node_stop[static_cast<std::size_t>(i)].second;
    }
    bridges_.resize(static_cast<std::size_t>(topo_.num_bridges()));
    for (std::size_t b = 0; b < bridges_.size(); ++b) {
      const auto& bd = topo_.bridges[b];
      auto& bs = bridges_[b];
      const int child_lanes = topo_.rings[static_cast<std::size_t>(bd.child_ring)].lanes;
      const int parent_lanes = topo_.rings[static_cast<std::size_t>(bd.parent_ring)].lanes;
      const int interfaces = std::max(child_lanes, parent_lanes);
      bs.sets[0].fifos.assign(static_cast<std::size_t>(interfaces), TransferFifo{{}, params_.fifo_up_depth, 0});
      bs.sets[1].fifos.assign(static_cast<std::size_t>(interfaces), TransferFifo{{}, params_.fifo_down_depth, 0});
      bs.observers[0].assign(static_cast<std::size_t>(kDirs * child_lanes), SlotObserver{});
      bs.observers[1].assign(static_cast<std::size_t>(kDirs * parent_lanes), SlotObserver{});
    }
    ring_dist_ = topo_.ring_distances();
    throttled_.assign(rings_.size(), false);
  }

  const RingTopology& topology() const { return topo_; }
  const RingParams& params() const { return params_; }
  int num_nodes() const { return topo_.num_nodes(); }

  // ---------------------------------------------------------------- queues

  /// Direction a flit leaving `stop` of `ring` takes toward destination `dst`.
  Dir route_direction(int ring, int stop, NodeId dst) const {
    return rings_[static_cast<std::size_t>(ring)].dir[route_index(ring, stop, dst)];
  }
  /// True if a flit for `dst` passing `stop` of `ring` should leave the ring there.
  bool is_exit(int ring, int stop, NodeId dst) const {
    return rings_[static_cast<std::size_t>(ring)].exit[route_index(ring, stop, dst)] != 0;
  }

  void enqueue(const QueuedPacket& p, bool at_head = false) {
    auto& node = nodes_[p.id.src.index()];
    const Dir d = route_direction(node.ring, node.stop, p.dst);
    auto& q = node.queues[static_cast<std::size_t>(d)];
    if (at_head)
      q.push_front(p);
    else
      q.push_back(p);
  }

  std::uint64_t queued_flits(NodeId n) const {
    std::uint64_t total = 0;
    for (const auto& q : nodes_[n.index()].queues)
      for (const auto& p : q) total += static_cast<std::uint64_t>(p.num_flits - p.next_seq);
    return total;
  }
  std::uint64_t queued_flits() const {
    std::uint64_t total = 0;
    for (int i = 0; i < num_nodes(); ++i) total += queued_flits(NodeId(i));
    return total;
  }
  const std::deque<QueuedPacket>& injection_queue(NodeId n, Dir d) const {
    return nodes_[n.index()].queues[static_cast<std::size_t>(d)];
  }

  void set_injection_enabled(bool on) { injection_enabled_ = on; }
  bool injection_enabled() const { return injection_enabled_; }

  // ----------------------------------------------------------------- cycle

  /// Advances every router by one cycle. Flits reaching their destination
  /// node are appended to `ejected`.
  void step(Cycle now, std::vector<Flit>& ejected, Metrics& metrics) {
    for (auto& r : rings_) {
      r.phase_cycle = now;
      r.phase = static_cast<int>(now % r.positions);
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) node_cycle(static_cast<int>(i), now, ejected, metrics);
    for (std::size_t b = 0; b < bridges_.size(); ++b) bridge_cycle(static_cast<int>(b), now, metrics);
    if (params_.injection_guarantee) update_throttle(now, metrics);
  }

  std::uint64_t injected_total() const { return injected_; }
  std::uint64_t ejected_total() const { return ejected_; }
  std::uint64_t in_flight() const { return injected_ - ejected_; }

  /// Flits in ring registers and transfer FIFOs, counted one by one.
  std::uint64_t count_in_flight() const {
    std::uint64_t n = 0;
    for (const auto& r : rings_)
      for (const auto& s : r.slots) n += s.has_value() ? 1 : 0;
    for (const auto& b : bridges_)
      for (const auto& set : b.sets) n += static_cast<std::uint64_t>(set.occupancy());
    return n;
  }

  /// Ring registers in the whole network.
  std::uint64_t total_slots() const {
    std::uint64_t n = 0;
    for (const auto& r : rings_) n += r.slots.size();
    return n;
  }

  void finalize(Cycle now, Metrics& metrics) const {
    for (const auto& r : rings_)
      for (const auto& s : r.slots)
        if (s) metrics.on_in_flight_flit(*s);
    for (const auto& b : bridges_)
      for (const auto& set : b.sets)
        for (const auto& f : set.fifos)
          for (std::size_t i = 0; i < f.entries.size(); ++i) {
            metrics.on_in_flight_flit(f.entries[i].flit);
            metrics.on_fifo_unfinished(f.entries[i].enter, f.entries[i].head_since, now, i == 0);
          }
  }

  // ------------------------------------------------------- inspection hooks

  /// The register that `stop` owns at cycle `now`.
  std::optional<Flit>& slot(int ring, Dir d, int lane, int stop, Cycle now) {
    return rings_[static_cast<std::size_t>(ring)].slots[slot_index(ring, d, lane, stop, now)];
  }
  const std::optional<Flit>& slot(int ring, Dir d, int lane, int stop, Cycle now) const {
    return rings_[static_cast<std::size_t>(ring)].slots[slot_index(ring, d, lane, stop, now)];
  }
  /// Puts a flit straight into a ring register (scripted scenarios).
  void place(int ring, Dir d, int lane, int stop, Cycle now, const Flit& f) {
    auto& s = slot(ring, d, lane, stop, now);
    if (s) throw std::logic_error("place: register occupied");
    s = f;
    ++injected_;
  }
  /// Puts a flit straight into a bridge transfer FIFO (scripted scenarios).
  void place_in_fifo(int bridge, Transfer t, int fifo, const Flit& f, Cycle enter) {
    auto& q = bridges_[static_cast<std::size_t>(bridge)].sets[static_cast<std::size_t>(t)].fifos[static_cast<std::size_t>(fifo)];
    if (q.full()) throw std::logic_error("place_in_fifo: FIFO full");
    q.entries.push_back({f, enter, q.entries.empty() ? enter : kNoCycle});
    ++injected_;
  }

  const FifoSet& fifo_set(int bridge, Transfer t) const {
    return bridges_[static_cast<std::size_t>(bridge)].sets[static_cast<std::size_t>(t)];
  }
  const SlotObserver& observer(int bridge, Transfer t, Dir d, int lane) const {
    const auto& bd = topo_.bridges[static_cast<std::size_t>(bridge)];
    const int ring = t == Transfer::Up ? bd.child_ring : bd.parent_ring;
    const int lanes = rings_[static_cast<std::size_t>(ring)].lanes;
    return bridges_[static_cast<std::size_t>(bridge)].observers[static_cast<std::size_t>(t)]
        [static_cast<std::size_t>(static_cast<int>(d) * lanes + lane)];
  }
  bool ring_throttled(int ring) const { return throttled_[static_cast<std::size_t>(ring)]; }
  bool ring_starving(int ring) const { return rings_[static_cast<std::size_t>(ring)].own_active; }
  int node_starve(NodeId n, Dir d) const { return nodes_[n.index()].starve[static_cast<std::size_t>(d)]; }

 private:
  struct RingState {
    int positions = 0;
    int lanes = 1;
    int hop = 2;
    int stops = 0;
    std::vector<std::optional<Flit>> slots;  // [(dir * lanes + lane) * positions + pos]
    std::vector<std::uint8_t> exit;          // [stop * nodes + dst]
    std::vector<Dir> dir;                    // [stop * nodes + dst]
    Cycle phase_cycle = kNoCycle;            // cycle `phase` was computed for
    int phase = 0;                           // now % positions
    bool own_active = false;                 // some injection point into this ring is starved
    Cycle active_since = 0;
  };

  struct NodeState {
    int ring = 0;
    int stop = 0;
    std::array<std::deque<QueuedPacket>, kDirs> queues;
    std::array<int, kDirs> starve{};
  };

  struct BridgeState {
    std::array<FifoSet, 2> sets;                         // [Up, Down]
    std::array<std::vector<SlotObserver>, 2> observers;  // [child ring, parent ring]
  };

  void validate() const {
    if (topo_.num_nodes() < 2) throw ConfigError("ring network needs at least 2 nodes");
    if (params_.injection_threshold < 1) throw ConfigError("injection threshold must be >= 1");
    if (params_.retry_threshold < 0) throw ConfigError("retry threshold must be >= 0");
    if (params_.throttle_latency < 0) throw ConfigError("throttle latency must be >= 0");
    if (params_.fifo_up_depth < 1 || params_.fifo_down_depth < 1) throw ConfigError("FIFO depth must be >= 1");
  }

  std::size_t route_index(int ring, int stop, NodeId dst) const {
    (void)ring;
    return static_cast<std::size_t>(stop) * static_cast<std::size_t>(topo_.num_nodes()) + dst.index();
  }

  // Rotation of the ring at `now`; cached for the cycle being stepped.
  static int phase(const RingState& r, Cycle now) {
    return now == r.phase_cycle ? r.phase : static_cast<int>(now % r.positions);
  }

  int position_of(int ring, Dir d, int stop, Cycle now) const {
    const auto& r = rings_[static_cast<std::size_t>(ring)];
    const int m = phase(r, now);
    const int base = stop * r.hop;
    if (d == Dir::CW) {
      const int p = base - m;
      return p < 0 ? p + r.positions : p;
    }
    const int p = base + m;
    return p >= r.positions ? p - r.positions : p;
  }

  std::size_t slot_index(int ring, Dir d, int lane, int stop, Cycle now) const {
    const auto& r = rings_[static_cast<std::size_t>(ring)];
    return static_cast<std::size_t>((static_cast<int>(d) * r.lanes + lane) * r.positions + position_of(ring, d, stop, now));
  }

  // Exit stops for each destination on each ring, and the shorter direction
  // from every stop toward the nearest exit (ties to CW).
  void build_routes(int ring) {
    const auto& desc = topo_.rings[static_cast<std::size_t>(ring)];
    auto& rs = rings_[static_cast<std::size_t>(ring)];
    const int n = topo_.num_nodes();
    const int stops = desc.num_stops();
    rs.exit.assign(static_cast<std::size_t>(stops * n), 0);
    rs.dir.assign(static_cast<std::size_t>(stops * n), Dir::CW);
    for (int dst = 0; dst < n; ++dst) {
      const Address& addr = topo_.addresses[static_cast<std::size_t>(dst)];
      const RouteAction act = route_decision(addr, desc.id);
      for (int s = 0; s < stops; ++s) {
        const Stop& st = desc.stops[static_cast<std::size_t>(s)];
        bool exit = false;
        switch (st.kind) {
          case StopKind::Node:
            exit = st.index == dst;
            break;
          case StopKind::BridgeChild:
            exit = act == RouteAction::TransferUp;
            break;
          case StopKind::BridgeParent: {
            const auto& child = topo_.rings[static_cast<std::size_t>(topo_.bridges[static_cast<std::size_t>(st.index)].child_ring)];
            exit = act == RouteAction::TransferDown && has_prefix(addr, child.id.prefix);
            break;
          }
        }
        rs.exit[static_cast<std::size_t>(s * n + dst)] = exit ? 1 : 0;
      }
      for (int s = 0; s < stops; ++s) {
        int best = stops + 1;
        Dir best_dir = Dir::CW;
        for (int e = 0; e < stops; ++e) {
          if (e == s || rs.exit[static_cast<std::size_t>(e * n + dst)] == 0) continue;
          const int cw = ((e - s) % stops + stops) % stops;
          const int ccw = stops - cw;
          if (cw < best || (cw == best && best_dir == Dir::CCW)) {
            best = cw;
            best_dir = Dir::CW;
          }
          if (ccw < best) {
            best = ccw;
            best_dir = Dir::CCW;
          }
        }
        rs.dir[static_cast<std::size_t>(s * n + dst)] = best_dir;
      }
    }
  }

  bool exempt(int starve) const { return starve >= params_.injection_threshold; }

  void node_cycle(int id, Cycle now, std::vector<Flit>& ejected, Metrics& metrics) {
    auto& node = nodes_[static_cast<std::size_t>(id)];
    auto& ring = rings_[static_cast<std::size_t>(node.ring)];
    for (int di = 0; di < kDirs; ++di) {
      const Dir d = static_cast<Dir>(di);
      bool ejected_here = false;
      int free_lane = -1;
      for (int lane = 0; lane < ring.lanes; ++lane) {
        auto& s = ring.slots[slot_index(node.ring, d, lane, node.stop, now)];
        if (s && s->dst.value == id && !ejected_here) {
          ejected.push_back(*s);
          s.reset();
          ejected_here = true;
          ++ejected_;
        } else if (s) {
          if (s->dst.value == id) {
            ++s->deflections;
            ++metrics.total_deflections;
          }
          ++metrics.flit_hops;
        }
        if (!s && free_lane < 0) free_lane = lane;
      }

      auto& q = node.queues[static_cast<std::size_t>(di)];
      auto& starve = node.starve[static_cast<std::size_t>(di)];
      if (q.empty()) {
        starve = 0;
        continue;
      }
      if (!injection_enabled_) continue;
      if (throttled_[static_cast<std::size_t>(node.ring)] && !exempt(starve)) continue;
      if (free_lane < 0) {
        ++starve;
        continue;
      }
      QueuedPacket& p = q.front();
      Flit f = p.make_flit();
      f.inject_cycle = now;
      ring.slots[slot_index(node.ring, d, free_lane, node.stop, now)] = f;
      ++injected_;
      starve = 0;
      if (++p.next_seq >= p.num_flits) q.pop_front();
    }
  }

  // Lowest lane in `d` whose register at this stop is empty, or -1.
  int free_lane(int ring, Dir d, int stop, Cycle now) const {
    const auto& r = rings_[static_cast<std::size_t>(ring)];
    for (int lane = 0; lane < r.lanes; ++lane)
      if (!r.slots[slot_index(ring, d, lane, stop, now)]) return lane;
    return -1;
  }

  void observe(int bridge, int side, int ring, int stop, Cycle now, Metrics& metrics) {
    auto& bs = bridges_[static_cast<std::size_t>(bridge)];
    auto& set = bs.sets[static_cast<std::size_t>(side)];
    auto& r = rings_[static_cast<std::size_t>(ring)];
    auto& observers = bs.observers[static_cast<std::size_t>(side)];
    for (int di = 0; di < kDirs; ++di) {
      for (int lane = 0; lane < r.lanes; ++lane) {
        const int oi = di * r.lanes + lane;
        auto& o = observers[static_cast<std::size_t>(oi)];
        const int pos = position_of(ring, static_cast<Dir>(di), stop, now);
        if (o.observed_slot < 0) o.observed_slot = pos;
        if (pos != o.observed_slot) continue;
        const auto& s = r.slots[static_cast<std::size_t>((di * r.lanes + lane) * r.positions + pos)];
        if (o.fresh) {
          o.fresh = false;
          o.circles = 0;
          o.has_flit = s.has_value();
          if (s) {
            o.packet = s->packet;
            o.seq = s->seq;
          }
          continue;
        }
        if (o.has_flit && s && s->packet == o.packet && s->seq == o.seq) {
          if (is_exit(ring, stop, s->dst)) {
            ++o.circles;
            if (o.circles > params_.retry_threshold && !set.reserved) {
              set.reserved = Reservation{s->packet, s->seq, oi};
              ++metrics.reservations;
            }
          }
          continue;
        }
        // The watched flit is gone (or the slot was empty): move on to the
        // register that reaches this stop next cycle.
        if (set.reserved && set.reserved->observer == oi && set.reserved->packet == o.packet &&
            set.reserved->seq == o.seq)
          set.reserved.reset();
        o.observed_slot = static_cast<Dir>(di) == Dir::CW ? (pos - 1 + r.positions) % r.positions
                                                          : (pos + 1) % r.positions;
        o.fresh = true;
        o.has_flit = false;
      }
    }
  }

  bool try_enqueue(FifoSet& set, Flit& f, Cycle now) {
    if (set.reserved && !(set.reserved->packet == f.packet && set.reserved->seq == f.seq)) return false;
    TransferFifo* best = nullptr;
    for (auto& q : set.fifos)
      if (q.free() > 0 && (best == nullptr || q.free() > best->free())) best = &q;
    if (best == nullptr) return false;
    best->entries.push_back({f, now, best->entries.empty() ? now : kNoCycle});
    if (set.reserved) set.reserved.reset();
    return true;
  }

  // Arrivals at one side of a bridge: flits routed through here leave the
  // ring for the transfer FIFO, or go around again if it is full. Flits that
  // arrive together are served most-retried first, so neither direction can
  // keep winning freed entries.
  void bridge_arrivals(int ring, int stop, FifoSet& into, int skip_reg, Cycle now, Metrics& metrics) {
    auto& r = rings_[static_cast<std::size_t>(ring)];
    std::array<std::optional<Flit>*, 2 * kMaxLanes> exiting{};
    int n = 0;
    for (int di = 0; di < kDirs; ++di) {
      for (int lane = 0; lane < r.lanes; ++lane) {
        if (di * r.lanes + lane == skip_reg) continue;
        auto& s = r.slots[slot_index(ring, static_cast<Dir>(di), lane, stop, now)];
        if (!s) continue;
        if (!is_exit(ring, stop, s->dst)) {
          ++metrics.flit_hops;
          continue;
        }
        exiting[static_cast<std::size_t>(n++)] = &s;
      }
    }
    // Insertion sort: stable, and n is tiny.
    for (int i = 1; i < n; ++i)
      for (int j = i; j > 0 && (*exiting[static_cast<std::size_t>(j)])->ring_retries >
                                   (*exiting[static_cast<std::size_t>(j - 1)])->ring_retries; --j)
        std::swap(exiting[static_cast<std::size_t>(j)], exiting[static_cast<std::size_t>(j - 1)]);
    for (int i = 0; i < n; ++i) {
      auto& s = *exiting[static_cast<std::size_t>(i)];
      if (try_enqueue(into, *s, now)) {
        s.reset();
      } else {
        ++s->ring_retries;
        ++metrics.total_ring_retries;
        ++metrics.flit_hops;
      }
    }
  }

  // FIFO heads enter the adjacent ring on a free register, oldest head first.
  void bridge_injections(int ring, int stop, FifoSet& from, Cycle now, Metrics& metrics) {
    if (from.occupancy() == 0) return;  // empty FIFOs already have starve == 0
    std::array<int, kMaxLanes> order{};
    std::array<Cycle, kMaxLanes> head_enter{};
    const int n = static_cast<int>(from.fifos.size());
    for (int i = 0; i < n; ++i) {
      const auto& q = from.fifos[static_cast<std::size_t>(i)].entries;
      const Cycle e = q.empty() ? now : q.front().enter;
      int j = i;
      for (; j > 0 && e < head_enter[static_cast<std::size_t>(j - 1)]; --j) {
        order[static_cast<std::size_t>(j)] = order[static_cast<std::size_t>(j - 1)];
        head_enter[static_cast<std::size_t>(j)] = head_enter[static_cast<std::size_t>(j - 1)];
      }
      order[static_cast<std::size_t>(j)] = i;
      head_enter[static_cast<std::size_t>(j)] = e;
    }
    for (int k = 0; k < n; ++k) {
      auto& q = from.fifos[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
      if (q.entries.empty() || q.entries.front().enter >= now) {
        q.starve = 0;
        continue;
      }
      FifoEntry& head = q.entries.front();
      const Dir d = route_direction(ring, stop, head.flit.dst);
      const int lane = free_lane(ring, d, stop, now);
      if (lane < 0) {
        ++q.starve;
        continue;
      }
      metrics.on_fifo_leave(head.enter, head.head_since, now);
      slot(ring, d, lane, stop, now) = head.flit;
      q.entries.pop_front();
      if (!q.entries.empty()) q.entries.front().head_since = now;
      q.starve = 0;
    }
  }

  std::optional<Flit>& register_at(int ring, int reg, int stop, Cycle now) {
    const int lanes = rings_[static_cast<std::size_t>(ring)].lanes;
    return slot(ring, static_cast<Dir>(reg / lanes), reg % lanes, stop, now);
  }

  // Registers at this stop (dir * lanes + lane) whose flit wants to cross here.
  int crossing_arrivals(int ring, int stop, Cycle now, std::array<int, 2 * kMaxLanes>& out,
                        std::array<const Flit*, 2 * kMaxLanes>& flits) const {
    const auto& r = rings_[static_cast<std::size_t>(ring)];
    int n = 0;
    for (int di = 0; di < kDirs; ++di) {
      const int pos = position_of(ring, static_cast<Dir>(di), stop, now);
      for (int lane = 0; lane < r.lanes; ++lane) {
        const auto& s = r.slots[static_cast<std::size_t>((di * r.lanes + lane) * r.positions + pos)];
        if (s && is_exit(ring, stop, s->dst)) {
          flits[static_cast<std::size_t>(n)] = &*s;
          out[static_cast<std::size_t>(n++)] = di * r.lanes + lane;
        }
      }
    }
    return n;
  }

  // Picks the swap pair that leaves the most flits heading their shortest
  // way on the new ring; first pair in register order on ties.
  std::pair<int, int> choose_swap(const BridgeDesc& bd, Cycle now) {
    std::array<int, 2 * kMaxLanes> child{};
    std::array<int, 2 * kMaxLanes> parent{};
    std::array<const Flit*, 2 * kMaxLanes> child_flits{};
    std::array<const Flit*, 2 * kMaxLanes> parent_flits{};
    const int nc = crossing_arrivals(bd.child_ring, bd.child_stop, now, child, child_flits);
    if (nc == 0) return {-1, -1};
    const int np = crossing_arrivals(bd.parent_ring, bd.parent_stop, now, parent, parent_flits);
    const int child_lanes = rings_[static_cast<std::size_t>(bd.child_ring)].lanes;
    const int parent_lanes = rings_[static_cast<std::size_t>(bd.parent_ring)].lanes;
    std::pair<int, int> best{-1, -1};
    int best_score = -1;
    for (int i = 0; i < nc; ++i) {
      const int c = child[static_cast<std::size_t>(i)];
      const Flit& fc = *child_flits[static_cast<std::size_t>(i)];
      for (int j = 0; j < np; ++j) {
        const int p = parent[static_cast<std::size_t>(j)];
        const Flit& fp = *parent_flits[static_cast<std::size_t>(j)];
        const int score =
            (route_direction(bd.parent_ring, bd.parent_stop, fc.dst) == static_cast<Dir>(p / parent_lanes)) +
            (route_direction(bd.child_ring, bd.child_stop, fp.dst) == static_cast<Dir>(c / child_lanes));
        if (score > best_score) {
          best_score = score;
          best = {c, p};
        }
      }
    }
    return best;
  }

  void bridge_cycle(int id, Cycle now, Metrics& metrics) {
    const auto& bd = topo_.bridges[static_cast<std::size_t>(id)];
    auto& bs = bridges_[static_cast<std::size_t>(id)];
    auto& up = bs.sets[static_cast<std::size_t>(Transfer::Up)];
    auto& down = bs.sets[static_cast<std::size_t>(Transfer::Down)];

    if (params_.transfer_guarantee) {
      observe(id, 0, bd.child_ring, bd.child_stop, now, metrics);
      observe(id, 1, bd.parent_ring, bd.parent_stop, now, metrics);
    }

    // Swap rule: an arrival on each side wants to cross, so the two trade
    // places directly. Either direction may pair up; at most one swap per
    // bridge per cycle.
    const auto [child_reg, parent_reg] = choose_swap(bd, now);
    int skip_child = -1;
    int skip_parent = -1;
    if (child_reg >= 0 && parent_reg >= 0) {
      std::swap(register_at(bd.child_ring, child_reg, bd.child_stop, now),
                register_at(bd.parent_ring, parent_reg, bd.parent_stop, now));
      ++metrics.swaps;
      metrics.flit_hops += 2;
      skip_child = child_reg;
      skip_parent = parent_reg;
    }

    bridge_arrivals(bd.child_ring, bd.child_stop, up, skip_child, now, metrics);
    bridge_arrivals(bd.parent_ring, bd.parent_stop, down, skip_parent, now, metrics);
    bridge_injections(bd.parent_ring, bd.parent_stop, up, now, metrics);
    bridge_injections(bd.child_ring, bd.child_stop, down, now, metrics);
  }

  // Injection guarantee, hierarchical form: a ring with a starved injection
  // point throttles its own node injection at once; every further
  // (threshold + latency) cycles of continued starvation reaches one more
  // level of rings, until in the limit nothing new enters anywhere.
  void update_throttle(Cycle now, Metrics& metrics) {
    std::vector<int> starved(rings_.size(), 0);
    for (const auto& node : nodes_)
      for (int s : node.starve)
        if (exempt(s)) ++starved[static_cast<std::size_t>(node.ring)];
    for (std::size_t b = 0; b < bridges_.size(); ++b) {
      const auto& bd = topo_.bridges[b];
      for (const auto& q : bridges_[b].sets[0].fifos)
        if (exempt(q.starve)) ++starved[static_cast<std::size_t>(bd.parent_ring)];
      for (const auto& q : bridges_[b].sets[1].fifos)
        if (exempt(q.starve)) ++starved[static_cast<std::size_t>(bd.child_ring)];
    }
    for (std::size_t r = 0; r < rings_.size(); ++r) {
      auto& rs = rings_[r];
      if (starved[r] > 0 && !rs.own_active) {
        rs.own_active = true;
        rs.active_since = now;
        ++metrics.throttle_events;
      } else if (starved[r] == 0) {
        rs.own_active = false;
      }
    }
    const Cycle step = params_.injection_threshold + params_.throttle_latency;
    for (std::size_t x = 0; x < rings_.size(); ++x) {
      bool t = false;
      for (std::size_t r = 0; r < rings_.size() && !t; ++r) {
        const auto& rs = rings_[r];
        if (!rs.own_active) continue;
        t = (now + 1 - rs.active_since) >= ring_dist_[r][x] * step;
      }
      throttled_[x] = t;
    }
  }

  RingTopology topo_;
  RingParams params_;
  std::vector<RingState> rings_;
  std::vector<NodeState> nodes_;
  std::vector<BridgeState> bridges_;
  std::vector<std::vector<int>> ring_dist_;
  std::vector<bool> throttled_;
  bool injection_enabled_ = true;
  std::uint64_t injected_ = 0;
  std::uint64_t ejected_ = 0;
};

/// One bidirectional ring of node routers.
inline RingNetwork build_single_ring(int n, int lanes = 1, int hop_latency = 2, RingParams params = {}) {
  return RingNetwork(single_ring_topology(n, lanes, hop_latency), params);
}

inline RingNetwork build_hird(const HirdShape& shape, RingParams params = {}) {
  return RingNetwork(hird_topology(shape), params);
}

}  // namespace defnoc
