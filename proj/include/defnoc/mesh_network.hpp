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

// 2D mesh of deflection routers. Each router steers up to four flits through
// a two-stage permutation network of 2x2 arbiter blocks, so every flit leaves
// on some port every cycle. MinBD mode adds a silver priority tag, a small
// side buffer fed by deflected flits, dual ejection and redirection.

#pragma once

#include <array>
#include <cstdint>
#include <cstdlib>
#include <deque>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "defnoc/metrics.hpp"
#include "defnoc/rng.hpp"
#include "defnoc/types.hpp"

namespace defnoc {

enum Port : int { kNorth = 0, kEast = 1, kSouth = 2, kWest = 3 };
inline constexpr int kPorts = 4;

struct Coord {
  int x = 0;
  int y = 0;
  friend constexpr bool operator==(Coord, Coord) = default;
};

/// Ports that shorten the Manhattan distance (bit p set for port p), plus
/// the preferred one: the dimension with more hops left, X on a tie. y grows
/// southward.
struct PortPreference {
  std::uint8_t productive = 0;
  int preferred = -1;  // -1 when at == dst

  bool is_productive(int port) const { return (productive >> port) & 1u; }
};

constexpr PortPreference preferred_ports(Coord at, Coord dst) {
  PortPreference p;
  const int dx = dst.x - at.x;
  const int dy = dst.y - at.y;
  if (dx > 0) p.productive |= 1u << kEast;
  if (dx < 0) p.productive |= 1u << kWest;
  if (dy > 0) p.productive |= 1u << kSouth;
  if (dy < 0) p.productive |= 1u << kNorth;
  const int ax = dx < 0 ? -dx : dx;
  const int ay = dy < 0 ? -dy : dy;
  if (ax == 0 && ay == 0) return p;
  if (ax >= ay)
    p.preferred = dx > 0 ? kEast : kWest;
  else
    p.preferred = dy > 0 ? kSouth : kNorth;
  return p;
}

/// The golden packet for `cycle`. Ids rotate through num_nodes * txn_window
/// slots, one per epoch; slot i names source i / txn_window and every
/// transaction number congruent to i mod txn_window.
constexpr PacketId golden_packet_id(Cycle cycle, Cycle epoch_length, int num_nodes, int txn_window = 16) {
  const auto space = static_cast<Cycle>(num_nodes) * txn_window;
  const auto idx = (cycle / epoch_length) % space;
  return PacketId{NodeId(static_cast<std::int32_t>(idx / txn_window)), static_cast<std::uint32_t>(idx % txn_window)};
}

constexpr bool is_golden(const PacketId& p, Cycle cycle, Cycle epoch_length, int num_nodes, int txn_window = 16) {
  const PacketId g = golden_packet_id(cycle, epoch_length, num_nodes, txn_window);
  return p.src == g.src && p.txn % static_cast<std::uint32_t>(txn_window) == g.txn;
}

/// Arbitration class, strongest first. `Held` is a test hook: such a flit
/// never wins, never ejects and never takes its preferred port.
enum class Priority : std::uint8_t { Golden = 0, Silver = 1, Common = 2, Held = 3 };

struct RoutedFlit {
  Flit flit;
  Priority prio = Priority::Common;
  PortPreference pref;
};

/// True if `a` beats `b`. Golden ties go to the lower (packet, seq); equal
/// common or held flits are settled by a coin flip.
inline bool outranks(const RoutedFlit& a, const RoutedFlit& b, Rng& rng) {
  if (a.prio != b.prio) return a.prio < b.prio;
  if (a.prio == Priority::Golden) {
    if (a.flit.packet != b.flit.packet) return a.flit.packet < b.flit.packet;
    return a.flit.seq < b.flit.seq;
  }
  return rng.coin();
}

/// One 2x2 block. `want_*` is the output (0/1) each flit would like, or -1.
/// Returns the output taken by `a` (or by `b` alone when `a` is absent); the
/// other flit gets the other output.
inline int arbiter_block(const RoutedFlit* a, int want_a, const RoutedFlit* b, int want_b, Rng& rng) {
  if (a == nullptr && b == nullptr) return -1;
  if (a == nullptr) return want_b < 0 ? 0 : want_b;
  if (b == nullptr) return want_a < 0 ? 0 : want_a;
  const bool a_wins = outranks(*a, *b, rng);
  const int win_want = a_wins ? want_a : want_b;
  const int lose_want = a_wins ? want_b : want_a;
  int win_out = 0;
  if (win_want >= 0)
    win_out = win_want;
  else if (lose_want >= 0)
    win_out = 1 - lose_want;
  return a_wins ? win_out : 1 - win_out;
}

/// Routes up to four flits from input positions to output ports. Stage 1
/// pairs inputs {N,E} and {S,W}; output 0 of both stage-1 blocks feeds the
/// stage-2 block driving ports {N,E}, output 1 the block driving {S,W}.
inline std::array<std::optional<RoutedFlit>, kPorts> permute(std::array<std::optional<RoutedFlit>, kPorts> in, Rng& rng) {
  auto stage1_want = [](const std::optional<RoutedFlit>& f) {
    if (!f || f->prio == Priority::Held || f->pref.preferred < 0) return -1;
    return (f->pref.preferred == kNorth || f->pref.preferred == kEast) ? 0 : 1;
  };
  std::array<std::optional<RoutedFlit>, kPorts> mid;  // [X.in0, X.in1, Y.in0, Y.in1]
  const std::array<std::array<int, 2>, 2> pairs{{{kNorth, kEast}, {kSouth, kWest}}};
  for (int blk = 0; blk < 2; ++blk) {
    auto& a = in[static_cast<std::size_t>(pairs[static_cast<std::size_t>(blk)][0])];
    auto& b = in[static_cast<std::size_t>(pairs[static_cast<std::size_t>(blk)][1])];
    const int out = arbiter_block(a ? &*a : nullptr, stage1_want(a), b ? &*b : nullptr, stage1_want(b), rng);
    if (out < 0) continue;
    auto& first = a ? a : b;
    mid[static_cast<std::size_t>(out * 2 + blk)] = std::move(first);
    if (a && b) mid[static_cast<std::size_t>((1 - out) * 2 + blk)] = std::move(b);
  }
  std::array<std::optional<RoutedFlit>, kPorts> outp;
  for (int blk = 0; blk < 2; ++blk) {
    const std::array<int, 2> ports = pairs[static_cast<std::size_t>(blk)];
    auto want = [&](const std::optional<RoutedFlit>& f) {
      if (!f || f->prio == Priority::Held) return -1;
      for (int k = 0; k < 2; ++k)
        if (f->pref.preferred == ports[static_cast<std::size_t>(k)]) return k;
      for (int k = 0; k < 2; ++k)
        if (f->pref.is_productive(ports[static_cast<std::size_t>(k)])) return k;
      return -1;
    };
    auto& a = mid[static_cast<std::size_t>(blk * 2)];
    auto& b = mid[static_cast<std::size_t>(blk * 2 + 1)];
    const int out = arbiter_block(a ? &*a : nullptr, want(a), b ? &*b : nullptr, want(b), rng);
    if (out < 0) continue;
    auto& first = a ? a : b;
    outp[static_cast<std::size_t>(ports[static_cast<std::size_t>(out)])] = std::move(first);
    if (a && b) outp[static_cast<std::size_t>(ports[static_cast<std::size_t>(1 - out)])] = std::move(b);
  }
  return outp;
}

/// Uniform pick among present flits that are neither golden nor already at
/// their destination. Returns the input position or -1.
inline int select_silver(const std::array<std::optional<RoutedFlit>, kPorts>& in, Rng& rng) {
  std::array<int, kPorts> cand{};
  int n = 0;
  for (int p = 0; p < kPorts; ++p) {
    const auto& f = in[static_cast<std::size_t>(p)];
    if (f && f->prio == Priority::Common && f->pref.preferred >= 0) cand[static_cast<std::size_t>(n++)] = p;
  }
  if (n == 0) return -1;
  return cand[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(n)))];
}

enum class MeshMode : std::uint8_t { Chipper, MinBD };

struct MeshParams {
  MeshMode mode = MeshMode::MinBD;
  bool strict_chipper = false;  // one ejector instead of two
  int side_buffer_depth = 4;
  int c_threshold = 2;
  int hop_latency = 2;
  Cycle golden_epoch = 0;  // 0 selects 8 * (width + height)
  int txn_window = 16;
};

class MeshNetwork {
 public:
  MeshNetwork() = default;

  MeshNetwork(int width, int height, MeshParams params, std::uint64_t arb_seed)
      : w_(width), h_(height), params_(params), rng_(arb_seed) {
    if (width < 2 || height < 2) throw ConfigError("mesh width and height must be >= 2");
    if (params_.hop_latency < 1) throw ConfigError("mesh hop latency must be >= 1");
    if (params_.side_buffer_depth < 1) throw ConfigError("side buffer depth must be >= 1");
    if (params_.c_threshold < 0) throw ConfigError("c_threshold must be >= 0");
    if (params_.txn_window < 1) throw ConfigError("txn window must be >= 1");
    if (params_.golden_epoch == 0) params_.golden_epoch = 8 * static_cast<Cycle>(width + height);
    if (params_.golden_epoch < 1) throw ConfigError("golden epoch must be >= 1");
    const auto n = static_cast<std::size_t>(num_nodes());
    routers_.resize(n);
    pipes_.assign(n * kPorts * static_cast<std::size_t>(params_.hop_latency), std::nullopt);
    inputs_.resize(n);
  }

  int width() const { return w_; }
  int height() const { return h_; }
  int num_nodes() const { return w_ * h_; }
  const MeshParams& params() const { return params_; }
  Coord coord(NodeId n) const { return {n.value % w_, n.value / w_}; }
  NodeId node_at(Coord c) const { return NodeId(c.y * w_ + c.x); }

  void enqueue(const QueuedPacket& p, bool at_head = false) {
    auto& q = routers_[p.id.src.index()].queue;
    if (at_head)
      q.push_front(p);
    else
      q.push_back(p);
  }

  std::uint64_t queued_flits(NodeId n) const {
    std::uint64_t total = 0;
    for (const auto& p : routers_[n.index()].queue) total += static_cast<std::uint64_t>(p.num_flits - p.next_seq);
    return total;
  }
  std::uint64_t queued_flits() const {
    std::uint64_t total = 0;
    for (int i = 0; i < num_nodes(); ++i) total += queued_flits(NodeId(i));
    return total;
  }
  void set_injection_enabled(bool on) { injection_enabled_ = on; }

  /// Test hook: flits of `p` are held back (never win, never eject) until
  /// the packet becomes golden.
  void hold_packet(const PacketId& p) { held_.insert(p); }

  bool golden(const PacketId& p, Cycle now) const {
    return is_golden(p, now, params_.golden_epoch, num_nodes(), params_.txn_window);
  }

  void step(Cycle now, std::vector<Flit>& ejected, Metrics& metrics) {
    const auto slot = static_cast<std::size_t>(now % params_.hop_latency);
    const auto hl = static_cast<std::size_t>(params_.hop_latency);
    for (std::size_t r = 0; r < routers_.size(); ++r)
      for (std::size_t p = 0; p < kPorts; ++p) {
        auto& src = pipes_[(r * kPorts + p) * hl + slot];
        inputs_[r][p] = std::move(src);
        src.reset();
      }
    for (std::size_t r = 0; r < routers_.size(); ++r) router_cycle(static_cast<int>(r), now, slot, ejected, metrics);
  }

  std::uint64_t injected_total() const { return injected_; }
  std::uint64_t ejected_total() const { return ejected_; }
  std::uint64_t in_flight() const { return injected_ - ejected_; }

  std::uint64_t count_in_flight() const {
    std::uint64_t n = 0;
    for (const auto& s : pipes_) n += s.has_value() ? 1 : 0;
    for (const auto& r : routers_) n += r.side.size();
    return n;
  }

  std::uint64_t total_slots() const {
    return pipes_.size() + (params_.mode == MeshMode::MinBD ? routers_.size() * static_cast<std::size_t>(params_.side_buffer_depth) : 0);
  }

  void finalize(Cycle now, Metrics& metrics) const {
    for (const auto& s : pipes_)
      if (s) metrics.on_in_flight_flit(*s);
    for (const auto& r : routers_)
      for (const auto& e : r.side) {
        metrics.on_in_flight_flit(e.first);
        metrics.max_side_residence = std::max(metrics.max_side_residence, now - e.second);
      }
  }

  std::size_t side_buffer_size(NodeId n) const { return routers_[n.index()].side.size(); }

 private:
  struct Router {
    std::deque<QueuedPacket> queue;
    std::deque<std::pair<Flit, Cycle>> side;  // flit, cycle it entered
    int side_starve = 0;
  };

  int neighbor(int r, int port) const {
    const Coord c = coord(NodeId(r));
    Coord n = c;
    switch (port) {
      case kNorth: n.y -= 1; break;
      case kEast: n.x += 1; break;
      case kSouth: n.y += 1; break;
      default: n.x -= 1; break;
    }
    if (n.x < 0 || n.y < 0 || n.x >= w_ || n.y >= h_) return -1;
    return node_at(n).value;
  }

  RoutedFlit classify(const Flit& f, int r, Cycle now) const {
    RoutedFlit rf;
    rf.flit = f;
    rf.pref = preferred_ports(coord(NodeId(r)), coord(f.dst));
    if (golden(f.packet, now))
      rf.prio = Priority::Golden;
    else if (!held_.empty() && held_.count(f.packet) != 0)
      rf.prio = Priority::Held;
    return rf;
  }

  int empty_input(const std::array<std::optional<RoutedFlit>, kPorts>& in) const {
    for (int p = 0; p < kPorts; ++p)
      if (!in[static_cast<std::size_t>(p)]) return p;
    return -1;
  }

  void leave_side(Router& rt, Cycle now, Metrics& metrics) {
    metrics.max_side_residence = std::max(metrics.max_side_residence, now - rt.side.front().second);
    rt.side.pop_front();
  }

  void router_cycle(int r, Cycle now, std::size_t slot, std::vector<Flit>& ejected, Metrics& metrics) {
    auto& rt = routers_[static_cast<std::size_t>(r)];
    const bool minbd = params_.mode == MeshMode::MinBD;
    std::array<std::optional<RoutedFlit>, kPorts> in;
    for (int p = 0; p < kPorts; ++p) {
      auto& f = inputs_[static_cast<std::size_t>(r)][static_cast<std::size_t>(p)];
      if (f) in[static_cast<std::size_t>(p)] = classify(*f, r, now);
      f.reset();
    }

    // Ejection: golden first, then port order.
    const int ejectors = params_.strict_chipper ? 1 : 2;
    for (int k = 0; k < ejectors; ++k) {
      int pick = -1;
      for (int p = 0; p < kPorts; ++p) {
        const auto& f = in[static_cast<std::size_t>(p)];
        if (!f || f->flit.dst.value != r || f->prio == Priority::Held) continue;
        if (pick < 0 || (f->prio == Priority::Golden && in[static_cast<std::size_t>(pick)]->prio != Priority::Golden)) pick = p;
      }
      if (pick < 0) break;
      ejected.push_back(in[static_cast<std::size_t>(pick)]->flit);
      in[static_cast<std::size_t>(pick)].reset();
      ++ejected_;
    }

    bool buffered_this_cycle = false;
    if (minbd && !rt.side.empty()) {
      // Redirection: a buffered flit starved too long swaps with a random
      // non-golden input flit.
      if (rt.side_starve > params_.c_threshold) {
        std::array<int, kPorts> cand{};
        int n = 0;
        for (int p = 0; p < kPorts; ++p) {
          const auto& f = in[static_cast<std::size_t>(p)];
          if (f && f->prio == Priority::Common) cand[static_cast<std::size_t>(n++)] = p;
        }
        if (n > 0) {
          const int p = cand[static_cast<std::size_t>(rng_.below(static_cast<std::uint64_t>(n)))];
          Flit head = rt.side.front().first;
          leave_side(rt, now, metrics);
          rt.side.emplace_back(in[static_cast<std::size_t>(p)]->flit, now);
          in[static_cast<std::size_t>(p)] = classify(head, r, now);
          rt.side_starve = 0;
          buffered_this_cycle = true;
          ++metrics.redirections;
          ++metrics.side_buffered;
        }
      }
      if (!buffered_this_cycle) {
        const int p = empty_input(in);
        if (p >= 0) {
          in[static_cast<std::size_t>(p)] = classify(rt.side.front().first, r, now);
          leave_side(rt, now, metrics);
          rt.side_starve = 0;
        } else {
          ++rt.side_starve;
        }
      }
    } else {
      rt.side_starve = 0;
    }

    if (injection_enabled_ && !rt.queue.empty()) {
      const int p = empty_input(in);
      if (p >= 0) {
        QueuedPacket& qp = rt.queue.front();
        Flit f = qp.make_flit();
        f.inject_cycle = now;
        in[static_cast<std::size_t>(p)] = classify(f, r, now);
        ++injected_;
        if (++qp.next_seq >= qp.num_flits) rt.queue.pop_front();
      }
    }

    if (minbd) {
      const int s = select_silver(in, rng_);
      if (s >= 0) in[static_cast<std::size_t>(s)]->prio = Priority::Silver;
    }

    // The flit expected to win every block it meets, if unambiguous.
    int top = -1;
    for (int p = 0; p < kPorts; ++p) {
      const auto& f = in[static_cast<std::size_t>(p)];
      if (!f || f->pref.preferred < 0 || f->prio > Priority::Silver) continue;
      if (top < 0) {
        top = p;
        continue;
      }
      const auto& t = *in[static_cast<std::size_t>(top)];
      if (f->prio < t.prio || (f->prio == t.prio && f->prio == Priority::Golden &&
                               std::pair(f->flit.packet, f->flit.seq) < std::pair(t.flit.packet, t.flit.seq)))
        top = p;
    }
    const PacketId top_packet = top >= 0 ? in[static_cast<std::size_t>(top)]->flit.packet : PacketId{};
    const std::uint16_t top_seq = top >= 0 ? in[static_cast<std::size_t>(top)]->flit.seq : 0;
    int goldens = 0;
    for (const auto& f : in) goldens += (f && f->prio == Priority::Golden) ? 1 : 0;

    auto out = permute(in, rng_);

    std::array<int, kPorts> deflected{};
    int nd = 0;
    for (int p = 0; p < kPorts; ++p) {
      const auto& f = out[static_cast<std::size_t>(p)];
      if (!f || f->pref.preferred == p) continue;
      if (top >= 0 && f->flit.packet == top_packet && f->flit.seq == top_seq) ++metrics.silver_violations;
      if (f->prio == Priority::Golden && goldens == 1) ++metrics.golden_deflected_by_nongolden;
      // A flit that lost ejection here has to leave and come back; buffering
      // it would only re-inject it into the same router.
      if ((f->prio == Priority::Common || f->prio == Priority::Silver) && f->flit.dst.value != r &&
          !f->pref.is_productive(p))
        deflected[static_cast<std::size_t>(nd++)] = p;
    }

    // Buffer eject: one deflected non-golden flit leaves the pipeline
    // instead of taking its deflected port.
    if (minbd && !buffered_this_cycle && nd > 0 && static_cast<int>(rt.side.size()) < params_.side_buffer_depth) {
      const int p = deflected[static_cast<std::size_t>(rng_.below(static_cast<std::uint64_t>(nd)))];
      rt.side.emplace_back(out[static_cast<std::size_t>(p)]->flit, now);
      out[static_cast<std::size_t>(p)].reset();
      ++metrics.side_buffered;
    }

    for (int p = 0; p < kPorts; ++p) {
      auto& f = out[static_cast<std::size_t>(p)];
      if (f && f->pref.preferred != p) {
        ++f->flit.deflections;
        ++metrics.total_deflections;
      }
    }

    const auto hl = static_cast<std::size_t>(params_.hop_latency);
    for (int p = 0; p < kPorts; ++p) {
      auto& f = out[static_cast<std::size_t>(p)];
      if (!f) continue;
      const int nb = neighbor(r, p);
      // Off-mesh ports wrap straight back into this router's own input.
      const int dst_router = nb < 0 ? r : nb;
      const int dst_port = nb < 0 ? p : (p + 2) % kPorts;
      auto& link = pipes_[(static_cast<std::size_t>(dst_router) * kPorts + static_cast<std::size_t>(dst_port)) * hl + slot];
      if (link) throw SimulationError("link register collision", now, r);
      link = f->flit;
      ++metrics.flit_hops;
    }
  }

  int w_ = 0;
  int h_ = 0;
  MeshParams params_;
  Rng rng_;
  std::vector<Router> routers_;
  std::vector<std::optional<Flit>> pipes_;  // [(router * 4 + input port) * hop + slot]
  std::vector<std::array<std::optional<Flit>, kPorts>> inputs_;
  std::set<PacketId> held_;
  bool injection_enabled_ = true;
  std::uint64_t injected_ = 0;
  std::uint64_t ejected_ = 0;
};

/// A square or rectangular mesh. `mode` selects plain CHIPPER routers or
/// MinBD routers with side buffers.
inline MeshNetwork build_mesh(int width, int height, MeshMode mode, std::uint64_t arb_seed = 0, MeshParams params = {}) {
  params.mode = mode;
  return MeshNetwork(width, height, params, arb_seed);
}

}  // namespace defnoc
