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

// Static structure of ring-based networks: single rings and hierarchical
// rings joined by bridge routers. Nothing in here changes while a
// simulation runs.

#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "defnoc/types.hpp"

namespace defnoc {

enum class Dir : std::uint8_t { CW = 0, CCW = 1 };

inline constexpr int kDirs = 2;

/// Shorter way around a ring of `ring_size` stops; an exact tie goes CW.
constexpr Dir choose_direction(int src_pos, int dst_pos, int ring_size) {
  const int cw = ((dst_pos - src_pos) % ring_size + ring_size) % ring_size;
  const int ccw = (ring_size - cw) % ring_size;
  return cw <= ccw ? Dir::CW : Dir::CCW;
}

/// Node address, one digit per hierarchy level, most-global first.
using Address = std::vector<int>;

/// A ring is named by the address prefix shared by every router on it. The
/// root ring has an empty prefix; level equals prefix length.
struct RingId {
  std::vector<int> prefix;

  int level() const { return static_cast<int>(prefix.size()); }
  friend bool operator==(const RingId&, const RingId&) = default;
};

enum class RouteAction : std::uint8_t { Eject, StayOnRing, TransferUp, TransferDown };

inline bool has_prefix(const Address& addr, const std::vector<int>& prefix) {
  return prefix.size() <= addr.size() && std::equal(prefix.begin(), prefix.end(), addr.begin());
}

/// Hierarchical routing: climb until the ring's prefix covers the
/// destination, then descend toward it. `here` is the address of the node
/// router currently holding the flit, if any.
inline RouteAction route_decision(const Address& dst, const RingId& ring,
                                  const std::optional<Address>& here = std::nullopt) {
  if (!has_prefix(dst, ring.prefix)) return RouteAction::TransferUp;
  if (ring.prefix.size() + 1 < dst.size()) return RouteAction::TransferDown;
  if (here && *here == dst) return RouteAction::Eject;
  return RouteAction::StayOnRing;
}

enum class StopKind : std::uint8_t { Node, BridgeChild, BridgeParent };

struct Stop {
  StopKind kind = StopKind::Node;
  int index = 0;  // node index, or bridge index for the two bridge kinds
};

inline constexpr int kMaxLanes = 16;

struct RingDesc {
  RingId id;
  int lanes = 1;
  int hop_latency = 2;
  std::vector<Stop> stops;

  int num_stops() const { return static_cast<int>(stops.size()); }
  /// Round-trip latency in cycles; also the number of registers per lane per direction.
  int positions() const { return num_stops() * hop_latency; }
};

struct BridgeDesc {
  int child_ring = 0;  // more local
  int child_stop = 0;
  int parent_ring = 0;  // more global
  int parent_stop = 0;
};

struct RingTopology {
  std::string name;
  std::vector<RingDesc> rings;
  std::vector<BridgeDesc> bridges;
  std::vector<Address> addresses;              // per node
  std::vector<std::pair<int, int>> node_stop;  // per node: (ring, stop)

  int num_nodes() const { return static_cast<int>(addresses.size()); }
  int num_rings() const { return static_cast<int>(rings.size()); }
  int num_bridges() const { return static_cast<int>(bridges.size()); }

  /// Rings that have node routers on them, with their nodes in stop order.
  std::vector<std::vector<NodeId>> node_rings() const {
    std::vector<std::vector<NodeId>> out;
    for (const auto& r : rings) {
      std::vector<NodeId> nodes;
      for (const auto& s : r.stops)
        if (s.kind == StopKind::Node) nodes.emplace_back(s.index);
      if (!nodes.empty()) out.push_back(std::move(nodes));
    }
    return out;
  }

  /// Tree distance (in ring-to-ring hops) between every pair of rings.
  std::vector<std::vector<int>> ring_distances() const {
    const int n = num_rings();
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (const auto& b : bridges) {
      adj[static_cast<std::size_t>(b.child_ring)].push_back(b.parent_ring);
      adj[static_cast<std::size_t>(b.parent_ring)].push_back(b.child_ring);
    }
    std::vector<std::vector<int>> dist(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(n), -1));
    for (int s = 0; s < n; ++s) {
      auto& d = dist[static_cast<std::size_t>(s)];
      std::queue<int> q;
      d[static_cast<std::size_t>(s)] = 0;
      q.push(s);
      while (!q.empty()) {
        const int u = q.front();
        q.pop();
        for (int v : adj[static_cast<std::size_t>(u)])
          if (d[static_cast<std::size_t>(v)] < 0) {
            d[static_cast<std::size_t>(v)] = d[static_cast<std::size_t>(u)] + 1;
            q.push(v);
          }
      }
    }
    return dist;
  }
};

/// One bidirectional ring of `n` node routers; `lanes` parallel flit-wide
/// rings model a wider datapath.
inline RingTopology single_ring_topology(int n, int lanes = 1, int hop_latency = 2) {
  if (n < 2) throw ConfigError("single ring needs at least 2 nodes");
  if (lanes < 1 || lanes > kMaxLanes) throw ConfigError("lanes must be in [1, " + std::to_string(kMaxLanes) + "]");
  if (hop_latency < 1) throw ConfigError("hop latency must be >= 1");
  RingTopology t;
  t.name = "single_ring";
  RingDesc ring;
  ring.lanes = lanes;
  ring.hop_latency = hop_latency;
  for (int i = 0; i < n; ++i) {
    ring.stops.push_back({StopKind::Node, i});
    t.addresses.push_back({i});
    t.node_stop.emplace_back(0, i);
  }
  t.rings.push_back(std::move(ring));
  return t;
}

struct HirdShape {
  int nodes = 16;      // 16 (two levels) or 64 (three levels)
  int bridges = 8;     // bridges joining the four local rings of a 16-node group: 4, 8 or 16
  int lane_ratio = 2;  // lanes of a ring relative to the level below it
  int local_hop = 2;   // cycles per hop on local rings
  int global_hop = 3;  // cycles per hop on every more-global ring
};

namespace detail {

inline int add_ring(RingTopology& t, RingId id, int lanes, int hop) {
  if (lanes > kMaxLanes) throw ConfigError("lane_ratio gives more than " + std::to_string(kMaxLanes) + " lanes on a ring");
  RingDesc r;
  r.id = std::move(id);
  r.lanes = lanes;
  r.hop_latency = hop;
  t.rings.push_back(std::move(r));
  return t.num_rings() - 1;
}

inline int add_bridge_child_side(RingTopology& t, int child_ring) {
  BridgeDesc b;
  b.child_ring = child_ring;
  b.child_stop = t.rings[static_cast<std::size_t>(child_ring)].num_stops();
  t.bridges.push_back(b);
  const int idx = t.num_bridges() - 1;
  t.rings[static_cast<std::size_t>(child_ring)].stops.push_back({StopKind::BridgeChild, idx});
  return idx;
}

inline void attach_parent_side(RingTopology& t, int bridge, int parent_ring) {
  auto& b = t.bridges[static_cast<std::size_t>(bridge)];
  auto& ring = t.rings[static_cast<std::size_t>(parent_ring)];
  b.parent_ring = parent_ring;
  b.parent_stop = ring.num_stops();
  ring.stops.push_back({StopKind::BridgeParent, bridge});
}

// Four local rings of four nodes under one parent ring. Bridges of a local
// ring are spread evenly between its nodes; the parent ring visits each
// local ring's bridges in local-ring order. `upward` bridges (toward the next
// level) get their child side on the parent ring, after local rings 1 and 3.
inline void build_group(RingTopology& t, const std::vector<int>& prefix, int parent_ring,
                        int bridges_per_local, int first_node, int local_hop,
                        const std::vector<int>& upward) {
  for (int l = 0; l < 4; ++l) {
    auto lp = prefix;
    lp.push_back(l);
    const int ring = add_ring(t, RingId{lp}, 1, local_hop);
    std::vector<int> local_bridges;
    for (int p = 0; p < 4; ++p) {
      const int node = first_node + l * 4 + p;
      auto addr = lp;
      addr.push_back(p);
      t.addresses[static_cast<std::size_t>(node)] = addr;
      t.node_stop[static_cast<std::size_t>(node)] = {ring, t.rings[static_cast<std::size_t>(ring)].num_stops()};
      t.rings[static_cast<std::size_t>(ring)].stops.push_back({StopKind::Node, node});
      if (((p + 1) * bridges_per_local) % 4 == 0) local_bridges.push_back(add_bridge_child_side(t, ring));
    }
    for (int b : local_bridges) attach_parent_side(t, b, parent_ring);
    if (!upward.empty() && (l == 1 || l == 3)) {
      const int b = upward[static_cast<std::size_t>(l / 2)];
      auto& pr = t.rings[static_cast<std::size_t>(parent_ring)];
      t.bridges[static_cast<std::size_t>(b)].child_ring = parent_ring;
      t.bridges[static_cast<std::size_t>(b)].child_stop = pr.num_stops();
      pr.stops.push_back({StopKind::BridgeChild, b});
    }
  }
}

}  // namespace detail

/// Hierarchical ring topology. 16 nodes: four 4-node local rings under one
/// global ring. 64 nodes: four such groups whose global rings hang off a
/// third-level ring through two bridges each; lane counts grow by
/// `lane_ratio` per level.
inline RingTopology hird_topology(const HirdShape& shape) {
  if (shape.nodes != 16 && shape.nodes != 64)
    throw ConfigError("hird supports 16 or 64 nodes, got " + std::to_string(shape.nodes));
  if (shape.bridges != 4 && shape.bridges != 8 && shape.bridges != 16)
    throw ConfigError("hird bridges must be 4, 8 or 16, got " + std::to_string(shape.bridges));
  if (shape.lane_ratio < 1) throw ConfigError("lane_ratio must be >= 1");
  if (shape.local_hop < 1 || shape.global_hop < 1) throw ConfigError("hop latency must be >= 1");
  const int per_local = shape.bridges / 4;

  RingTopology t;
  t.name = "hird";
  t.addresses.resize(static_cast<std::size_t>(shape.nodes));
  t.node_stop.resize(static_cast<std::size_t>(shape.nodes));
  if (shape.nodes == 16) {
    const int global = detail::add_ring(t, RingId{{}}, shape.lane_ratio, shape.global_hop);
    detail::build_group(t, {}, global, per_local, 0, shape.local_hop, {});
    return t;
  }
  const int top = detail::add_ring(t, RingId{{}}, shape.lane_ratio * shape.lane_ratio, shape.global_hop);
  std::vector<int> top_order;
  for (int q = 0; q < 4; ++q) {
    const int mid = detail::add_ring(t, RingId{{q}}, shape.lane_ratio, shape.global_hop);
    std::vector<int> upward;
    for (int i = 0; i < 2; ++i) {
      t.bridges.emplace_back();
      upward.push_back(t.num_bridges() - 1);
    }
    detail::build_group(t, {q}, mid, per_local, q * 16, shape.local_hop, upward);
    top_order.insert(top_order.end(), upward.begin(), upward.end());
  }
  for (int b : top_order) detail::attach_parent_side(t, b, top);
  return t;
}

}  // namespace defnoc
