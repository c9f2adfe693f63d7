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

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace defnoc {

using Cycle = std::int64_t;
inline constexpr Cycle kNoCycle = -1;

struct NodeId {
  std::int32_t value = 0;

  constexpr NodeId() = default;
  constexpr explicit NodeId(std::int32_t v) : value(v) {}
  constexpr std::size_t index() const { return static_cast<std::size_t>(value); }
  friend constexpr auto operator<=>(NodeId, NodeId) = default;
};

/// Globally unique while live: (source node, per-source transaction number).
struct PacketId {
  NodeId src;
  std::uint32_t txn = 0;

  friend constexpr auto operator<=>(const PacketId&, const PacketId&) = default;
};

struct PacketIdHash {
  std::size_t operator()(const PacketId& p) const noexcept {
    return std::hash<std::uint64_t>{}(
        (static_cast<std::uint64_t>(static_cast<std::uint32_t>(p.src.value)) << 32) | p.txn);
  }
};

struct Flit {
  PacketId packet;
  std::uint16_t seq = 0;
  std::uint16_t num_flits = 1;
  NodeId dst;
  Cycle enqueue_cycle = 0;
  Cycle inject_cycle = kNoCycle;
  std::uint32_t deflections = 0;
  std::uint32_t ring_retries = 0;

  constexpr NodeId src() const { return packet.src; }
  constexpr bool same_flit(const Flit& o) const { return packet == o.packet && seq == o.seq; }
};

/// A packet waiting in a source injection queue. Flits are materialized one
/// at a time as they enter the network.
struct QueuedPacket {
  PacketId id;
  NodeId dst;
  std::uint16_t num_flits = 1;
  std::uint16_t next_seq = 0;
  Cycle enqueue_cycle = 0;

  Flit make_flit() const {
    Flit f;
    f.packet = id;
    f.seq = next_seq;
    f.num_flits = num_flits;
    f.dst = dst;
    f.enqueue_cycle = enqueue_cycle;
    return f;
  }
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Fatal: the simulated hardware broke one of its own invariants.
class SimulationError : public std::runtime_error {
 public:
  SimulationError(const std::string& what, Cycle cycle, int router = -1)
      : std::runtime_error("cycle " + std::to_string(cycle) +
                           (router >= 0 ? " router " + std::to_string(router) : std::string()) +
                           ": " + what),
        cycle_(cycle),
        router_(router) {}
  Cycle cycle() const noexcept { return cycle_; }
  int router() const noexcept { return router_; }

 private:
  Cycle cycle_;
  int router_;
};

}  // namespace defnoc
