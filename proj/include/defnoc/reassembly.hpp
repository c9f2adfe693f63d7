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

// Retransmit-Once reassembly. Every arriving flit is consumed in its arrival
// cycle: stored into a per-packet slot, or dropped when the receiver has no
// slot for a new packet. A drop leaves a retransmit request that is granted,
// oldest first, as soon as a slot frees; the slot is then held for that
// packet and its sender re-sends the whole packet once.

#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "defnoc/metrics.hpp"
#include "defnoc/types.hpp"

namespace defnoc {

enum class ReceiveOutcome : std::uint8_t { Delivered, Stored, Dropped, Duplicate };

struct RetransmitGrant {
  PacketId packet;
  NodeId receiver;
};

class ReassemblyNode {
 public:
  struct Slot {
    PacketId packet;
    std::uint64_t arrived = 0;  // bit per seq
    std::uint16_t num_flits = 0;
    bool reserved_only = false;  // granted to a retransmission, nothing arrived yet
  };

  explicit ReassemblyNode(int capacity = 16) : capacity_(capacity) {
    if (capacity < 1) throw ConfigError("reassembly capacity must be >= 1");
  }

  int capacity() const { return capacity_; }
  int used() const { return static_cast<int>(slots_.size()); }
  bool pending(const PacketId& p) const { return pending_set_.count(p) != 0; }
  std::size_t pending_count() const { return pending_.size(); }

  /// `already_delivered` marks a late copy of a packet this node has already
  /// handed up. `accepted` is set when the flit fills a new sequence bit.
  ReceiveOutcome receive(const Flit& f, bool already_delivered, bool& accepted) {
    accepted = false;
    if (f.num_flits > 64 || f.seq >= f.num_flits) throw std::invalid_argument("reassembly: bad flit sequence");
    if (already_delivered) return ReceiveOutcome::Duplicate;
    if (pending(f.packet)) return ReceiveOutcome::Dropped;
    Slot* s = find(f.packet);
    if (s == nullptr) {
      if (used() >= capacity_) {
        pending_.push_back(f.packet);
        pending_set_.insert(f.packet);
        return ReceiveOutcome::Dropped;
      }
      slots_.push_back(Slot{f.packet, 0, f.num_flits, false});
      s = &slots_.back();
    }
    s->reserved_only = false;
    s->num_flits = f.num_flits;
    const std::uint64_t bit = std::uint64_t{1} << f.seq;
    if (s->arrived & bit) return ReceiveOutcome::Duplicate;
    s->arrived |= bit;
    accepted = true;
    const std::uint64_t full = f.num_flits == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << f.num_flits) - 1;
    if (s->arrived != full) return ReceiveOutcome::Stored;
    slots_.erase(slots_.begin() + (s - slots_.data()));
    return ReceiveOutcome::Delivered;
  }

  /// Hands a free slot to the oldest pending retransmit request.
  std::optional<PacketId> grant() {
    if (pending_.empty() || used() >= capacity_) return std::nullopt;
    const PacketId p = pending_.front();
    pending_.pop_front();
    pending_set_.erase(p);
    slots_.push_back(Slot{p, 0, 0, true});
    return p;
  }

 private:
  Slot* find(const PacketId& p) {
    for (auto& s : slots_)
      if (s.packet == p) return &s;
    return nullptr;
  }

  int capacity_;
  std::vector<Slot> slots_;
  std::deque<PacketId> pending_;
  std::unordered_set<PacketId, PacketIdHash> pending_set_;
};

/// Receivers for every node plus the senders' retransmit store.
class Reassembly {
 public:
  Reassembly() = default;
  Reassembly(int num_nodes, int capacity) : nodes_(static_cast<std::size_t>(num_nodes), ReassemblyNode(capacity)) {}

  /// Sender side: keep a copy until delivery is confirmed.
  void retain(const QueuedPacket& p) {
    QueuedPacket copy = p;
    copy.next_seq = 0;
    retained_.emplace(p.id, Retained{copy, 1, 0, false});
  }

  ReceiveOutcome receive_flit(NodeId at, const Flit& f, Cycle now, Metrics& metrics, std::vector<QueuedPacket>& resend) {
    if (f.dst != at) throw SimulationError("flit ejected at the wrong node", now, at.value);
    auto it = retained_.find(f.packet);
    if (it == retained_.end()) throw SimulationError("flit of an unknown or finished packet", now, at.value);
    Retained& r = it->second;
    ++r.arrivals;
    bool accepted = false;
    const ReceiveOutcome out = nodes_[at.index()].receive(f, r.delivered, accepted);
    if (accepted) metrics.on_flit_accepted(f, now);
    switch (out) {
      case ReceiveOutcome::Dropped: metrics.on_flit_dropped(); break;
      case ReceiveOutcome::Duplicate: metrics.on_flit_duplicate(); break;
      case ReceiveOutcome::Delivered:
        r.delivered = true;
        ++delivered_;
        metrics.on_packet_delivered(r.packet.enqueue_cycle, now);
        while (auto g = nodes_[at.index()].grant()) request_retransmit(*g, now, metrics, resend);
        break;
      case ReceiveOutcome::Stored: break;
    }
    // A grant may also follow a drop if a slot happens to be free already.
    if (out == ReceiveOutcome::Dropped)
      while (auto g = nodes_[at.index()].grant()) request_retransmit(*g, now, metrics, resend);
    if (r.delivered && r.arrivals == static_cast<std::uint64_t>(r.copies) * r.packet.num_flits) retained_.erase(it);
    return out;
  }

  const ReassemblyNode& node(NodeId n) const { return nodes_[n.index()]; }
  std::uint64_t delivered() const { return delivered_; }

  /// Packets not yet delivered, in no particular order.
  std::vector<QueuedPacket> undelivered() const {
    std::vector<QueuedPacket> out;
    for (const auto& [id, r] : retained_)
      if (!r.delivered) out.push_back(r.packet);
    return out;
  }
  std::size_t retained_count() const { return retained_.size(); }

 private:
  struct Retained {
    QueuedPacket packet;
    int copies = 1;
    std::uint64_t arrivals = 0;
    bool delivered = false;
  };

  void request_retransmit(const PacketId& p, Cycle now, Metrics& metrics, std::vector<QueuedPacket>& resend) {
    auto it = retained_.find(p);
    if (it == retained_.end()) throw SimulationError("retransmit requested for a packet the sender no longer holds", now, p.src.value);
    ++it->second.copies;
    resend.push_back(it->second.packet);
    metrics.on_retransmit();
  }

  std::vector<ReassemblyNode> nodes_;
  std::unordered_map<PacketId, Retained, PacketIdHash> retained_;
  std::uint64_t delivered_ = 0;
};

}  // namespace defnoc
