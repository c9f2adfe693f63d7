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

#include <bit>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "defnoc/ring_topology.hpp"
#include "defnoc/rng.hpp"
#include "defnoc/types.hpp"

namespace defnoc {

enum class Pattern : std::uint8_t { UniformRandom, BitComplement, Transpose, AdversarialStarve, Trace };

inline std::string_view pattern_name(Pattern p) {
  switch (p) {
    case Pattern::UniformRandom: return "uniform_random";
    case Pattern::BitComplement: return "bit_complement";
    case Pattern::Transpose: return "transpose";
    case Pattern::AdversarialStarve: return "adversarial_starve";
    case Pattern::Trace: return "trace";
  }
  return "?";
}

inline Pattern parse_pattern(std::string_view s) {
  for (Pattern p : {Pattern::UniformRandom, Pattern::BitComplement, Pattern::Transpose, Pattern::AdversarialStarve, Pattern::Trace})
    if (pattern_name(p) == s) return p;
  throw ConfigError("unknown traffic pattern '" + std::string(s) + "'");
}

struct InjectionRequest {
  Cycle cycle = 0;
  NodeId src;
  NodeId dst;
  int num_flits = 1;

  friend bool operator==(const InjectionRequest&, const InjectionRequest&) = default;
};

inline NodeId dest_uniform_random(Rng& rng, NodeId src, int n) {
  if (n < 2) throw ConfigError("uniform_random needs at least 2 nodes");
  auto d = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(n - 1)));
  if (d >= src.value) ++d;
  return NodeId(d);
}

inline NodeId dest_bit_complement(NodeId src, int n) {
  if (n < 2 || !std::has_single_bit(static_cast<unsigned>(n)))
    throw ConfigError("bit_complement needs a power-of-two node count, got " + std::to_string(n));
  return NodeId(~src.value & (n - 1));
}

inline int exact_sqrt(int n) {
  int k = 0;
  while ((k + 1) * (k + 1) <= n) ++k;
  return k * k == n ? k : -1;
}

/// Swaps grid coordinates (x = src mod k, y = src div k). Diagonal nodes
/// would send to themselves; they use bit complement instead.
inline NodeId dest_transpose(NodeId src, int n) {
  const int k = exact_sqrt(n);
  if (k < 2) throw ConfigError("transpose needs a square node count, got " + std::to_string(n));
  const int x = src.value % k;
  const int y = src.value / k;
  if (x == y) return dest_bit_complement(src, n);
  return NodeId(x * k + y);
}

/// Parses "cycle src dst num_flits" lines; '#' starts a comment.
inline std::vector<InjectionRequest> parse_trace(std::istream& in, int num_nodes = -1) {
  std::vector<InjectionRequest> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    long long cycle = 0, src = 0, dst = 0, flits = 0;
    if (!(ls >> cycle)) {
      std::string rest;
      std::istringstream probe(line);
      if (probe >> rest) throw ParseError("expected 'cycle src dst num_flits'", lineno);
      continue;
    }
    if (!(ls >> src >> dst >> flits)) throw ParseError("expected 'cycle src dst num_flits'", lineno);
    std::string extra;
    if (ls >> extra) throw ParseError("trailing text '" + extra + "'", lineno);
    if (cycle < 0 || src < 0 || dst < 0) throw ParseError("negative field", lineno);
    if (flits < 1 || flits > 64) throw ParseError("num_flits must be in [1, 64]", lineno);
    if (src == dst) throw ParseError("src equals dst", lineno);
    if (num_nodes > 0 && (src >= num_nodes || dst >= num_nodes)) throw ParseError("node id out of range", lineno);
    if (!out.empty() && cycle < out.back().cycle) throw ParseError("cycles must be non-decreasing", lineno);
    out.push_back({cycle, NodeId(static_cast<std::int32_t>(src)), NodeId(static_cast<std::int32_t>(dst)), static_cast<int>(flits)});
  }
  return out;
}

inline std::vector<InjectionRequest> load_trace(const std::string& path, int num_nodes = -1) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trace file '" + path + "'");
  return parse_trace(in, num_nodes);
}

/// Rings A, B, C are three local rings whose bridges sit next to each other
/// on the global ring, in that order; D is the remaining local ring.
struct AdversarialRings {
  std::vector<NodeId> a, b, c, d;
};

inline AdversarialRings adversarial_rings(const RingTopology& t) {
  if (t.name != "hird" || t.num_nodes() != 16)
    throw ConfigError("adversarial_starve needs the 16-node hierarchical ring network");
  auto rings = t.node_rings();
  if (rings.size() != 4) throw ConfigError("adversarial_starve needs four local rings");
  return {rings[0], rings[1], rings[2], rings[3]};
}

/// Continuous pressure: A sends to C, C to A, B to D, each node round-robin
/// over its target ring, enqueuing whenever its own queue is empty.
class AdversarialGenerator {
 public:
  AdversarialGenerator() = default;
  AdversarialGenerator(AdversarialRings rings, int num_nodes) : rings_(std::move(rings)) {
    target_.assign(static_cast<std::size_t>(num_nodes), Target::None);
    next_.assign(static_cast<std::size_t>(num_nodes), 0);
    for (NodeId n : rings_.a) target_[n.index()] = Target::C;
    for (NodeId n : rings_.c) target_[n.index()] = Target::A;
    for (NodeId n : rings_.b) target_[n.index()] = Target::D;
  }

  bool is_source(NodeId n) const { return target_[n.index()] != Target::None; }

  NodeId next_destination(NodeId src) {
    const std::vector<NodeId>* ring = nullptr;
    switch (target_[src.index()]) {
      case Target::A: ring = &rings_.a; break;
      case Target::C: ring = &rings_.c; break;
      case Target::D: ring = &rings_.d; break;
      case Target::None: throw std::logic_error("adversarial: node is not a source");
    }
    auto& k = next_[src.index()];
    const NodeId d = (*ring)[k];
    k = (k + 1) % ring->size();
    return d;
  }

  const AdversarialRings& rings() const { return rings_; }

 private:
  enum class Target : std::uint8_t { None, A, C, D };

  AdversarialRings rings_;
  std::vector<Target> target_;
  std::vector<std::size_t> next_;
};

struct TrafficSpec {
  Pattern pattern = Pattern::UniformRandom;
  double rate = 0.1;  // offered flits/node/cycle
  int packet_flits = 4;
  std::string trace_path;
};

/// Per-cycle packet source for one simulation.
class TrafficGenerator {
 public:
  TrafficGenerator() = default;
  TrafficGenerator(TrafficSpec spec, int num_nodes, std::uint64_t seed, const RingTopology* ring_topo = nullptr)
      : spec_(std::move(spec)), n_(num_nodes), rng_(seed) {
    if (spec_.rate < 0.0 || spec_.rate > 1.0) throw ConfigError("rate must be in [0, 1]");
    if (spec_.packet_flits < 1 || spec_.packet_flits > 64) throw ConfigError("packet_flits must be in [1, 64]");
    p_ = spec_.rate / spec_.packet_flits;
    switch (spec_.pattern) {
      case Pattern::BitComplement: (void)dest_bit_complement(NodeId(0), n_); break;
      case Pattern::Transpose: (void)dest_transpose(NodeId(0), n_); break;
      case Pattern::AdversarialStarve:
        if (ring_topo == nullptr) throw ConfigError("adversarial_starve needs the 16-node hierarchical ring network");
        adversarial_ = AdversarialGenerator(adversarial_rings(*ring_topo), n_);
        break;
      case Pattern::Trace: trace_ = load_trace(spec_.trace_path, n_); break;
      case Pattern::UniformRandom: break;
    }
  }

  /// For tests: replay an in-memory trace.
  static TrafficGenerator from_requests(std::vector<InjectionRequest> reqs, int num_nodes) {
    TrafficGenerator g;
    g.spec_.pattern = Pattern::Trace;
    g.n_ = num_nodes;
    g.trace_ = std::move(reqs);
    return g;
  }

  const TrafficSpec& spec() const { return spec_; }

  /// Calls emit(src, dst, num_flits) for every packet created at `now`.
  /// `queue_empty(src)` feeds the back-pressured adversarial pattern.
  template <class Emit, class QueueEmpty>
  void generate(Cycle now, Emit&& emit, QueueEmpty&& queue_empty) {
    switch (spec_.pattern) {
      case Pattern::Trace:
        while (trace_pos_ < trace_.size() && trace_[trace_pos_].cycle <= now) {
          const auto& r = trace_[trace_pos_++];
          if (r.cycle == now) emit(r.src, r.dst, r.num_flits);
        }
        return;
      case Pattern::AdversarialStarve:
        for (int i = 0; i < n_; ++i) {
          const NodeId s(i);
          if (adversarial_.is_source(s) && queue_empty(s)) emit(s, adversarial_.next_destination(s), spec_.packet_flits);
        }
        return;
      default:
        break;
    }
    if (p_ <= 0.0) return;
    for (int i = 0; i < n_; ++i) {
      if (rng_.uniform() >= p_) continue;
      const NodeId s(i);
      NodeId d;
      switch (spec_.pattern) {
        case Pattern::UniformRandom: d = dest_uniform_random(rng_, s, n_); break;
        case Pattern::BitComplement: d = dest_bit_complement(s, n_); break;
        default: d = dest_transpose(s, n_); break;
      }
      emit(s, d, spec_.packet_flits);
    }
  }

 private:
  TrafficSpec spec_;
  int n_ = 0;
  double p_ = 0.0;
  Rng rng_;
  AdversarialGenerator adversarial_;
  std::vector<InjectionRequest> trace_;
  std::size_t trace_pos_ = 0;
};

}  // namespace defnoc
