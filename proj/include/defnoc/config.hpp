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

// Experiment configuration in a flat, sectioned key = value format:
//
//   # comment
//   [network]
//   topology = hird
//   nodes = 16
//
// Every key has a default. Unknown sections or keys are errors.

#pragma once

#include <bit>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "defnoc/ring_topology.hpp"
#include "defnoc/traffic.hpp"
#include "defnoc/types.hpp"

namespace defnoc {

enum class Topology : std::uint8_t { SingleRing, Hird, MeshChipper, MeshMinBD };

inline std::string_view topology_name(Topology t) {
  switch (t) {
    case Topology::SingleRing: return "single_ring";
    case Topology::Hird: return "hird";
    case Topology::MeshChipper: return "mesh_chipper";
    case Topology::MeshMinBD: return "mesh_minbd";
  }
  return "?";
}

inline Topology parse_topology(std::string_view s) {
  for (Topology t : {Topology::SingleRing, Topology::Hird, Topology::MeshChipper, Topology::MeshMinBD})
    if (topology_name(t) == s) return t;
  throw ConfigError("unknown topology '" + std::string(s) + "'");
}

inline bool is_mesh(Topology t) { return t == Topology::MeshChipper || t == Topology::MeshMinBD; }

struct ExperimentConfig {
  // [network]
  Topology topology = Topology::Hird;
  int nodes = 16;
  int lanes = 1;        // single ring
  int lane_ratio = 2;   // hird
  int bridges = 8;      // hird
  int local_hop = 2;    // hird
  int global_hop = 3;   // hird
  int hop_latency = 2;  // single ring and mesh links
  int fifo_up = 1;
  int fifo_down = 4;
  int side_buffer = 4;
  int c_threshold = 2;
  std::int64_t golden_epoch = 0;  // 0 = 8 * (width + height)
  bool strict_chipper = false;
  int reassembly_slots = 16;

  // [guarantees]
  bool injection = true;
  bool transfer = true;
  int injection_threshold = 100;
  int retry_threshold = 2;
  int throttle_latency = 1;

  // [traffic]
  Pattern pattern = Pattern::UniformRandom;
  double rate = 0.1;
  int packet_flits = 4;
  std::string trace;

  // [run]
  std::int64_t cycles = 100000;
  std::int64_t warmup = 10000;
  std::uint64_t seed = 1;
  double sat_threshold = 300.0;
  std::int64_t check_interval = 1024;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;

  /// Throws ConfigError naming the offending key.
  void validate() const {
    auto need = [](bool ok, const char* key, const std::string& why) {
      if (!ok) throw ConfigError(std::string(key) + ": " + why);
    };
    switch (topology) {
      case Topology::Hird:
        need(nodes == 16 || nodes == 64, "nodes", "hird supports 16 or 64 nodes, got " + std::to_string(nodes));
        need(bridges == 4 || bridges == 8 || bridges == 16, "bridges", "must be 4, 8 or 16");
        break;
      case Topology::SingleRing:
        need(nodes >= 2, "nodes", "single ring needs at least 2 nodes");
        break;
      case Topology::MeshChipper:
      case Topology::MeshMinBD:
        need(exact_sqrt(nodes) >= 2, "nodes", "mesh needs a square node count >= 4, got " + std::to_string(nodes));
        break;
    }
    need(lanes >= 1 && lanes <= kMaxLanes, "lanes", "must be in [1, " + std::to_string(kMaxLanes) + "]");
    need(lane_ratio >= 1 && lane_ratio * lane_ratio <= kMaxLanes, "lane_ratio", "must be in [1, 4]");
    need(local_hop >= 1, "local_hop", "must be >= 1");
    need(global_hop >= 1, "global_hop", "must be >= 1");
    need(hop_latency >= 1, "hop_latency", "must be >= 1");
    need(fifo_up >= 1, "fifo_up", "must be >= 1");
    need(fifo_down >= 1, "fifo_down", "must be >= 1");
    need(side_buffer >= 1, "side_buffer", "must be >= 1");
    need(c_threshold >= 0, "c_threshold", "must be >= 0");
    need(golden_epoch >= 0, "golden_epoch", "must be >= 0");
    need(reassembly_slots >= 1, "reassembly_slots", "must be >= 1");
    need(injection_threshold >= 1, "injection_threshold", "must be >= 1");
    need(retry_threshold >= 0, "retry_threshold", "must be >= 0");
    need(throttle_latency >= 0, "throttle_latency", "must be >= 0");
    need(rate >= 0.0 && rate <= 1.0, "rate", "must be in [0, 1]");
    need(packet_flits >= 1 && packet_flits <= 64, "packet_flits", "must be in [1, 64]");
    need(cycles >= 1, "cycles", "must be >= 1");
    need(warmup >= 0 && warmup < cycles, "warmup", "must be in [0, cycles)");
    need(sat_threshold > 0.0, "sat_threshold", "must be > 0");
    need(check_interval >= 1, "check_interval", "must be >= 1");
    if (pattern == Pattern::Trace) need(!trace.empty(), "trace", "required by the trace pattern");
    if (pattern == Pattern::AdversarialStarve)
      need(topology == Topology::Hird && nodes == 16, "pattern", "adversarial_starve needs hird with 16 nodes");
    if (pattern == Pattern::BitComplement)
      need(std::has_single_bit(static_cast<unsigned>(nodes)), "pattern", "bit_complement needs a power-of-two node count");
    if (pattern == Pattern::Transpose) need(exact_sqrt(nodes) >= 2, "pattern", "transpose needs a square node count");
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError(key + ": bad number '" + v + "'");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected on/off, got '" + v + "'");
}

inline std::string format_double(double d) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, r.ptr);
}

// One entry per key: how to read it into a config and how to print it.
struct KeyDef {
  const char* section;
  const char* key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <class T>
KeyDef int_key(const char* sec, const char* key, T ExperimentConfig::*m) {
  return {sec, key, [=](ExperimentConfig& c, const std::string& v) { c.*m = parse_number<T>(key, v); },
          [=](const ExperimentConfig& c) { return std::to_string(c.*m); }};
}
inline KeyDef bool_key(const char* sec, const char* key, bool ExperimentConfig::*m) {
  return {sec, key, [=](ExperimentConfig& c, const std::string& v) { c.*m = parse_bool(key, v); },
          [=](const ExperimentConfig& c) { return std::string(c.*m ? "on" : "off"); }};
}
inline KeyDef double_key(const char* sec, const char* key, double ExperimentConfig::*m) {
  return {sec, key, [=](ExperimentConfig& c, const std::string& v) { c.*m = parse_number<double>(key, v); },
          [=](const ExperimentConfig& c) { return format_double(c.*m); }};
}

inline const std::vector<KeyDef>& key_table() {
  using C = ExperimentConfig;
  static const std::vector<KeyDef> table = {
      {"network", "topology", [](C& c, const std::string& v) { c.topology = parse_topology(v); },
       [](const C& c) { return std::string(topology_name(c.topology)); }},
      int_key("network", "nodes", &C::nodes),
      int_key("network", "lanes", &C::lanes),
      int_key("network", "lane_ratio", &C::lane_ratio),
      int_key("network", "bridges", &C::bridges),
      int_key("network", "local_hop", &C::local_hop),
      int_key("network", "global_hop", &C::global_hop),
      int_key("network", "hop_latency", &C::hop_latency),
      int_key("network", "fifo_up", &C::fifo_up),
      int_key("network", "fifo_down", &C::fifo_down),
      int_key("network", "side_buffer", &C::side_buffer),
      int_key("network", "c_threshold", &C::c_threshold),
      int_key("network", "golden_epoch", &C::golden_epoch),
      bool_key("network", "strict_chipper", &C::strict_chipper),
      int_key("network", "reassembly_slots", &C::reassembly_slots),
      bool_key("guarantees", "injection", &C::injection),
      bool_key("guarantees", "transfer", &C::transfer),
      int_key("guarantees", "injection_threshold", &C::injection_threshold),
      int_key("guarantees", "retry_threshold", &C::retry_threshold),
      int_key("guarantees", "throttle_latency", &C::throttle_latency),
      {"traffic", "pattern", [](C& c, const std::string& v) { c.pattern = parse_pattern(v); },
       [](const C& c) { return std::string(pattern_name(c.pattern)); }},
      double_key("traffic", "rate", &C::rate),
      int_key("traffic", "packet_flits", &C::packet_flits),
      {"traffic", "trace", [](C& c, const std::string& v) { c.trace = v; }, [](const C& c) { return c.trace; }},
      int_key("run", "cycles", &C::cycles),
      int_key("run", "warmup", &C::warmup),
      int_key("run", "seed", &C::seed),
      double_key("run", "sat_threshold", &C::sat_threshold),
      int_key("run", "check_interval", &C::check_interval),
  };
  return table;
}

}  // namespace detail

/// Sets one key; `section` may be empty to match the key in any section.
inline void set_config_value(ExperimentConfig& c, std::string_view section, std::string_view key, const std::string& value) {
  for (const auto& k : detail::key_table()) {
    if (key != k.key || (!section.empty() && section != k.section)) continue;
    k.set(c, value);
    return;
  }
  const std::string where = section.empty() ? std::string(key) : std::string(section) + "." + std::string(key);
  throw ConfigError("unknown key '" + where + "'");
}

/// Parses the config text. Values are not cross-checked; call validate().
inline ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig c;
  std::string line;
  std::string section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ParseError("unterminated section header", lineno);
      section = detail::trim(std::string_view(t).substr(1, t.size() - 2));
      bool known = false;
      for (const auto& k : detail::key_table()) known = known || section == k.section;
      if (!known) throw ParseError("unknown section [" + section + "]", lineno);
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", lineno);
    if (section.empty()) throw ParseError("key outside any section", lineno);
    const std::string key = detail::trim(std::string_view(t).substr(0, eq));
    const std::string value = detail::trim(std::string_view(t).substr(eq + 1));
    try {
      set_config_value(c, section, key, value);
    } catch (const ConfigError& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  return c;
}

inline ExperimentConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

/// A relative trace path is taken relative to the config file.
inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  ExperimentConfig c = parse_config(in);
  if (!c.trace.empty() && std::filesystem::path(c.trace).is_relative())
    c.trace = (std::filesystem::path(path).parent_path() / c.trace).lexically_normal().string();
  return c;
}

/// Canonical text form: every key, fixed order. Parsing it gives back an
/// equal config.
inline std::string serialize_config(const ExperimentConfig& c) {
  std::string out;
  std::string section;
  for (const auto& k : detail::key_table()) {
    if (section != k.section) {
      if (!section.empty()) out += '\n';
      section = k.section;
      out += "[" + section + "]\n";
    }
    out += std::string(k.key) + " = " + k.get(c) + "\n";
  }
  return out;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Identifies a configuration independent of its injection rate, so every
/// point of one sweep shares a hash.
inline std::uint64_t config_hash(ExperimentConfig c) {
  c.rate = 0.0;
  return fnv1a(serialize_config(c));
}

}  // namespace defnoc
