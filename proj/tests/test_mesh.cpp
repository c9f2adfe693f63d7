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

#include <gtest/gtest.h>

#include <cstdlib>
#include <map>

#include "defnoc/mesh_network.hpp"
#include "defnoc/simulator.hpp"

namespace defnoc {
namespace {

RoutedFlit routed(int src, std::uint32_t txn, Coord at, Coord dst, Priority prio = Priority::Common) {
  RoutedFlit f;
  f.flit.packet = PacketId{NodeId(src), txn};
  f.prio = prio;
  f.pref = preferred_ports(at, dst);
  return f;
}

TEST(MeshRouting, PreferredPorts) {
  const auto p = preferred_ports({0, 0}, {2, 1});
  EXPECT_EQ(p.preferred, kEast);
  EXPECT_TRUE(p.is_productive(kEast));
  EXPECT_TRUE(p.is_productive(kSouth));
  EXPECT_FALSE(p.is_productive(kNorth));
  EXPECT_EQ(preferred_ports({0, 0}, {1, 3}).preferred, kSouth);
  EXPECT_EQ(preferred_ports({2, 2}, {1, 1}).preferred, kWest);  // tie goes to X
  EXPECT_EQ(preferred_ports({2, 2}, {2, 0}).preferred, kNorth);
  EXPECT_EQ(preferred_ports({1, 1}, {1, 1}).preferred, -1);
}

TEST(Arbiter, SingleFlitGetsItsWish) {
  Rng rng(1);
  const RoutedFlit a = routed(0, 0, {0, 0}, {1, 0});
  EXPECT_EQ(arbiter_block(&a, 1, nullptr, -1, rng), 1);
  EXPECT_EQ(arbiter_block(nullptr, -1, &a, 0, rng), 0);
  EXPECT_EQ(arbiter_block(nullptr, -1, nullptr, -1, rng), -1);
}

TEST(Arbiter, GoldenBeatsSilverBeatsCommon) {
  Rng rng(1);
  const RoutedFlit g = routed(0, 0, {0, 0}, {1, 0}, Priority::Golden);
  const RoutedFlit s = routed(1, 0, {0, 0}, {1, 0}, Priority::Silver);
  const RoutedFlit c = routed(2, 0, {0, 0}, {1, 0});
  for (int i = 0; i < 50; ++i) {
    EXPECT_EQ(arbiter_block(&c, 0, &g, 0, rng), 1);  // a = common loses output 0
    EXPECT_EQ(arbiter_block(&s, 1, &c, 1, rng), 1);
    EXPECT_EQ(arbiter_block(&g, 0, &s, 0, rng), 0);
  }
}

TEST(Arbiter, GoldenTieGoesToLowerId) {
  Rng rng(1);
  const RoutedFlit lo = routed(0, 0, {0, 0}, {1, 0}, Priority::Golden);
  RoutedFlit hi = lo;
  hi.flit.seq = 1;
  EXPECT_EQ(arbiter_block(&hi, 0, &lo, 0, rng), 1);
}

TEST(Permute, LoneFlitReachesPreferredPortFromAnyInput) {
  Rng rng(3);
  const Coord at{1, 1};
  const std::array<Coord, 4> dsts{Coord{1, 0}, Coord{2, 1}, Coord{1, 2}, Coord{0, 1}};  // N E S W
  for (int in = 0; in < kPorts; ++in)
    for (int want = 0; want < kPorts; ++want) {
      std::array<std::optional<RoutedFlit>, kPorts> v;
      v[static_cast<std::size_t>(in)] = routed(0, 0, at, dsts[static_cast<std::size_t>(want)]);
      const auto out = permute(v, rng);
      EXPECT_TRUE(out[static_cast<std::size_t>(want)].has_value()) << in << " " << want;
    }
}

TEST(Permute, ConservesFlitsAndTopPriorityWins) {
  Rng rng(5);
  for (int trial = 0; trial < 2000; ++trial) {
    std::array<std::optional<RoutedFlit>, kPorts> v;
    int n = 0;
    int golden_port = -1;
    for (int p = 0; p < kPorts; ++p) {
      if (rng.coin()) continue;
      const Coord dst{static_cast<int>(rng.below(4)), static_cast<int>(rng.below(4))};
      v[static_cast<std::size_t>(p)] = routed(p, static_cast<std::uint32_t>(trial), {1, 1}, dst);
      if (golden_port < 0 && v[static_cast<std::size_t>(p)]->pref.preferred >= 0) {
        v[static_cast<std::size_t>(p)]->prio = Priority::Golden;
        golden_port = p;
      }
      ++n;
    }
    const auto out = permute(v, rng);
    int m = 0;
    for (const auto& f : out) m += f ? 1 : 0;
    ASSERT_EQ(m, n);
    if (golden_port >= 0) {
      const int want = v[static_cast<std::size_t>(golden_port)]->pref.preferred;
      ASSERT_TRUE(out[static_cast<std::size_t>(want)].has_value());
      EXPECT_EQ(out[static_cast<std::size_t>(want)]->prio, Priority::Golden);
    }
  }
}

TEST(Silver, NeverPicksGoldenOrArrived) {
  Rng rng(2);
  std::array<std::optional<RoutedFlit>, kPorts> v;
  v[0] = routed(0, 0, {1, 1}, {2, 1}, Priority::Golden);
  v[1] = routed(1, 0, {1, 1}, {1, 1});
  EXPECT_EQ(select_silver(v, rng), -1);
  v[3] = routed(3, 0, {1, 1}, {0, 1});
  for (int i = 0; i < 20; ++i) EXPECT_EQ(select_silver(v, rng), 3);
}

TEST(Golden, IdRotation) {
  EXPECT_EQ(golden_packet_id(0, 64, 16), (PacketId{NodeId(0), 0}));
  EXPECT_EQ(golden_packet_id(63, 64, 16), (PacketId{NodeId(0), 0}));
  EXPECT_EQ(golden_packet_id(64, 64, 16), (PacketId{NodeId(0), 1}));
  EXPECT_EQ(golden_packet_id(64 * 16, 64, 16), (PacketId{NodeId(1), 0}));
  EXPECT_EQ(golden_packet_id(64 * 256, 64, 16), (PacketId{NodeId(0), 0}));
  EXPECT_TRUE(is_golden(PacketId{NodeId(0), 17}, 64, 64, 16));
  EXPECT_FALSE(is_golden(PacketId{NodeId(1), 1}, 64, 64, 16));
}

Cycle lone_mesh_latency(MeshMode mode, int src, int dst) {
  Simulator sim(build_mesh(4, 4, mode, 1), TrafficGenerator::from_requests({{0, NodeId(src), NodeId(dst), 1}}, 16));
  while (sim.reassembly().delivered() == 0 && sim.now() < 1000) sim.advance();
  return sim.metrics().flit_latency.max();
}

TEST(Mesh, ZeroLoadLatencyIsManhattanTimesHop) {
  for (MeshMode mode : {MeshMode::Chipper, MeshMode::MinBD})
    for (int s = 0; s < 16; ++s)
      for (int d = 0; d < 16; ++d) {
        if (s == d) continue;
        const int hops = std::abs(s % 4 - d % 4) + std::abs(s / 4 - d / 4);
        EXPECT_EQ(lone_mesh_latency(mode, s, d), 2 * hops) << s << "->" << d;
      }
}

TEST(Mesh, DefaultGoldenEpoch) {
  EXPECT_EQ(build_mesh(4, 4, MeshMode::MinBD).params().golden_epoch, 64);
  EXPECT_EQ(build_mesh(8, 8, MeshMode::Chipper).params().golden_epoch, 128);
}

TEST(Mesh, RejectsBadParams) {
  EXPECT_THROW(build_mesh(1, 4, MeshMode::MinBD), ConfigError);
  MeshParams p;
  p.side_buffer_depth = 0;
  EXPECT_THROW(build_mesh(4, 4, MeshMode::MinBD, 0, p), ConfigError);
}

TEST(Mesh, HeldPacketWaitsForGoldenThenDelivers) {
  const Cycle epoch = 64;
  Simulator sim(build_mesh(4, 4, MeshMode::MinBD, 1), TrafficGenerator::from_requests({}, 16));
  // Packet (node 1, txn 0) is golden during epoch 16.
  const PacketId id = sim.send(NodeId(1), NodeId(14), 2);
  std::get<MeshNetwork>(sim.network()).hold_packet(id);
  sim.run_until(16 * epoch);
  EXPECT_EQ(sim.reassembly().delivered(), 0u);
  sim.run_until(17 * epoch);
  EXPECT_EQ(sim.reassembly().delivered(), 1u);
}

TEST(Mesh, StrictChipperEjectsOnePerRouter) {
  MeshParams p;
  p.strict_chipper = true;
  MeshNetwork net = build_mesh(4, 4, MeshMode::Chipper, 1, p);
  Rng rng(4);
  Metrics m(16, 0);
  std::vector<Flit> ej;
  std::uint32_t txn = 0;
  for (Cycle t = 0; t < 3000; ++t) {
    for (int s = 0; s < 16; ++s) {
      if (rng.uniform() > 0.2) continue;
      QueuedPacket q;
      q.id = PacketId{NodeId(s), txn++};
      q.dst = dest_uniform_random(rng, NodeId(s), 16);
      q.enqueue_cycle = t;
      net.enqueue(q);
    }
    ej.clear();
    net.step(t, ej, m);
    std::map<int, int> per_router;
    for (const Flit& f : ej) ASSERT_LE(++per_router[f.dst.value], 1);
  }
}

class MeshLoad : public ::testing::TestWithParam<MeshMode> {};

TEST_P(MeshLoad, ConservesAndKeepsSilverPromise) {
  TrafficSpec spec;
  spec.rate = 0.35;
  SimOptions opt;
  opt.check_interval = 1;
  Simulator sim(build_mesh(4, 4, GetParam(), 9), TrafficGenerator(spec, 16, 9), opt);
  EXPECT_NO_THROW(sim.run_until(5000));
  EXPECT_GE(sim.drain(100000), 0);
  const auto& m = sim.metrics();
  if (GetParam() == MeshMode::MinBD) {
    EXPECT_EQ(m.silver_violations, 0u);
    EXPECT_GT(m.side_buffered, 0u);
  }
  EXPECT_EQ(m.golden_deflected_by_nongolden, 0u);
  const auto& net = std::get<MeshNetwork>(sim.network());
  for (int n = 0; n < 16; ++n) EXPECT_LE(net.side_buffer_size(NodeId(n)), 4u);
}

INSTANTIATE_TEST_SUITE_P(Modes, MeshLoad, ::testing::Values(MeshMode::Chipper, MeshMode::MinBD),
                         [](const auto& param_info) { return param_info.param == MeshMode::Chipper ? std::string("Chipper") : std::string("MinBD"); });

}  // namespace
}  // namespace defnoc
