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

#include <algorithm>

#include "defnoc/experiment.hpp"
#include "defnoc/simulator.hpp"

namespace defnoc {
namespace {

// A finite random workload, so a run can end with every packet delivered.
std::vector<InjectionRequest> recorded_traffic(double rate, Cycle cycles, int nodes, std::uint64_t seed) {
  TrafficSpec spec;
  spec.rate = rate;
  TrafficGenerator g(spec, nodes, seed);
  std::vector<InjectionRequest> out;
  for (Cycle t = 0; t < cycles; ++t)
    g.generate(t, [&](NodeId s, NodeId d, int f) { out.push_back({t, s, d, f}); }, [](NodeId) { return true; });
  return out;
}

void run_to_completion(Simulator& sim, std::size_t packets) {
  while (sim.reassembly().delivered() < packets && sim.now() < 500000) sim.advance();
  EXPECT_EQ(sim.reassembly().delivered(), packets);
  EXPECT_EQ(sim.in_flight(), 0u);
  EXPECT_EQ(sim.queued_flits(), 0u);
  EXPECT_TRUE(sim.reassembly().undelivered().empty());
}

class SimulatorAllTopologies : public ::testing::TestWithParam<Topology> {};

TEST_P(SimulatorAllTopologies, ConservesFlitsEveryCycleAndDeliversEverything) {
  ExperimentConfig c;
  c.topology = GetParam();
  c.warmup = 0;
  c.check_interval = 1;
  const auto reqs = recorded_traffic(0.3, 4000, c.nodes, 3);
  SimOptions opt;
  opt.check_interval = 1;
  Simulator sim(build_network(c), TrafficGenerator::from_requests(reqs, c.nodes), opt);
  EXPECT_NO_THROW(run_to_completion(sim, reqs.size()));
  // Late duplicate copies may still be owed after delivery; none here.
  EXPECT_EQ(sim.reassembly().retained_count(), 0u);
}

INSTANTIATE_TEST_SUITE_P(Topologies, SimulatorAllTopologies,
                         ::testing::Values(Topology::SingleRing, Topology::Hird, Topology::MeshChipper, Topology::MeshMinBD),
                         [](const auto& param_info) {
                           std::string s(topology_name(param_info.param));
                           s.erase(std::remove(s.begin(), s.end(), '_'), s.end());
                           return s;
                         });

TEST(Simulator, RetransmitsUnderTinyReassemblyBuffers) {
  ExperimentConfig c;
  c.topology = Topology::MeshMinBD;
  c.reassembly_slots = 1;
  const auto reqs = recorded_traffic(0.4, 5000, c.nodes, 4);
  SimOptions opt;
  opt.reassembly_slots = 1;
  Simulator sim(build_network(c), TrafficGenerator::from_requests(reqs, c.nodes), opt);
  run_to_completion(sim, reqs.size());
  EXPECT_GT(sim.metrics().retransmits, 0u);
  EXPECT_GT(sim.metrics().flits_dropped, 0u);
}

TEST(Simulator, RejectsSelfAddressedPackets) {
  Simulator sim(build_single_ring(4), TrafficGenerator::from_requests({}, 4));
  EXPECT_THROW(sim.send(NodeId(1), NodeId(1), 1), ConfigError);
  EXPECT_THROW(sim.send(NodeId(1), NodeId(9), 1), ConfigError);
}

TEST(Simulator, CopiesAreIndependentSnapshots) {
  ExperimentConfig c;
  c.rate = 0.3;
  Simulator a = build_simulator(c);
  a.run_until(2000);
  Simulator b = a;
  a.run_until(3000);
  b.run_until(3000);
  EXPECT_EQ(a.metrics().flits_accepted, b.metrics().flits_accepted);
  EXPECT_EQ(a.in_flight(), b.in_flight());
}

TEST(Simulator, QueueSamplesAfterWarmupOnly) {
  ExperimentConfig c;
  c.cycles = 2000;
  c.warmup = 1000;
  Simulator sim = build_simulator(c);
  sim.run_until(c.cycles);
  EXPECT_EQ(sim.metrics().queue_samples.size(), 10u);
}

}  // namespace
}  // namespace defnoc
