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
#include <sstream>

#include "defnoc/experiment.hpp"

namespace defnoc {
namespace {

ExperimentConfig small(Topology t, int nodes = 16) {
  ExperimentConfig c;
  c.topology = t;
  c.nodes = nodes;
  c.cycles = 6000;
  c.warmup = 1000;
  return c;
}

std::string csv(const std::vector<ResultRow>& rows) {
  std::ostringstream out;
  write_csv(out, rows);
  return out.str();
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

TEST(Csv, EmptyIsHeaderOnly) {
  const std::string s = csv({});
  EXPECT_EQ(lines(s), 1u);
  EXPECT_EQ(s.rfind("schema,config_hash,", 0), 0u);
  EXPECT_EQ(s.find('\r'), std::string::npos);
}

TEST(Csv, OneLinePerRowSortedByHashThenRate) {
  std::vector<ResultRow> rows(3);
  rows[0].config_hash = 2;
  rows[0].rate = 0.1;
  rows[1].config_hash = 1;
  rows[1].rate = 0.3;
  rows[2].config_hash = 1;
  rows[2].rate = 0.2;
  const std::string s = csv(rows);
  EXPECT_EQ(lines(s), 4u);
  std::istringstream in(s);
  std::string header, a, b, c;
  std::getline(in, header);
  std::getline(in, a);
  std::getline(in, b);
  std::getline(in, c);
  EXPECT_NE(a.find("0000000000000001"), std::string::npos);
  EXPECT_NE(a.find(",0.2,"), std::string::npos);
  EXPECT_NE(b.find(",0.3,"), std::string::npos);
  EXPECT_NE(c.find("0000000000000002"), std::string::npos);
  const auto cols = [](const std::string& l) { return std::count(l.begin(), l.end(), ','); };
  EXPECT_EQ(cols(a), cols(header));
}

TEST(Csv, FormatsFloatsWithSixSignificantDigits) {
  EXPECT_EQ(format_g6(0.1), "0.1");
  EXPECT_EQ(format_g6(1.0 / 3.0), "0.333333");
  EXPECT_EQ(format_g6(1234567.0), "1.23457e+06");
}

TEST(Sweep, ParsesInclusiveRange) {
  const auto r = parse_rate_sweep("0.1:0.3:0.1");
  ASSERT_EQ(r.size(), 3u);
  EXPECT_NEAR(r[2], 0.3, 1e-12);
  EXPECT_EQ(parse_rate_sweep("0.05:0.05:0.01").size(), 1u);
  EXPECT_THROW(parse_rate_sweep("0.1:0.3"), ConfigError);
  EXPECT_THROW(parse_rate_sweep("0.3:0.1:0.1"), ConfigError);
  EXPECT_THROW(parse_rate_sweep("0.1:0.3:0"), ConfigError);
}

TEST(Saturation, LatencyOrGrowingQueues) {
  Metrics m(4, 0);
  EXPECT_FALSE(is_saturated(m, 4, 300));
  for (int i = 0; i < 100; ++i) m.sample_queue_occupancy(static_cast<std::uint64_t>(i));
  EXPECT_TRUE(is_saturated(m, 4, 300));
  Metrics flat(4, 0);
  for (int i = 0; i < 100; ++i) flat.sample_queue_occupancy(50);
  EXPECT_FALSE(is_saturated(flat, 4, 300));
  Metrics small_growth(64, 0);
  for (int i = 0; i < 100; ++i) small_growth.sample_queue_occupancy(static_cast<std::uint64_t>(i / 10));
  EXPECT_FALSE(is_saturated(small_growth, 64, 300));  // growing but below one flit per node
  Metrics slow(4, 0);
  Flit f;
  f.dst = NodeId(1);
  slow.on_flit_accepted(f, 301);
  EXPECT_TRUE(is_saturated(slow, 4, 300));
}

TEST(Saturation, OccupancyWindows) {
  std::vector<std::uint64_t> s{1, 1, 2, 2, 3, 3, 4, 4, 5, 5};
  EXPECT_EQ(occupancy_windows(s, 5), (std::vector<double>{1, 2, 3, 4, 5}));
  EXPECT_TRUE(occupancy_windows({}, 10).empty());
}

TEST(Experiment, SameConfigSameRow) {
  for (Topology t : {Topology::SingleRing, Topology::Hird, Topology::MeshChipper, Topology::MeshMinBD}) {
    const auto c = small(t);
    EXPECT_EQ(csv({run_experiment(c)}), csv({run_experiment(c)})) << topology_name(t);
  }
}

TEST(Experiment, SeedChangesResults) {
  auto a = small(Topology::Hird);
  auto b = a;
  b.seed = 2;
  EXPECT_NE(run_experiment(a).avg_latency, run_experiment(b).avg_latency);
}

TEST(Experiment, SummaryIsConsistent) {
  auto c = small(Topology::Hird);
  c.rate = 0.2;
  const auto r = run_experiment(c);
  EXPECT_NEAR(r.offered, 0.2, 0.02);
  EXPECT_NEAR(r.accepted, r.offered, 0.02);
  EXPECT_EQ(r.ring_throughput.size(), 4u);
  EXPECT_FALSE(r.saturated);
  EXPECT_EQ(r.cycles, c.cycles);
  EXPECT_LE(r.p95_latency, r.max_latency);
  EXPECT_EQ(r.guarantees, "on");
  const auto mesh = run_experiment(small(Topology::MeshMinBD));
  EXPECT_TRUE(mesh.ring_throughput.empty());
}

TEST(Experiment, SerialAndParallelSweepsMatch) {
  const auto c = small(Topology::Hird);
  const auto rates = parse_rate_sweep("0.1:0.5:0.1");
  EXPECT_EQ(csv(run_sweep(c, rates, 1)), csv(run_sweep(c, rates, 4)));
}

TEST(Experiment, SweepStopsAfterFirstSaturatedRate) {
  auto c = small(Topology::MeshChipper);
  c.cycles = 8000;
  const auto rows = run_sweep(c, parse_rate_sweep("0.1:1.0:0.1"), 3);
  ASSERT_FALSE(rows.empty());
  EXPECT_TRUE(rows.back().saturated);
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) EXPECT_FALSE(rows[i].saturated);
  EXPECT_LT(rows.size(), 10u);
}

TEST(Experiment, GuaranteeModes) {
  ExperimentConfig c;
  for (const char* m : {"on", "off", "injection-only", "transfer-only"}) {
    set_guarantees(c, m);
    EXPECT_EQ(guarantees_name(c), m);
  }
  EXPECT_THROW(set_guarantees(c, "partial"), ConfigError);
}

TEST(Experiment, ArbitrationAndTrafficSeedsAreSeparate) {
  // Same seed: identical offered traffic on both mesh flavours.
  auto a = small(Topology::MeshChipper);
  auto b = small(Topology::MeshMinBD);
  EXPECT_EQ(run_experiment(a).offered, run_experiment(b).offered);
}

}  // namespace
}  // namespace defnoc
