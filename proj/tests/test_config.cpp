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

#include <filesystem>

#include "defnoc/config.hpp"

namespace defnoc {
namespace {

TEST(Config, Defaults) {
  const ExperimentConfig c;
  EXPECT_EQ(c.topology, Topology::Hird);
  EXPECT_EQ(c.nodes, 16);
  EXPECT_EQ(c.fifo_up, 1);
  EXPECT_EQ(c.fifo_down, 4);
  EXPECT_EQ(c.injection_threshold, 100);
  EXPECT_EQ(c.retry_threshold, 2);
  EXPECT_EQ(c.reassembly_slots, 16);
  EXPECT_DOUBLE_EQ(c.sat_threshold, 300.0);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, ParsesSectionsAndComments) {
  const auto c = parse_config_string(
      "# experiment\n"
      "[network]\n"
      "topology = mesh_minbd\n"
      "nodes = 64   # 8x8\n"
      "[guarantees]\n"
      "injection = off\n"
      "[traffic]\n"
      "pattern = transpose\n"
      "rate = 0.25\n"
      "[run]\n"
      "seed = 18446744073709551615\n");
  EXPECT_EQ(c.topology, Topology::MeshMinBD);
  EXPECT_EQ(c.nodes, 64);
  EXPECT_FALSE(c.injection);
  EXPECT_TRUE(c.transfer);
  EXPECT_EQ(c.pattern, Pattern::Transpose);
  EXPECT_DOUBLE_EQ(c.rate, 0.25);
  EXPECT_EQ(c.seed, 18446744073709551615ull);
  EXPECT_NO_THROW(c.validate());
}

std::size_t parse_error_line(const std::string& text) {
  try {
    parse_config_string(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

TEST(Config, ErrorsNameTheLine) {
  EXPECT_EQ(parse_error_line("[network]\nnodes = 16\nwidth = 4\n"), 3u);
  EXPECT_EQ(parse_error_line("[netwrk]\n"), 1u);
  EXPECT_EQ(parse_error_line("nodes = 16\n"), 1u);
  EXPECT_EQ(parse_error_line("[network]\nnodes 16\n"), 2u);
  EXPECT_EQ(parse_error_line("[network]\n\nnodes = sixteen\n"), 3u);
  EXPECT_EQ(parse_error_line("[guarantees]\ninjection = maybe\n"), 2u);
  EXPECT_EQ(parse_error_line("[network]\nnodes = 16x\n"), 2u);
  EXPECT_EQ(parse_error_line("[traffic]\npattern = zigzag\n"), 2u);
}

TEST(Config, ValidationNamesTheKey) {
  ExperimentConfig c;
  c.nodes = 15;
  try {
    c.validate();
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("nodes:", 0), 0u) << e.what();
  }
  c = {};
  c.warmup = c.cycles;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.topology = Topology::MeshChipper;
  c.nodes = 12;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.pattern = Pattern::AdversarialStarve;
  c.topology = Topology::SingleRing;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.pattern = Pattern::Trace;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.rate = -0.1;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, SerializeRoundTrips) {
  ExperimentConfig c;
  c.topology = Topology::SingleRing;
  c.nodes = 64;
  c.lanes = 4;
  c.rate = 0.1 + 0.2;  // not exactly representable in short decimal
  c.seed = 987654321987654321ull;
  c.transfer = false;
  c.trace = "traces/a.txt";
  c.sat_threshold = 123.456;
  const std::string text = serialize_config(c);
  EXPECT_EQ(parse_config_string(text), c);
  EXPECT_EQ(serialize_config(parse_config_string(text)), text);
}

TEST(Config, HashIgnoresRateOnly) {
  ExperimentConfig a, b;
  b.rate = 0.37;
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.seed = 2;
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Config, Fnv1aReferenceValues) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(fnv1a("foobar"), 0x85944171f73967e8ull);
}

TEST(Config, SetValueWithoutSection) {
  ExperimentConfig c;
  set_config_value(c, "", "rate", "0.5");
  EXPECT_DOUBLE_EQ(c.rate, 0.5);
  EXPECT_THROW(set_config_value(c, "run", "rate", "0.5"), ConfigError);
  EXPECT_THROW(set_config_value(c, "", "bogus", "1"), ConfigError);
}

TEST(Config, TopologyNames) {
  for (Topology t : {Topology::SingleRing, Topology::Hird, Topology::MeshChipper, Topology::MeshMinBD})
    EXPECT_EQ(parse_topology(topology_name(t)), t);
  EXPECT_THROW(parse_topology("torus"), ConfigError);
}

TEST(Config, TracePathIsRelativeToConfigFile) {
  const auto c = load_config(std::string(DEFNOC_SOURCE_DIR) + "/configs/trace.conf");
  EXPECT_EQ(std::filesystem::path(c.trace), (std::filesystem::path(DEFNOC_SOURCE_DIR) / "configs" / "sample.trace").lexically_normal());
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, MissingFile) {
  EXPECT_THROW(load_config("/nonexistent/x.conf"), ConfigError);
}

}  // namespace
}  // namespace defnoc
