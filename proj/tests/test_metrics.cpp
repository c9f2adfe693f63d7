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
#include <vector>

#include "defnoc/metrics.hpp"
#include "defnoc/rng.hpp"

namespace defnoc {
namespace {

std::vector<std::int64_t> range(std::int64_t a, std::int64_t b) {
  std::vector<std::int64_t> v;
  for (auto i = a; i <= b; ++i) v.push_back(i);
  return v;
}

TEST(Percentile, NearestRankExamples) {
  const std::vector<std::int64_t> one{10};
  EXPECT_EQ(percentile(one, 95), 10);
  EXPECT_EQ(percentile(range(1, 100), 95), 95);
  EXPECT_EQ(percentile(range(1, 10), 50), 5);
  EXPECT_EQ(percentile(range(1, 10), 100), 10);
  EXPECT_EQ(percentile(range(1, 10), 1), 1);
}

TEST(Percentile, IgnoresInputOrder) {
  std::vector<std::int64_t> v = range(1, 20);
  std::reverse(v.begin(), v.end());
  EXPECT_EQ(percentile(v, 50), 10);
}

TEST(Percentile, EmptyIsNullopt) {
  EXPECT_FALSE(percentile({}, 50).has_value());
  EXPECT_FALSE(Histogram{}.percentile(50).has_value());
}

TEST(Percentile, RejectsBadP) {
  const std::vector<std::int64_t> v{1, 2};
  EXPECT_THROW(percentile(v, 0), std::invalid_argument);
  EXPECT_THROW(percentile(v, 101), std::invalid_argument);
}

TEST(Histogram, AgreesWithSortedPercentile) {
  Rng rng(3);
  std::vector<std::int64_t> samples;
  Histogram h;
  for (int i = 0; i < 5000; ++i) {
    const auto v = static_cast<std::int64_t>(rng.below(300));
    samples.push_back(v);
    h.add(v);
  }
  for (double p : {1.0, 25.0, 50.0, 90.0, 95.0, 99.0, 100.0}) EXPECT_EQ(h.percentile(p), percentile(samples, p)) << p;
  double sum = 0;
  for (auto v : samples) sum += static_cast<double>(v);
  EXPECT_DOUBLE_EQ(h.mean(), sum / 5000);
  EXPECT_EQ(h.max(), *std::max_element(samples.begin(), samples.end()));
  EXPECT_THROW(h.add(-1), std::invalid_argument);
}

Flit flit_from(int src, Cycle enq, Cycle inj) {
  Flit f;
  f.packet.src = NodeId(src);
  f.dst = NodeId(src == 0 ? 1 : 0);
  f.enqueue_cycle = enq;
  f.inject_cycle = inj;
  return f;
}

TEST(Metrics, WarmupFlitsAreNotMeasured) {
  Metrics m(4, 100);
  m.on_flit_accepted(flit_from(0, 50, 60), 120);
  EXPECT_EQ(m.flits_accepted, 0u);
  m.on_flit_accepted(flit_from(0, 100, 105), 130);
  EXPECT_EQ(m.flits_accepted, 1u);
  EXPECT_EQ(m.flit_latency.max(), 30);
  EXPECT_EQ(m.net_latency.max(), 25);
}

TEST(Metrics, DeflectionAccounting) {
  Metrics m(4, 0);
  Flit a = flit_from(0, 0, 0);
  a.deflections = 2;
  a.ring_retries = 1;
  m.on_flit_accepted(a, 10);
  m.on_flit_accepted(flit_from(1, 0, 0), 10);
  EXPECT_EQ(m.deflection_events, 3u);
  EXPECT_EQ(m.deflected_flits, 1u);
  EXPECT_EQ(m.ring_retries.max(), 1);
}

TEST(Metrics, SourceThroughputPerBucket) {
  Metrics m(4, 0, 10);
  for (int i = 0; i < 5; ++i) m.on_flit_accepted(flit_from(0, 0, 0), 12);
  m.on_flit_accepted(flit_from(1, 0, 0), 25);
  const std::vector<NodeId> a{NodeId(0)};
  const std::vector<NodeId> ab{NodeId(0), NodeId(1)};
  EXPECT_DOUBLE_EQ(m.source_throughput(a, 10, 20), 0.5);
  EXPECT_DOUBLE_EQ(m.source_throughput(a, 20, 30), 0.0);
  EXPECT_DOUBLE_EQ(m.source_throughput(ab, 0, 30), 6.0 / 60.0);
  EXPECT_THROW(m.source_throughput(a, 5, 20), std::invalid_argument);
}

TEST(Metrics, FifoWaitsClipToWarmup) {
  Metrics m(2, 100);
  m.on_fifo_leave(10, 50, 90);  // entirely before warmup
  EXPECT_EQ(m.fifo_wait.count, 0u);
  m.on_fifo_leave(80, 90, 130);
  EXPECT_EQ(m.fifo_wait.max, 30);
  EXPECT_EQ(m.fifo_head_wait.max, 30);
  m.on_fifo_unfinished(100, 100, 500, true);
  EXPECT_EQ(m.max_fifo_head_wait(), 400);
}

}  // namespace
}  // namespace defnoc
