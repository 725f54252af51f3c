// Copyright 2026 The simct Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <sstream>
#include <string>

#include "simct/hostgen.hpp"

namespace {

using namespace simct;
using host::AddressGen;
using host::PortConfig;
using host::Prng;

TEST(Prng, MatchesReferenceSplitmix64) {
  Prng p(0);
  EXPECT_EQ(p.next(), 0xE220A8397B1DCDAFull);
  EXPECT_EQ(p.next(), 0x6E789E6AA1B965F4ull);
  EXPECT_EQ(p.next(), 0x06C45D188009454Full);
}

TEST(Prng, BoundedDrawsStayInRange) {
  Prng p(5);
  for (int i = 0; i < 10'000; ++i) {
    EXPECT_LT(p.below(7), 7u);
    const double u = p.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(Trace, ParsesRecordsCommentsAndCase) {
  const auto t = host::load_trace(std::string(SIMCT_TEST_DATA) + "/small.trace");
  ASSERT_EQ(t.size(), 4u);
  EXPECT_EQ(t[0].op, protocol::Command::Read);
  EXPECT_EQ(t[0].address, 0u);
  EXPECT_EQ(t[0].size, 64u);
  EXPECT_EQ(t[1].op, protocol::Command::Write);
  EXPECT_EQ(t[2].address, 0x100u);
  EXPECT_EQ(t[2].size, 128u);
  EXPECT_EQ(t[3].op, protocol::Command::Write);
  EXPECT_EQ(t[3].size, 16u);
}

TEST(Trace, ReportsTheOffendingLine) {
  try {
    host::load_trace(std::string(SIMCT_TEST_DATA) + "/bad.trace");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return host::parse_trace(in);
  };
  EXPECT_THROW(parse("R 0x0 40\n"), ParseError);
  EXPECT_THROW(parse("R 0x0 144\n"), ParseError);
  EXPECT_THROW(parse("R zz 16\n"), ParseError);
  EXPECT_THROW(parse("R 0x0\n"), ParseError);
  EXPECT_THROW(parse("R 0x0 16 extra\n"), ParseError);
  EXPECT_THROW(parse("R 0x400000000 16\n"), ParseError);
  EXPECT_TRUE(parse("\n# only a comment\n").empty());
  EXPECT_THROW(host::load_trace("/nonexistent/trace"), ConfigError);
}

TEST(AddressGen, MaskThenAntimaskThenAlign) {
  PortConfig cfg;
  cfg.req_size = 64;
  cfg.mask = 0xF0;
  cfg.antimask = 0x100;
  AddressGen g(cfg, 1);
  EXPECT_EQ(g.shape(0xFFF), 0xF00u);
  EXPECT_EQ(g.shape(0x0), 0x100u);
  for (int i = 0; i < 1000; ++i) {
    const auto a = g.next();
    EXPECT_EQ(a & 0xF0, 0u);
    EXPECT_EQ(a & 0x100, 0x100u);
    EXPECT_EQ(a % 64, 0u);
    EXPECT_LE(a, protocol::kAddressMask);
  }
}

TEST(AddressGen, LinearModeWalksBySize) {
  PortConfig cfg;
  cfg.mode = host::AddressMode::Linear;
  cfg.req_size = 32;
  AddressGen g(cfg, 0);
  EXPECT_EQ(g.next(), 0u);
  EXPECT_EQ(g.next(), 32u);
  EXPECT_EQ(g.next(), 64u);
}

TEST(PortConfig, RejectsInconsistentSettings) {
  PortConfig c;
  c.mask = 0x80;
  c.antimask = 0x80;
  EXPECT_THROW(c.check(), ValidationError);
  c = {};
  c.tag_pool = 0;
  EXPECT_THROW(c.check(), ValidationError);
  c = {};
  c.req_size = 20;
  EXPECT_THROW(c.check(), ValidationError);
  c = {};
  c.read_fraction = 1.5;
  EXPECT_THROW(c.check(), ValidationError);
}

/// Pops every request a port sends and completes it a fixed delay later.
class Loopback final : public fabric::Node {
 public:
  Loopback(fabric::Context& ctx, host::Port& port, sim::SimTime delay)
      : Node(ctx, "loop"), port_(port), delay_(delay) {
    port.tx().set_route([this](fabric::TxnId) { return this; });
  }

 protected:
  void work() override {
    while (!port_.tx().empty()) {
      const auto id = port_.tx().pop(now()).id;
      auto& x = ctx_.pool[id];
      x.response = protocol::make_response(x.request);
      x.responding = true;
      port_.complete_at(now() + delay_, id);
    }
  }

 private:
  host::Port& port_;
  sim::SimTime delay_;
};

PortConfig loop_config(bool stamp) {
  PortConfig c;
  c.tag_pool = 4;
  c.issue_period_ps = 10'000;
  c.budget = 4;
  c.stamp_at_submit = stamp;
  return c;
}

TEST(Port, IssueStampedLatencyIsTheRoundTrip) {
  fabric::Context ctx;
  host::Port port(ctx, loop_config(false), 1, 0, 2);
  Loopback loop(ctx, port, 100'000);
  port.start();
  ctx.engine.run();
  EXPECT_EQ(port.issued(), 4u);
  EXPECT_EQ(port.completed(), 4u);
  EXPECT_TRUE(port.finished_issuing());
  EXPECT_DOUBLE_EQ(port.monitor().mean_read_latency(), 100.0);
  EXPECT_EQ(port.in_flight(), 0u);
}

TEST(Port, TagStampedLatencyIncludesHostStaging) {
  fabric::Context ctx;
  host::Port port(ctx, loop_config(true), 1, 0, 2);
  Loopback loop(ctx, port, 100'000);
  port.start();
  ctx.engine.run();
  // All four tags taken at 0; issue slots at 0, 10, 20, 30 ns.
  EXPECT_DOUBLE_EQ(port.monitor().min_latency, 100.0);
  EXPECT_DOUBLE_EQ(port.monitor().max_latency, 130.0);
  EXPECT_DOUBLE_EQ(port.monitor().mean_read_latency(), 115.0);
}

TEST(Port, TagPoolLimitsThroughput) {
  fabric::Context ctx;
  auto cfg = loop_config(false);
  cfg.budget = 40;
  host::Port port(ctx, cfg, 1, 0, 2);
  Loopback loop(ctx, port, 100'000);
  port.start();
  ctx.engine.run();
  // Four tags per 100 ns round trip: ten rounds.
  EXPECT_EQ(port.completed(), 40u);
  EXPECT_EQ(ctx.engine.now(), 1'000'000u + 30'000u);
}

TEST(Port, WritesAndTraceMode) {
  fabric::Context ctx;
  PortConfig c;
  c.mode = host::AddressMode::Trace;
  c.record_writes = true;
  c.trace = {{protocol::Command::Write, 0x40, 32}, {protocol::Command::Read, 0x80, 16}};
  host::Port port(ctx, c, 1, 0, 2);
  Loopback loop(ctx, port, 50'000);
  port.start();
  ctx.engine.run();
  EXPECT_EQ(port.monitor().writes, 1u);
  EXPECT_EQ(port.monitor().reads, 1u);
  EXPECT_EQ(port.monitor().payload_bytes, 48u);
  // Write: 48 B request, 16 B response. Read: 16 B request, 32 B response.
  EXPECT_EQ(port.monitor().request_bytes, 64u);
  EXPECT_EQ(port.monitor().response_bytes, 48u);
}

TEST(Port, CompletionOfAnUnknownTagIsAModelError) {
  fabric::Context ctx;
  host::Port port(ctx, loop_config(false), 1, 0, 2);
  const auto id = ctx.pool.alloc();
  ctx.pool[id].request = protocol::make_read_request(3, 0, 16);
  ctx.pool[id].response = protocol::make_response(ctx.pool[id].request);
  ctx.pool[id].responding = true;
  port.complete_at(10, id);
  EXPECT_THROW(ctx.engine.run(), ModelError);
}

TEST(Monitor, MergeKeepsExtremes) {
  host::Monitor a, b;
  a.record_read(50);
  a.record_read(70);
  b.record_read(10);
  b.record_read(200);
  a.merge(b);
  EXPECT_EQ(a.reads, 4u);
  EXPECT_DOUBLE_EQ(a.min_latency, 10.0);
  EXPECT_DOUBLE_EQ(a.max_latency, 200.0);
  EXPECT_DOUBLE_EQ(a.mean_read_latency(), 82.5);
  EXPECT_EQ(a.histogram.total(), 4u);
}

}  // namespace
