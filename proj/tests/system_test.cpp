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

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "simct/system.hpp"

namespace {

using namespace simct;

host::PortConfig single_read(unsigned port, unsigned vault, unsigned bank, unsigned size, const DeviceConfig& cfg) {
  host::PortConfig pc;
  pc.id = port;
  pc.mode = host::AddressMode::Trace;
  pc.trace = {{protocol::Command::Read, addr::encode({vault, bank, 3, 0}, cfg.map), size}};
  return pc;
}

double measure_single(const DeviceConfig& cfg, unsigned port, unsigned vault, unsigned size) {
  System sys(cfg, {single_read(port, vault, 2, size, cfg)}, 1);
  sys.run_to_completion();
  return sys.ports()[0]->monitor().mean_read_latency();
}

TEST(NoLoad, HostShareIsTheFixedRoundTrip) {
  const DeviceConfig cfg;
  const auto nl = no_load_latency(cfg, 0, 0, 64);
  EXPECT_DOUBLE_EQ(nl.host_ns, 547.0);
  EXPECT_DOUBLE_EQ(nl.dram_ns, 41.0 + 6.4);
  EXPECT_GT(nl.device_ns, 100.0);
  EXPECT_LT(nl.device_ns, 180.0);
}

TEST(NoLoad, SimulatedSingleReadMatchesClosedForm) {
  const DeviceConfig cfg;
  for (unsigned port : {0u, 1u}) {
    for (unsigned vault = 0; vault < addr::kVaults; ++vault) {
      for (unsigned size : {16u, 64u, 128u}) {
        const double got = measure_single(cfg, port, vault, size);
        const double want = no_load_latency(cfg, port % cfg.link.links, vault, size).total();
        EXPECT_NEAR(got, want, 1e-3) << "port " << port << " vault " << vault << " size " << size;
      }
    }
  }
}

TEST(NoLoad, RemoteQuadrantCostsOneMoreHopEachWay) {
  const DeviceConfig cfg;
  const double local = measure_single(cfg, 0, 1, 64);
  const double remote = measure_single(cfg, 0, 5, 64);
  const auto resp = protocol::make_response(protocol::make_read_request(0, 0, 64));
  const double extra_ns = (1 * cfg.noc.flit_ps + cfg.noc.hop_latency_ps +
                           protocol::total_flits(resp) * cfg.noc.flit_ps + cfg.noc.hop_latency_ps) /
                          1000.0;
  EXPECT_NEAR(remote - local, extra_ns, 1e-3);
}

TEST(NoLoad, HoldsForOtherTopologiesAndSwitchModes) {
  DeviceConfig cfg;
  cfg.link.links = 4;
  cfg.noc.virtual_output_queues = false;
  cfg.noc.arbitration = net::Arbitration::RoundRobin;
  for (unsigned port = 0; port < 4; ++port) {
    for (unsigned vault : {0u, 6u, 11u, 15u}) {
      EXPECT_NEAR(measure_single(cfg, port, vault, 32), no_load_latency(cfg, port, vault, 32).total(), 1e-3);
    }
  }
}

std::vector<host::PortConfig> random_ports(unsigned n, unsigned size, std::uint64_t budget, double read_fraction) {
  std::vector<host::PortConfig> out;
  for (unsigned i = 0; i < n; ++i) {
    host::PortConfig pc;
    pc.id = i;
    pc.req_size = size;
    pc.budget = budget;
    pc.read_fraction = read_fraction;
    pc.record_writes = true;
    out.push_back(pc);
  }
  return out;
}

TEST(System, EveryIssuedRequestCompletes) {
  const DeviceConfig cfg;
  System sys(cfg, random_ports(9, 64, 500, 0.5), 42);
  sys.run_to_completion();
  std::uint64_t issued = 0, completed = 0, served = 0;
  for (const auto& p : sys.ports()) {
    issued += p->issued();
    completed += p->completed();
    EXPECT_EQ(p->in_flight(), 0u);
    EXPECT_EQ(p->monitor().reads + p->monitor().writes, p->completed());
  }
  for (const auto& v : sys.vaults()) served += v->counters().completed;
  EXPECT_EQ(issued, 9u * 500u);
  EXPECT_EQ(completed, issued);
  EXPECT_EQ(served, issued);
}

TEST(System, BankCreditsAreAllReturned) {
  DeviceConfig cfg;
  cfg.host.bank_credits = true;
  System sys(cfg, random_ports(4, 32, 300, 1.0), 3);
  sys.run_to_completion();
  const auto& cp = sys.credits();
  for (std::size_t d = 0; d < cp.destinations(); ++d) EXPECT_EQ(cp.in_flight(d), 0u);
  for (const auto& p : sys.ports()) EXPECT_EQ(p->completed(), 300u);
}

std::string traced_run(std::uint64_t seed) {
  const DeviceConfig cfg;
  System sys(cfg, random_ports(3, 32, 100, 0.7), seed);
  std::ostringstream trace;
  sys.engine().set_trace(&trace);
  sys.run_to_completion();
  return trace.str();
}

TEST(System, SameSeedSameEventSequence) {
  const auto a = traced_run(11);
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, traced_run(11));
  EXPECT_NE(a, traced_run(12));
}

TEST(System, LittlesLawHoldsOnEveryBusyQueue) {
  const DeviceConfig cfg;
  System sys(cfg, random_ports(9, 64, 0, 1.0), 5);
  sys.set_window({10 * sim::kUs, 60 * sim::kUs});
  sys.run_until(60 * sim::kUs);
  int checked = 0;
  for (const auto& np : sys.probes()) {
    const auto& p = *np.probe;
    if (p.departures() < 1000) continue;
    const double lw = p.arrival_rate() * p.mean_sojourn_ns();
    EXPECT_NEAR(p.mean_occupancy(), lw, 0.05 * lw) << np.name;
    ++checked;
  }
  EXPECT_GE(checked, 18);  // at least every port FIFO and in-flight set
}

TEST(System, ResponseLinksNeverExceedTheirRate) {
  const DeviceConfig cfg;
  System sys(cfg, random_ports(9, 128, 0, 1.0), 9);
  sys.set_window({5 * sim::kUs, 30 * sim::kUs});
  sys.run_until(30 * sim::kUs);
  for (const auto* ch : sys.link_response_channels()) {
    EXPECT_LE(ch->utilization(), 1.0 + 1e-9);
    EXPECT_GT(ch->utilization(), 0.5);
  }
}

TEST(System, RejectsBadPortSets) {
  const DeviceConfig cfg;
  EXPECT_THROW(System(cfg, random_ports(10, 64, 1, 1.0), 1), ConfigError);
  auto dup = random_ports(2, 64, 1, 1.0);
  dup[1].id = 0;
  EXPECT_THROW(System(cfg, dup, 1), ConfigError);
  DeviceConfig bad;
  bad.noc.switch_buffer_depth = 0;
  EXPECT_THROW(System(bad, {}, 1), ValidationError);
}

}  // namespace
