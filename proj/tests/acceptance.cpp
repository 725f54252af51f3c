/*
 * Copyright 2026 The simct Authors
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

// Acceptance checks. One PASS/FAIL line per criterion; exit status is the
// number of failures. Every tolerance is a named constant below.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "simct/experiments.hpp"

namespace {

using namespace simct;

// Criterion 2
constexpr double kEfficiencyTolerance = 0.001;
// Criterion 3
constexpr int kPages = 1000;
// Criterion 4
constexpr double kHostNs = 547.0;
constexpr double kDeviceMinNs = 100.0;
constexpr double kDeviceMaxNs = 180.0;
constexpr double kDramSumNs = 41.0;
// Criterion 5
constexpr unsigned kLinearMax = 100;
constexpr unsigned kPlateauMin = 200;
constexpr double kMinR2 = 0.98;
constexpr double kMaxPlateauRatio = 0.05;
// Criterion 6
constexpr double kVaultCapGbps = 10.0;
constexpr double kVaultCapTolerance = 0.10;
// Criterion 7
constexpr double kLinkCapGbps = 30.0;
constexpr double kLinkPlateauFraction = 0.70;
// Criterion 9
constexpr double kQosMinIncrease = 0.20;
// Criterion 10
constexpr unsigned kComboSample = 200;
// Criterion 11
constexpr double kLittleTolerance = 0.05;
constexpr std::uint64_t kLittleMinRequests = 10'000;
constexpr double kOutstandingRatio = 2.0;
constexpr double kOutstandingTolerance = 0.15;
// Criterion 12
constexpr double kMaxRequestShare = 0.15;
constexpr double kMixedGain = 1.3;

// Simulated time per measured point, chosen so the whole suite runs in a
// few minutes on one core.
constexpr double kWarmupUs = 20.0;
constexpr double kWindowUs = 100.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& check) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  fmt::print("{} criterion {:>2}: {} ({}) [{:.1f} s]\n", o.pass ? "PASS" : "FAIL", id, title, o.detail, secs);
  std::fflush(stdout);
}

exp::ExperimentSpec base_spec() {
  exp::ExperimentSpec s;
  s.seed = 2026;
  s.warmup_us = kWarmupUs;
  s.duration_us = kWindowUs;
  return s;
}

const std::vector<exp::PointReport>& gups_rows() {
  static const std::vector<exp::PointReport> rows = [] {
    auto s = base_spec();
    s.kind = exp::Kind::GupsSweep;
    return exp::run_gups_sweep(s);
  }();
  return rows;
}

const exp::PointReport& gups_point(const std::string& pattern, unsigned size) {
  for (const auto& r : gups_rows()) {
    if (r.pattern == pattern && r.size == size) return r;
  }
  throw std::runtime_error("missing gups point " + pattern);
}

Outcome c1() {
  const net::LinkConfig cfg{2, 8, 15.0};
  const double peak = net::peak_bandwidth(cfg);
  const double dir = net::per_direction_bandwidth(cfg);
  return {peak == 60.0 && dir == 30.0, fmt::format("peak {} GB/s, per direction {} GB/s", peak, dir)};
}

Outcome c2() {
  using protocol::Command;
  bool ok = true;
  std::string bad;
  for (unsigned size : {16u, 32u, 48u, 64u, 80u, 96u, 112u, 128u}) {
    const auto rd = protocol::make_read_request(0, 0, size);
    const auto wr = protocol::make_write_request(0, 0, size);
    const unsigned data = size / 16;
    const bool row = protocol::total_flits(rd) == 1 && protocol::total_flits(protocol::make_response(rd)) == 1 + data &&
                     protocol::total_flits(wr) == 1 + data && protocol::total_flits(protocol::make_response(wr)) == 1;
    if (!row) {
      ok = false;
      bad += fmt::format(" size {}", size);
    }
  }
  ok = ok && protocol::total_flits(protocol::make_flow()) == 1;
  const double e16 = protocol::efficiency(16);
  const double e128 = protocol::efficiency(128);
  ok = ok && std::abs(e16 - 0.5) <= kEfficiencyTolerance && std::abs(e128 - 0.889) <= kEfficiencyTolerance;
  return {ok, fmt::format("efficiency(16)={:.4f} efficiency(128)={:.4f}{}", e16, e128, bad.empty() ? "" : " bad:" + bad)};
}

Outcome c3() {
  host::Prng prng(3);
  const addr::AddressMapConfig map{};
  int good = 0;
  for (int i = 0; i < kPages; ++i) {
    const std::uint64_t page = prng.below(addr::kCapacityBytes / addr::kPageBytes) * addr::kPageBytes;
    const auto fp = addr::page_footprint(page, map);
    std::map<unsigned, unsigned> per_vault;
    for (const auto& [v, b] : fp) ++per_vault[v];
    bool ok = per_vault.size() == addr::kVaults;
    for (const auto& [v, n] : per_vault) ok = ok && n == 2;
    good += ok ? 1 : 0;
  }
  return {good == kPages, fmt::format("{}/{} pages cover 16 vaults x 2 banks", good, kPages)};
}

Outcome c4() {
  const DeviceConfig cfg;
  bool ok = std::abs(cfg.dram.sum_ns() - kDramSumNs) < 1e-9;
  double lo = 1e9, hi = 0;
  for (unsigned size : {16u, 32u, 64u, 128u}) {
    for (unsigned vault : {0u, 7u, 13u}) {
      host::PortConfig pc;
      pc.mode = host::AddressMode::Trace;
      addr::DecodedAddress d{};
      d.vault = vault;
      pc.trace = {{protocol::Command::Read, addr::encode(d, cfg.map), size}};
      System sys(cfg, {pc}, 1);
      sys.run_to_completion();
      const double measured = sys.ports()[0]->monitor().mean_read_latency();
      const auto nl = no_load_latency(cfg, 0, vault, size);
      const double device = measured - kHostNs;
      lo = std::min(lo, device);
      hi = std::max(hi, device);
      ok = ok && nl.host_ns == kHostNs && std::abs(nl.total() - measured) < 0.001 && device >= kDeviceMinNs &&
           device <= kDeviceMaxNs && nl.dram_ns >= kDramSumNs;
    }
  }
  return {ok, fmt::format("host {} ns, device {:.1f}..{:.1f} ns, DRAM timing sum {} ns", kHostNs, lo, hi,
                          cfg.dram.sum_ns())};
}

Outcome c5() {
  auto s = base_spec();
  s.kind = exp::Kind::LowloadStream;
  s.stream_vaults = {0, 5, 10, 15};
  const auto rows = exp::run_lowload_stream(s);
  const auto shapes = exp::analyze_lowload(rows, kLinearMax, kPlateauMin);
  bool ok = shapes.size() == s.sizes.size();
  std::string d;
  for (const auto& sh : shapes) {
    ok = ok && sh.linear.r2 >= kMinR2 && sh.slope_ratio() < kMaxPlateauRatio;
    d += fmt::format(" {}B:R2={:.4f},ratio={:.3f}", sh.size, sh.linear.r2, sh.slope_ratio());
  }
  return {ok, d.substr(1)};
}

Outcome c6() {
  const double lo = kVaultCapGbps * (1 - kVaultCapTolerance), hi = kVaultCapGbps * (1 + kVaultCapTolerance);
  bool ok = true;
  std::string d;
  auto check = [&](const std::string& pat, unsigned size) {
    const double g = gups_point(pat, size).vault_bus_gbps;
    ok = ok && g >= lo && g <= hi;
    d += fmt::format(" {}/{}B={:.2f}", pat, size, g);
  };
  check("8bank", 16);
  check("8bank", 32);
  check("4bank", 64);
  check("4bank", 128);
  return {ok, "vault bus GB/s:" + d};
}

Outcome c7() {
  bool ok = true;
  std::string d;
  for (const char* pat : {"2vault", "4vault", "8vault", "16vault"}) {
    const double g = gups_point(pat, 128).response_gbps;
    ok = ok && g >= kLinkPlateauFraction * kLinkCapGbps && g <= kLinkCapGbps;
    d += fmt::format(" {}={:.2f}", pat, g);
  }
  return {ok, "128B response GB/s:" + d};
}

Outcome c8() {
  bool ok = true;
  std::string d;
  for (unsigned size : {16u, 32u, 64u, 128u}) {
    const double l1 = gups_point("1bank", size).mean_latency();
    const double l8 = gups_point("8bank", size).mean_latency();
    double lv = 0;
    for (const char* pat : {"2vault", "4vault", "8vault", "16vault"}) lv = std::max(lv, gups_point(pat, size).mean_latency());
    ok = ok && l1 > l8 && l8 > lv;
    d += fmt::format(" {}B:{:.0f}>{:.0f}>{:.0f}", size, l1, l8, lv);
  }
  for (const auto& pat : exp::standard_patterns(addr::AddressMapConfig{})) {
    const double b128 = gups_point(pat.name, 128).payload_gbps, b16 = gups_point(pat.name, 16).payload_gbps;
    if (!(b128 > b16)) {
      ok = false;
      d += fmt::format(" bandwidth {}: 128B {:.2f} <= 16B {:.2f}", pat.name, b128, b16);
    }
  }
  return {ok, "latency ns 1bank>8bank>max(vaults):" + d};
}

Outcome c9() {
  auto s = base_spec();
  s.kind = exp::Kind::QosFourport;
  const auto rows = exp::run_qos_fourport(s);
  bool ok = true;
  std::string d;
  for (unsigned size : s.sizes) {
    double shared = 0, best = 1e18;
    for (const auto& r : rows) {
      if (r.size != size) continue;
      if (r.param == static_cast<long>(s.qos_vault)) {
        shared = r.monitor.max_latency;
      } else {
        best = std::min(best, r.monitor.max_latency);
      }
    }
    const double gain = shared / best - 1.0;
    ok = ok && gain >= kQosMinIncrease;
    d += fmt::format(" {}B:+{:.0f}%", size, gain * 100);
  }
  return {ok, "shared vs best non-shared max latency:" + d};
}

Outcome c10() {
  auto s = base_spec();
  s.kind = exp::Kind::Combinations;
  s.sample = kComboSample;
  s.duration_us = 20.0;
  s.warmup_us = 5.0;
  const auto spread = exp::combination_spread(exp::run_combinations(s));
  bool ok = spread.size() == s.sizes.size();
  std::string d;
  for (std::size_t i = 0; i < spread.size(); ++i) {
    if (i > 0) ok = ok && spread[i].stddev_ns > spread[i - 1].stddev_ns;
    d += fmt::format(" {}B={:.1f}", spread[i].size, spread[i].stddev_ns);
  }
  return {ok, "stddev ns:" + d};
}

Outcome c11() {
  auto s = base_spec();
  s.kind = exp::Kind::PortSweep;
  s.patterns = {"2bank", "4bank"};
  const auto rows = exp::run_port_sweep(s);
  std::size_t checked = 0;
  double worst = 0;
  for (const auto& r : rows) {
    for (const auto& p : r.probes) {
      if (p.departures < kLittleMinRequests) continue;
      ++checked;
      worst = std::max(worst, p.little_error());
    }
  }
  std::map<std::string, double> mean;
  for (const auto& e : exp::estimate_outstanding(rows, s.saturation_fraction)) {
    mean[e.pattern] += e.outstanding / static_cast<double>(s.sizes.size());
  }
  const double ratio = mean["4bank"] / mean["2bank"];
  const bool little_ok = checked > 0 && worst <= kLittleTolerance;
  const bool ratio_ok = std::abs(ratio - kOutstandingRatio) <= kOutstandingTolerance * kOutstandingRatio;
  return {little_ok && ratio_ok,
          fmt::format("{} queues, worst Little error {:.2f}%; outstanding 2bank {:.0f}, 4bank {:.0f}, ratio {:.2f}",
                      checked, worst * 100, mean["2bank"], mean["4bank"], ratio)};
}

Outcome c12() {
  auto s = base_spec();
  s.patterns = {"16vault"};
  s.sizes = {128};
  const auto ro = exp::run_gups_sweep(s).front();
  s.read_fraction = 0.5;
  const auto mix = exp::run_gups_sweep(s).front();
  const double share = ro.request_link_util / ro.response_link_util;
  const double gain = (mix.request_link_util + mix.response_link_util) / (ro.request_link_util + ro.response_link_util);
  return {share < kMaxRequestShare && gain >= kMixedGain,
          fmt::format("read-only request/response utilization {:.3f}, mixed/read-only total {:.2f}x", share, gain)};
}

Outcome c13() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "simct_acceptance_determinism";
  bool ok = true;
  std::size_t compared = 0;
  for (exp::Kind kind : {exp::Kind::GupsSweep, exp::Kind::LowloadStream, exp::Kind::QosFourport,
                         exp::Kind::Combinations, exp::Kind::PortSweep}) {
    auto s = base_spec();
    s.kind = kind;
    s.duration_us = 10.0;
    s.warmup_us = 2.0;
    s.sizes = {32, 128};
    s.patterns = {"2bank", "4vault"};
    s.stream_max = 40;
    s.stream_vaults = {3};
    s.sample = 5;
    s.ports_max = 3;
    std::vector<std::string> runs[2];
    for (int k = 0; k < 2; ++k) {
      const fs::path dir = root / (std::string(exp::kind_name(kind)) + std::to_string(k));
      fs::create_directories(dir);
      for (const auto& f : exp::run_and_emit(s, dir.string())) {
        std::ifstream in(f, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        runs[k].push_back(buf.str());
      }
    }
    ok = ok && runs[0] == runs[1] && !runs[0].empty();
    compared += runs[0].size();
  }
  fs::remove_all(root);
  return {ok, fmt::format("{} CSV files byte-identical across two runs", compared)};
}

}  // namespace

int main() {
  report(1, "peak link bandwidth", c1);
  report(2, "packet sizing and efficiency", c2);
  report(3, "4 KiB page footprint", c3);
  report(4, "no-load latency band", c4);
  report(5, "low-load curve shape", c5);
  report(6, "vault bandwidth cap", c6);
  report(7, "link bandwidth cap", c7);
  report(8, "pattern ordering", c8);
  report(9, "QoS interference", c9);
  report(10, "size versus spread", c10);
  report(11, "Little's law and outstanding ratio", c11);
  report(12, "read/write asymmetry", c12);
  report(13, "determinism", c13);
  fmt::print("{} of 13 criteria failed\n", failures);
  return failures;
}
