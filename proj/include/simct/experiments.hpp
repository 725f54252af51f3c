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

/**
 * @file experiments.hpp
 * @brief Experiment specs, runners and CSV reports.
 *
 * An ExperimentSpec is a flat key=value text file. Every runner is a pure
 * function of the experiment file: the same file and seed give byte-identical CSVs.
 * The CSV schemas are listed in the README.
 */

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <type_traits>
#include <string>
#include <vector>

#include "simct/addressing.hpp"
#include "simct/error.hpp"
#include "simct/hostgen.hpp"
#include "simct/stats.hpp"
#include "simct/system.hpp"

namespace simct::exp {

enum class Kind : std::uint8_t { GupsSweep, LowloadStream, QosFourport, Combinations, PortSweep, TraceReplay };

inline const char* kind_name(Kind k) {
  switch (k) {
    case Kind::GupsSweep: return "gups";
    case Kind::LowloadStream: return "lowload";
    case Kind::QosFourport: return "qos";
    case Kind::Combinations: return "combos";
    case Kind::PortSweep: return "portsweep";
    case Kind::TraceReplay: return "trace";
  }
  return "?";
}

inline std::optional<Kind> kind_from_name(const std::string& s) {
  for (Kind k : {Kind::GupsSweep, Kind::LowloadStream, Kind::QosFourport, Kind::Combinations, Kind::PortSweep,
                 Kind::TraceReplay}) {
    if (s == kind_name(k)) return k;
  }
  return std::nullopt;
}

struct ExperimentSpec {
  Kind kind = Kind::GupsSweep;
  DeviceConfig device;
  unsigned tag_pool = 64;
  sim::SimTime issue_period_ps = 5333;
  /// Time requests from tag allocation, so host-side queueing behind a
  /// back-pressured link counts towards latency.
  bool latency_from_tag = true;
  std::uint64_t seed = 1;
  std::string out = "out";

  double warmup_us = 20.0;
  double duration_us = 2000.0;  ///< measurement window per point
  std::vector<unsigned> sizes{16, 32, 64, 128};
  std::vector<std::string> patterns;  ///< empty: every standard pattern
  unsigned ports = 9;
  double read_fraction = 1.0;

  unsigned stream_min = 1;
  unsigned stream_max = 350;
  unsigned stream_step = 1;
  std::vector<unsigned> stream_vaults;  ///< empty: all vaults
  unsigned stream_ports = 2;
  /// Issue slot of the trace-fed stream ports, slower than the free-running
  /// generators because they are fed from host software.
  sim::SimTime stream_issue_period_ps = 20'000;

  unsigned qos_vault = 1;

  unsigned sample = 0;  ///< combinations to run; 0 runs all 1820
  double heatmap_bin_ns = 20.0;

  unsigned ports_min = 1;
  unsigned ports_max = 9;
  double saturation_fraction = 0.98;

  std::string trace_file;

  void check() const {
    device.check();
    if (!(duration_us > 0.0) || warmup_us < 0.0) throw ConfigError("duration must be positive, warmup non-negative");
    for (unsigned s : sizes) {
      if (!protocol::is_flit_multiple(s)) throw ConfigError("sizes must be 16..128 in 16 B steps");
    }
    if (ports < 1 || ports > 9) throw ConfigError("ports must be 1..9");
    if (stream_min < 1 || stream_max < stream_min || stream_step < 1) throw ConfigError("bad stream range");
    if (stream_ports < 1 || stream_ports > 9) throw ConfigError("stream_ports must be 1..9");
    if (stream_issue_period_ps == 0) throw ConfigError("stream issue period must be positive");
    for (unsigned v : stream_vaults) {
      if (v >= addr::kVaults) throw ConfigError("stream vault out of range");
    }
    if (qos_vault >= addr::kVaults) throw ConfigError("qos_vault out of range");
    if (ports_min < 1 || ports_max > 9 || ports_min > ports_max) throw ConfigError("bad port sweep range");
    if (!(heatmap_bin_ns > 0.0)) throw ConfigError("heatmap bin must be positive");
    if (!(saturation_fraction > 0.0 && saturation_fraction <= 1.0)) throw ConfigError("bad saturation fraction");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& v) {
  std::istringstream in(v);
  T x{};
  in >> x;
  if (in.fail() || !(in >> std::ws).eof()) throw std::invalid_argument(v);
  if constexpr (std::is_unsigned_v<T>) {
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
  }
  return x;
}

inline bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument(v);
}

inline std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::ostringstream o;
  for (std::size_t i = 0; i < xs.size(); ++i) o << (i ? "," : "") << xs[i];
  return o.str();
}

/// One spec key: how to read it and how to write it back.
struct Field {
  const char* key;
  std::function<void(ExperimentSpec&, const std::string&)> set;
  std::function<std::string(const ExperimentSpec&)> get;
};

template <typename T, typename Ref>
Field num(const char* key, Ref ref) {
  return {key, [ref](ExperimentSpec& s, const std::string& v) { ref(s) = parse_number<T>(v); },
          [ref](const ExperimentSpec& s) {
            if constexpr (std::is_floating_point_v<T>) {
              return fmt_double(ref(const_cast<ExperimentSpec&>(s)));
            } else {
              return std::to_string(ref(const_cast<ExperimentSpec&>(s)));
            }
          }};
}

inline const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      {"kind",
       [](ExperimentSpec& s, const std::string& v) {
         auto k = kind_from_name(v);
         if (!k) throw std::invalid_argument(v);
         s.kind = *k;
       },
       [](const ExperimentSpec& s) { return std::string(kind_name(s.kind)); }},
      num<std::uint64_t>("seed", [](ExperimentSpec& s) -> std::uint64_t& { return s.seed; }),
      {"out", [](ExperimentSpec& s, const std::string& v) { s.out = v; },
       [](const ExperimentSpec& s) { return s.out; }},
      num<double>("warmup_us", [](ExperimentSpec& s) -> double& { return s.warmup_us; }),
      num<double>("duration_us", [](ExperimentSpec& s) -> double& { return s.duration_us; }),
      {"sizes",
       [](ExperimentSpec& s, const std::string& v) {
         s.sizes.clear();
         for (const auto& x : split_list(v)) s.sizes.push_back(parse_number<unsigned>(x));
       },
       [](const ExperimentSpec& s) { return join(s.sizes); }},
      {"patterns", [](ExperimentSpec& s, const std::string& v) { s.patterns = split_list(v); },
       [](const ExperimentSpec& s) { return join(s.patterns); }},
      num<unsigned>("ports", [](ExperimentSpec& s) -> unsigned& { return s.ports; }),
      num<double>("read_fraction", [](ExperimentSpec& s) -> double& { return s.read_fraction; }),
      num<unsigned>("stream_min", [](ExperimentSpec& s) -> unsigned& { return s.stream_min; }),
      num<unsigned>("stream_max", [](ExperimentSpec& s) -> unsigned& { return s.stream_max; }),
      num<unsigned>("stream_step", [](ExperimentSpec& s) -> unsigned& { return s.stream_step; }),
      {"stream_vaults",
       [](ExperimentSpec& s, const std::string& v) {
         s.stream_vaults.clear();
         for (const auto& x : split_list(v)) s.stream_vaults.push_back(parse_number<unsigned>(x));
       },
       [](const ExperimentSpec& s) { return join(s.stream_vaults); }},
      num<unsigned>("stream_ports", [](ExperimentSpec& s) -> unsigned& { return s.stream_ports; }),
      num<sim::SimTime>("stream_issue_period_ps",
                        [](ExperimentSpec& s) -> sim::SimTime& { return s.stream_issue_period_ps; }),
      num<unsigned>("qos_vault", [](ExperimentSpec& s) -> unsigned& { return s.qos_vault; }),
      num<unsigned>("sample", [](ExperimentSpec& s) -> unsigned& { return s.sample; }),
      num<double>("heatmap_bin_ns", [](ExperimentSpec& s) -> double& { return s.heatmap_bin_ns; }),
      num<unsigned>("ports_min", [](ExperimentSpec& s) -> unsigned& { return s.ports_min; }),
      num<unsigned>("ports_max", [](ExperimentSpec& s) -> unsigned& { return s.ports_max; }),
      num<double>("saturation_fraction", [](ExperimentSpec& s) -> double& { return s.saturation_fraction; }),
      {"trace_file", [](ExperimentSpec& s, const std::string& v) { s.trace_file = v; },
       [](const ExperimentSpec& s) { return s.trace_file; }},
      num<unsigned>("host.tag_pool", [](ExperimentSpec& s) -> unsigned& { return s.tag_pool; }),
      num<sim::SimTime>("host.issue_period_ps", [](ExperimentSpec& s) -> sim::SimTime& { return s.issue_period_ps; }),
      num<sim::SimTime>("host.tx_latency_ps",
                        [](ExperimentSpec& s) -> sim::SimTime& { return s.device.host.tx_latency_ps; }),
      num<sim::SimTime>("host.rx_latency_ps",
                        [](ExperimentSpec& s) -> sim::SimTime& { return s.device.host.rx_latency_ps; }),
      num<unsigned>("host.tx_fifo_depth", [](ExperimentSpec& s) -> unsigned& { return s.device.host.tx_fifo_depth; }),
      num<sim::SimTime>("host.link_latency_ps",
                        [](ExperimentSpec& s) -> sim::SimTime& { return s.device.host.link_latency_ps; }),
      {"noc.virtual_output_queues",
       [](ExperimentSpec& s, const std::string& v) { s.device.noc.virtual_output_queues = parse_bool(v); },
       [](const ExperimentSpec& s) { return std::string(s.device.noc.virtual_output_queues ? "true" : "false"); }},
      {"noc.arbitration",
       [](ExperimentSpec& s, const std::string& v) {
         if (v == "round_robin") {
           s.device.noc.arbitration = net::Arbitration::RoundRobin;
         } else if (v == "oldest_first") {
           s.device.noc.arbitration = net::Arbitration::OldestFirst;
         } else {
           throw std::invalid_argument("expected round_robin or oldest_first");
         }
       },
       [](const ExperimentSpec& s) {
         return std::string(s.device.noc.arbitration == net::Arbitration::RoundRobin ? "round_robin" : "oldest_first");
       }},
      {"host.latency_from_tag",
       [](ExperimentSpec& s, const std::string& v) { s.latency_from_tag = parse_bool(v); },
       [](const ExperimentSpec& s) { return std::string(s.latency_from_tag ? "true" : "false"); }},
      {"host.bank_credits",
       [](ExperimentSpec& s, const std::string& v) { s.device.host.bank_credits = parse_bool(v); },
       [](const ExperimentSpec& s) { return std::string(s.device.host.bank_credits ? "true" : "false"); }},
      num<unsigned>("link.links", [](ExperimentSpec& s) -> unsigned& { return s.device.link.links; }),
      num<unsigned>("link.lanes", [](ExperimentSpec& s) -> unsigned& { return s.device.link.lanes_per_link; }),
      num<double>("link.lane_gbps", [](ExperimentSpec& s) -> double& { return s.device.link.lane_gbps; }),
      num<sim::SimTime>("noc.flit_ps", [](ExperimentSpec& s) -> sim::SimTime& { return s.device.noc.flit_ps; }),
      num<sim::SimTime>("noc.hop_latency_ps",
                        [](ExperimentSpec& s) -> sim::SimTime& { return s.device.noc.hop_latency_ps; }),
      num<unsigned>("noc.buffer_depth", [](ExperimentSpec& s) -> unsigned& { return s.device.noc.switch_buffer_depth; }),
      num<double>("dram.t_rcd_ns", [](ExperimentSpec& s) -> double& { return s.device.dram.t_rcd_ns; }),
      num<double>("dram.t_cl_ns", [](ExperimentSpec& s) -> double& { return s.device.dram.t_cl_ns; }),
      num<double>("dram.t_rp_ns", [](ExperimentSpec& s) -> double& { return s.device.dram.t_rp_ns; }),
      num<unsigned>("vault.bus_width_bytes", [](ExperimentSpec& s) -> unsigned& { return s.device.vault.bus_width_bytes; }),
      num<sim::SimTime>("vault.bus_beat_ps", [](ExperimentSpec& s) -> sim::SimTime& { return s.device.vault.bus_beat_ps; }),
      num<unsigned>("vault.input_queue_depth",
                    [](ExperimentSpec& s) -> unsigned& { return s.device.vault.input_queue_depth; }),
      num<unsigned>("vault.bank_queue_depth",
                    [](ExperimentSpec& s) -> unsigned& { return s.device.vault.bank_queue_depth; }),
      num<unsigned>("vault.response_queue_depth",
                    [](ExperimentSpec& s) -> unsigned& { return s.device.vault.response_queue_depth; }),
      num<sim::SimTime>("vault.controller_latency_ps",
                        [](ExperimentSpec& s) -> sim::SimTime& { return s.device.vault.controller_latency_ps; }),
      num<sim::SimTime>("vault.passthrough_ps",
                        [](ExperimentSpec& s) -> sim::SimTime& { return s.device.vault.passthrough_ps; }),
      num<unsigned>("map.block_size_bytes", [](ExperimentSpec& s) -> unsigned& { return s.device.map.block_size_bytes; }),
  };
  return f;
}

}  // namespace detail

/// Reads a spec. Lines are `key = value`; `#` starts a comment. Unknown
/// keys and malformed values are rejected with the offending line number.
inline ExperimentSpec parse_spec(std::istream& in) {
  ExperimentSpec s;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", n);
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    const auto& fs = detail::fields();
    auto it = std::find_if(fs.begin(), fs.end(), [&](const detail::Field& f) { return key == f.key; });
    if (it == fs.end()) throw ParseError("unknown key '" + key + "'", n);
    try {
      it->set(s, value);
    } catch (const std::invalid_argument&) {
      throw ParseError("bad value for '" + key + "': '" + value + "'", n);
    }
  }
  return s;
}

inline ExperimentSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open spec file " + path);
  return parse_spec(in);
}

/// Writes every key, in a fixed order; parse_spec(to_text(s)) reproduces s.
inline std::string to_text(const ExperimentSpec& s) {
  std::string out;
  for (const auto& f : detail::fields()) out += std::string(f.key) + " = " + f.get(s) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Access patterns

struct Pattern {
  std::string name;
  std::uint64_t mask = 0;
  std::uint64_t antimask = 0;
};

/// k banks (power of two) of vault 0.
inline Pattern banks_pattern(unsigned k, const addr::AddressMapConfig& map) {
  if (k == 0 || k > addr::kBanksPerVault || (k & (k - 1)) != 0) throw ConfigError("bank count must be 1,2,4,8,16");
  std::uint64_t m = map.vault_field();
  for (unsigned b = 0; b < addr::kBankBits; ++b) {
    if ((1u << b) >= k) m |= std::uint64_t{1} << (map.bank_shift() + b);
  }
  return {std::to_string(k) + "bank", m, 0};
}

/// Vaults 0..k-1 (power of two), all banks.
inline Pattern vaults_pattern(unsigned k, const addr::AddressMapConfig& map) {
  if (k == 0 || k > addr::kVaults || (k & (k - 1)) != 0) throw ConfigError("vault count must be 1,2,4,8,16");
  std::uint64_t m = 0;
  for (unsigned b = 0; b < addr::kVaultBits; ++b) {
    if ((1u << b) >= k) m |= std::uint64_t{1} << (map.vault_shift() + b);
  }
  return {std::to_string(k) + "vault", m, 0};
}

/// Every bank of one vault.
inline Pattern vault_pinned(unsigned v, const addr::AddressMapConfig& map) {
  if (v >= addr::kVaults) throw ConfigError("vault out of range");
  const std::uint64_t ones = std::uint64_t{v} << map.vault_shift();
  return {"v" + std::to_string(v), map.vault_field() & ~ones, ones};
}

/// The standard sweep, least to most distributed. All 16 banks of one vault
/// and "1 vault" are the same pattern and appear once, as 16bank.
inline std::vector<Pattern> standard_patterns(const addr::AddressMapConfig& map) {
  std::vector<Pattern> out;
  for (unsigned k : {1u, 2u, 4u, 8u, 16u}) out.push_back(banks_pattern(k, map));
  for (unsigned k : {2u, 4u, 8u, 16u}) out.push_back(vaults_pattern(k, map));
  return out;
}

inline Pattern pattern_by_name(const std::string& name, const addr::AddressMapConfig& map) {
  if (name == "1vault") return banks_pattern(16, map);
  for (const auto& p : standard_patterns(map)) {
    if (p.name == name) return p;
  }
  throw ConfigError("unknown pattern '" + name + "'");
}

inline std::vector<Pattern> selected_patterns(const ExperimentSpec& s) {
  if (s.patterns.empty()) return standard_patterns(s.device.map);
  std::vector<Pattern> out;
  for (const auto& n : s.patterns) out.push_back(pattern_by_name(n, s.device.map));
  return out;
}

// ---------------------------------------------------------------------------
// Reports

struct ProbeStat {
  std::string name;
  double occupancy = 0.0;
  double arrival_rate = 0.0;  ///< per ns
  double sojourn_ns = 0.0;
  std::uint64_t departures = 0;

  /// |L - lambda W| / lambda W, or 0 when lambda W is zero.
  double little_error() const {
    const double lw = arrival_rate * sojourn_ns;
    return lw > 0.0 ? std::abs(occupancy - lw) / lw : 0.0;
  }
};

struct PointReport {
  std::string experiment;
  std::string pattern;
  unsigned size = 0;
  unsigned ports = 0;
  long param = 0;  ///< stream length, QoS position or combination index
  double window_ns = 0.0;
  host::Monitor monitor;
  std::vector<host::Monitor> per_port;
  std::vector<mem::VaultCounters> vaults;
  double request_gbps = 0.0;
  double response_gbps = 0.0;
  double payload_gbps = 0.0;  ///< data delivered, both directions, no packet overhead
  double vault_bus_gbps = 0.0;  ///< busiest vault, data beats over the window
  double request_link_util = 0.0;
  double response_link_util = 0.0;
  double outstanding = 0.0;  ///< reads per ns times mean read latency
  std::vector<ProbeStat> probes;

  double total_gbps() const { return request_gbps + response_gbps; }
  double mean_latency() const { return monitor.mean_read_latency(); }
};

/// Runtime-only options (not read from experiment files).
struct RunOptions {
  std::ostream* trace_events = nullptr;
};

namespace detail {

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  host::Prng p(a ^ (b * 0x9E3779B97F4A7C15ULL));
  return p.next();
}

inline host::PortConfig port_config(const ExperimentSpec& s, unsigned id, unsigned size, const Pattern& p) {
  host::PortConfig pc;
  pc.id = id;
  pc.req_size = size;
  pc.mask = p.mask;
  pc.antimask = p.antimask;
  pc.read_fraction = s.read_fraction;
  pc.tag_pool = s.tag_pool;
  pc.issue_period_ps = s.issue_period_ps;
  pc.stamp_at_submit = s.latency_from_tag;
  return pc;
}

/// Collects everything a report needs once the system has run.
inline void fill_report(PointReport& r, const System& sys, sim::SimTime begin, sim::SimTime end) {
  r.window_ns = sim::to_ns(end - begin);
  for (const auto& p : sys.ports()) {
    r.per_port.push_back(p->monitor());
    r.monitor.merge(p->monitor());
  }
  const double w = r.window_ns;
  if (w > 0.0) {
    const auto bw = stats::bandwidth({w, r.monitor.request_bytes, r.monitor.response_bytes});
    r.request_gbps = bw.request_gbps;
    r.response_gbps = bw.response_gbps;
    r.payload_gbps = static_cast<double>(r.monitor.payload_bytes) / w;
  }
  const auto& vc = sys.config().vault;
  for (const auto& v : sys.vaults()) {
    r.vaults.push_back(v->counters());
    if (w > 0.0) {
      r.vault_bus_gbps =
          std::max(r.vault_bus_gbps, static_cast<double>(v->counters().beats_in_window) * vc.bus_width_bytes / w);
    }
  }
  auto util = [&](const std::vector<net::Channel*>& chs) {
    double sum = 0.0;
    for (const auto* c : chs) sum += c->busy_in_window_ps();
    const double span = static_cast<double>(end - begin) * static_cast<double>(chs.size());
    return span > 0.0 ? sum / span : 0.0;
  };
  r.request_link_util = util(sys.link_request_channels());
  r.response_link_util = util(sys.link_response_channels());
  if (w > 0.0 && r.monitor.reads > 0) {
    r.outstanding = static_cast<double>(r.monitor.reads) / w * r.monitor.mean_read_latency();
  }
  for (const auto& np : sys.probes()) {
    r.probes.push_back({np.name, np.probe->mean_occupancy(), np.probe->arrival_rate(), np.probe->mean_sojourn_ns(),
                        np.probe->departures()});
  }
}

}  // namespace detail

/// Runs free-running ports for warmup + duration and measures the window.
inline PointReport run_window(const ExperimentSpec& s, std::vector<host::PortConfig> ports, std::uint64_t seed,
                              const RunOptions& opt = {}) {
  const sim::SimTime begin = sim::from_ns(s.warmup_us * 1000.0);
  const sim::SimTime end = begin + sim::from_ns(s.duration_us * 1000.0);
  for (auto& p : ports) p.stop_ps = end;
  System sys(s.device, std::move(ports), seed);
  sys.engine().set_trace(opt.trace_events);
  sys.set_window({begin, end});
  sys.run_until(end);
  PointReport r;
  detail::fill_report(r, sys, begin, end);
  return r;
}

/// Runs until every request of every port has completed; the window is the
/// whole run.
inline PointReport run_complete(const ExperimentSpec& s, std::vector<host::PortConfig> ports, std::uint64_t seed,
                                const RunOptions& opt = {}) {
  System sys(s.device, std::move(ports), seed);
  sys.engine().set_trace(opt.trace_events);
  sys.set_window({0, sim::kForever});
  sys.run_to_completion();
  PointReport r;
  detail::fill_report(r, sys, 0, std::max<sim::SimTime>(sys.engine().now(), 1));
  return r;
}

// ---------------------------------------------------------------------------
// GUPS sweep

inline std::vector<PointReport> run_gups_sweep(const ExperimentSpec& s, const RunOptions& opt = {}) {
  s.check();
  std::vector<PointReport> out;
  for (const auto& pat : selected_patterns(s)) {
    for (unsigned size : s.sizes) {
      std::vector<host::PortConfig> pcs;
      for (unsigned i = 0; i < s.ports; ++i) pcs.push_back(detail::port_config(s, i, size, pat));
      PointReport r = run_window(s, std::move(pcs), detail::mix(s.seed, size), opt);
      r.experiment = "gups";
      r.pattern = pat.name;
      r.size = size;
      r.ports = s.ports;
      out.push_back(std::move(r));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Low-load streams

/// n random reads within vault v, spread over its 16 banks.
inline host::TraceStream stream_trace(unsigned n, unsigned vault, unsigned size, const addr::AddressMapConfig& map,
                                      std::uint64_t seed) {
  host::PortConfig pc;
  pc.req_size = size;
  const Pattern p = vault_pinned(vault, map);
  pc.mask = p.mask;
  pc.antimask = p.antimask;
  host::AddressGen gen(pc, seed);
  host::TraceStream t;
  t.reserve(n);
  for (unsigned i = 0; i < n; ++i) t.push_back({protocol::Command::Read, gen.next(), size});
  return t;
}

/// One stream of n requests into one vault, dealt round-robin to the stream
/// ports. Every request is measured.
inline PointReport run_stream(const ExperimentSpec& s, unsigned n, unsigned vault, unsigned size,
                              const RunOptions& opt = {}) {
  const std::uint64_t seed = detail::mix(detail::mix(s.seed, n), vault * 1000u + size);
  const host::TraceStream all = stream_trace(n, vault, size, s.device.map, seed);
  std::vector<host::PortConfig> pcs(s.stream_ports);
  for (unsigned i = 0; i < s.stream_ports; ++i) {
    pcs[i].id = i;
    pcs[i].mode = host::AddressMode::Trace;
    pcs[i].req_size = size;
    pcs[i].tag_pool = s.tag_pool;
    pcs[i].issue_period_ps = s.stream_issue_period_ps;
    pcs[i].stamp_at_submit = true;
  }
  for (unsigned k = 0; k < n; ++k) pcs[k % s.stream_ports].trace.push_back(all[k]);
  PointReport r = run_complete(s, std::move(pcs), seed, opt);
  r.experiment = "lowload";
  r.pattern = "v" + std::to_string(vault);
  r.size = size;
  r.ports = s.stream_ports;
  r.param = n;
  return r;
}

/// Mean latency per (size, n) over all stream vaults, one row per pair.
inline std::vector<PointReport> run_lowload_stream(const ExperimentSpec& s, const RunOptions& opt = {}) {
  s.check();
  std::vector<unsigned> vaults = s.stream_vaults;
  if (vaults.empty()) {
    for (unsigned v = 0; v < addr::kVaults; ++v) vaults.push_back(v);
  }
  std::vector<PointReport> out;
  for (unsigned size : s.sizes) {
    for (unsigned n = s.stream_min; n <= s.stream_max; n += s.stream_step) {
      PointReport agg;
      agg.experiment = "lowload";
      agg.pattern = vaults.size() == 1 ? "v" + std::to_string(vaults[0]) : std::to_string(vaults.size()) + "vaults";
      agg.size = size;
      agg.ports = s.stream_ports;
      agg.param = n;
      double wsum = 0.0;
      std::uint64_t req = 0, resp = 0;
      for (unsigned v : vaults) {
        const PointReport r = run_stream(s, n, v, size, opt);
        agg.monitor.merge(r.monitor);
        wsum += r.window_ns;
        req += r.monitor.request_bytes;
        resp += r.monitor.response_bytes;
      }
      agg.window_ns = wsum;
      if (wsum > 0.0) {
        agg.request_gbps = static_cast<double>(req) / wsum;
        agg.response_gbps = static_cast<double>(resp) / wsum;
        agg.payload_gbps = static_cast<double>(agg.monitor.payload_bytes) / wsum;
      }
      out.push_back(std::move(agg));
    }
  }
  return out;
}

/// Shape of a latency-versus-stream-length curve for one size.
struct LowloadShape {
  unsigned size = 0;
  stats::LinearFit linear;   ///< n <= linear_max
  stats::LinearFit plateau;  ///< n >= plateau_min
  double plateau_level = 0.0;
  /// |plateau slope| / linear slope; infinity when the linear slope is not positive.
  double slope_ratio() const {
    return linear.slope > 0.0 ? std::abs(plateau.slope) / linear.slope : std::numeric_limits<double>::infinity();
  }
};

inline std::vector<LowloadShape> analyze_lowload(const std::vector<PointReport>& rows, unsigned linear_max = 100,
                                                 unsigned plateau_min = 200) {
  std::map<unsigned, std::pair<std::vector<double>, std::vector<double>>> lin, pla;
  for (const auto& r : rows) {
    const double n = static_cast<double>(r.param);
    if (r.param <= static_cast<long>(linear_max)) {
      lin[r.size].first.push_back(n);
      lin[r.size].second.push_back(r.mean_latency());
    }
    if (r.param >= static_cast<long>(plateau_min)) {
      pla[r.size].first.push_back(n);
      pla[r.size].second.push_back(r.mean_latency());
    }
  }
  std::vector<LowloadShape> out;
  for (const auto& [size, xy] : lin) {
    auto it = pla.find(size);
    if (xy.first.size() < 2 || it == pla.end() || it->second.first.size() < 2) continue;
    LowloadShape sh;
    sh.size = size;
    sh.linear = stats::fit_line(xy.first, xy.second);
    sh.plateau = stats::fit_line(it->second.first, it->second.second);
    double sum = 0.0;
    for (double y : it->second.second) sum += y;
    sh.plateau_level = sum / static_cast<double>(it->second.second.size());
    out.push_back(sh);
  }
  return out;
}

// ---------------------------------------------------------------------------
// QoS: three ports pinned to one vault, a fourth visiting every vault

inline std::vector<PointReport> run_qos_fourport(const ExperimentSpec& s, const RunOptions& opt = {}) {
  s.check();
  std::vector<PointReport> out;
  const Pattern pinned = vault_pinned(s.qos_vault, s.device.map);
  for (unsigned size : s.sizes) {
    for (unsigned pos = 0; pos < addr::kVaults; ++pos) {
      std::vector<host::PortConfig> pcs;
      for (unsigned i = 0; i < 3; ++i) pcs.push_back(detail::port_config(s, i, size, pinned));
      pcs.push_back(detail::port_config(s, 3, size, vault_pinned(pos, s.device.map)));
      PointReport r = run_window(s, std::move(pcs), detail::mix(s.seed, size), opt);
      r.experiment = "qos";
      r.pattern = "v" + std::to_string(s.qos_vault) + "+v" + std::to_string(pos);
      r.size = size;
      r.ports = 4;
      r.param = pos;
      out.push_back(std::move(r));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Four-vault combinations

using Combination = std::array<unsigned, 4>;

/// All C(16, 4) = 1820 vault subsets in lexicographic order.
inline std::vector<Combination> all_combinations() {
  std::vector<Combination> out;
  for (unsigned a = 0; a < 16; ++a)
    for (unsigned b = a + 1; b < 16; ++b)
      for (unsigned c = b + 1; c < 16; ++c)
        for (unsigned d = c + 1; d < 16; ++d) out.push_back({a, b, c, d});
  return out;
}

/// Either every combination or `sample` distinct ones drawn with the seed,
/// returned in lexicographic order.
inline std::vector<Combination> chosen_combinations(const ExperimentSpec& s) {
  auto all = all_combinations();
  if (s.sample == 0 || s.sample >= all.size()) return all;
  host::Prng prng(detail::mix(s.seed, 0xC0B5));
  for (std::size_t i = 0; i < s.sample; ++i) {
    const std::size_t j = i + prng.below(all.size() - i);
    std::swap(all[i], all[j]);
  }
  all.resize(s.sample);
  std::sort(all.begin(), all.end());
  return all;
}

struct CombinationResult {
  std::vector<PointReport> points;  ///< one per (size, combination)
  /// size -> vault -> histogram of the combination averages the vault took part in.
  std::map<unsigned, std::map<unsigned, stats::Histogram>> heatmap;
};

struct SizeSpread {
  unsigned size = 0;
  std::size_t samples = 0;
  double mean_ns = 0.0;
  double stddev_ns = 0.0;
};

inline CombinationResult run_combinations(const ExperimentSpec& s, const RunOptions& opt = {}) {
  s.check();
  CombinationResult res;
  const auto combos = chosen_combinations(s);
  const auto all = all_combinations();
  for (unsigned size : s.sizes) {
    for (const auto& c : combos) {
      std::vector<host::PortConfig> pcs;
      for (unsigned i = 0; i < 4; ++i) pcs.push_back(detail::port_config(s, i, size, vault_pinned(c[i], s.device.map)));
      PointReport r = run_window(s, std::move(pcs), detail::mix(s.seed, size), opt);
      r.experiment = "combos";
      r.pattern = "v" + std::to_string(c[0]) + "-v" + std::to_string(c[1]) + "-v" + std::to_string(c[2]) + "-v" +
                  std::to_string(c[3]);
      r.size = size;
      r.ports = 4;
      r.param = std::lower_bound(all.begin(), all.end(), c) - all.begin();
      for (unsigned v : c) {
        auto& h = res.heatmap[size].try_emplace(v, s.heatmap_bin_ns).first->second;
        if (r.monitor.reads > 0) h.add(r.mean_latency());
      }
      res.points.push_back(std::move(r));
    }
  }
  return res;
}

/// Mean and population standard deviation, per size, of the average latency
/// associated with each (vault, combination) pair.
inline std::vector<SizeSpread> combination_spread(const CombinationResult& res) {
  std::map<unsigned, stats::Accumulator> acc;
  for (const auto& p : res.points) {
    if (p.monitor.reads == 0) continue;
    for (int k = 0; k < 4; ++k) acc[p.size].add(p.mean_latency());
  }
  std::vector<SizeSpread> out;
  for (const auto& [size, a] : acc) out.push_back({size, a.count(), a.mean(), a.stddev()});
  return out;
}

// ---------------------------------------------------------------------------
// Port sweep with outstanding-request estimates

struct OutstandingEstimate {
  std::string pattern;
  unsigned size = 0;
  double plateau_gbps = 0.0;
  unsigned saturated_from = 0;  ///< fewest ports within the saturation fraction of the plateau
  double outstanding = 0.0;     ///< largest rate x latency over the saturated points
};

inline std::vector<PointReport> run_port_sweep(const ExperimentSpec& s, const RunOptions& opt = {}) {
  s.check();
  std::vector<PointReport> out;
  for (const auto& pat : selected_patterns(s)) {
    for (unsigned size : s.sizes) {
      for (unsigned n = s.ports_min; n <= s.ports_max; ++n) {
        std::vector<host::PortConfig> pcs;
        for (unsigned i = 0; i < n; ++i) pcs.push_back(detail::port_config(s, i, size, pat));
        PointReport r = run_window(s, std::move(pcs), detail::mix(s.seed, size), opt);
        r.experiment = "portsweep";
        r.pattern = pat.name;
        r.size = size;
        r.ports = n;
        r.param = n;
        out.push_back(std::move(r));
      }
    }
  }
  return out;
}

/// Saturated points are those whose response bandwidth is within
/// `fraction` of the best seen for the (pattern, size); at those points
/// outstanding = reads per ns x mean read latency, and the largest is kept.
inline std::vector<OutstandingEstimate> estimate_outstanding(const std::vector<PointReport>& sweep,
                                                             double fraction = 0.98) {
  std::vector<OutstandingEstimate> out;
  std::map<std::pair<std::string, unsigned>, std::size_t> index;
  std::vector<std::vector<const PointReport*>> groups;
  for (const auto& r : sweep) {
    auto key = std::make_pair(r.pattern, r.size);
    auto [it, fresh] = index.try_emplace(key, groups.size());
    if (fresh) groups.emplace_back();
    groups[it->second].push_back(&r);
  }
  for (const auto& g : groups) {
    OutstandingEstimate e;
    e.pattern = g.front()->pattern;
    e.size = g.front()->size;
    for (const auto* r : g) e.plateau_gbps = std::max(e.plateau_gbps, r->response_gbps);
    for (const auto* r : g) {
      if (r->response_gbps >= fraction * e.plateau_gbps) {
        if (e.saturated_from == 0 || r->ports < e.saturated_from) e.saturated_from = r->ports;
        e.outstanding = std::max(e.outstanding, r->outstanding);
      }
    }
    out.push_back(e);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trace replay

inline PointReport run_trace_replay(const ExperimentSpec& s, const host::TraceStream& trace,
                                    const RunOptions& opt = {}) {
  s.check();
  host::PortConfig pc;
  pc.id = 0;
  pc.mode = host::AddressMode::Trace;
  pc.tag_pool = s.tag_pool;
  pc.issue_period_ps = s.issue_period_ps;
  pc.stamp_at_submit = s.latency_from_tag;
  pc.record_writes = true;
  pc.trace = trace;
  PointReport r = run_complete(s, {pc}, s.seed, opt);
  r.experiment = "trace";
  r.pattern = "trace";
  r.ports = 1;
  r.param = static_cast<long>(trace.size());
  return r;
}

// ---------------------------------------------------------------------------
// CSV

namespace csv {

inline std::string num(double x, int decimals = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, x);
  return buf;
}

inline constexpr const char* kPointHeader =
    "experiment,pattern,size,ports,param,reads,writes,mean_latency_ns,min_latency_ns,max_latency_ns,"
    "stddev_latency_ns,request_gbps,response_gbps,total_gbps,payload_gbps,vault_bus_gbps,request_link_util,"
    "response_link_util,outstanding";

inline void write_points(std::ostream& o, const std::vector<PointReport>& rows) {
  o << kPointHeader << '\n';
  for (const auto& r : rows) {
    const auto& m = r.monitor;
    o << r.experiment << ',' << r.pattern << ',' << r.size << ',' << r.ports << ',' << r.param << ',' << m.reads << ','
      << m.writes << ',' << num(m.mean_read_latency()) << ',' << num(m.min_latency) << ',' << num(m.max_latency)
      << ',' << num(m.read_latency.stddev()) << ',' << num(r.request_gbps, 4) << ',' << num(r.response_gbps, 4) << ','
      << num(r.total_gbps(), 4) << ',' << num(r.payload_gbps, 4) << ',' << num(r.vault_bus_gbps, 4) << ',' << num(r.request_link_util, 4) << ','
      << num(r.response_link_util, 4) << ',' << num(r.outstanding, 2) << '\n';
  }
}

inline void write_lowload_fit(std::ostream& o, const std::vector<LowloadShape>& shapes) {
  o << "size,linear_slope_ns,linear_intercept_ns,linear_r2,plateau_level_ns,plateau_slope_ns,slope_ratio\n";
  for (const auto& s : shapes) {
    o << s.size << ',' << num(s.linear.slope, 4) << ',' << num(s.linear.intercept) << ',' << num(s.linear.r2, 5)
      << ',' << num(s.plateau_level) << ',' << num(s.plateau.slope, 4) << ',' << num(s.slope_ratio(), 5) << '\n';
  }
}

inline void write_heatmap(std::ostream& o, const CombinationResult& res) {
  o << "size,vault,bin_start_ns,bin_end_ns,count\n";
  for (const auto& [size, per_vault] : res.heatmap) {
    for (const auto& [vault, h] : per_vault) {
      for (const auto& [bin, count] : h.bins()) {
        o << size << ',' << vault << ',' << num(static_cast<double>(bin) * h.width(), 1) << ','
          << num(static_cast<double>(bin + 1) * h.width(), 1) << ',' << count << '\n';
      }
    }
  }
}

inline void write_spread(std::ostream& o, const std::vector<SizeSpread>& rows) {
  o << "size,samples,mean_latency_ns,stddev_latency_ns\n";
  for (const auto& r : rows) o << r.size << ',' << r.samples << ',' << num(r.mean_ns) << ',' << num(r.stddev_ns) << '\n';
}

inline void write_outstanding(std::ostream& o, const std::vector<OutstandingEstimate>& rows) {
  o << "pattern,size,plateau_response_gbps,saturated_from_ports,outstanding\n";
  for (const auto& r : rows) {
    o << r.pattern << ',' << r.size << ',' << num(r.plateau_gbps, 4) << ',' << r.saturated_from << ','
      << num(r.outstanding, 2) << '\n';
  }
}

inline void write_probes(std::ostream& o, const std::vector<PointReport>& rows) {
  o << "experiment,pattern,size,ports,param,queue,occupancy,arrival_rate_per_ns,sojourn_ns,departures,little_error\n";
  for (const auto& r : rows) {
    for (const auto& p : r.probes) {
      o << r.experiment << ',' << r.pattern << ',' << r.size << ',' << r.ports << ',' << r.param << ',' << p.name << ','
        << num(p.occupancy, 4) << ',' << num(p.arrival_rate, 6) << ',' << num(p.sojourn_ns) << ',' << p.departures
        << ',' << num(p.little_error(), 5) << '\n';
    }
  }
}

}  // namespace csv

/// Writes `text` to `path`, throwing ConfigError when it cannot be written.
inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path);
  f << text;
  if (!f) throw ConfigError("write failed for " + path);
}

/// Runs the experiment named by `s.kind` and writes its CSVs into `dir`.
/// Returns the files written, in order.
inline std::vector<std::string> run_and_emit(const ExperimentSpec& s, const std::string& dir,
                                             const RunOptions& opt = {}) {
  std::vector<std::string> files;
  auto emit = [&](const std::string& name, const std::function<void(std::ostream&)>& body) {
    std::ostringstream o;
    body(o);
    const std::string path = dir + "/" + name;
    write_file(path, o.str());
    files.push_back(path);
  };
  switch (s.kind) {
    case Kind::GupsSweep: {
      const auto rows = run_gups_sweep(s, opt);
      emit("gups.csv", [&](std::ostream& o) { csv::write_points(o, rows); });
      break;
    }
    case Kind::LowloadStream: {
      const auto rows = run_lowload_stream(s, opt);
      emit("lowload.csv", [&](std::ostream& o) { csv::write_points(o, rows); });
      emit("lowload_fit.csv", [&](std::ostream& o) { csv::write_lowload_fit(o, analyze_lowload(rows)); });
      break;
    }
    case Kind::QosFourport: {
      const auto rows = run_qos_fourport(s, opt);
      emit("qos.csv", [&](std::ostream& o) { csv::write_points(o, rows); });
      break;
    }
    case Kind::Combinations: {
      const auto res = run_combinations(s, opt);
      emit("combos.csv", [&](std::ostream& o) { csv::write_points(o, res.points); });
      emit("combos_heatmap.csv", [&](std::ostream& o) { csv::write_heatmap(o, res); });
      emit("combos_summary.csv", [&](std::ostream& o) { csv::write_spread(o, combination_spread(res)); });
      break;
    }
    case Kind::PortSweep: {
      const auto rows = run_port_sweep(s, opt);
      emit("portsweep.csv", [&](std::ostream& o) { csv::write_points(o, rows); });
      emit("portsweep_outstanding.csv",
           [&](std::ostream& o) { csv::write_outstanding(o, estimate_outstanding(rows, s.saturation_fraction)); });
      emit("portsweep_queues.csv", [&](std::ostream& o) { csv::write_probes(o, rows); });
      break;
    }
    case Kind::TraceReplay: {
      if (s.trace_file.empty()) throw ConfigError("trace experiment needs trace_file");
      const auto r = run_trace_replay(s, host::load_trace(s.trace_file), opt);
      emit("trace.csv", [&](std::ostream& o) { csv::write_points(o, {r}); });
      break;
    }
  }
  return files;
}

}  // namespace simct::exp
