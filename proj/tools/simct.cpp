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

// Command-line front end: runs experiments and writes their CSV files.

#include <CLI11.hpp>
#include <fmt/core.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "simct/experiments.hpp"

namespace {

using namespace simct;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> duration_us;
  std::optional<std::string> out;
  std::optional<unsigned> sample;
  std::string trace_events;
  std::vector<std::string> set;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--seed", o.seed, "Random seed");
  cmd->add_option("--duration", o.duration_us, "Measurement window per point, in microseconds");
  cmd->add_option("--out", o.out, "Output directory for CSV files");
  cmd->add_option("--sample", o.sample, "Number of vault combinations to run (0 = all)");
  cmd->add_option("--trace-events", o.trace_events, "Write every dispatched event to FILE");
  cmd->add_option("--set", o.set, "Extra spec line KEY=VALUE (repeatable)");
}

exp::ExperimentSpec apply(exp::ExperimentSpec s, const Overrides& o) {
  if (!o.set.empty()) {
    std::string text = exp::to_text(s);
    for (const auto& kv : o.set) text += kv + "\n";
    std::istringstream in(text);
    s = exp::parse_spec(in);
  }
  if (o.seed) s.seed = *o.seed;
  if (o.duration_us) s.duration_us = *o.duration_us;
  if (o.out) s.out = *o.out;
  if (o.sample) s.sample = *o.sample;
  return s;
}

int execute(const exp::ExperimentSpec& s, const Overrides& o) {
  s.check();
  std::filesystem::create_directories(s.out);
  std::ofstream trace;
  exp::RunOptions opt;
  if (!o.trace_events.empty()) {
    trace.open(o.trace_events, std::ios::binary);
    if (!trace) throw ConfigError("cannot write " + o.trace_events);
    trace << "tick,seq,component,kind\n";
    opt.trace_events = &trace;
  }
  fmt::print("running {} (seed {})\n", exp::kind_name(s.kind), s.seed);
  for (const auto& f : exp::run_and_emit(s, s.out, opt)) fmt::print("wrote {}\n", f);
  return 0;
}

std::vector<std::uint8_t> parse_hex(std::string text) {
  std::string digits;
  for (char c : text) {
    if (c == ' ' || c == ':' || c == '_') continue;
    digits += c;
  }
  if (digits.rfind("0x", 0) == 0 || digits.rfind("0X", 0) == 0) digits.erase(0, 2);
  if (digits.size() % 2 != 0) throw FramingError("odd number of hex digits");
  std::vector<std::uint8_t> out;
  for (std::size_t i = 0; i < digits.size(); i += 2) {
    std::size_t used = 0;
    const auto byte = std::stoul(digits.substr(i, 2), &used, 16);
    if (used != 2) throw FramingError("not a hex string");
    out.push_back(static_cast<std::uint8_t>(byte));
  }
  return out;
}

const char* kind_text(protocol::PacketKind k) {
  switch (k) {
    case protocol::PacketKind::Flow: return "flow";
    case protocol::PacketKind::Request: return "request";
    case protocol::PacketKind::Response: return "response";
  }
  return "?";
}

const char* command_text(protocol::Command c) {
  switch (c) {
    case protocol::Command::None: return "none";
    case protocol::Command::Read: return "read";
    case protocol::Command::Write: return "write";
  }
  return "?";
}

int decode(const std::string& hex) {
  const auto bytes = parse_hex(hex);
  const auto p = protocol::decode(bytes);
  const auto d = addr::decode(p.address);
  fmt::print("kind={} command={} tag={} address=0x{:x} vault={} bank={} data_bytes={} flits={}\n", kind_text(p.kind),
             command_text(p.command), p.tag, p.address, d.vault, d.bank, p.data_bytes, protocol::total_flits(p));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simct: discrete-event simulator of a packet-switched stacked memory"};
  app.require_subcommand(1);

  Overrides o;
  std::string spec_file, hex;

  auto* run = app.add_subcommand("run", "Run the experiment described by a spec file");
  run->add_option("spec", spec_file, "Spec file (key = value lines)")->required()->check(CLI::ExistingFile);
  add_common(run, o);

  struct Preset {
    const char* name;
    const char* help;
    exp::Kind kind;
  };
  const Preset presets[] = {
      {"gups", "Random-access sweep over patterns and sizes", exp::Kind::GupsSweep},
      {"lowload", "Stream-length sweep at low load", exp::Kind::LowloadStream},
      {"qos", "Three ports on one vault, a fourth moving over all vaults", exp::Kind::QosFourport},
      {"combos", "Four ports on four distinct vaults", exp::Kind::Combinations},
      {"portsweep", "Port-count sweep with outstanding-request estimates", exp::Kind::PortSweep},
  };
  std::vector<std::pair<CLI::App*, exp::Kind>> preset_cmds;
  for (const auto& p : presets) {
    auto* cmd = app.add_subcommand(p.name, p.help);
    add_common(cmd, o);
    preset_cmds.emplace_back(cmd, p.kind);
  }

  auto* dec = app.add_subcommand("decode", "Decode one packet given as hex bytes");
  dec->add_option("hex", hex, "Wire bytes, e.g. 33050068...")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return execute(apply(exp::load_spec(spec_file), o), o);
    if (*dec) return decode(hex);
    for (const auto& [cmd, kind] : preset_cmds) {
      if (*cmd) {
        exp::ExperimentSpec s;
        s.kind = kind;
        s.out = std::string("out/") + exp::kind_name(kind);
        return execute(apply(s, o), o);
      }
    }
  } catch (const ParseError& e) {
    fmt::print(stderr, "parse error: {}\n", e.what());
    return 2;
  } catch (const FramingError& e) {
    fmt::print(stderr, "framing error: {}\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
