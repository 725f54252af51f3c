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
 * @file hostgen.hpp
 * @brief Host ports: address generation, trace replay, tags and monitors.
 */

#pragma once

#include <cstdint>
#include <deque>
#include <fstream>
#include <istream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "simct/error.hpp"
#include "simct/fabric.hpp"
#include "simct/protocol.hpp"
#include "simct/stats.hpp"

namespace simct::host {

/// splitmix64: state += 0x9E3779B97F4A7C15, then two xor-shift-multiply
/// rounds. Same seed, same sequence, on every platform.
class Prng {
 public:
  explicit Prng(std::uint64_t seed = 0) : state_(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  /// Uniform in [0, 1) with 53 bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  /// Uniform in [0, n) (n > 0), rejection-free multiply-shift.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next()) * n) >> 64);
  }

 private:
  std::uint64_t state_;
};

enum class AddressMode : std::uint8_t { Random, Linear, Trace };

struct TraceRecord {
  protocol::Command op = protocol::Command::Read;
  std::uint64_t address = 0;
  unsigned size = 0;
};

using TraceStream = std::vector<TraceRecord>;

/// One record per line: `R|W <hex-address> <size>`. Blank lines and text
/// after `#` are ignored.
inline TraceStream parse_trace(std::istream& in) {
  TraceStream out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string op, addr_text, size_text, extra;
    if (!(ls >> op)) continue;
    if (!(ls >> addr_text >> size_text) || (ls >> extra)) {
      throw ParseError("expected `R|W <hex-address> <size>`", n);
    }
    TraceRecord r;
    if (op == "R" || op == "r") {
      r.op = protocol::Command::Read;
    } else if (op == "W" || op == "w") {
      r.op = protocol::Command::Write;
    } else {
      throw ParseError("unknown operation '" + op + "'", n);
    }
    try {
      std::size_t used = 0;
      r.address = std::stoull(addr_text, &used, 16);
      if (used != addr_text.size()) throw std::invalid_argument("trailing");
      used = 0;
      const unsigned long size = std::stoul(size_text, &used, 10);
      if (used != size_text.size()) throw std::invalid_argument("trailing");
      r.size = static_cast<unsigned>(size);
    } catch (const std::exception&) {
      throw ParseError("bad address or size", n);
    }
    if (r.address > protocol::kAddressMask) throw ParseError("address exceeds 34 bits", n);
    if (!protocol::is_flit_multiple(r.size)) throw ParseError("size must be 16..128 in 16 B steps", n);
    out.push_back(r);
  }
  return out;
}

inline TraceStream load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trace file " + path);
  return parse_trace(in);
}

struct PortConfig {
  unsigned id = 0;
  AddressMode mode = AddressMode::Random;
  double read_fraction = 1.0;  ///< 1 = read only, 0 = write only
  unsigned req_size = 64;
  std::uint64_t mask = 0;      ///< address bits forced to zero
  std::uint64_t antimask = 0;  ///< address bits forced to one
  unsigned tag_pool = 64;
  sim::SimTime issue_period_ps = 5333;
  std::uint64_t budget = 0;  ///< requests to issue; 0 = no limit
  sim::SimTime start_ps = 0;
  sim::SimTime stop_ps = sim::kForever;  ///< no issue at or after this tick
  bool record_writes = false;
  /// When set, a request is timed from the moment its tag is taken, and
  /// requests then wait in a host-side staging queue for their issue slot.
  /// Otherwise the tag is taken and the clock starts at the issue slot.
  bool stamp_at_submit = false;
  TraceStream trace;

  void check() const {
    if (id > 8) throw ValidationError("port id must be 0..8");
    if ((mask & antimask) != 0) throw ValidationError("mask and antimask overlap");
    if (tag_pool < 1 || tag_pool > (1u << protocol::kTagBits)) throw ValidationError("tag pool must be 1..4096");
    if (mode != AddressMode::Trace && !protocol::is_flit_multiple(req_size)) {
      throw ValidationError("request size must be 16..128 in 16 B steps");
    }
    if (!(read_fraction >= 0.0 && read_fraction <= 1.0)) throw ValidationError("read fraction must be in [0, 1]");
    if (issue_period_ps == 0) throw ValidationError("issue period must be positive");
  }
};

/// Address stream for RANDOM and LINEAR modes. Mask bits are cleared, then
/// antimask bits set, then the result is aligned down to the request size.
class AddressGen {
 public:
  AddressGen(const PortConfig& cfg, std::uint64_t seed) : cfg_(cfg), prng_(seed) {}

  std::uint64_t next() {
    std::uint64_t raw;
    if (cfg_.mode == AddressMode::Linear) {
      raw = cursor_;
      cursor_ = (cursor_ + cfg_.req_size) & protocol::kAddressMask;
    } else {
      raw = prng_.next() & protocol::kAddressMask;
    }
    return shape(raw);
  }

  std::uint64_t shape(std::uint64_t raw) const {
    const std::uint64_t a = ((raw & ~cfg_.mask) | cfg_.antimask) & protocol::kAddressMask;
    return a & ~static_cast<std::uint64_t>(cfg_.req_size - 1);
  }

  Prng& prng() { return prng_; }

 private:
  PortConfig cfg_;
  Prng prng_;
  std::uint64_t cursor_ = 0;
};

/// Per-port counters in the style of a hardware monitor: counts, total/min/
/// max read latency and a 16 ns histogram. Latencies are in ns.
struct Monitor {
  std::uint64_t reads = 0;
  std::uint64_t writes = 0;
  double total_read_latency = 0.0;
  double min_latency = 0.0;
  double max_latency = 0.0;
  stats::Histogram histogram{16.0};
  stats::Accumulator read_latency;
  stats::Accumulator write_latency;
  std::uint64_t request_bytes = 0;   ///< request direction, overhead included
  std::uint64_t response_bytes = 0;  ///< response direction, overhead included
  std::uint64_t payload_bytes = 0;   ///< data moved by completed requests, no overhead

  void record_read(double ns) {
    if (reads == 0 || ns < min_latency) min_latency = ns;
    if (reads == 0 || ns > max_latency) max_latency = ns;
    ++reads;
    total_read_latency += ns;
    histogram.add(ns);
    read_latency.add(ns);
  }
  void record_write(double ns) {
    ++writes;
    write_latency.add(ns);
  }
  double mean_read_latency() const { return reads == 0 ? 0.0 : total_read_latency / static_cast<double>(reads); }
  void merge(const Monitor& o) {
    if (o.reads > 0) {
      if (reads == 0 || o.min_latency < min_latency) min_latency = o.min_latency;
      if (reads == 0 || o.max_latency > max_latency) max_latency = o.max_latency;
    }
    reads += o.reads;
    writes += o.writes;
    total_read_latency += o.total_read_latency;
    histogram.merge(o.histogram);
    read_latency.merge(o.read_latency);
    write_latency.merge(o.write_latency);
    request_bytes += o.request_bytes;
    response_bytes += o.response_bytes;
    payload_bytes += o.payload_bytes;
  }
};

/// One host port. Issues a request when a tag is free, the issue period has
/// elapsed and its transmit FIFO has room; otherwise it stalls. With
/// stamp_at_submit the tag is taken first and the request is staged.
class Port final : public fabric::Node {
 public:
  Port(fabric::Context& ctx, PortConfig cfg, std::uint64_t seed, unsigned link, unsigned tx_depth)
      : Node(ctx, "port" + std::to_string(cfg.id)),
        cfg_((cfg.check(), std::move(cfg))),
        gen_(cfg_, seed),
        link_(link),
        fifo_("port" + std::to_string(cfg_.id) + ".tx", tx_depth),
        tag_owner_(cfg_.tag_pool, kNoTxn) {
    for (unsigned t = 0; t < cfg_.tag_pool; ++t) free_tags_.push_back(static_cast<std::uint16_t>(t));
    fifo_.set_producer(this);
  }

  fabric::Buffer& tx() { return fifo_; }
  const PortConfig& config() const { return cfg_; }
  const Monitor& monitor() const { return monitor_; }
  std::uint64_t issued() const { return issued_; }
  std::uint64_t completed() const { return completed_; }
  std::size_t in_flight() const { return cfg_.tag_pool - free_tags_.size(); }
  bool finished_issuing() const { return done_; }
  stats::QueueProbe& in_flight_probe() { return in_flight_probe_; }
  const stats::QueueProbe& in_flight_probe() const { return in_flight_probe_; }

  /// Completions (by completion time) inside the window are recorded.
  void set_window(const fabric::Window& w) { window_ = w; }
  void start() { wake_at(cfg_.start_ps); }

  /// Schedules the completion of `id` at `when` (host return latency applied by the caller).
  void complete_at(sim::SimTime when, fabric::TxnId id) { ctx_.engine.schedule(when, id_, kComplete, id); }

  std::string_view kind_name(std::uint16_t kind) const override {
    return kind == fabric::kWake ? "issue" : "complete";
  }

 protected:
  void work() override {
    const sim::SimTime t = now();
    if (done_) return;
    if (t < cfg_.start_ps) {
      wake_at(cfg_.start_ps);
      return;
    }
    const bool exhausted = t >= cfg_.stop_ps || (cfg_.budget != 0 && issued_ >= cfg_.budget) ||
                           (cfg_.mode == AddressMode::Trace && trace_pos_ >= cfg_.trace.size());
    if (cfg_.stamp_at_submit) {
      if (!exhausted) {
        while (!free_tags_.empty() && !source_empty()) staged_.push_back(create(t));
      }
      if (exhausted && staged_.empty()) {
        done_ = true;
        return;
      }
      if (staged_.empty()) return;  // kicked on completion
    } else if (exhausted) {
      done_ = true;
      return;
    }
    if (t < next_issue_) {
      wake_at(next_issue_);
      return;
    }
    if (!fifo_.has_space()) return;  // kicked on pop
    if (cfg_.stamp_at_submit) {
      fifo_.push(staged_.front(), t, false);
      staged_.pop_front();
    } else {
      if (free_tags_.empty()) return;  // kicked on completion
      fifo_.push(create(t), t, false);
    }
    next_issue_ = t + cfg_.issue_period_ps;
    wake_at(next_issue_);
  }

  void handle(const sim::Event& ev) override { complete(static_cast<fabric::TxnId>(ev.payload), ev.time); }

 private:
  static constexpr std::uint16_t kComplete = 1;
  static constexpr fabric::TxnId kNoTxn = std::numeric_limits<fabric::TxnId>::max();

  bool source_empty() const {
    return (cfg_.budget != 0 && issued_ >= cfg_.budget) ||
           (cfg_.mode == AddressMode::Trace && trace_pos_ >= cfg_.trace.size());
  }

  /// Takes a tag and builds the next request, stamped with `t`.
  fabric::TxnId create(sim::SimTime t) {
    const std::uint16_t tag = free_tags_.front();
    free_tags_.pop_front();
    protocol::Command op;
    std::uint64_t address;
    unsigned size;
    if (cfg_.mode == AddressMode::Trace) {
      const TraceRecord& r = cfg_.trace[trace_pos_++];
      op = r.op;
      address = r.address;
      size = r.size;
    } else {
      op = cfg_.read_fraction >= 1.0                  ? protocol::Command::Read
           : cfg_.read_fraction <= 0.0                ? protocol::Command::Write
           : gen_.prng().uniform() < cfg_.read_fraction ? protocol::Command::Read
                                                        : protocol::Command::Write;
      address = gen_.next();
      size = cfg_.req_size;
    }
    const fabric::TxnId id = ctx_.pool.alloc();
    fabric::Txn& x = ctx_.pool[id];
    x.request = op == protocol::Command::Read ? protocol::make_read_request(tag, address, size)
                                              : protocol::make_write_request(tag, address, size);
    x.request.issue_time = t;
    x.port = static_cast<std::uint8_t>(cfg_.id);
    x.link = static_cast<std::uint8_t>(link_);
    tag_owner_[tag] = id;
    ++issued_;
    in_flight_probe_.enter(t);
    return id;
  }

  void complete(fabric::TxnId id, sim::SimTime t) {
    fabric::Txn& x = ctx_.pool[id];
    const protocol::Packet& resp = x.response;
    if (!x.responding || resp.tag >= cfg_.tag_pool || tag_owner_[resp.tag] != id) {
      throw ModelError(name() + ": completion for a tag that is not in flight");
    }
    tag_owner_[resp.tag] = kNoTxn;
    free_tags_.push_back(resp.tag);
    ++completed_;
    in_flight_probe_.leave(t, x.request.issue_time);
    if (window_.contains(t)) {
      const double ns = sim::to_ns(t - x.request.issue_time);
      if (resp.command == protocol::Command::Read) {
        monitor_.record_read(ns);
      } else if (cfg_.record_writes) {
        monitor_.record_write(ns);
      } else {
        ++monitor_.writes;
      }
      monitor_.request_bytes += protocol::total_bytes(x.request);
      monitor_.response_bytes += protocol::total_bytes(resp);
      monitor_.payload_bytes += x.request.data_bytes;
    }
    ctx_.pool.release(id);
    kick();
  }


  PortConfig cfg_;
  AddressGen gen_;
  unsigned link_;
  fabric::Buffer fifo_;
  std::deque<std::uint16_t> free_tags_;
  std::deque<fabric::TxnId> staged_;
  std::vector<fabric::TxnId> tag_owner_;
  std::size_t trace_pos_ = 0;
  sim::SimTime next_issue_ = 0;
  std::uint64_t issued_ = 0;
  std::uint64_t completed_ = 0;
  bool done_ = false;
  fabric::Window window_;
  Monitor monitor_;
  stats::QueueProbe in_flight_probe_;
};

}  // namespace simct::host
