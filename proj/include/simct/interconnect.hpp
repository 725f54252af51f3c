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
 * @file interconnect.hpp
 * @brief External links, quadrant switches and serializing channels.
 *
 * Topology: each link attaches to a home quadrant switch. There is one
 * request switch and one response switch per quadrant and the four switches
 * of a direction are fully connected, so any vault is at most two switch
 * hops from any link. Packets move store-and-forward.
 */

#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "simct/addressing.hpp"
#include "simct/error.hpp"
#include "simct/fabric.hpp"
#include "simct/protocol.hpp"

namespace simct::net {

struct LinkConfig {
  unsigned links = 2;
  unsigned lanes_per_link = 8;
  double lane_gbps = 15.0;

  void check() const {
    if (links == 0 || links > 4) throw ValidationError("links must be 1..4");
    if (lanes_per_link == 0) throw ValidationError("lanes per link must be positive");
    if (!(lane_gbps > 0.0)) throw ValidationError("lane rate must be positive");
  }
  /// Lane rate in Mb/s, exact for 10, 12.5 and 15 Gb/s.
  std::uint64_t lane_mbps() const { return static_cast<std::uint64_t>(lane_gbps * 1000.0 + 0.5); }
};

/// Peak bi-directional bandwidth: links * lanes * rate * 2 / 8, in GB/s.
inline double peak_bandwidth(const LinkConfig& cfg) {
  cfg.check();
  return cfg.links * cfg.lanes_per_link * cfg.lane_gbps * 2.0 / 8.0;
}

inline double per_direction_bandwidth(const LinkConfig& cfg) { return peak_bandwidth(cfg) / 2.0; }

/// Flit period as an exact fraction of a picosecond: num / den ps per flit.
struct FlitRate {
  std::uint64_t num = 1;
  std::uint64_t den = 1;

  static FlitRate of_link(const LinkConfig& cfg) {
    cfg.check();
    // 16 B = 128 bit over lanes * mbps bits per microsecond.
    return {128ULL * 1'000'000ULL, cfg.lanes_per_link * cfg.lane_mbps()};
  }
  static FlitRate of_period(sim::SimTime ps) {
    if (ps == 0) throw ValidationError("flit period must be positive");
    return {ps, 1};
  }
  double flit_ps() const { return static_cast<double>(num) / static_cast<double>(den); }
  double gbps() const { return protocol::kFlitBytes * 1000.0 / flit_ps(); }
};

/// Serialization time of a packet in picoseconds (possibly fractional).
inline double serialize_ps(const protocol::Packet& p, const FlitRate& rate) {
  return protocol::total_flits(p) * rate.flit_ps();
}

/// Link l is homed on quadrant l * 4 / links, spreading links evenly.
inline unsigned home_quadrant(unsigned link, unsigned links) { return link * addr::kQuadrants / links; }

/// Switch hops between a link and a vault: 1 within the home quadrant, else 2.
inline unsigned hop_count(unsigned link, unsigned links, unsigned vault) {
  return addr::quadrant_of(vault) == home_quadrant(link, links) ? 1u : 2u;
}

/// Round-robin selection over n inputs. pick() returns the first eligible
/// index at or after the pointer and moves the pointer just past it.
class RoundRobin {
 public:
  explicit RoundRobin(std::size_t n = 0) : n_(n) {}
  void resize(std::size_t n) {
    n_ = n;
    next_ = 0;
  }
  template <typename Eligible>
  std::ptrdiff_t pick(Eligible&& eligible) {
    for (std::size_t k = 0; k < n_; ++k) {
      const std::size_t i = (next_ + k) % n_;
      if (eligible(i)) {
        next_ = (i + 1) % n_;
        return static_cast<std::ptrdiff_t>(i);
      }
    }
    return -1;
  }

 private:
  std::size_t n_;
  std::size_t next_ = 0;
};

/// End-to-end credit counters, one per destination. A sender takes a credit
/// before a packet leaves and the destination gives it back once it has
/// drained the packet from its queue, so in-flight plus available credits
/// stay constant per destination.
class CreditPool {
 public:
  CreditPool() = default;
  CreditPool(std::size_t destinations, unsigned credits)
      : capacity_(credits), available_(destinations, credits) {}

  std::size_t destinations() const { return available_.size(); }
  unsigned capacity() const { return capacity_; }
  unsigned available(std::size_t dest) const { return available_.at(dest); }
  unsigned in_flight(std::size_t dest) const { return capacity_ - available_.at(dest); }

  void acquire(std::size_t dest) {
    if (available_.at(dest) == 0) throw ModelError("credit underflow");
    --available_[dest];
  }
  void release(std::size_t dest) {
    if (available_.at(dest) >= capacity_) throw ModelError("credit returned twice");
    ++available_[dest];
  }

 private:
  unsigned capacity_ = 0;
  std::vector<unsigned> available_;
};

enum class Arbitration : std::uint8_t {
  RoundRobin,   ///< rotate over inputs
  OldestFirst,  ///< the eligible packet whose transaction was issued first
};

/// Serializing output channel. Arbitrates across its input buffers
/// (round-robin or oldest first; FIFO within each), transmits one packet
/// at a time and delivers it `latency` after the last flit leaves, either
/// into a destination buffer (slot reserved at transmit start) or to a sink.
class Channel final : public fabric::Node {
 public:
  using Sink = std::function<void(fabric::TxnId)>;

  Channel(fabric::Context& ctx, std::string name, FlitRate rate, sim::SimTime latency)
      : Node(ctx, std::move(name)), rate_(rate), latency_(latency) {}

  void add_input(fabric::Buffer* in) {
    inputs_.push_back(in);
    rr_.resize(inputs_.size());
  }
  void set_destination(fabric::Buffer* dest) {
    dest_ = dest;
    dest->set_producer(this);
  }
  /// Per-packet destination: `pick` chooses among the buffers registered
  /// with add_destination. A packet is eligible only when its own
  /// destination has room.
  void set_destination_picker(std::function<fabric::Buffer*(fabric::TxnId)> pick) { pick_ = std::move(pick); }
  void add_destination(fabric::Buffer* dest) { dest->set_producer(this); }
  void set_sink(Sink sink) { sink_ = std::move(sink); }
  /// Optional admission gate: a head packet is eligible only when `ready`
  /// holds, and `take` runs when it is selected.
  /// With a gate, up to `scan` entries of each input are considered, so a
  /// blocked head does not hold back the packets queued behind it.
  void set_gate(std::function<bool(fabric::TxnId)> ready, std::function<void(fabric::TxnId)> take,
                std::size_t scan = 1) {
    gate_ready_ = std::move(ready);
    gate_take_ = std::move(take);
    scan_ = std::max<std::size_t>(scan, 1);
  }
  void set_window(const fabric::Window& w) { window_ = w; }
  void set_arbitration(Arbitration a) { arbitration_ = a; }

  const FlitRate& rate() const { return rate_; }
  std::uint64_t packets() const { return packets_; }
  std::uint64_t flits() const { return flits_; }
  /// Transmission time overlapping the window, in ps.
  double busy_in_window_ps() const { return static_cast<double>(busy_num_in_window_) / rate_.den; }
  double utilization() const {
    const double w = static_cast<double>(window_.end - window_.begin);
    return w > 0 ? busy_in_window_ps() / w : 0.0;
  }

  std::string_view kind_name(std::uint16_t kind) const override {
    return kind == fabric::kWake ? "wake" : "deliver";
  }

 protected:
  void work() override {
    const sim::SimTime t = now();
    if (t < free_tick_) {
      wake_at(free_tick_);
      return;
    }
    if (dest_ != nullptr && !dest_->has_space()) return;  // producer kick arrives on pop
    // Finds the first eligible entry of input k, if any.
    auto eligible = [&](std::size_t k, std::size_t& slot) {
      const auto* in = inputs_[k];
      const std::size_t n = std::min<std::size_t>(in->size(), gate_ready_ ? scan_ : 1);
      for (std::size_t j = 0; j < n; ++j) {
        if (in->at(j).next != this) return false;
        if (pick_ && !pick_(in->at(j).id)->has_space()) return false;
        if (!gate_ready_ || gate_ready_(in->at(j).id)) {
          slot = j;
          return true;
        }
      }
      return false;
    };
    std::size_t slot = 0;
    std::ptrdiff_t i = -1;
    if (arbitration_ == Arbitration::RoundRobin) {
      i = rr_.pick([&](std::size_t k) { return eligible(k, slot); });
    } else {
      sim::SimTime best = 0;
      for (std::size_t k = 0; k < inputs_.size(); ++k) {
        std::size_t j = 0;
        if (!eligible(k, j)) continue;
        const sim::SimTime age = ctx_.pool[inputs_[k]->at(j).id].request.issue_time;
        if (i < 0 || age < best) {
          i = static_cast<std::ptrdiff_t>(k);
          slot = j;
          best = age;
        }
      }
    }
    if (i < 0) return;
    const fabric::Buffer::Entry e = inputs_[static_cast<std::size_t>(i)]->take(slot, t);
    if (gate_take_) gate_take_(e.id);
    if (dest_ != nullptr) dest_->reserve();
    if (pick_) {
      fabric::Buffer* d = pick_(e.id);
      d->reserve();
      in_transit_.push_back(d);
    }

    const unsigned flits = protocol::total_flits(ctx_.pool[e.id].on_wire());
    // Wake-ups land on whole ticks; a packet that follows the previous one
    // within the same tick continues from its exact end instead.
    const std::uint64_t now_num = t * rate_.den;
    const std::uint64_t start = busy_num_ + rate_.den > now_num ? busy_num_ : now_num;
    const std::uint64_t end = start + flits * rate_.num;
    busy_num_ = end;
    account(start, end);
    ++packets_;
    flits_ += flits;

    const sim::SimTime end_tick = (end + rate_.den - 1) / rate_.den;
    free_tick_ = end_tick;
    ctx_.engine.schedule(end_tick + latency_, id_, kDeliver, e.id);
    wake_at(end_tick);
  }

  void handle(const sim::Event& ev) override {
    const auto id = static_cast<fabric::TxnId>(ev.payload);
    if (dest_ != nullptr) {
      dest_->push(id, ev.time, true);
    } else if (pick_) {
      // Deliveries leave in transmit order: one packet at a time, fixed latency.
      fabric::Buffer* d = in_transit_.front();
      in_transit_.pop_front();
      d->push(id, ev.time, true);
    } else if (sink_) {
      sink_(id);
    } else {
      throw ModelError("channel without destination or sink");
    }
  }

 private:
  static constexpr std::uint16_t kDeliver = 1;

  void account(std::uint64_t start, std::uint64_t end) {
    const std::uint64_t wb = window_.begin * rate_.den;
    const std::uint64_t we = window_.end == sim::kForever ? UINT64_MAX : window_.end * rate_.den;
    const std::uint64_t lo = std::max(start, wb);
    const std::uint64_t hi = std::min(end, we);
    if (hi > lo) busy_num_in_window_ += hi - lo;
  }

  FlitRate rate_;
  sim::SimTime latency_;
  std::vector<fabric::Buffer*> inputs_;
  RoundRobin rr_;
  fabric::Buffer* dest_ = nullptr;
  std::function<fabric::Buffer*(fabric::TxnId)> pick_;
  std::deque<fabric::Buffer*> in_transit_;
  Sink sink_;
  std::function<bool(fabric::TxnId)> gate_ready_;
  std::function<void(fabric::TxnId)> gate_take_;
  std::size_t scan_ = 1;
  Arbitration arbitration_ = Arbitration::RoundRobin;
  std::uint64_t busy_num_ = 0;  // units of 1/den ps
  sim::SimTime free_tick_ = 0;
  fabric::Window window_;
  std::uint64_t busy_num_in_window_ = 0;
  std::uint64_t packets_ = 0;
  std::uint64_t flits_ = 0;
};

}  // namespace simct::net
