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
 * @file memdev.hpp
 * @brief Vault controller, banks and the shared TSV data bus.
 *
 * Every access is served closed-page: precharge, activate, column command,
 * then its 32 B data beats on the vault bus. An access starts only when its
 * data can follow the bus without a gap or a wait, and among the banks ready
 * at that moment the one holding the oldest request goes first. A bank is released
 * once its data has been transferred, less the column latency, which lets
 * the next precharge overlap the tail of the previous column access.
 */

#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "simct/addressing.hpp"
#include "simct/fabric.hpp"
#include "simct/protocol.hpp"

namespace simct::mem {

struct DramTiming {
  double t_rcd_ns = 10.0;
  double t_cl_ns = 22.0;
  double t_rp_ns = 9.0;

  void check() const {
    if (!(t_rcd_ns > 0 && t_cl_ns > 0 && t_rp_ns > 0)) throw ValidationError("DRAM timings must be positive");
  }
  double sum_ns() const { return t_rcd_ns + t_cl_ns + t_rp_ns; }
};

struct VaultConfig {
  unsigned bus_width_bytes = 32;
  sim::SimTime bus_beat_ps = 3200;
  unsigned input_queue_depth = 32;
  unsigned bank_queue_depth = 16;
  unsigned response_queue_depth = 32;
  sim::SimTime controller_latency_ps = 30'000;  // each direction
  sim::SimTime passthrough_ps = 4'000;

  void check() const {
    if (bus_width_bytes == 0 || bus_beat_ps == 0) throw ValidationError("bus width and beat must be positive");
    if (input_queue_depth == 0 || bank_queue_depth == 0 || response_queue_depth == 0) {
      throw ValidationError("vault queue depths must be positive");
    }
  }
  /// Bus bandwidth in GB/s (bytes per ns).
  double bus_gbps() const { return bus_width_bytes * 1000.0 / static_cast<double>(bus_beat_ps); }
};

inline unsigned beats_for(unsigned bytes, const VaultConfig& cfg) {
  return (bytes + cfg.bus_width_bytes - 1) / cfg.bus_width_bytes;
}

/// Timing of one bank access that starts at `start` with the vault bus next
/// free at `bus_free`.
struct BankSchedule {
  sim::SimTime data_start = 0;  ///< first beat on the bus
  sim::SimTime data_end = 0;    ///< last beat done; bus free from here
  sim::SimTime bank_free = 0;   ///< earliest start of the next access to this bank
  unsigned beats = 0;
};

inline BankSchedule bank_service(const DramTiming& t, const VaultConfig& cfg, sim::SimTime start,
                                 sim::SimTime bus_free, unsigned bytes) {
  const sim::SimTime rp = sim::from_ns(t.t_rp_ns);
  const sim::SimTime rcd = sim::from_ns(t.t_rcd_ns);
  const sim::SimTime cl = sim::from_ns(t.t_cl_ns);
  BankSchedule s;
  s.beats = beats_for(bytes, cfg);
  s.data_start = std::max(start + rp + rcd + cl, bus_free);
  s.data_end = s.data_start + s.beats * cfg.bus_beat_ps;
  s.bank_free = s.data_end - cl;
  return s;
}

/// Per-vault counters exported into reports.
struct VaultCounters {
  std::uint64_t admitted = 0;
  std::uint64_t completed = 0;
  std::uint64_t completed_reads = 0;
  std::uint64_t beats_in_window = 0;
  sim::SimTime bus_busy_in_window = 0;
};

class Vault final : public fabric::Node {
 public:
  Vault(fabric::Context& ctx, unsigned index, const DramTiming& timing, const VaultConfig& cfg,
        const addr::AddressMapConfig& map)
      : Node(ctx, "vault" + std::to_string(index)),
        index_(index),
        timing_(timing),
        cfg_(cfg),
        map_(map),
        input_("vault" + std::to_string(index) + ".in", cfg.input_queue_depth),
        banks_(addr::kBanksPerVault) {
    timing.check();
    cfg.check();
    input_.set_route([this](fabric::TxnId) { return this; });
  }

  /// Requests arrive here; the upstream channel is its producer.
  fabric::Buffer& input() { return input_; }
  /// False means the upstream channel is back-pressured.
  bool can_accept() const { return input_.has_space(); }
  /// The response buffer belongs to the response switch; the vault fills it.
  void set_response_buffer(fabric::Buffer* out) {
    out_ = out;
    out->set_producer(this);
  }
  void set_window(const fabric::Window& w) { window_ = w; }
  /// Called with each request as it leaves its bank queue for service.
  void on_bank_dequeue(std::function<void(fabric::TxnId)> hook) { dequeue_hook_ = std::move(hook); }

  unsigned index() const { return index_; }
  const VaultCounters& counters() const { return counters_; }
  stats::QueueProbe& bank_probe() { return bank_probe_; }
  const stats::QueueProbe& bank_probe() const { return bank_probe_; }
  std::size_t bank_queue_size(unsigned b) const { return banks_[b].queue.size(); }

  std::string_view kind_name(std::uint16_t kind) const override {
    return kind == fabric::kWake ? "wake" : "done";
  }

 protected:
  void work() override {
    const sim::SimTime t = now();
    admit(t);
    // Oldest ready request first; a bank that is not ready books its own
    // wake-up inside ready(). An access is only started once its data phase
    // can follow the bus without waiting, so the choice is made as late as
    // possible.
    const sim::SimTime lead = sim::from_ns(timing_.sum_ns());
    for (;;) {
      if (bus_free_ > t + lead) {
        wake_at(bus_free_ - lead);
        return;
      }
      unsigned best = addr::kBanksPerVault;
      for (unsigned b = 0; b < addr::kBanksPerVault; ++b) {
        if (!ready(b, t)) continue;
        if (best == addr::kBanksPerVault || banks_[b].queue.front().seq < banks_[best].queue.front().seq) {
          best = b;
        }
      }
      if (best == addr::kBanksPerVault) return;
      start(best, t);
    }
  }

  void handle(const sim::Event& ev) override {
    const auto id = static_cast<fabric::TxnId>(ev.payload);
    fabric::Txn& x = ctx_.pool[id];
    x.response = protocol::make_response(x.request);
    x.responding = true;
    ++counters_.completed;
    if (x.request.command == protocol::Command::Read) ++counters_.completed_reads;
    out_->push(id, ev.time, true);
  }

 private:
  struct Pending {
    fabric::TxnId id;
    sim::SimTime entered;
    sim::SimTime ready;
    std::uint64_t seq;  // admission order
  };
  struct Bank {
    std::deque<Pending> queue;
    sim::SimTime free_at = 0;
    sim::SimTime booked = sim::kForever;  // pending wake-up for this bank
  };

  void wake_bank(Bank& bank, sim::SimTime t) {
    if (bank.booked == t && t > now()) return;
    bank.booked = t;
    wake_at(t);
  }

  /// Moves requests from the input queue into their bank queues. A request
  /// whose bank queue is full does not block the ones behind it.
  void admit(sim::SimTime t) {
    std::size_t i = 0;
    while (i < input_.size()) {
      const fabric::TxnId id = input_.at(i).id;
      fabric::Txn& x = ctx_.pool[id];
      const auto d = addr::decode(x.request.address, map_);
      if (d.vault != index_) throw ModelError("request routed to the wrong vault");
      Bank& bank = banks_[d.bank];
      if (bank.queue.size() >= cfg_.bank_queue_depth) {
        ++i;
        continue;
      }
      input_.take(i, t);
      x.bank = static_cast<std::uint8_t>(d.bank);
      ++counters_.admitted;
      bank.queue.push_back(Pending{id, t, t + cfg_.controller_latency_ps, admitted_seq_++});
      bank_probe_.enter(t);
      if (bank.queue.size() == 1) wake_bank(bank, std::max(bank.free_at, bank.queue.front().ready));
    }
  }

  bool ready(unsigned b, sim::SimTime t) {
    Bank& bank = banks_[b];
    if (bank.queue.empty()) return false;
    if (bank.free_at > t) {
      wake_bank(bank, bank.free_at);
      return false;
    }
    const Pending& head = bank.queue.front();
    if (head.ready > t) {
      wake_bank(bank, head.ready);
      return false;
    }
    return out_->has_space();  // kicked when the response buffer pops
  }

  void start(unsigned b, sim::SimTime t) {
    Bank& bank = banks_[b];
    const Pending head = bank.queue.front();
    const fabric::Txn& x = ctx_.pool[head.id];
    const BankSchedule s = bank_service(timing_, cfg_, t, bus_free_, x.request.data_bytes);
    bus_free_ = s.data_end;
    bank.free_at = s.bank_free;
    if (window_.contains(s.data_start)) {
      counters_.beats_in_window += s.beats;
      counters_.bus_busy_in_window += s.data_end - s.data_start;
    }
    out_->reserve();
    ctx_.engine.schedule(s.data_end + cfg_.passthrough_ps + cfg_.controller_latency_ps, id_, kDone, head.id);
    bank_probe_.leave(t, head.entered);
    bank.queue.pop_front();
    if (dequeue_hook_) dequeue_hook_(head.id);
    // The input queue may have been blocked on this bank.
    admit(t);
    if (!bank.queue.empty()) wake_bank(bank, std::max(bank.free_at, bank.queue.front().ready));
  }

  static constexpr std::uint16_t kDone = 1;

  unsigned index_;
  DramTiming timing_;
  VaultConfig cfg_;
  addr::AddressMapConfig map_;
  fabric::Buffer input_;
  fabric::Buffer* out_ = nullptr;
  std::vector<Bank> banks_;
  sim::SimTime bus_free_ = 0;
  std::uint64_t admitted_seq_ = 0;
  fabric::Window window_;
  std::function<void(fabric::TxnId)> dequeue_hook_;
  VaultCounters counters_;
  stats::QueueProbe bank_probe_;
};

}  // namespace simct::mem
