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
 * @file fabric.hpp
 * @brief Plumbing shared by every simulated component.
 *
 * A transaction (Txn) is one request and, later, its response. Components
 * pass 32-bit transaction ids through bounded Buffers. Every Buffer has at
 * most one producer; a producer reserves a slot before it starts a transfer
 * and the slot (the credit) is handed back the moment the consumer pops.
 *
 * Nodes never call each other's work directly. They kick(), which schedules
 * a wake-up event at the current tick, so all state changes happen inside
 * event dispatch and in deterministic order.
 */

#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "simct/error.hpp"
#include "simct/protocol.hpp"
#include "simct/simkernel.hpp"
#include "simct/stats.hpp"

namespace simct::fabric {

using TxnId = std::uint32_t;

struct Txn {
  protocol::Packet request;
  protocol::Packet response;
  bool responding = false;
  std::uint8_t port = 0;
  std::uint8_t link = 0;
  std::uint8_t vault = 0;
  std::uint8_t bank = 0;

  const protocol::Packet& on_wire() const { return responding ? response : request; }
};

/// Slab of transactions with id recycling.
class TxnPool {
 public:
  TxnId alloc() {
    if (!free_.empty()) {
      TxnId id = free_.back();
      free_.pop_back();
      slots_[id] = Txn{};
      return id;
    }
    slots_.emplace_back();
    return static_cast<TxnId>(slots_.size() - 1);
  }
  void release(TxnId id) { free_.push_back(id); }
  Txn& operator[](TxnId id) { return slots_[id]; }
  const Txn& operator[](TxnId id) const { return slots_[id]; }
  std::size_t live() const { return slots_.size() - free_.size(); }

 private:
  std::vector<Txn> slots_;
  std::vector<TxnId> free_;
};

/// What every component shares within one simulation instance.
struct Context {
  sim::Engine engine;
  TxnPool pool;
};

inline constexpr std::uint16_t kWake = 0;

/// An event-driven component with a coalescing wake-up.
class Node : public sim::Handler {
 public:
  Node(Context& ctx, std::string name) : ctx_(ctx) { id_ = ctx.engine.attach(*this, std::move(name)); }
  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;

  /// Requests a call to work() at the current tick. Repeated kicks within a
  /// tick collapse into one.
  void kick() {
    const sim::SimTime now = ctx_.engine.now();
    if (kick_pending_ && kick_time_ == now) return;
    kick_pending_ = true;
    kick_time_ = now;
    ctx_.engine.schedule(now, id_, kWake);
  }

  sim::ComponentId id() const { return id_; }
  const std::string& name() const { return ctx_.engine.name_of(id_); }

  void on_event(const sim::Event& ev) override {
    if (ev.kind == kWake) {
      if (ev.time == kick_time_) kick_pending_ = false;
      if (ev.time == timer_at_) timer_pending_ = false;
      work();
    } else {
      handle(ev);
    }
  }

 protected:
  virtual void work() = 0;
  virtual void handle(const sim::Event&) {}

  /// Wake-up at a future tick, skipped when one is already booked for it.
  void wake_at(sim::SimTime t) {
    if (t <= ctx_.engine.now()) {
      kick();
      return;
    }
    if (timer_pending_ && timer_at_ == t) return;
    timer_pending_ = true;
    timer_at_ = t;
    ctx_.engine.schedule(t, id_, kWake);
  }

  sim::SimTime now() const { return ctx_.engine.now(); }
  Context& ctx_;
  sim::ComponentId id_ = 0;

 private:
  bool kick_pending_ = false;
  sim::SimTime kick_time_ = 0;
  bool timer_pending_ = false;
  sim::SimTime timer_at_ = 0;
};

/// A bounded FIFO of transaction ids. Each entry remembers the node that
/// must take it next, decided by `route` when the entry arrives.
class Buffer {
 public:
  struct Entry {
    TxnId id = 0;
    sim::SimTime entered = 0;
    Node* next = nullptr;
  };

  Buffer(std::string name, unsigned capacity) : name_(std::move(name)), capacity_(capacity) {}

  const std::string& name() const { return name_; }
  unsigned capacity() const { return capacity_; }
  std::size_t size() const { return q_.size(); }
  bool empty() const { return q_.empty(); }
  const Entry& head() const { return q_.front(); }

  /// True when a producer may reserve or push one more entry.
  bool has_space() const { return capacity_ == 0 || q_.size() + reserved_ < capacity_; }

  void reserve() {
    if (!has_space()) throw ModelError(name_ + ": reserve on a full buffer");
    ++reserved_;
  }

  void push(TxnId id, sim::SimTime now, bool was_reserved) {
    if (was_reserved) {
      if (reserved_ == 0) throw ModelError(name_ + ": push without a reservation");
      --reserved_;
    } else if (!has_space()) {
      throw ModelError(name_ + ": push on a full buffer");
    }
    Node* next = route_ ? route_(id) : nullptr;
    q_.push_back(Entry{id, now, next});
    probe_.enter(now);
    if (q_.size() == 1 && next != nullptr) next->kick();
  }

  Entry pop(sim::SimTime now) {
    Entry e = q_.front();
    q_.pop_front();
    probe_.leave(now, e.entered);
    if (producer_ != nullptr) producer_->kick();
    if (!q_.empty() && q_.front().next != nullptr) q_.front().next->kick();
    return e;
  }

  const Entry& at(std::size_t i) const { return q_[i]; }

  /// Removes the i-th entry (out-of-order consumers only).
  Entry take(std::size_t i, sim::SimTime now) {
    if (i == 0) return pop(now);
    Entry e = q_[i];
    q_.erase(q_.begin() + static_cast<std::ptrdiff_t>(i));
    probe_.leave(now, e.entered);
    if (producer_ != nullptr) producer_->kick();
    return e;
  }

  void set_route(std::function<Node*(TxnId)> route) { route_ = std::move(route); }
  void set_producer(Node* producer) { producer_ = producer; }

  stats::QueueProbe& probe() { return probe_; }
  const stats::QueueProbe& probe() const { return probe_; }

 private:
  std::string name_;
  unsigned capacity_;  // 0 = unbounded
  unsigned reserved_ = 0;
  std::deque<Entry> q_;
  std::function<Node*(TxnId)> route_;
  Node* producer_ = nullptr;
  stats::QueueProbe probe_;
};

/// Half-open measurement window [begin, end) in ticks.
struct Window {
  sim::SimTime begin = 0;
  sim::SimTime end = sim::kForever;

  bool contains(sim::SimTime t) const { return t >= begin && t < end; }
  double length_ns() const { return sim::to_ns(end - begin); }
};

}  // namespace simct::fabric
