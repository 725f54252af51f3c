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
 * @file simkernel.hpp
 * @brief Deterministic discrete-event engine.
 *
 * Time is an unsigned picosecond count. Events are dispatched in (time, seq)
 * order where seq is a run-global insertion counter, so two runs that insert
 * the same events in the same order dispatch them identically. The engine
 * owns no model state: components register a Handler and receive their own
 * events back.
 */

#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <queue>
#include <string>
#include <string_view>
#include <vector>

#include "simct/error.hpp"

namespace simct::sim {

/// Simulated time in picoseconds.
using SimTime = std::uint64_t;

inline constexpr SimTime kPs = 1;
inline constexpr SimTime kNs = 1000;
inline constexpr SimTime kUs = 1000 * kNs;
inline constexpr SimTime kMs = 1000 * kUs;
inline constexpr SimTime kForever = std::numeric_limits<SimTime>::max();

/// Converts nanoseconds (possibly fractional, e.g. 273.5) to ticks, rounding
/// to the nearest picosecond.
constexpr SimTime from_ns(double ns) { return static_cast<SimTime>(ns * 1000.0 + 0.5); }
constexpr double to_ns(SimTime t) { return static_cast<double>(t) / 1000.0; }

using ComponentId = std::uint32_t;

struct Event {
  SimTime time = 0;
  std::uint64_t seq = 0;
  ComponentId target = 0;
  std::uint16_t kind = 0;
  std::uint64_t payload = 0;
};

/// Lexicographic (time, seq): the dispatch order.
constexpr bool dispatches_before(const Event& a, const Event& b) {
  return a.time != b.time ? a.time < b.time : a.seq < b.seq;
}

class Handler {
 public:
  virtual ~Handler() = default;
  virtual void on_event(const Event& ev) = 0;
  /// Name of an event kind for the dispatch trace; empty means "print the number".
  virtual std::string_view kind_name(std::uint16_t /*kind*/) const { return {}; }
};

/// Pending events, popped in (time, seq) order.
class EventQueue {
 public:
  void push(const Event& ev) { heap_.push(ev); }
  const Event& top() const { return heap_.top(); }
  Event pop() {
    Event ev = heap_.top();
    heap_.pop();
    return ev;
  }
  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const { return dispatches_before(b, a); }
  };
  std::priority_queue<Event, std::vector<Event>, Later> heap_;
};

class Engine {
 public:
  ComponentId attach(Handler& handler, std::string name) {
    handlers_.push_back(&handler);
    names_.push_back(std::move(name));
    return static_cast<ComponentId>(handlers_.size() - 1);
  }

  SimTime now() const { return clock_; }

  /// Enqueues an event at an absolute time. Scheduling before the current
  /// clock means a component computed a time in the past.
  void schedule(SimTime time, ComponentId target, std::uint16_t kind, std::uint64_t payload = 0) {
    if (time < clock_) {
      throw ModelError("event scheduled at " + std::to_string(time) + " ps but clock is " +
                       std::to_string(clock_) + " ps");
    }
    if (target >= handlers_.size()) throw ModelError("event for unknown component");
    queue_.push(Event{time, next_seq_++, target, kind, payload});
  }

  void schedule_in(SimTime delay, ComponentId target, std::uint16_t kind,
                   std::uint64_t payload = 0) {
    schedule(clock_ + delay, target, kind, payload);
  }

  /// Dispatches every event with time <= limit, then advances the clock to
  /// limit (if it is not already past it). Returns the clock.
  SimTime run_until(SimTime limit) {
    while (!queue_.empty() && queue_.top().time <= limit) dispatch(queue_.pop());
    if (limit > clock_ && limit != kForever) clock_ = limit;
    return clock_;
  }

  /// Dispatches until the queue is empty.
  SimTime run() {
    while (!queue_.empty()) dispatch(queue_.pop());
    return clock_;
  }

  bool idle() const { return queue_.empty(); }
  std::size_t pending() const { return queue_.size(); }
  std::uint64_t dispatched() const { return dispatched_; }
  const std::string& name_of(ComponentId id) const { return names_.at(id); }

  /// Writes `tick,seq,target,kind` for every dispatched event. Pass nullptr to stop.
  void set_trace(std::ostream* out) { trace_ = out; }

 private:
  void dispatch(const Event& ev) {
    clock_ = ev.time;
    ++dispatched_;
    Handler& h = *handlers_[ev.target];
    if (trace_ != nullptr) {
      *trace_ << ev.time << ',' << ev.seq << ',' << names_[ev.target] << ',';
      if (auto kn = h.kind_name(ev.kind); !kn.empty()) {
        *trace_ << kn;
      } else {
        *trace_ << ev.kind;
      }
      *trace_ << '\n';
    }
    h.on_event(ev);
  }

  EventQueue queue_;
  std::vector<Handler*> handlers_;
  std::vector<std::string> names_;
  SimTime clock_ = 0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t dispatched_ = 0;
  std::ostream* trace_ = nullptr;
};

/// Adapts a callable into a Handler. Handy for tests and small probes.
class FunctionHandler final : public Handler {
 public:
  explicit FunctionHandler(std::function<void(const Event&)> fn) : fn_(std::move(fn)) {}
  void on_event(const Event& ev) override { fn_(ev); }

 private:
  std::function<void(const Event&)> fn_;
};

}  // namespace simct::sim
