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
 * @file stats.hpp
 * @brief Reductions shared by the experiments.
 *
 * Units: latencies and windows are nanoseconds unless a name says `_ps`;
 * bandwidth is GB/s (1e9 bytes per second, i.e. bytes per nanosecond).
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "simct/error.hpp"
#include "simct/simkernel.hpp"

namespace simct::stats {

struct LittleEstimate {
  double arrival_rate = 0.0;  ///< requests per ns
  double mean_sojourn = 0.0;  ///< ns
  double outstanding = 0.0;
};

/// Outstanding requests N = lambda * W.
inline LittleEstimate little(double arrival_rate, double mean_sojourn) {
  if (!(arrival_rate > 0.0) || !(mean_sojourn > 0.0)) {
    throw ValidationError("little: arrival rate and sojourn must be positive");
  }
  return {arrival_rate, mean_sojourn, arrival_rate * mean_sojourn};
}

/// Mean latency of n requests that arrive together at one FIFO server with
/// service time S: sum_{i=1..n} iS / n = S (n + 1) / 2.
inline double queue_avg_latency(double service_time, unsigned depth) {
  if (!(service_time > 0.0) || depth < 1) throw ValidationError("queue model needs S > 0 and n >= 1");
  return service_time * (depth + 1) / 2.0;
}

struct BandwidthSample {
  double window_ns = 0.0;
  std::uint64_t request_dir_bytes = 0;
  std::uint64_t response_dir_bytes = 0;
};

struct DirectionalBandwidth {
  double request_gbps = 0.0;
  double response_gbps = 0.0;
  double total() const { return request_gbps + response_gbps; }
};

/// Bytes (overhead flits included by the caller) over the window.
inline DirectionalBandwidth bandwidth(const BandwidthSample& s) {
  if (!(s.window_ns > 0.0)) throw ValidationError("bandwidth window must be positive");
  return {static_cast<double>(s.request_dir_bytes) / s.window_ns,
          static_cast<double>(s.response_dir_bytes) / s.window_ns};
}

struct Summary {
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;  ///< population
  double min = 0.0;
  double max = 0.0;
};

/// Empty input yields std::nullopt, the "no data" marker.
inline std::optional<Summary> summarize(std::span<const double> xs) {
  if (xs.empty()) return std::nullopt;
  Summary s;
  s.count = xs.size();
  s.min = std::numeric_limits<double>::infinity();
  s.max = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (double x : xs) {
    sum += x;
    s.min = std::min(s.min, x);
    s.max = std::max(s.max, x);
  }
  s.mean = sum / static_cast<double>(s.count);
  double sq = 0.0;
  for (double x : xs) sq += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(sq / static_cast<double>(s.count));
  return s;
}

/// Streaming mean / population variance (Welford), mergeable.
class Accumulator {
 public:
  void add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
    min_ = std::min(min_, x);
    max_ = std::max(max_, x);
  }
  void merge(const Accumulator& o) {
    if (o.n_ == 0) return;
    if (n_ == 0) {
      *this = o;
      return;
    }
    const double n = static_cast<double>(n_ + o.n_);
    const double d = o.mean_ - mean_;
    mean_ += d * static_cast<double>(o.n_) / n;
    m2_ += o.m2_ + d * d * static_cast<double>(n_) * static_cast<double>(o.n_) / n;
    n_ += o.n_;
    min_ = std::min(min_, o.min_);
    max_ = std::max(max_, o.max_);
  }
  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double stddev() const { return n_ == 0 ? 0.0 : std::sqrt(m2_ / static_cast<double>(n_)); }
  double min() const { return n_ == 0 ? 0.0 : min_; }
  double max() const { return n_ == 0 ? 0.0 : max_; }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double min_ = std::numeric_limits<double>::infinity();
  double max_ = -std::numeric_limits<double>::infinity();
};

/// Fixed-width histogram with bins anchored at zero: bin k covers
/// [k*width, (k+1)*width). Sparse, so very long tails cost nothing.
class Histogram {
 public:
  explicit Histogram(double width = 16.0) : width_(width) {
    if (!(width > 0.0)) throw ValidationError("histogram bin width must be positive");
  }
  void add(double x, std::uint64_t n = 1) {
    bins_[static_cast<std::int64_t>(std::floor(x / width_))] += n;
    total_ += n;
  }
  void merge(const Histogram& o) {
    for (const auto& [k, c] : o.bins_) bins_[k] += c;
    total_ += o.total_;
  }
  double width() const { return width_; }
  std::uint64_t total() const { return total_; }
  const std::map<std::int64_t, std::uint64_t>& bins() const { return bins_; }
  std::uint64_t at(std::int64_t bin) const {
    auto it = bins_.find(bin);
    return it == bins_.end() ? 0 : it->second;
  }

 private:
  double width_;
  std::map<std::int64_t, std::uint64_t> bins_;
  std::uint64_t total_ = 0;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Ordinary least squares y = slope * x + intercept.
inline LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("fit_line needs >= 2 paired points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw ValidationError("fit_line: x values are all equal");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

/// Instrumentation for one queue: time-integrated occupancy, arrivals and
/// sojourn totals, measured from the last reset. Callers remember when each
/// item entered and pass it back on leave().
class QueueProbe {
 public:
  void enter(sim::SimTime now) {
    advance(now);
    ++occupancy_;
    ++arrivals_;
    max_occupancy_ = std::max(max_occupancy_, occupancy_);
  }
  void leave(sim::SimTime now, sim::SimTime entered) {
    advance(now);
    if (occupancy_ == 0) throw ModelError("queue probe: leave from an empty queue");
    --occupancy_;
    ++departures_;
    sojourn_ps_ += static_cast<double>(now - std::max(entered, start_));
  }
  /// Starts a fresh measurement window; the current occupancy carries over.
  void reset(sim::SimTime now) {
    advance(now);
    start_ = now;
    area_ = 0.0;
    arrivals_ = departures_ = 0;
    sojourn_ps_ = 0.0;
    max_occupancy_ = occupancy_;
  }
  void close(sim::SimTime now) { advance(now); }

  std::uint64_t arrivals() const { return arrivals_; }
  std::uint64_t departures() const { return departures_; }
  std::uint64_t occupancy() const { return occupancy_; }
  std::uint64_t max_occupancy() const { return max_occupancy_; }
  double window_ns() const { return sim::to_ns(last_ - start_); }
  double mean_occupancy() const { return last_ > start_ ? area_ / static_cast<double>(last_ - start_) : 0.0; }
  double arrival_rate() const { return window_ns() > 0 ? static_cast<double>(arrivals_) / window_ns() : 0.0; }
  double mean_sojourn_ns() const {
    return departures_ == 0 ? 0.0 : sojourn_ps_ / 1000.0 / static_cast<double>(departures_);
  }

 private:
  void advance(sim::SimTime now) {
    if (now < last_) throw ModelError("queue probe: time went backwards");
    area_ += static_cast<double>(occupancy_) * static_cast<double>(now - last_);
    last_ = now;
  }

  sim::SimTime start_ = 0;
  sim::SimTime last_ = 0;
  double area_ = 0.0;
  std::uint64_t occupancy_ = 0;
  std::uint64_t max_occupancy_ = 0;
  std::uint64_t arrivals_ = 0;
  std::uint64_t departures_ = 0;
  double sojourn_ps_ = 0.0;
};

}  // namespace simct::stats
