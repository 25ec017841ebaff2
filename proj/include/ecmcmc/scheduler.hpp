// Copyright 2026 The ecmcmc Authors. All Rights Reserved.
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

#pragma once

#include <algorithm>
#include <cstdint>
#include <queue>
#include <tuple>
#include <vector>

#include "ecmcmc/core.hpp"
#include "ecmcmc/random.hpp"

namespace ecmcmc {

enum class DelayKind { constant, uniform_jitter };

/// Per-worker step durations in virtual time units (one unit = one nominal
/// gradient step). Worker k's step takes `speed(k) * (1 + jitter * u)`,
/// u ~ U(-1, 1) from the worker's delay stream; `latency` is the round-trip
/// cost of a synchronisation with the server.
struct DelayModel {
  DelayKind kind = DelayKind::constant;
  double jitter = 0.0;
  double latency = 0.0;
  std::vector<double> speeds;  // empty: all 1

  double speed(std::size_t worker) const { return speeds.empty() ? 1.0 : speeds.at(worker); }

  double duration(std::size_t worker, Rng& delay_rng) const {
    const double base = speed(worker);
    if (kind == DelayKind::constant) return base;
    return base * (1.0 + jitter * (2.0 * uniform01(delay_rng) - 1.0));
  }

  /// Longest possible step over the shortest nominal one.
  double max_delay_ratio() const {
    double lo = 1.0, hi = 1.0;
    if (!speeds.empty()) {
      lo = *std::min_element(speeds.begin(), speeds.end());
      hi = *std::max_element(speeds.begin(), speeds.end());
    }
    const double j = kind == DelayKind::constant ? 0.0 : jitter;
    return hi * (1.0 + j) / lo;
  }

  void validate(std::size_t workers) const {
    if (!(jitter >= 0.0 && jitter < 1.0)) throw ContractError("DelayModel: jitter must lie in [0, 1)");
    if (!(latency >= 0.0)) throw ContractError("DelayModel: latency must be >= 0");
    if (!speeds.empty()) {
      require_dim(speeds.size(), workers, "DelayModel speeds");
      for (double s : speeds)
        if (!(s > 0.0)) throw ContractError("DelayModel: speeds must be > 0");
    }
  }
};

/// Event classes at equal time are handled in this order.
enum class EventKind : int { step = 0, report = 1, sync = 2 };

struct Event {
  double time = 0.0;
  EventKind kind = EventKind::step;
  std::size_t worker = 0;
  std::uint64_t seq = 0;

  auto key() const { return std::tuple(time, static_cast<int>(kind), worker, seq); }
  friend bool operator<(const Event& a, const Event& b) { return a.key() < b.key(); }
  friend bool operator>(const Event& a, const Event& b) { return b < a; }
  friend bool operator==(const Event& a, const Event& b) { return a.key() == b.key(); }
};

/// Min-queue of events with a total order on (time, kind, worker, sequence).
class EventQueue {
 public:
  void push(double time, EventKind kind, std::size_t worker) { q_.push(Event{time, kind, worker, next_seq_++}); }
  bool empty() const { return q_.empty(); }
  const Event& top() const { return q_.top(); }
  Event pop() {
    Event e = q_.top();
    q_.pop();
    return e;
  }

 private:
  std::priority_queue<Event, std::vector<Event>, std::greater<>> q_;
  std::uint64_t next_seq_ = 0;
};

/// Order in which `workers` free-running workers complete `steps_per_worker`
/// steps each under `delay`.
inline std::vector<Event> schedule_virtual(std::size_t workers, std::size_t steps_per_worker,
                                           const DelayModel& delay, std::uint64_t seed) {
  delay.validate(workers);
  std::vector<Rng> rngs;
  for (std::size_t k = 0; k < workers; ++k) rngs.push_back(make_stream(seed, k, Stream::delay));
  std::vector<std::size_t> done(workers, 0);
  EventQueue q;
  for (std::size_t k = 0; k < workers; ++k)
    if (steps_per_worker > 0) q.push(delay.duration(k, rngs[k]), EventKind::step, k);
  std::vector<Event> order;
  while (!q.empty()) {
    const Event e = q.pop();
    order.push_back(e);
    if (++done[e.worker] < steps_per_worker)
      q.push(e.time + delay.duration(e.worker, rngs[e.worker]), EventKind::step, e.worker);
  }
  return order;
}

}  // namespace ecmcmc
