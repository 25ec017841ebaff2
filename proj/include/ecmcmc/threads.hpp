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

// Real multi-threaded execution of the three schemes. Workers and the server
// interact only through message channels; results are statistically, not
// bitwise, equivalent to the virtual-time runs. Times recorded in traces are
// local step counts.

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>
#include <variant>
#include <vector>

#include "ecmcmc/harness.hpp"

namespace ecmcmc {

/// Unbounded multi-producer single-consumer queue.
template <typename T>
class Channel {
 public:
  void send(T value) {
    {
      std::lock_guard lock(mu_);
      q_.push_back(std::move(value));
    }
    cv_.notify_one();
  }

  T receive() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [this] { return !q_.empty(); });
    T v = std::move(q_.front());
    q_.pop_front();
    return v;
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<T> q_;
};

struct ThreadOptions {
  std::size_t max_threads = 0;  // worker threads; 0 means one per worker

  std::size_t groups(std::size_t workers) const {
    return max_threads == 0 ? workers : std::clamp<std::size_t>(max_threads, 1, workers);
  }
};

namespace detail {

inline void merge_into(RunResult& out, RunResult&& part) {
  out.samples.insert(out.samples.end(), std::make_move_iterator(part.samples.begin()),
                     std::make_move_iterator(part.samples.end()));
  out.traces.insert(out.traces.end(), std::make_move_iterator(part.traces.begin()),
                    std::make_move_iterator(part.traces.end()));
  out.counters.worker_steps += part.counters.worker_steps;
  out.counters.server_steps += part.counters.server_steps;
  out.counters.messages += part.counters.messages;
  out.counters.round_trips += part.counters.round_trips;
  out.counters.volume += part.counters.volume;
  for (auto [lag, c] : part.staleness) out.staleness[lag] += c;
  out.max_age = std::max(out.max_age, part.max_age);
  out.end_time = std::max(out.end_time, part.end_time);
}

inline void canonical_order(RunResult& out) {
  std::stable_sort(out.samples.begin(), out.samples.end(),
                   [](const Sample& a, const Sample& b) { return std::tie(a.worker, a.step) < std::tie(b.worker, b.step); });
  std::stable_sort(out.traces.begin(), out.traces.end(), [](const TraceRecord& a, const TraceRecord& b) {
    return std::tie(a.worker, a.step, a.metric) < std::tie(b.worker, b.step, b.metric);
  });
}

// Runs fn(group) on `groups` threads and rethrows the first failure.
template <typename Fn>
void run_groups(std::size_t groups, Fn fn) {
  std::vector<std::exception_ptr> errors(groups);
  {
    std::vector<std::jthread> threads;
    for (std::size_t g = 0; g < groups; ++g)
      threads.emplace_back([&, g] {
        try {
          fn(g);
        } catch (...) {
          errors[g] = std::current_exception();
        }
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace detail

inline RunResult run_independent_threads(const TargetModel& model, const SghmcConfig& cfg,
                                         const ProtocolConfig& proto, const RunSpec& run,
                                         ThreadOptions opts = {}) {
  proto.validate();
  run.validate();
  cfg.validate(model.dim());
  const std::size_t k = proto.workers, groups = opts.groups(k);
  const ParamVector theta0 = initial_theta(model, run);
  std::vector<RunResult> parts(groups);
  std::vector<ChainState> finals(k);
  detail::run_groups(groups, [&](std::size_t g) {
    RunResult& part = parts[g];
    detail::Recorder rec(run, part);
    for (std::size_t w = g; w < k; w += groups) {
      WorkerStreams rs(run.seed, w);
      GaussianNoise init(rs.init);
      ChainState ch{theta0, sample_momentum(cfg.mass, init), 0};
      const auto wid = static_cast<std::int64_t>(w);
      rec.observe(wid, 0, 0.0, ch.theta, false);
      GaussianNoise noise(rs.noise);
      while (ch.step < run.steps) {
        ch = sghmc_step(ch, model.noisy_grad(ch.theta, rs.data), cfg, noise);
        detail::check_finite_state(ch, wid);
        ++part.counters.worker_steps;
        rec.observe(wid, ch.step, static_cast<double>(ch.step), ch.theta);
      }
      part.end_time = std::max(part.end_time, static_cast<double>(ch.step));
      finals[w] = std::move(ch);
    }
  });
  RunResult out;
  out.arm = run.arm;
  out.seed = run.seed;
  for (auto& p : parts) detail::merge_into(out, std::move(p));
  detail::canonical_order(out);
  out.final_workers = std::move(finals);
  return out;
}

inline RunResult run_elastic_threads(const TargetModel& model, const EcConfig& ec, const ProtocolConfig& proto,
                                     const RunSpec& run, ThreadOptions opts = {}) {
  proto.validate();
  run.validate();
  EcConfig cfg = ec;
  cfg.workers = proto.workers;
  cfg.validate(model.dim());
  const std::size_t k = proto.workers, groups = opts.groups(k);
  const ParamVector theta0 = initial_theta(model, run);

  struct CheckIn {
    std::size_t worker;
    ParamVector theta;
    std::uint64_t step;
  };
  struct Done {};
  using Msg = std::variant<CheckIn, Done>;
  struct Reply {
    ParamVector center;
    std::uint64_t version;
  };
  Channel<Msg> to_server;
  std::vector<Channel<Reply>> replies(k);

  RunResult server_part;
  std::optional<CenterState> final_center;
  std::exception_ptr server_error;
  std::jthread server([&] {
    try {
      detail::Recorder rec(run, server_part);
      Rng center_init = make_stream(run.seed, kCenterInitStreamId, Stream::init);
      Rng noise_rng = make_stream(run.seed, kServerStreamId, Stream::noise);
      GaussianNoise cinit(center_init), noise(noise_rng);
      CenterState center{theta0, sample_momentum(cfg.base.mass, cinit), 0};
      std::vector<ParamVector> known(k, theta0);
      std::vector<std::uint64_t> last_version(k, 0);
      std::uint64_t clock = 0;
      std::size_t done = 0;
      rec.trace(kServerWorker, 0, 0.0, center.center);
      while (done < groups) {
        Msg m = to_server.receive();
        if (std::holds_alternative<Done>(m)) {
          ++done;
          continue;
        }
        auto& ci = std::get<CheckIn>(m);
        known[ci.worker] = std::move(ci.theta);
        while (clock < ci.step) {
          center = ec_center_step(center, known, cfg, noise);
          ++clock;
          ++server_part.counters.server_steps;
          rec.trace(kServerWorker, clock, static_cast<double>(clock), center.center);
        }
        ++server_part.staleness[center.version - last_version[ci.worker]];
        last_version[ci.worker] = center.version;
        replies[ci.worker].send(Reply{center.center, center.version});
      }
      final_center = center;
    } catch (...) {
      server_error = std::current_exception();
      // Unblock every worker waiting on a reply.
      for (auto& r : replies) r.send(Reply{ParamVector(model.dim(), std::nan("")), 0});
    }
  });

  std::vector<RunResult> parts(groups);
  std::vector<ChainState> finals(k);
  std::exception_ptr worker_error;
  try {
    detail::run_groups(groups, [&](std::size_t g) {
      RunResult& part = parts[g];
      detail::Recorder rec(run, part);
      struct Local {
        std::size_t id;
        WorkerStreams rs;
        ChainState ch;
        ParamVector center;
        std::uint64_t since_sync = 0;
      };
      std::vector<Local> mine;
      for (std::size_t w = g; w < k; w += groups) {
        WorkerStreams rs(run.seed, w);
        GaussianNoise init(rs.init);
        ChainState ch{theta0, sample_momentum(cfg.base.mass, init), 0};
        rec.observe(static_cast<std::int64_t>(w), 0, 0.0, ch.theta, false);
        mine.push_back(Local{w, std::move(rs), std::move(ch), theta0});
      }
      try {
        for (std::uint64_t t = 1; t <= run.steps; ++t) {
          for (auto& l : mine) {
            const auto wid = static_cast<std::int64_t>(l.id);
            GaussianNoise noise(l.rs.noise);
            l.ch = ec_worker_step(l.ch, model.noisy_grad(l.ch.theta, l.rs.data), l.center, cfg, noise);
            detail::check_finite_state(l.ch, wid);
            ++part.counters.worker_steps;
            part.max_age = std::max(part.max_age, ++l.since_sync);
            rec.observe(wid, t, static_cast<double>(t), l.ch.theta);
            if (t % proto.comm_period == 0) {
              to_server.send(CheckIn{l.id, l.ch.theta, t});
              Reply r = replies[l.id].receive();
              if (!all_finite(r.center)) throw NumericalFailure(kServerWorker, t);
              l.center = std::move(r.center);
              l.since_sync = 0;
              ++part.counters.round_trips;
              part.counters.messages += 2;
              part.counters.volume += 3 * model.dim();
            }
          }
        }
      } catch (...) {
        to_server.send(Done{});
        throw;
      }
      part.end_time = static_cast<double>(run.steps);
      for (auto& l : mine) finals[l.id] = std::move(l.ch);
      to_server.send(Done{});
    });
  } catch (...) {
    worker_error = std::current_exception();
  }
  server.join();
  if (server_error) std::rethrow_exception(server_error);
  if (worker_error) std::rethrow_exception(worker_error);

  RunResult out;
  out.arm = run.arm;
  out.seed = run.seed;
  for (auto& p : parts) detail::merge_into(out, std::move(p));
  detail::merge_into(out, std::move(server_part));
  detail::canonical_order(out);
  out.final_workers = std::move(finals);
  out.final_center = final_center;
  return out;
}

inline RunResult run_naive_async_threads(const TargetModel& model, const SghmcConfig& cfg,
                                         const ProtocolConfig& proto, const RunSpec& run,
                                         ThreadOptions opts = {}) {
  proto.validate();
  run.validate();
  cfg.validate(model.dim());
  const std::size_t k = proto.workers, groups = opts.groups(k), n = model.dim();

  struct ReportMsg {
    std::size_t worker;
    ParamVector grad;
    std::uint64_t version;
  };
  struct Pull {
    std::size_t worker;
  };
  struct Done {};
  using Msg = std::variant<ReportMsg, Pull, Done>;
  struct Snapshot {
    bool stop = false;
    ParamVector theta;
    std::uint64_t version = 0;
  };
  Channel<Msg> to_server;
  std::vector<Channel<Snapshot>> replies(k);
  std::atomic<bool> stop{false};

  ChainState server_state{initial_theta(model, run), {}, 0};
  {
    Rng server_init = make_stream(run.seed, kServerStreamId, Stream::init);
    GaussianNoise init_noise(server_init);
    server_state.momentum = sample_momentum(cfg.mass, init_noise);
  }
  const ParamVector theta0 = server_state.theta;

  RunResult server_part;
  std::exception_ptr server_error;
  std::jthread server([&] {
    try {
      detail::Recorder rec(run, server_part);
      Rng noise_rng = make_stream(run.seed, kServerStreamId, Stream::noise);
      GaussianNoise noise(noise_rng);
      rec.observe(kServerWorker, 0, 0.0, server_state.theta, false);
      std::deque<ReportMsg> pending;
      std::size_t done = 0;
      if (run.steps == 0) stop = true;
      while (done < groups) {
        Msg m = to_server.receive();
        if (std::holds_alternative<Done>(m)) {
          ++done;
        } else if (auto* p = std::get_if<Pull>(&m)) {
          replies[p->worker].send(Snapshot{stop.load(), server_state.theta, server_state.step});
        } else if (!stop) {
          pending.push_back(std::move(std::get<ReportMsg>(m)));
          if (pending.size() >= proto.wait_count) {
            ParamVector avg(n, 0.0);
            for (std::size_t i = 0; i < proto.wait_count; ++i) {
              for (std::size_t j = 0; j < n; ++j) avg[j] += pending[i].grad[j];
              ++server_part.staleness[server_state.step - pending[i].version];
            }
            for (auto& a : avg) a /= static_cast<double>(proto.wait_count);
            pending.erase(pending.begin(), pending.begin() + static_cast<std::ptrdiff_t>(proto.wait_count));
            server_state = sghmc_step(server_state, avg, cfg, noise);
            detail::check_finite_state(server_state, kServerWorker);
            ++server_part.counters.server_steps;
            rec.observe(kServerWorker, server_state.step, static_cast<double>(server_state.step), server_state.theta);
            if (server_state.step >= run.steps) stop = true;
          }
        }
      }
    } catch (...) {
      server_error = std::current_exception();
      stop = true;
      for (auto& r : replies) r.send(Snapshot{true, {}, 0});
      // Keep draining so workers never block on a full pipe; channels are unbounded.
    }
  });

  std::exception_ptr worker_error;
  std::vector<RunResult> parts(groups);
  try {
    detail::run_groups(groups, [&](std::size_t g) {
      RunResult& part = parts[g];
      struct Local {
        std::size_t id;
        WorkerStreams rs;
        ParamVector theta;
        std::uint64_t version = 0;
        std::uint64_t since_sync = 0;
        bool active = true;
      };
      std::vector<Local> mine;
      for (std::size_t w = g; w < k; w += groups) mine.push_back(Local{w, WorkerStreams(run.seed, w), theta0});
      std::size_t active = mine.size();
      while (active > 0 && !stop) {
        for (auto& l : mine) {
          if (!l.active) continue;
          if (stop) {
            l.active = false;
            --active;
            continue;
          }
          to_server.send(ReportMsg{l.id, model.noisy_grad(l.theta, l.rs.data), l.version});
          ++part.counters.worker_steps;
          ++part.counters.messages;
          part.counters.volume += n;
          part.max_age = std::max(part.max_age, ++l.since_sync);
          if (l.since_sync >= proto.comm_period) {
            to_server.send(Pull{l.id});
            Snapshot s = replies[l.id].receive();
            ++part.counters.round_trips;
            part.counters.messages += 2;
            part.counters.volume += n;
            if (s.stop) {
              l.active = false;
              --active;
              continue;
            }
            l.theta = std::move(s.theta);
            l.version = s.version;
            l.since_sync = 0;
          }
        }
      }
      to_server.send(Done{});
    });
  } catch (...) {
    worker_error = std::current_exception();
  }
  server.join();
  if (server_error) std::rethrow_exception(server_error);
  if (worker_error) std::rethrow_exception(worker_error);

  RunResult out;
  out.arm = run.arm;
  out.seed = run.seed;
  for (auto& p : parts) detail::merge_into(out, std::move(p));
  detail::merge_into(out, std::move(server_part));
  detail::canonical_order(out);
  out.end_time = static_cast<double>(server_state.step);
  out.final_server = server_state;
  return out;
}

}  // namespace ecmcmc
