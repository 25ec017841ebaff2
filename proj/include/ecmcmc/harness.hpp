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

#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ecmcmc/core.hpp"
#include "ecmcmc/dynamics.hpp"
#include "ecmcmc/model.hpp"
#include "ecmcmc/random.hpp"
#include "ecmcmc/scheduler.hpp"

namespace ecmcmc {

enum class Scheme { independent, naive_async, elastic };

struct ProtocolConfig {
  Scheme scheme = Scheme::independent;
  std::size_t workers = 1;      // K
  std::size_t comm_period = 1;  // s
  std::size_t wait_count = 1;   // O, naive scheme only
  DelayModel delay;

  void validate() const {
    if (workers < 1) throw ContractError("protocol: workers must be >= 1");
    if (comm_period < 1) throw ContractError("protocol: comm_period must be >= 1");
    if (wait_count < 1 || wait_count > workers) throw ContractError("protocol: wait_count must lie in [1, workers]");
    delay.validate(workers);
  }
};

/// A scalar function of theta recorded into the trace.
struct Metric {
  std::string name;
  std::function<double(std::span<const double>)> fn;
};

struct RunSpec {
  std::string arm = "run";
  std::uint64_t steps = 1000;  // per worker (independent, elastic) or server updates (naive)
  std::uint64_t burn_in = 0;
  std::uint64_t thin = 1;
  std::uint64_t trace_every = 0;  // 0 disables traces
  double max_time = 0.0;          // 0: unlimited virtual time
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> init_seed;  // defaults to seed
  ParamVector init;                        // empty: draw N(0, init_scale^2)
  double init_scale = 0.0;
  bool keep_samples = true;
  std::vector<Metric> metrics;

  void validate() const {
    if (thin < 1) throw ContractError("run: thin must be >= 1");
    if (burn_in > steps) throw ContractError("run: burn_in exceeds steps");
    if (!(max_time >= 0.0)) throw ContractError("run: max_time must be >= 0");
    if (!(init_scale >= 0.0)) throw ContractError("run: init_scale must be >= 0");
  }
};

inline constexpr std::int64_t kServerWorker = -1;
inline constexpr std::uint64_t kServerStreamId = 0xffffffffULL;
inline constexpr std::uint64_t kCenterInitStreamId = 0xfffffffeULL;

struct TraceRecord {
  std::string arm;
  std::int64_t worker = 0;  // kServerWorker for the server / center
  std::uint64_t step = 0;
  double time = 0.0;
  std::string metric;
  double value = 0.0;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

/// A retained theta snapshot. Together with RunResult::seed it carries a
/// reproducible (seed, worker, step) provenance.
struct Sample {
  std::int64_t worker = 0;
  std::uint64_t step = 0;
  double time = 0.0;
  ParamVector theta;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct Counters {
  std::uint64_t worker_steps = 0;  // gradient evaluations by workers
  std::uint64_t server_steps = 0;  // sampler updates applied by the server
  std::uint64_t messages = 0;
  std::uint64_t round_trips = 0;
  std::uint64_t volume = 0;  // doubles sent in either direction

  friend bool operator==(const Counters&, const Counters&) = default;
};

struct RunResult {
  std::string arm;
  std::uint64_t seed = 0;
  std::vector<TraceRecord> traces;
  std::vector<Sample> samples;
  Counters counters;
  std::map<std::uint64_t, std::uint64_t> staleness;  // server version lag -> count
  std::uint64_t max_age = 0;  // most local steps taken on one cached snapshot
  double end_time = 0.0;
  std::vector<ChainState> final_workers;
  std::optional<ChainState> final_server;
  std::optional<CenterState> final_center;
};

/// State became non-finite during a run.
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(std::int64_t worker, std::uint64_t step)
      : std::runtime_error("non-finite state at worker " + std::to_string(worker) + ", step " + std::to_string(step)),
        worker_(worker),
        step_(step) {}
  std::int64_t worker() const { return worker_; }
  std::uint64_t step() const { return step_; }

 private:
  std::int64_t worker_;
  std::uint64_t step_;
};

namespace detail {

class Recorder {
 public:
  Recorder(const RunSpec& run, RunResult& out) : run_(run), out_(out) {}

  void observe(std::int64_t worker, std::uint64_t step, double time, std::span<const double> theta,
               bool sample = true) {
    if (sample && run_.keep_samples && step > run_.burn_in && (step - run_.burn_in) % run_.thin == 0)
      out_.samples.push_back(Sample{worker, step, time, ParamVector(theta.begin(), theta.end())});
    trace(worker, step, time, theta);
  }

  void trace(std::int64_t worker, std::uint64_t step, double time, std::span<const double> theta) {
    if (run_.trace_every == 0 || step % run_.trace_every != 0) return;
    for (const auto& m : run_.metrics) out_.traces.push_back(TraceRecord{run_.arm, worker, step, time, m.name, m.fn(theta)});
  }

 private:
  const RunSpec& run_;
  RunResult& out_;
};

inline void check_finite_state(const ChainState& s, std::int64_t worker) {
  if (!all_finite(s.theta) || !all_finite(s.momentum)) throw NumericalFailure(worker, s.step);
}

inline bool past_horizon(const RunSpec& run, double t) { return run.max_time > 0.0 && t > run.max_time; }

}  // namespace detail

/// Shared starting point of every chain in a run.
inline ParamVector initial_theta(const TargetModel& model, const RunSpec& run) {
  if (!run.init.empty()) {
    require_dim(run.init.size(), model.dim(), "run init");
    require_finite(run.init, "run init");
    return run.init;
  }
  Rng r = make_stream(run.init_seed.value_or(run.seed), kServerStreamId, Stream::init);
  ParamVector th(model.dim());
  for (auto& x : th) x = run.init_scale * standard_normal(r);
  return th;
}

/// Per-worker random streams.
struct WorkerStreams {
  Rng init, noise, data, delay;

  WorkerStreams(std::uint64_t seed, std::uint64_t worker)
      : init(make_stream(seed, worker, Stream::init)),
        noise(make_stream(seed, worker, Stream::noise)),
        data(make_stream(seed, worker, Stream::data)),
        delay(make_stream(seed, worker, Stream::delay)) {}
};

/// Scheme II: K chains, no interaction.
inline RunResult run_independent(const TargetModel& model, const SghmcConfig& cfg, const ProtocolConfig& proto,
                                 const RunSpec& run) {
  proto.validate();
  run.validate();
  cfg.validate(model.dim());
  const std::size_t k = proto.workers;
  RunResult out;
  out.arm = run.arm;
  out.seed = run.seed;
  detail::Recorder rec(run, out);
  const ParamVector theta0 = initial_theta(model, run);

  std::vector<WorkerStreams> rs;
  std::vector<ChainState> chains(k);
  for (std::size_t w = 0; w < k; ++w) {
    rs.emplace_back(run.seed, w);
    GaussianNoise init(rs[w].init);
    chains[w] = ChainState{theta0, sample_momentum(cfg.mass, init), 0};
    rec.observe(static_cast<std::int64_t>(w), 0, 0.0, chains[w].theta, false);
  }
  EventQueue q;
  if (run.steps > 0)
    for (std::size_t w = 0; w < k; ++w) q.push(proto.delay.duration(w, rs[w].delay), EventKind::step, w);
  while (!q.empty()) {
    const Event e = q.pop();
    if (detail::past_horizon(run, e.time)) break;
    auto& ch = chains[e.worker];
    auto& r = rs[e.worker];
    const ParamVector g = model.noisy_grad(ch.theta, r.data);
    GaussianNoise noise(r.noise);
    ch = sghmc_step(ch, g, cfg, noise);
    detail::check_finite_state(ch, static_cast<std::int64_t>(e.worker));
    ++out.counters.worker_steps;
    out.end_time = e.time;
    rec.observe(static_cast<std::int64_t>(e.worker), ch.step, e.time, ch.theta);
    if (ch.step < run.steps) q.push(e.time + proto.delay.duration(e.worker, r.delay), EventKind::step, e.worker);
  }
  out.final_workers = std::move(chains);
  return out;
}

/// Scheme I: a parameter server owns (theta, p). Workers hold a possibly
/// stale copy of theta, refreshed after every `comm_period` gradient
/// reports. The server averages each batch of `wait_count` reports (in
/// arrival order) into one SGHMC step. Reports that arrive once a batch is
/// full wait for the next batch. `run.steps` counts server updates.
inline RunResult run_naive_async(const TargetModel& model, const SghmcConfig& cfg, const ProtocolConfig& proto,
                                 const RunSpec& run) {
  proto.validate();
  run.validate();
  cfg.validate(model.dim());
  const std::size_t k = proto.workers, n = model.dim();
  RunResult out;
  out.arm = run.arm;
  out.seed = run.seed;
  detail::Recorder rec(run, out);

  struct Report {
    ParamVector grad;
    std::uint64_t version;
  };
  struct View {
    ParamVector theta;
    std::uint64_t version = 0;
    std::uint64_t since_sync = 0;
  };

  Rng server_init = make_stream(run.seed, kServerStreamId, Stream::init);
  Rng server_noise = make_stream(run.seed, kServerStreamId, Stream::noise);
  GaussianNoise init_noise(server_init);
  ChainState server{initial_theta(model, run), {}, 0};
  server.momentum = sample_momentum(cfg.mass, init_noise);
  rec.observe(kServerWorker, 0, 0.0, server.theta, false);

  std::vector<WorkerStreams> rs;
  std::vector<View> views(k);
  for (std::size_t w = 0; w < k; ++w) {
    rs.emplace_back(run.seed, w);
    views[w].theta = server.theta;
  }
  std::deque<Report> pending;
  EventQueue q;
  if (run.steps > 0)
    for (std::size_t w = 0; w < k; ++w) q.push(proto.delay.duration(w, rs[w].delay), EventKind::report, w);

  while (!q.empty() && server.step < run.steps) {
    const Event e = q.pop();
    if (detail::past_horizon(run, e.time)) break;
    auto& v = views[e.worker];
    auto& r = rs[e.worker];
    out.end_time = e.time;
    if (e.kind == EventKind::report) {
      pending.push_back(Report{model.noisy_grad(v.theta, r.data), v.version});
      ++out.counters.worker_steps;
      ++out.counters.messages;
      out.counters.volume += n;
      ++v.since_sync;
      out.max_age = std::max(out.max_age, v.since_sync);
      if (pending.size() >= proto.wait_count) {
        ParamVector avg(n, 0.0);
        for (std::size_t i = 0; i < proto.wait_count; ++i) {
          const auto& rep = pending[i];
          for (std::size_t j = 0; j < n; ++j) avg[j] += rep.grad[j];
          ++out.staleness[server.step - rep.version];
        }
        for (auto& a : avg) a /= static_cast<double>(proto.wait_count);
        pending.erase(pending.begin(), pending.begin() + static_cast<std::ptrdiff_t>(proto.wait_count));
        GaussianNoise noise(server_noise);
        server = sghmc_step(server, avg, cfg, noise);
        detail::check_finite_state(server, kServerWorker);
        ++out.counters.server_steps;
        rec.observe(kServerWorker, server.step, e.time, server.theta);
      }
      if (v.since_sync >= proto.comm_period)
        q.push(e.time + proto.delay.latency, EventKind::sync, e.worker);
      else
        q.push(e.time + proto.delay.duration(e.worker, r.delay), EventKind::report, e.worker);
    } else {
      v.theta = server.theta;
      v.version = server.step;
      v.since_sync = 0;
      ++out.counters.round_trips;
      out.counters.messages += 2;
      out.counters.volume += n;
      q.push(e.time + proto.delay.duration(e.worker, r.delay), EventKind::report, e.worker);
    }
  }
  out.final_server = server;
  return out;
}

/// Scheme IIa: K elastically coupled SGHMC chains and a center server.
///
/// Each worker steps against its cached center estimate and, every
/// `comm_period` local steps, sends its theta to the server and receives the
/// current (c, r). The center runs on its own clock of one step per worker
/// step: on a check-in from a worker at local step t the server first
/// advances (c, r) up to step t using the most recent position it holds for
/// every worker, then replies.
inline RunResult run_elastic(const TargetModel& model, const EcConfig& ec, const ProtocolConfig& proto,
                             const RunSpec& run) {
  proto.validate();
  run.validate();
  EcConfig cfg = ec;
  cfg.workers = proto.workers;
  cfg.validate(model.dim());
  const std::size_t k = proto.workers, n = model.dim();
  RunResult out;
  out.arm = run.arm;
  out.seed = run.seed;
  detail::Recorder rec(run, out);
  const ParamVector theta0 = initial_theta(model, run);

  Rng center_init = make_stream(run.seed, kCenterInitStreamId, Stream::init);
  Rng server_noise_rng = make_stream(run.seed, kServerStreamId, Stream::noise);
  GaussianNoise cinit(center_init);
  GaussianNoise server_noise(server_noise_rng);
  CenterState center{theta0, sample_momentum(cfg.base.mass, cinit), 0};
  std::vector<ParamVector> known(k, theta0);
  std::uint64_t center_clock = 0;

  struct View {
    ParamVector center;
    std::uint64_t version = 0;
    std::uint64_t since_sync = 0;
  };
  std::vector<WorkerStreams> rs;
  std::vector<ChainState> chains(k);
  std::vector<View> views(k);
  for (std::size_t w = 0; w < k; ++w) {
    rs.emplace_back(run.seed, w);
    GaussianNoise init(rs[w].init);
    chains[w] = ChainState{theta0, sample_momentum(cfg.base.mass, init), 0};
    views[w].center = center.center;
    rec.observe(static_cast<std::int64_t>(w), 0, 0.0, chains[w].theta, false);
  }
  rec.trace(kServerWorker, 0, 0.0, center.center);

  EventQueue q;
  if (run.steps > 0)
    for (std::size_t w = 0; w < k; ++w) q.push(proto.delay.duration(w, rs[w].delay), EventKind::step, w);
  while (!q.empty()) {
    const Event e = q.pop();
    if (detail::past_horizon(run, e.time)) break;
    const auto wid = static_cast<std::int64_t>(e.worker);
    auto& ch = chains[e.worker];
    auto& v = views[e.worker];
    auto& r = rs[e.worker];
    out.end_time = e.time;
    if (e.kind == EventKind::step) {
      const ParamVector g = model.noisy_grad(ch.theta, r.data);
      GaussianNoise noise(r.noise);
      ch = ec_worker_step(ch, g, v.center, cfg, noise);
      detail::check_finite_state(ch, wid);
      ++out.counters.worker_steps;
      ++v.since_sync;
      out.max_age = std::max(out.max_age, v.since_sync);
      rec.observe(wid, ch.step, e.time, ch.theta);
      if (ch.step % proto.comm_period == 0)
        q.push(e.time + proto.delay.latency, EventKind::sync, e.worker);
      else if (ch.step < run.steps)
        q.push(e.time + proto.delay.duration(e.worker, r.delay), EventKind::step, e.worker);
    } else {
      known[e.worker] = ch.theta;
      while (center_clock < ch.step) {
        center = ec_center_step(center, known, cfg, server_noise);
        ++center_clock;
        if (!all_finite(center.center) || !all_finite(center.momentum)) throw NumericalFailure(kServerWorker, center_clock);
        ++out.counters.server_steps;
        rec.trace(kServerWorker, center_clock, e.time, center.center);
      }
      ++out.staleness[center.version - v.version];
      v.center = center.center;
      v.version = center.version;
      v.since_sync = 0;
      ++out.counters.round_trips;
      out.counters.messages += 2;
      out.counters.volume += 3 * n;
      if (ch.step < run.steps) q.push(e.time + proto.delay.duration(e.worker, r.delay), EventKind::step, e.worker);
    }
  }
  out.final_workers = std::move(chains);
  out.final_center = center;
  return out;
}

enum class OptimizerVariant { ec_momentum, eamsgd };

/// Noise-free coupled optimisation with exact gradients. Workers start from
/// independent N(0, init_scale^2) draws (or `run.init`), velocities at zero,
/// the center at the workers' mean. Elastic terms are applied on steps that
/// are multiples of `comm_period` and dropped in between.
inline RunResult run_optimizer_arm(const TargetModel& model, OptimizerVariant variant, const OptimizerConfig& cfg,
                                   const ProtocolConfig& proto, const RunSpec& run) {
  proto.validate();
  run.validate();
  cfg.validate();
  const std::size_t k = proto.workers, n = model.dim();
  RunResult out;
  out.arm = run.arm;
  out.seed = run.seed;
  RunSpec traced = run;
  if (traced.metrics.empty())
    traced.metrics.push_back(Metric{"U", [&model](std::span<const double> th) { return model.potential(th); }});
  detail::Recorder rec(traced, out);

  CoupledState s;
  for (std::size_t w = 0; w < k; ++w) {
    MomentumState m{ParamVector(n), ParamVector(n, 0.0)};
    if (!run.init.empty()) {
      require_dim(run.init.size(), n, "run init");
      m.theta = run.init;
    } else {
      Rng r = make_stream(run.init_seed.value_or(run.seed), w, Stream::init);
      for (auto& x : m.theta) x = run.init_scale * standard_normal(r);
    }
    s.workers.push_back(std::move(m));
  }
  s.center = MomentumState{ParamVector(n, 0.0), ParamVector(n, 0.0)};
  for (const auto& w : s.workers)
    for (std::size_t j = 0; j < n; ++j) s.center.theta[j] += w.theta[j];
  for (auto& c : s.center.theta) c /= static_cast<double>(k);
  for (std::size_t w = 0; w < k; ++w) rec.observe(static_cast<std::int64_t>(w), 0, 0.0, s.workers[w].theta, false);

  std::vector<ParamVector> grads(k);
  for (std::uint64_t t = 1; t <= run.steps; ++t) {
    for (std::size_t w = 0; w < k; ++w) grads[w] = model.grad_potential(s.workers[w].theta);
    const bool couple = t % proto.comm_period == 0;
    s = variant == OptimizerVariant::ec_momentum ? ec_deterministic_step(s, grads, cfg, couple)
                                         : eamsgd_step(s, grads, cfg, couple);
    out.counters.worker_steps += k;
    ++out.counters.server_steps;
    if (couple) {
      out.counters.round_trips += k;
      out.counters.messages += 2 * k;
      out.counters.volume += 2 * n * k;
    }
    const auto time = static_cast<double>(t);
    out.end_time = time;
    for (std::size_t w = 0; w < k; ++w) {
      if (!all_finite(s.workers[w].theta)) throw NumericalFailure(static_cast<std::int64_t>(w), t);
      rec.observe(static_cast<std::int64_t>(w), t, time, s.workers[w].theta);
    }
    rec.trace(kServerWorker, t, time, s.center.theta);
  }
  for (const auto& w : s.workers) out.final_workers.push_back(ChainState{w.theta, w.velocity, run.steps});
  out.final_center = CenterState{s.center.theta, s.center.velocity, run.steps};
  return out;
}

/// First step at which every worker's `metric` is below `threshold`
/// (server records are ignored unless there are no worker records).
inline std::optional<std::uint64_t> steps_to_threshold(const RunResult& r, const std::string& metric,
                                                       double threshold) {
  std::map<std::uint64_t, std::pair<bool, bool>> by_step;  // step -> (seen, all below)
  bool any_worker = false;
  for (const auto& t : r.traces)
    if (t.metric == metric && t.worker != kServerWorker) any_worker = true;
  for (const auto& t : r.traces) {
    if (t.metric != metric || (any_worker && t.worker == kServerWorker)) continue;
    auto [it, fresh] = by_step.try_emplace(t.step, true, true);
    it->second.second = it->second.second && t.value < threshold;
  }
  for (const auto& [step, flags] : by_step)
    if (flags.second) return step;
  return std::nullopt;
}

}  // namespace ecmcmc
