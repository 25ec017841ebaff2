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

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>

#include "ecmcmc/diagnostics.hpp"
#include "ecmcmc/harness.hpp"
#include "ecmcmc/threads.hpp"

using namespace ecmcmc;

namespace {

void expect_same(const RunResult& a, const RunResult& b) {
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_EQ(a.traces, b.traces);
  EXPECT_EQ(a.counters, b.counters);
  EXPECT_EQ(a.staleness, b.staleness);
  EXPECT_EQ(a.max_age, b.max_age);
  EXPECT_EQ(a.end_time, b.end_time);
  ASSERT_EQ(a.final_workers.size(), b.final_workers.size());
  for (std::size_t i = 0; i < a.final_workers.size(); ++i) {
    EXPECT_EQ(a.final_workers[i].theta, b.final_workers[i].theta);
    EXPECT_EQ(a.final_workers[i].momentum, b.final_workers[i].momentum);
  }
}

EcConfig toy_ec(std::size_t n, double alpha) {
  EcConfig ec;
  ec.base = SghmcConfig::isotropic(n, 1e-2, 1.0);
  ec.alpha = alpha;
  ec.center_noise.assign(n, 1.0);
  return ec;
}

RunSpec basic_run(std::uint64_t steps, std::uint64_t seed) {
  RunSpec r;
  r.steps = steps;
  r.seed = seed;
  r.init = {2.0, -1.0};
  return r;
}

Metric first_coord() {
  return Metric{"x0", [](std::span<const double> th) { return th[0]; }};
}

}  // namespace

TEST(Independent, SingleWorkerMatchesBareLoop) {
  const GaussianTarget target({0.0, 0.0}, {{1.0, 0.0}, {0.0, 1.0}}, {0.3, 0.3});
  const auto cfg = SghmcConfig::isotropic(2, 0.05, 1.0);
  const auto run = basic_run(300, 17);
  const auto res = run_independent(target, cfg, ProtocolConfig{Scheme::independent, 1}, run);

  Rng init = make_stream(17, 0, Stream::init), noise = make_stream(17, 0, Stream::noise),
      data = make_stream(17, 0, Stream::data);
  GaussianNoise in(init), nn(noise);
  ChainState s{run.init, sample_momentum(cfg.mass, in), 0};
  for (int t = 0; t < 300; ++t) {
    s = sghmc_step(s, target.noisy_grad(s.theta, data), cfg, nn);
    ASSERT_EQ(res.samples[static_cast<std::size_t>(t)].theta, s.theta);
  }
  EXPECT_EQ(res.final_workers[0].momentum, s.momentum);
  EXPECT_EQ(res.counters.messages, 0u);
}

TEST(Independent, DeterministicAndChainsDiffer) {
  const auto target = GaussianTarget::standard(2, 0.5);
  auto run = basic_run(200, 5);
  run.trace_every = 10;
  run.metrics = {first_coord()};
  ProtocolConfig proto{Scheme::independent, 4};
  proto.delay = DelayModel{DelayKind::uniform_jitter, 0.3, 0.0, {}};
  const auto cfg = SghmcConfig::isotropic(2, 0.05, 1.0);
  const auto a = run_independent(target, cfg, proto, run), b = run_independent(target, cfg, proto, run);
  expect_same(a, b);
  EXPECT_NE(a.final_workers[0].theta, a.final_workers[1].theta);
  EXPECT_EQ(a.counters.messages, 0u);
  EXPECT_EQ(a.counters.worker_steps, 800u);
  EXPECT_EQ(a.traces.size(), 4u * 21);  // includes step 0
}

TEST(Independent, SamplesCarryProvenance) {
  const auto target = GaussianTarget::standard(2);
  auto run = basic_run(100, 8);
  run.burn_in = 20;
  run.thin = 5;
  const auto res = run_independent(target, SghmcConfig::isotropic(2, 0.05, 1.0), ProtocolConfig{Scheme::independent, 3}, run);
  EXPECT_EQ(res.samples.size(), 3u * 16);
  for (const auto& s : res.samples) {
    EXPECT_GT(s.step, 20u);
    EXPECT_EQ((s.step - 20) % 5, 0u);
    EXPECT_LT(s.worker, 3);
  }
  EXPECT_EQ(res.seed, 8u);
}

TEST(NaiveAsync, SynchronyLimitMatchesAveragedGradientOracle) {
  const GaussianTarget target({1.0, -1.0}, {{1.0, 0.3}, {0.3, 2.0}}, {0.5, 0.5});
  const auto cfg = SghmcConfig::isotropic(2, 0.05, 1.0);
  const std::size_t k = 4;
  const auto run = basic_run(150, 21);
  const auto res = run_naive_async(target, cfg, ProtocolConfig{Scheme::naive_async, k, 1, k}, run);

  Rng sinit = make_stream(21, kServerStreamId, Stream::init), snoise = make_stream(21, kServerStreamId, Stream::noise);
  GaussianNoise in(sinit), nn(snoise);
  ChainState s{run.init, sample_momentum(cfg.mass, in), 0};
  std::vector<Rng> data;
  for (std::size_t w = 0; w < k; ++w) data.push_back(make_stream(21, w, Stream::data));
  std::size_t idx = 0;
  for (int t = 0; t < 150; ++t) {
    ParamVector avg(2, 0.0);
    for (std::size_t w = 0; w < k; ++w) {
      const auto g = target.noisy_grad(s.theta, data[w]);
      for (int j = 0; j < 2; ++j) avg[j] += g[j];
    }
    for (auto& a : avg) a /= static_cast<double>(k);
    s = sghmc_step(s, avg, cfg, nn);
    while (res.samples[idx].worker != kServerWorker) ++idx;
    ASSERT_EQ(res.samples[idx++].theta, s.theta) << "step " << t;
  }
  EXPECT_EQ(res.final_server->momentum, s.momentum);
  EXPECT_EQ(res.staleness.size(), 1u);
  EXPECT_EQ(res.staleness.begin()->first, 0u);
}

TEST(NaiveAsync, SingleWorkerIsPlainSghmc) {
  const GaussianTarget target({0.0, 0.0}, {{1.0, 0.0}, {0.0, 1.0}}, {0.2, 0.2});
  const auto cfg = SghmcConfig::isotropic(2, 0.05, 1.0);
  const auto run = basic_run(100, 3);
  const auto res = run_naive_async(target, cfg, ProtocolConfig{Scheme::naive_async, 1, 1, 1}, run);
  Rng sinit = make_stream(3, kServerStreamId, Stream::init), snoise = make_stream(3, kServerStreamId, Stream::noise),
      data = make_stream(3, 0, Stream::data);
  GaussianNoise in(sinit), nn(snoise);
  ChainState s{run.init, sample_momentum(cfg.mass, in), 0};
  for (int t = 0; t < 100; ++t) s = sghmc_step(s, target.noisy_grad(s.theta, data), cfg, nn);
  EXPECT_EQ(res.final_server->theta, s.theta);
  EXPECT_EQ(res.final_server->momentum, s.momentum);
}

TEST(NaiveAsync, StalenessBoundedByPeriodWithConstantDelays) {
  const auto target = GaussianTarget::standard(2, 0.1);
  for (std::size_t s : {1u, 2u, 5u, 8u}) {
    for (std::size_t k : {1u, 3u, 6u}) {
      const auto res = run_naive_async(target, SghmcConfig::isotropic(2, 0.02, 1.0),
                                       ProtocolConfig{Scheme::naive_async, k, s, k}, basic_run(200, 4));
      EXPECT_LE(res.max_age, s);
      EXPECT_LE(res.staleness.rbegin()->first, s) << "s=" << s << " K=" << k;
    }
  }
}

TEST(NaiveAsync, DeterministicUnderJitterAndLatency) {
  const auto target = GaussianTarget::standard(2, 0.3);
  ProtocolConfig proto{Scheme::naive_async, 5, 3, 2};
  proto.delay = DelayModel{DelayKind::uniform_jitter, 0.5, 0.7, {1.0, 2.0, 1.0, 0.5, 1.5}};
  const auto a = run_naive_async(target, SghmcConfig::isotropic(2, 0.02, 1.0), proto, basic_run(300, 6));
  const auto b = run_naive_async(target, SghmcConfig::isotropic(2, 0.02, 1.0), proto, basic_run(300, 6));
  expect_same(a, b);
  EXPECT_EQ(a.final_server->theta, b.final_server->theta);
  EXPECT_EQ(a.counters.server_steps, 300u);
}

TEST(NaiveAsync, RejectsBadWaitCount) {
  const auto target = GaussianTarget::standard(2);
  EXPECT_THROW(run_naive_async(target, SghmcConfig::isotropic(2, 0.02, 1.0), ProtocolConfig{Scheme::naive_async, 3, 1, 4},
                               basic_run(10, 1)),
               ContractError);
  EXPECT_THROW(run_naive_async(target, SghmcConfig::isotropic(2, 0.02, 1.0), ProtocolConfig{Scheme::naive_async, 3, 0, 1},
                               basic_run(10, 1)),
               ContractError);
}

TEST(Elastic, ZeroAlphaMatchesIndependentWithCombinedNoise) {
  const auto target = GaussianTarget::standard(2, 0.4);
  auto ec = toy_ec(2, 0.0);
  ec.center_noise = {0.5, 0.5};
  ec.worker_noise = WorkerNoise::gradient_plus_center;
  auto plain = ec.base;
  plain.injected_noise = {1.5, 1.5};
  auto run = basic_run(400, 12);
  run.trace_every = 7;
  run.metrics = {first_coord()};
  ProtocolConfig proto{Scheme::elastic, 4, 3};
  proto.delay = DelayModel{DelayKind::uniform_jitter, 0.4, 0.0, {}};
  const auto e = run_elastic(target, ec, proto, run);
  proto.scheme = Scheme::independent;
  const auto i = run_independent(target, plain, proto, run);
  EXPECT_EQ(e.samples, i.samples);
  for (std::size_t w = 0; w < 4; ++w) {
    EXPECT_EQ(e.final_workers[w].theta, i.final_workers[w].theta);
    EXPECT_EQ(e.final_workers[w].momentum, i.final_workers[w].momentum);
  }
  EXPECT_GT(e.counters.messages, 0u);
}

TEST(Elastic, RoundTripsPerWorkerAreStepsOverPeriod) {
  const auto target = GaussianTarget::standard(2);
  for (std::size_t s : {1u, 3u, 7u, 10u}) {
    ProtocolConfig proto{Scheme::elastic, 3, s};
    proto.delay = DelayModel{DelayKind::uniform_jitter, 0.5, 0.2, {1.0, 1.5, 0.6}};
    const auto res = run_elastic(target, toy_ec(2, 1.0), proto, basic_run(101, 2));
    EXPECT_EQ(res.counters.round_trips, 3u * (101 / s)) << "s=" << s;
    EXPECT_EQ(res.counters.messages, 2u * res.counters.round_trips);
    EXPECT_EQ(res.counters.worker_steps, 303u);
  }
}

TEST(Elastic, StalenessBoundedByPeriodWithConstantDelays) {
  const auto target = GaussianTarget::standard(2);
  for (std::size_t s : {1u, 2u, 4u, 8u}) {
    const auto res = run_elastic(target, toy_ec(2, 1.0), ProtocolConfig{Scheme::elastic, 4, s}, basic_run(200, 9));
    EXPECT_LE(res.max_age, s);
    EXPECT_LE(res.staleness.rbegin()->first, s);
  }
}

TEST(Elastic, StalenessBoundWithJitteredDelays) {
  const auto target = GaussianTarget::standard(2);
  for (std::size_t s : {1u, 2u, 4u}) {
    ProtocolConfig proto{Scheme::elastic, 4, s};
    proto.delay = DelayModel{DelayKind::uniform_jitter, 0.3, 0.0, {1.0, 1.2, 0.9, 1.1}};
    const auto res = run_elastic(target, toy_ec(2, 1.0), proto, basic_run(200, 9));
    const double bound = std::ceil(static_cast<double>(s) * proto.delay.max_delay_ratio());
    EXPECT_LE(static_cast<double>(res.max_age), bound);
  }
}

TEST(Elastic, Deterministic) {
  const auto target = GaussianTarget::standard(2, 0.2);
  auto run = basic_run(250, 31);
  run.trace_every = 5;
  run.metrics = {first_coord()};
  ProtocolConfig proto{Scheme::elastic, 4, 4};
  proto.delay = DelayModel{DelayKind::uniform_jitter, 0.5, 0.3, {}};
  const auto a = run_elastic(target, toy_ec(2, 1.0), proto, run), b = run_elastic(target, toy_ec(2, 1.0), proto, run);
  expect_same(a, b);
  EXPECT_EQ(a.final_center->center, b.final_center->center);
}

TEST(Elastic, CenterVersionIncreases) {
  const auto target = GaussianTarget::standard(2);
  auto run = basic_run(60, 1);
  run.trace_every = 1;
  run.metrics = {first_coord()};
  const auto res = run_elastic(target, toy_ec(2, 1.0), ProtocolConfig{Scheme::elastic, 2, 3}, run);
  std::uint64_t last = 0;
  bool first = true;
  for (const auto& t : res.traces) {
    if (t.worker != kServerWorker) continue;
    if (!first) EXPECT_GT(t.step, last);
    last = t.step;
    first = false;
  }
  EXPECT_EQ(res.final_center->version, 60u);
}

TEST(Elastic, MaxTimeStopsEarly) {
  const auto target = GaussianTarget::standard(2);
  auto run = basic_run(1000, 1);
  run.max_time = 50.0;
  const auto res = run_elastic(target, toy_ec(2, 1.0), ProtocolConfig{Scheme::elastic, 2, 2}, run);
  EXPECT_LE(res.end_time, 50.0);
  EXPECT_EQ(res.counters.worker_steps, 100u);
}

TEST(Elastic, NonFiniteStateRaisesNumericalFailure) {
  const auto target = GaussianTarget::standard(2);
  auto ec = toy_ec(2, 1.0);
  ec.base.epsilon = 3.0;
  try {
    run_elastic(target, ec, ProtocolConfig{Scheme::elastic, 2, 1}, basic_run(5000, 1));
    FAIL() << "expected NumericalFailure";
  } catch (const NumericalFailure& f) {
    EXPECT_GT(f.step(), 0u);
  }
}

TEST(Optimizer, ZeroAlphaIsMomentumDescent) {
  const auto bowl = GaussianTarget::standard(2);
  OptimizerConfig cfg{0.1, 0.0, 0.2};
  RunSpec run;
  run.steps = 50;
  run.init = {1.0, -2.0};
  for (auto v : {OptimizerVariant::ec_momentum, OptimizerVariant::eamsgd}) {
    const auto res = run_optimizer_arm(bowl, v, cfg, ProtocolConfig{Scheme::elastic, 2, 1}, run);
    ParamVector th = run.init, vel{0.0, 0.0};
    for (int t = 0; t < 50; ++t)
      for (int j = 0; j < 2; ++j) {
        const double nv = vel[j] - 0.1 * th[j] - 0.2 * vel[j];
        th[j] += vel[j];
        vel[j] = nv;
      }
    EXPECT_EQ(res.final_workers[0].theta, th);
    EXPECT_EQ(res.final_workers[1].theta, th);
  }
}

TEST(Optimizer, BothVariantsReachThresholdOnBowl) {
  const auto bowl = GaussianTarget::standard(3);
  OptimizerConfig cfg{0.01, 1.0, 0.1};
  RunSpec run;
  run.steps = 3000;
  run.init_scale = 2.0;
  run.seed = 4;
  run.trace_every = 1;
  for (auto v : {OptimizerVariant::ec_momentum, OptimizerVariant::eamsgd}) {
    const auto res = run_optimizer_arm(bowl, v, cfg, ProtocolConfig{Scheme::elastic, 4, 1}, run);
    EXPECT_TRUE(steps_to_threshold(res, "U", 1e-6).has_value());
    for (const auto& w : res.final_workers) EXPECT_LT(std::sqrt(dot(w.theta, w.theta)), 1e-3);
  }
}

TEST(Optimizer, IntermittentCouplingCountsMessages) {
  const auto bowl = GaussianTarget::standard(2);
  RunSpec run;
  run.steps = 100;
  run.init_scale = 1.0;
  const auto res = run_optimizer_arm(bowl, OptimizerVariant::eamsgd, OptimizerConfig{}, ProtocolConfig{Scheme::elastic, 4, 8}, run);
  EXPECT_EQ(res.counters.round_trips, 4u * (100 / 8));
}

TEST(Optimizer, CouplingOnlyOnPeriodSteps) {
  const auto bowl = GaussianTarget::standard(1);
  RunSpec run;
  run.steps = 9;
  run.init_scale = 1.0;
  run.seed = 6;
  run.trace_every = 1;
  run.metrics = {first_coord()};
  const OptimizerConfig cfg{0.1, 1.0, 0.05};
  const auto res = run_optimizer_arm(bowl, OptimizerVariant::eamsgd, cfg, ProtocolConfig{Scheme::elastic, 3, 4}, run);
  CoupledState s;
  for (const auto& t : res.traces)
    if (t.step == 0 && t.worker != kServerWorker) s.workers.push_back({{t.value}, {0.0}});
  ASSERT_EQ(s.workers.size(), 3u);
  s.center = {{(s.workers[0].theta[0] + s.workers[1].theta[0] + s.workers[2].theta[0]) / 3.0}, {0.0}};
  for (std::uint64_t t = 1; t <= 9; ++t) {
    std::vector<ParamVector> g;
    for (const auto& w : s.workers) g.push_back(w.theta);
    s = eamsgd_step(s, g, cfg, t % 4 == 0);
  }
  EXPECT_EQ(res.final_center->center, s.center.theta);
  for (std::size_t w = 0; w < 3; ++w) EXPECT_EQ(res.final_workers[w].theta, s.workers[w].theta);
  EXPECT_EQ(res.counters.round_trips, 3u * 2);
}

namespace {

struct MeanVar {
  double mean, var, se_mean, se_var;
};

// Per-coordinate-0 mean and variance with standard errors from batch means.
MeanVar batch_stats(const RunResult& r) {
  std::vector<double> x;
  for (const auto& s : r.samples) x.push_back(s.theta[0]);
  const std::size_t b = 20, len = x.size() / b;
  std::vector<double> bm, bv;
  for (std::size_t i = 0; i < b; ++i) {
    double m = 0.0, q = 0.0;
    for (std::size_t j = 0; j < len; ++j) m += x[i * len + j];
    m /= static_cast<double>(len);
    for (std::size_t j = 0; j < len; ++j) q += (x[i * len + j] - m) * (x[i * len + j] - m);
    bm.push_back(m);
    bv.push_back(q / static_cast<double>(len - 1));
  }
  auto mv = [&](const std::vector<double>& v) {
    double m = 0.0, q = 0.0;
    for (double y : v) m += y;
    m /= static_cast<double>(v.size());
    for (double y : v) q += (y - m) * (y - m);
    return std::pair{m, std::sqrt(q / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()))};
  };
  const auto [m, sm] = mv(bm);
  const auto [v, sv] = mv(bv);
  return {m, v, sm, sv};
}

bool overlap(double a, double sa, double b, double sb) { return std::abs(a - b) <= 3.0 * (sa + sb); }

}  // namespace

TEST(Threads, ElasticMomentsAgreeWithVirtualTime) {
  const auto target = GaussianTarget::standard(2);
  auto run = basic_run(40000, 77);
  run.burn_in = 2000;
  run.thin = 10;
  run.init = {0.0, 0.0};
  ProtocolConfig proto{Scheme::elastic, 4, 2};
  const auto v = run_elastic(target, toy_ec(2, 1.0), proto, run);
  const auto t = run_elastic_threads(target, toy_ec(2, 1.0), proto, run, ThreadOptions{2});
  // Pool in worker order so batches are contiguous per chain.
  auto sorted = [](RunResult r) {
    detail::canonical_order(r);
    return r;
  };
  const auto a = batch_stats(sorted(v)), b = batch_stats(t);
  EXPECT_TRUE(overlap(a.mean, a.se_mean, b.mean, b.se_mean)) << a.mean << " vs " << b.mean;
  EXPECT_TRUE(overlap(a.var, a.se_var, b.var, b.se_var)) << a.var << " vs " << b.var;
  EXPECT_EQ(t.counters.round_trips, 4u * (40000 / 2));
}

TEST(Threads, IndependentMatchesVirtualTimeExactly) {
  // Without interaction each chain's stream is consumed identically.
  const auto target = GaussianTarget::standard(2, 0.2);
  const auto run = basic_run(500, 3);
  ProtocolConfig proto{Scheme::independent, 5};
  auto v = run_independent(target, SghmcConfig::isotropic(2, 0.02, 1.0), proto, run);
  const auto t = run_independent_threads(target, SghmcConfig::isotropic(2, 0.02, 1.0), proto, run, ThreadOptions{3});
  for (std::size_t w = 0; w < 5; ++w) EXPECT_EQ(v.final_workers[w].theta, t.final_workers[w].theta);
  detail::canonical_order(v);
  EXPECT_EQ(v.samples, t.samples);
}

TEST(Threads, NaiveAsyncCompletesAndCounts) {
  const auto target = GaussianTarget::standard(2, 0.2);
  const auto run = basic_run(2000, 3);
  for (std::size_t o : {1u, 3u}) {
    const auto res = run_naive_async_threads(target, SghmcConfig::isotropic(2, 0.02, 1.0),
                                             ProtocolConfig{Scheme::naive_async, 3, 4, o}, run, ThreadOptions{0});
    EXPECT_EQ(res.counters.server_steps, 2000u);
    EXPECT_TRUE(all_finite(res.final_server->theta));
  }
}

TEST(Threads, NaiveAsyncSingleWorkerIsPlainSghmc) {
  const auto target = GaussianTarget::standard(2, 0.2);
  const auto run = basic_run(300, 8);
  const auto cfg = SghmcConfig::isotropic(2, 0.02, 1.0);
  const ProtocolConfig proto{Scheme::naive_async, 1, 1, 1};
  const auto t = run_naive_async_threads(target, cfg, proto, run);
  const auto v = run_naive_async(target, cfg, proto, run);
  EXPECT_EQ(t.final_server->theta, v.final_server->theta);
}
