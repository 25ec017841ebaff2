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

// Invariant checks behind `ecmcmc check`. Each returns a named pass/fail
// line; sizes are parameters so the acceptance binary can run them longer.

#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "ecmcmc/dynamics.hpp"
#include "ecmcmc/harness.hpp"
#include "ecmcmc/model.hpp"

namespace ecmcmc {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  bool expected_failure = false;  // a negative control; `passed` means it failed as it should
};

namespace detail {

inline VectorField grad_field(const TargetModel& m) {
  return [&m](std::span<const double> th) { return m.grad_potential(th); };
}

inline std::vector<double> normal_block(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = standard_normal(rng);
  return v;
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

inline EcConfig check_ec(std::size_t n, double eps, double alpha, double v, double c, std::size_t k) {
  EcConfig ec;
  ec.base = SghmcConfig::isotropic(n, eps, v);
  ec.alpha = alpha;
  ec.center_noise.assign(n, c);
  ec.workers = k;
  return ec;
}

inline DataSet four_point_set() {
  DataSet d;
  d.n_features = 2;
  d.features = {1.0, 0.0, 0.0, 1.0, -1.0, 0.5, 0.5, -1.0};
  d.labels = {0, 1, 0, 1};
  return d;
}

}  // namespace detail

inline std::vector<CheckResult> check_validators() {
  std::vector<CheckResult> out;
  const GaussianTarget target({0.5, -1.0}, {{2.0, 0.3}, {0.3, 1.0}});
  SghmcConfig cfg = SghmcConfig::isotropic(2, 0.01, 1.0);
  cfg.mass = {1.0, 2.0};
  const auto s = validate_dynamics(sghmc_dynamics_spec(detail::grad_field(target), cfg));
  out.push_back({"validator.sghmc", s.ok(), "min eigenvalue of D " + detail::fmt(s.min_eigenvalue)});
  const auto e = validate_dynamics(ec_dynamics_spec(detail::grad_field(target), detail::check_ec(2, 0.01, 1.0, 1.0, 1.0, 4)));
  out.push_back({"validator.ec_sghmc", e.ok(), "K=4, min eigenvalue of D " + detail::fmt(e.min_eigenvalue)});
  return out;
}

/// The curl as usually printed next to the update carries V on its diagonal
/// and is not skew-symmetric; the validator should say so.
inline CheckResult check_printed_curl() {
  const auto target = GaussianTarget::standard(2);
  const auto r = validate_dynamics(printed_sghmc_dynamics_spec(detail::grad_field(target),
                                                               SghmcConfig::isotropic(2, 0.01, 1.0)));
  std::string why = r.failures.empty() ? "validator accepted it" : r.failures.front();
  return {"validator.printed_curl_rejected", !r.ok(), why, true};
}

inline CheckResult check_instantiation_sghmc(int steps = 100) {
  const GaussianTarget target({0.5, -1.0}, {{2.0, 0.3}, {0.3, 1.0}});
  SghmcConfig cfg;
  cfg.epsilon = 0.05;
  cfg.mass = {1.0, 2.0};
  cfg.grad_noise = {0.5, 1.5};
  const auto spec = sghmc_dynamics_spec(detail::grad_field(target), cfg);
  ChainState s{{1.0, 1.0}, {0.2, -0.3}, 0};
  ParamVector z{1.0, 1.0, 0.2, -0.3};
  const auto xi = detail::normal_block(31, 4 * static_cast<std::size_t>(steps));
  for (int t = 0; t < steps; ++t) {
    std::vector<double> chunk(xi.begin() + 4 * t, xi.begin() + 4 * t + 4);
    ScriptedNoise kernel({chunk[2], chunk[3]});
    ScriptedNoise general(chunk);
    s = sghmc_step(s, target.grad_potential(s.theta), cfg, kernel);
    z = general_sgmcmc_step(z, spec, cfg.epsilon, general);
    if (z != ParamVector{s.theta[0], s.theta[1], s.momentum[0], s.momentum[1]})
      return {"instantiation.sghmc", false, "differs at step " + std::to_string(t)};
  }
  return {"instantiation.sghmc", true, std::to_string(steps) + " steps bitwise equal"};
}

inline CheckResult check_instantiation_ec(int steps = 100, double tol = 1e-12) {
  const std::size_t n = 2, k = 3;
  const auto target = GaussianTarget::standard(n);
  const auto ec = detail::check_ec(n, 0.02, 0.8, 0.6, 0.9, k);
  const auto spec = ec_dynamics_spec(detail::grad_field(target), ec);
  const CoupledLayout lay{n, k};
  Rng init(3);
  std::vector<ChainState> w(k);
  CenterState c{{0.0, 0.0}, {0.1, 0.1}, 0};
  ParamVector z(lay.size());
  for (std::size_t i = 0; i < k; ++i) {
    w[i].theta = {standard_normal(init), standard_normal(init)};
    w[i].momentum = {standard_normal(init), standard_normal(init)};
    for (std::size_t j = 0; j < n; ++j) {
      z[lay.theta(i) + j] = w[i].theta[j];
      z[lay.momentum(i) + j] = w[i].momentum[j];
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    z[lay.center() + j] = c.center[j];
    z[lay.center_momentum() + j] = c.momentum[j];
  }
  const std::size_t m = lay.size();
  const auto xi = detail::normal_block(41, m * static_cast<std::size_t>(steps));
  double worst = 0.0;
  for (int t = 0; t < steps; ++t) {
    const auto at = [&](std::size_t off) { return xi.begin() + static_cast<long>(m * static_cast<std::size_t>(t) + off); };
    std::vector<ParamVector> thetas;
    for (const auto& s : w) thetas.push_back(s.theta);
    for (std::size_t i = 0; i < k; ++i) {
      ScriptedNoise sn(std::vector<double>(at(lay.momentum(i)), at(lay.momentum(i) + n)));
      w[i] = ec_worker_step(w[i], target.grad_potential(w[i].theta), c.center, ec, sn);
    }
    ScriptedNoise cn(std::vector<double>(at(lay.center_momentum()), at(m)));
    c = ec_center_step(c, thetas, ec, cn);
    ScriptedNoise gn(std::vector<double>(at(0), at(m)));
    z = general_sgmcmc_step(z, spec, ec.base.epsilon, gn);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        worst = std::max(worst, std::abs(z[lay.theta(i) + j] - w[i].theta[j]));
        worst = std::max(worst, std::abs(z[lay.momentum(i) + j] - w[i].momentum[j]));
      }
    for (std::size_t j = 0; j < n; ++j) {
      worst = std::max(worst, std::abs(z[lay.center() + j] - c.center[j]));
      worst = std::max(worst, std::abs(z[lay.center_momentum() + j] - c.momentum[j]));
    }
    if (!(worst <= tol))
      return {"instantiation.ec_sghmc", false, "deviation " + detail::fmt(worst) + " at step " + std::to_string(t)};
  }
  return {"instantiation.ec_sghmc", true, std::to_string(steps) + " steps, max deviation " + detail::fmt(worst)};
}

/// alpha = 0 elastic run against independent chains injecting V + C. With
/// `inject_fault` the independent arm uses the other noise scaling.
inline CheckResult check_decoupling(std::uint64_t steps = 2000, std::size_t workers = 4, bool inject_fault = false) {
  const auto target = GaussianTarget::standard(2, 0.4);
  auto ec = detail::check_ec(2, 0.01, 0.0, 1.0, 0.5, workers);
  ec.worker_noise = WorkerNoise::gradient_plus_center;
  auto plain = ec.base;
  plain.injected_noise = {1.5, 1.5};
  if (inject_fault) plain.noise_scaling = NoiseScaling::quadratic;
  RunSpec run;
  run.steps = steps;
  run.seed = 12;
  run.init = {2.0, -1.0};
  ProtocolConfig proto{Scheme::elastic, workers, 3, 1, {}};
  proto.delay = DelayModel{DelayKind::uniform_jitter, 0.4, 0.0, {}};
  const auto e = run_elastic(target, ec, proto, run);
  proto.scheme = Scheme::independent;
  const auto i = run_independent(target, plain, proto, run);
  const std::string name = "decoupling.alpha_zero";
  if (e.samples != i.samples) {
    std::size_t at = 0;
    while (at < e.samples.size() && at < i.samples.size() && e.samples[at] == i.samples[at]) ++at;
    return {name, false,
            "elastic and independent chains differ from sample " + std::to_string(at) +
                (inject_fault ? " (noise_scaling mismatched between arms)" : "")};
  }
  for (std::size_t w = 0; w < workers; ++w)
    if (e.final_workers[w].theta != i.final_workers[w].theta || e.final_workers[w].momentum != i.final_workers[w].momentum)
      return {name, false, "final state of worker " + std::to_string(w) + " differs"};
  return {name, true, "K=" + std::to_string(workers) + ", " + std::to_string(steps) + " steps bitwise equal"};
}

/// Naive scheme with s = 1, O = K and equal delays against one SGHMC chain
/// driven by the K-way averaged gradient.
inline CheckResult check_synchrony_limit(int steps = 300, std::size_t k = 4) {
  const GaussianTarget target({1.0, -1.0}, {{1.0, 0.3}, {0.3, 2.0}}, {0.5, 0.5});
  const auto cfg = SghmcConfig::isotropic(2, 0.05, 1.0);
  RunSpec run;
  run.steps = static_cast<std::uint64_t>(steps);
  run.seed = 21;
  run.init = {2.0, -1.0};
  const auto res = run_naive_async(target, cfg, ProtocolConfig{Scheme::naive_async, k, 1, k, {}}, run);
  Rng sinit = make_stream(21, kServerStreamId, Stream::init), snoise = make_stream(21, kServerStreamId, Stream::noise);
  GaussianNoise in(sinit), nn(snoise);
  ChainState s{run.init, sample_momentum(cfg.mass, in), 0};
  std::vector<Rng> data;
  for (std::size_t w = 0; w < k; ++w) data.push_back(make_stream(21, w, Stream::data));
  std::size_t idx = 0;
  const std::string name = "synchrony_limit.naive_async";
  for (int t = 0; t < steps; ++t) {
    ParamVector avg(2, 0.0);
    for (std::size_t w = 0; w < k; ++w) {
      const auto g = target.noisy_grad(s.theta, data[w]);
      for (int j = 0; j < 2; ++j) avg[j] += g[j];
    }
    for (auto& a : avg) a /= static_cast<double>(k);
    s = sghmc_step(s, avg, cfg, nn);
    while (idx < res.samples.size() && res.samples[idx].worker != kServerWorker) ++idx;
    if (idx >= res.samples.size() || res.samples[idx++].theta != s.theta)
      return {name, false, "server state differs at step " + std::to_string(t)};
  }
  if (!res.final_server || res.final_server->momentum != s.momentum) return {name, false, "final momentum differs"};
  return {name, true, "K=" + std::to_string(k) + ", " + std::to_string(steps) + " server steps bitwise equal"};
}

/// Noise-free EC kernels against the deterministic velocity-form update under
/// v = eps p, eps_det = eps^2, xi = eps V (V = C, M = I).
inline CheckResult check_deterministic_limit(int steps = 1000, double v = 0.0, double tol = 1e-12) {
  const std::size_t n = 2, k = 3;
  const double eps = 0.01, alpha = 1.0;
  const auto ec = detail::check_ec(n, eps, alpha, v, v, k);
  const GaussianTarget target({0.5, -0.5}, {{1.0, 0.2}, {0.2, 2.0}});
  std::vector<ChainState> w{{{1.0, 0.0}, {0.3, 0.1}, 0}, {{-1.0, 2.0}, {0.0, -0.2}, 0}, {{0.5, 0.5}, {0.0, 0.0}, 0}};
  CenterState c{{0.0, 0.0}, {0.1, 0.0}, 0};
  CoupledState d;
  for (const auto& s : w) d.workers.push_back({s.theta, {eps * s.momentum[0], eps * s.momentum[1]}});
  d.center = {c.center, {eps * c.momentum[0], eps * c.momentum[1]}};
  const OptimizerConfig cfg{eps * eps, alpha, eps * v};
  ZeroNoise z;
  double worst = 0.0;
  const std::string name = "deterministic_limit.v=" + detail::fmt(v);
  for (int t = 0; t < steps; ++t) {
    std::vector<ParamVector> thetas, grads;
    for (const auto& s : w) thetas.push_back(s.theta);
    for (const auto& s : d.workers) grads.push_back(target.grad_potential(s.theta));
    for (auto& s : w) s = ec_worker_step(s, target.grad_potential(s.theta), c.center, ec, z);
    c = ec_center_step(c, thetas, ec, z);
    d = ec_deterministic_step(d, grads, cfg);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        worst = std::max(worst, std::abs(d.workers[i].theta[j] - w[i].theta[j]));
        worst = std::max(worst, std::abs(d.workers[i].velocity[j] - eps * w[i].momentum[j]));
      }
    for (std::size_t j = 0; j < n; ++j) {
      worst = std::max(worst, std::abs(d.center.theta[j] - c.center[j]));
      worst = std::max(worst, std::abs(d.center.velocity[j] - eps * c.momentum[j]));
    }
    if (!(worst <= tol)) return {name, false, "deviation " + detail::fmt(worst) + " at step " + std::to_string(t)};
  }
  return {name, true, std::to_string(steps) + " steps, max deviation " + detail::fmt(worst)};
}

/// Finite-difference check at `points` random parameters.
inline CheckResult check_gradient(const std::string& name, const TargetModel& model, int points = 10,
                                  double scale = 0.5, std::uint64_t seed = 17, double tol = 1e-5) {
  Rng rng(seed);
  double worst = 0.0;
  for (int i = 0; i < points; ++i) {
    ParamVector th(model.dim());
    for (auto& x : th) x = scale * standard_normal(rng);
    worst = std::max(worst, gradient_relative_error(model, th));
  }
  return {"gradient." + name, worst < tol,
          std::to_string(points) + " points, max relative error " + detail::fmt(worst)};
}

/// Average of the minibatch gradient over every batch of size 2 from four
/// points equals the full gradient.
inline CheckResult check_unbiasedness() {
  const ClassifierPosterior model(NetworkShape{2, 0, 2}, detail::four_point_set(), 0.1, MinibatchSpec{2, false});
  const ParamVector th{0.3, -0.2, -0.1, 0.4, 0.05, -0.05};
  ParamVector mean(model.dim(), 0.0);
  int count = 0;
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = a + 1; b < 4; ++b) {
      const auto g = model.stochastic_grad(th, std::vector<std::size_t>{a, b});
      for (std::size_t i = 0; i < g.size(); ++i) mean[i] += g[i];
      ++count;
    }
  const auto full = model.grad_potential(th);
  double worst = 0.0;
  for (std::size_t i = 0; i < full.size(); ++i)
    worst = std::max(worst, std::abs(mean[i] / count - full[i]) / (1.0 + std::abs(full[i])));
  return {"minibatch.unbiased", worst < 1e-12, "6 batches, max deviation " + detail::fmt(worst)};
}

/// The whole suite. `inject_fault` mismatches noise_scaling in the
/// decoupling comparison.
inline std::vector<CheckResult> run_self_checks(bool inject_fault = false) {
  std::vector<CheckResult> out = check_validators();
  out.push_back(check_printed_curl());
  out.push_back(check_instantiation_sghmc());
  out.push_back(check_instantiation_ec());
  out.push_back(check_decoupling(2000, 4, inject_fault));
  out.push_back(check_synchrony_limit());
  out.push_back(check_deterministic_limit(1000, 0.0));
  out.push_back(check_deterministic_limit(1000, 0.5));
  {
    const GaussianTarget g({1.0, -2.0, 0.5}, {{2.0, 0.4, 0.0}, {0.4, 1.0, 0.1}, {0.0, 0.1, 0.5}});
    out.push_back(check_gradient("gaussian", g, 10, 2.0));
    out.push_back(check_gradient("bowl", GaussianTarget::standard(2), 10, 2.0));
    const DataSet data = make_two_blobs(5, 60, 2.0, 3);
    out.push_back(check_gradient("logistic", ClassifierPosterior(NetworkShape{5, 0, 2}, data, 1e-2, MinibatchSpec{10, false})));
    out.push_back(check_gradient("mlp", ClassifierPosterior(NetworkShape{5, 4, 2}, data, 1e-2, MinibatchSpec{10, false})));
  }
  out.push_back(check_unbiasedness());
  return out;
}

inline bool print_checks(const std::vector<CheckResult>& results, std::ostream& os) {
  bool all = true;
  for (const auto& r : results) {
    if (r.expected_failure) {
      os << (r.passed ? "FAIL (expected) " : "PASS (unexpected) ") << r.name << ": " << r.detail << "\n";
    } else {
      os << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
    }
    all = all && r.passed;
  }
  return all;
}

}  // namespace ecmcmc
