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
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ecmcmc/core.hpp"
#include "ecmcmc/harness.hpp"
#include "ecmcmc/model.hpp"

namespace ecmcmc {

using Matrix = std::vector<std::vector<double>>;

struct MomentReport {
  ParamVector mean;
  Matrix covariance;  // empty when fewer than two samples
  std::size_t count = 0;
  std::optional<double> mean_error;           // ||mean - mu||_2
  std::optional<double> covariance_rel_error;  // ||cov - Sigma||_F / ||Sigma||_F
};

/// Sample mean and unbiased covariance (divisor n - 1), computed in two passes.
/// Throws if `require_covariance` and fewer than two samples are present.
inline MomentReport moments(std::span<const ParamVector> pool, bool require_covariance = true) {
  if (pool.empty()) throw ContractError("moments: empty pool");
  const std::size_t n = pool.front().size();
  MomentReport r;
  r.count = pool.size();
  r.mean.assign(n, 0.0);
  for (const auto& x : pool) {
    require_dim(x.size(), n, "moments sample");
    for (std::size_t j = 0; j < n; ++j) r.mean[j] += x[j];
  }
  for (auto& m : r.mean) m /= static_cast<double>(pool.size());
  if (pool.size() < 2) {
    if (require_covariance) throw ContractError("moments: covariance needs at least two samples");
    return r;
  }
  r.covariance.assign(n, std::vector<double>(n, 0.0));
  std::vector<double> d(n);
  for (const auto& x : pool) {
    for (std::size_t j = 0; j < n; ++j) d[j] = x[j] - r.mean[j];
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a; b < n; ++b) r.covariance[a][b] += d[a] * d[b];
  }
  const double denom = static_cast<double>(pool.size() - 1);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a; b < n; ++b) {
      r.covariance[a][b] /= denom;
      r.covariance[b][a] = r.covariance[a][b];
    }
  return r;
}

inline std::vector<ParamVector> thetas(std::span<const Sample> samples) {
  std::vector<ParamVector> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.theta);
  return out;
}

struct GaussianError {
  double mean_error = 0.0;
  double covariance_rel_error = 0.0;
};

/// ||mu_hat - mu||_2 and ||Sigma_hat - Sigma||_F / ||Sigma||_F against an analytic target.
inline GaussianError gaussian_error(std::span<const ParamVector> pool, const GaussianTarget& target) {
  const MomentReport m = moments(pool);
  require_dim(m.mean.size(), target.dim(), "gaussian_error");
  GaussianError e;
  double s = 0.0;
  for (std::size_t j = 0; j < m.mean.size(); ++j) {
    const double d = m.mean[j] - target.mean()[j];
    s += d * d;
  }
  e.mean_error = std::sqrt(s);
  double num = 0.0, den = 0.0;
  const auto& cov = target.covariance();
  for (std::size_t a = 0; a < target.dim(); ++a)
    for (std::size_t b = 0; b < target.dim(); ++b) {
      const double ref = cov(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
      num += (m.covariance[a][b] - ref) * (m.covariance[a][b] - ref);
      den += ref * ref;
    }
  e.covariance_rel_error = std::sqrt(num) / std::sqrt(den);
  return e;
}

inline MomentReport moments(std::span<const ParamVector> pool, const GaussianTarget& target) {
  MomentReport r = moments(pool);
  const GaussianError e = gaussian_error(pool, target);
  r.mean_error = e.mean_error;
  r.covariance_rel_error = e.covariance_rel_error;
  return r;
}

/// Mean per-example NLL on `eval` for each (step, theta) in `trace`.
inline std::vector<std::pair<std::uint64_t, double>> nll_trace(
    const ClassifierPosterior& model, std::span<const std::pair<std::uint64_t, ParamVector>> trace,
    const DataSet& eval) {
  if (eval.size() == 0) throw ContractError("nll_trace: empty evaluation set");
  std::vector<std::pair<std::uint64_t, double>> out;
  out.reserve(trace.size());
  for (const auto& [step, theta] : trace) {
    require_dim(theta.size(), model.dim(), "nll_trace theta");
    out.emplace_back(step, model.mean_nll(theta, eval));
  }
  return out;
}

/// Harness metric computing mean eval-set NLL.
inline Metric nll_metric(const ClassifierPosterior& model, const DataSet& eval) {
  if (eval.size() == 0) throw ContractError("nll_metric: empty evaluation set");
  return Metric{"nll", [&model, &eval](std::span<const double> th) { return model.mean_nll(th, eval); }};
}

inline Metric potential_metric(const TargetModel& model) {
  return Metric{"U", [&model](std::span<const double> th) { return model.potential(th); }};
}

/// Sample autocorrelation at lag k (biased 1/n estimator, normalised by lag 0).
inline double autocorrelation(std::span<const double> x, double mean, double var0, std::size_t lag) {
  const std::size_t n = x.size();
  double s = 0.0;
  for (std::size_t t = 0; t + lag < n; ++t) s += (x[t] - mean) * (x[t + lag] - mean);
  return (s / static_cast<double>(n)) / var0;
}

struct EssResult {
  double ess = 1.0;
  bool degenerate = false;  // constant series
  std::size_t truncation_lag = 0;
};

/// Effective sample size n / (1 + 2 sum_k rho_k), truncated at the first
/// lag pair (rho_{2m} + rho_{2m+1}) that is not positive. Clipped to [1, n].
inline EssResult ess(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 10) throw ContractError("ess: series needs at least 10 points");
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(n);
  double var0 = 0.0;
  for (double v : series) var0 += (v - mean) * (v - mean);
  var0 /= static_cast<double>(n);
  EssResult r;
  if (!(var0 > 0.0)) {
    r.degenerate = true;
    return r;
  }
  double tau = -1.0;  // -rho_0 + 2 sum over accepted pairs
  std::size_t m = 0;
  for (; 2 * m + 1 < n; ++m) {
    const double pair = autocorrelation(series, mean, var0, 2 * m) + autocorrelation(series, mean, var0, 2 * m + 1);
    if (!(pair > 0.0)) break;
    tau += 2.0 * pair;
  }
  r.truncation_lag = 2 * m;
  const double nn = static_cast<double>(n);
  r.ess = tau > 0.0 ? std::clamp(nn / tau, 1.0, nn) : nn;
  return r;
}

/// Minimum ESS over the coordinates of a single chain.
inline EssResult ess_min(std::span<const ParamVector> chain) {
  if (chain.empty()) throw ContractError("ess_min: empty chain");
  EssResult best;
  best.ess = std::numeric_limits<double>::infinity();
  std::vector<double> col(chain.size());
  for (std::size_t j = 0; j < chain.front().size(); ++j) {
    for (std::size_t t = 0; t < chain.size(); ++t) col[t] = chain[t][j];
    const EssResult e = ess(col);
    if (e.ess < best.ess || e.degenerate) best = e;
  }
  return best;
}

}  // namespace ecmcmc
