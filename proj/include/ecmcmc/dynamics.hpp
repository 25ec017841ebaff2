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

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ecmcmc/core.hpp"
#include "ecmcmc/random.hpp"

namespace ecmcmc {

/// Variance prefactor of the injected noise: 2*eps*Sigma or 2*eps^2*Sigma.
enum class NoiseScaling { linear, quadratic };

inline double noise_prefactor(NoiseScaling scaling, double epsilon) {
  return scaling == NoiseScaling::linear ? 2.0 * epsilon : 2.0 * epsilon * epsilon;
}

/// Which covariance an elastically coupled worker injects into its momentum.
enum class WorkerNoise {
  gradient,              // V, matching D = diag(0, V, 0, C)
  gradient_plus_center,  // V + C
};

struct SghmcConfig {
  double epsilon = 1e-2;
  Diagonal mass;        // M
  Diagonal grad_noise;  // V: friction, and injected noise unless overridden
  NoiseScaling noise_scaling = NoiseScaling::linear;
  Diagonal injected_noise;  // empty: inject V

  const Diagonal& noise_covariance() const { return injected_noise.empty() ? grad_noise : injected_noise; }

  void validate(std::size_t n) const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ContractError("SghmcConfig: epsilon must be > 0");
    require_dim(mass.size(), n, "SghmcConfig mass");
    require_dim(grad_noise.size(), n, "SghmcConfig grad_noise");
    for (double m : mass)
      if (!(m > 0.0) || !std::isfinite(m)) throw ContractError("SghmcConfig: mass entries must be > 0");
    for (double v : grad_noise)
      if (!(v >= 0.0) || !std::isfinite(v)) throw ContractError("SghmcConfig: grad_noise entries must be >= 0");
    if (!injected_noise.empty()) {
      require_dim(injected_noise.size(), n, "SghmcConfig injected_noise");
      for (double v : injected_noise)
        if (!(v >= 0.0) || !std::isfinite(v)) throw ContractError("SghmcConfig: injected_noise entries must be >= 0");
    }
  }

  static SghmcConfig isotropic(std::size_t n, double epsilon, double v, double m = 1.0) {
    SghmcConfig c;
    c.epsilon = epsilon;
    c.mass.assign(n, m);
    c.grad_noise.assign(n, v);
    return c;
  }
};

struct EcConfig {
  SghmcConfig base;
  double alpha = 1.0;
  Diagonal center_noise;  // C
  std::size_t workers = 1;
  WorkerNoise worker_noise = WorkerNoise::gradient;

  Diagonal worker_noise_covariance() const {
    Diagonal out = base.noise_covariance();
    if (worker_noise == WorkerNoise::gradient_plus_center)
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += center_noise[i];
    return out;
  }

  void validate(std::size_t n) const {
    base.validate(n);
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ContractError("EcConfig: alpha must be >= 0");
    if (workers < 1) throw ContractError("EcConfig: workers must be >= 1");
    require_dim(center_noise.size(), n, "EcConfig center_noise");
    for (double c : center_noise)
      if (!(c >= 0.0) || !std::isfinite(c)) throw ContractError("EcConfig: center_noise entries must be >= 0");
  }
};

struct ChainState {
  ParamVector theta;
  ParamVector momentum;
  std::uint64_t step = 0;
};

struct CenterState {
  ParamVector center;
  ParamVector momentum;
  std::uint64_t version = 0;
};

/// Momentum draw p ~ N(0, M).
template <NoiseSource Noise>
ParamVector sample_momentum(const Diagonal& mass, Noise& noise) {
  ParamVector p(mass.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::sqrt(mass[i]) * noise();
  return p;
}

namespace detail {

inline void check_state(const ChainState& s, std::size_t n, std::string_view what) {
  require_dim(s.theta.size(), n, what);
  require_dim(s.momentum.size(), n, what);
}

// x' = x + eps * M^-1 p
inline ParamVector drift(std::span<const double> x, std::span<const double> p, const Diagonal& mass,
                         double eps) {
  ParamVector out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = x[j] + eps * (p[j] / mass[j]);
  return out;
}

// p' = p - eps * (force + friction M^-1 p) + N(0, prefactor * cov), one draw per coordinate.
template <NoiseSource Noise>
ParamVector kick(std::span<const double> p, std::span<const double> force, const Diagonal& mass,
                 const Diagonal& friction, const Diagonal& cov, double eps, NoiseScaling scaling,
                 Noise& noise) {
  const double pre = noise_prefactor(scaling, eps);
  ParamVector out(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double x = p[j] / mass[j];
    out[j] = p[j] - eps * (force[j] + friction[j] * x) + std::sqrt(pre * cov[j]) * noise();
  }
  return out;
}

}  // namespace detail

/// One SGHMC step:
///   theta' = theta + eps M^-1 p
///   p'     = p - eps grad - eps V M^-1 p + N(0, 2 eps V)
/// `grad` is the stochastic gradient at the current theta.
template <NoiseSource Noise>
ChainState sghmc_step(const ChainState& state, std::span<const double> grad, const SghmcConfig& cfg,
                      Noise& noise) {
  const std::size_t n = cfg.mass.size();
  detail::check_state(state, n, "sghmc_step state");
  require_dim(grad.size(), n, "sghmc_step grad");
  require_finite(grad, "sghmc_step grad");
  ChainState next;
  next.theta = detail::drift(state.theta, state.momentum, cfg.mass, cfg.epsilon);
  next.momentum = detail::kick(state.momentum, grad, cfg.mass, cfg.grad_noise, cfg.noise_covariance(),
                               cfg.epsilon, cfg.noise_scaling, noise);
  next.step = state.step + 1;
  return next;
}

/// Force on a worker's momentum: grad + alpha (theta - c~).
inline ParamVector worker_force(std::span<const double> grad, std::span<const double> theta,
                                std::span<const double> center, double alpha) {
  ParamVector f(grad.size());
  for (std::size_t j = 0; j < f.size(); ++j) f[j] = grad[j] + alpha * (theta[j] - center[j]);
  return f;
}

/// Force on the center momentum: alpha (1/K) sum_i (c - theta_i).
inline ParamVector center_force(std::span<const double> center, std::span<const ParamVector> thetas,
                                double alpha) {
  const double k = static_cast<double>(thetas.size());
  ParamVector f(center.size());
  for (std::size_t j = 0; j < f.size(); ++j) {
    double s = 0.0;
    for (const auto& th : thetas) s += center[j] - th[j];
    f[j] = alpha * (s / k);
  }
  return f;
}

/// Worker update of the elastically coupled sampler, against the worker's
/// cached center estimate.
template <NoiseSource Noise>
ChainState ec_worker_step(const ChainState& state, std::span<const double> grad,
                          std::span<const double> center_estimate, const EcConfig& ec, Noise& noise) {
  const auto& cfg = ec.base;
  const std::size_t n = cfg.mass.size();
  detail::check_state(state, n, "ec_worker_step state");
  require_dim(grad.size(), n, "ec_worker_step grad");
  require_dim(center_estimate.size(), n, "ec_worker_step center");
  require_finite(grad, "ec_worker_step grad");
  require_finite(center_estimate, "ec_worker_step center");
  const ParamVector force = worker_force(grad, state.theta, center_estimate, ec.alpha);
  ChainState next;
  next.theta = detail::drift(state.theta, state.momentum, cfg.mass, cfg.epsilon);
  next.momentum = detail::kick(state.momentum, force, cfg.mass, cfg.grad_noise, ec.worker_noise_covariance(),
                               cfg.epsilon, cfg.noise_scaling, noise);
  next.step = state.step + 1;
  return next;
}

/// Center update:
///   c' = c + eps M^-1 r
///   r' = r - eps C M^-1 r - eps alpha (1/K) sum_i (c - theta_i) + noise(C)
/// K is the number of positions passed in.
template <NoiseSource Noise>
CenterState ec_center_step(const CenterState& center, std::span<const ParamVector> worker_thetas,
                           const EcConfig& ec, Noise& noise) {
  const auto& cfg = ec.base;
  const std::size_t n = cfg.mass.size();
  if (worker_thetas.empty()) throw ContractError("ec_center_step: empty worker list");
  require_dim(center.center.size(), n, "ec_center_step center");
  require_dim(center.momentum.size(), n, "ec_center_step momentum");
  for (const auto& th : worker_thetas) {
    require_dim(th.size(), n, "ec_center_step worker theta");
    require_finite(th, "ec_center_step worker theta");
  }
  const ParamVector force = center_force(center.center, worker_thetas, ec.alpha);
  CenterState next;
  next.center = detail::drift(center.center, center.momentum, cfg.mass, cfg.epsilon);
  next.momentum = detail::kick(center.momentum, force, cfg.mass, ec.center_noise, ec.center_noise,
                               cfg.epsilon, cfg.noise_scaling, noise);
  next.version = center.version + 1;
  return next;
}

/// First-order Langevin step: theta' = theta - eps grad + N(0, 2 eps I).
template <NoiseSource Noise>
ParamVector sgld_step(std::span<const double> theta, std::span<const double> grad, double epsilon,
                      Noise& noise) {
  require_dim(grad.size(), theta.size(), "sgld_step grad");
  require_finite(grad, "sgld_step grad");
  if (!(epsilon > 0.0)) throw ContractError("sgld_step: epsilon must be > 0");
  ParamVector out(theta.size());
  for (std::size_t j = 0; j < out.size(); ++j)
    out[j] = theta[j] - epsilon * grad[j] + std::sqrt(2.0 * epsilon * 1.0) * noise();
  return out;
}

// ---------------------------------------------------------------------------
// General D/Q form
// ---------------------------------------------------------------------------

using VectorField = std::function<ParamVector(std::span<const double>)>;

/// Dynamics dz = -(D + Q) grad H dt + Gamma dt + sqrt(2D) dW over a state z.
/// D and Q are constant here; an empty `gamma` means Gamma == 0.
struct DynamicsSpec {
  std::string name;
  Eigen::MatrixXd diffusion;
  Eigen::MatrixXd curl;
  VectorField hamiltonian_grad;
  VectorField gamma;

  std::size_t dim() const { return static_cast<std::size_t>(diffusion.rows()); }
};

struct DynamicsReport {
  bool curl_skew = false;
  bool diffusion_symmetric = false;
  bool diffusion_psd = false;
  bool gamma_zero = false;
  double min_eigenvalue = 0.0;
  std::vector<std::string> failures;

  bool ok() const { return curl_skew && diffusion_symmetric && diffusion_psd && gamma_zero; }
};

/// Checks the conditions under which the target is stationary: Q exactly
/// skew-symmetric, D symmetric with eigenvalues >= -tol, Gamma == 0.
inline DynamicsReport validate_dynamics(const DynamicsSpec& spec, double tol = 1e-10) {
  DynamicsReport r;
  const auto& d = spec.diffusion;
  const auto& q = spec.curl;
  if (d.rows() != d.cols() || q.rows() != q.cols() || d.rows() != q.rows()) {
    r.failures.push_back("D and Q must be square and of equal size");
    return r;
  }
  r.curl_skew = true;
  for (Eigen::Index i = 0; i < q.rows() && r.curl_skew; ++i)
    for (Eigen::Index j = 0; j <= i; ++j)
      if (q(i, j) != -q(j, i)) {
        r.curl_skew = false;
        const std::string at = "Q(" + std::to_string(i) + "," + std::to_string(j) + ") = " + std::to_string(q(i, j));
        r.failures.push_back(i == j ? "Q not skew-symmetric: diagonal entry " + at + " is nonzero"
                                    : "Q not skew-symmetric: " + at + " but Q(" + std::to_string(j) + "," +
                                          std::to_string(i) + ") = " + std::to_string(q(j, i)));
        break;
      }
  r.diffusion_symmetric = d.isApprox(d.transpose(), 0.0) || d == d.transpose();
  if (!r.diffusion_symmetric) r.failures.push_back("D not symmetric");
  if (d.rows() > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (d + d.transpose()), Eigen::EigenvaluesOnly);
    r.min_eigenvalue = es.eigenvalues().minCoeff();
  }
  r.diffusion_psd = r.min_eigenvalue >= -tol;
  if (!r.diffusion_psd) r.failures.push_back("D not positive semi-definite: min eigenvalue " +
                                             std::to_string(r.min_eigenvalue));
  if (!spec.gamma) {
    r.gamma_zero = true;
  } else {
    r.gamma_zero = true;
    for (double probe : {0.0, 1.0, -0.5}) {
      const ParamVector z(spec.dim(), probe);
      for (double g : spec.gamma(z))
        if (g != 0.0) r.gamma_zero = false;
    }
    if (!r.gamma_zero) r.failures.push_back("Gamma not identically zero for constant D, Q");
  }
  return r;
}

/// One discretised step z' = z - eps [(D + Q) grad H(z) - Gamma(z)] + N(0, 2 eps D).
///
/// Draws one standard normal per coordinate of z, in order. Diagonal D uses
/// element-wise square roots; otherwise the symmetric square root of D.
template <NoiseSource Noise>
ParamVector general_sgmcmc_step(std::span<const double> z, const DynamicsSpec& spec, double epsilon,
                                Noise& noise) {
  const std::size_t m = spec.dim();
  require_dim(z.size(), m, "general_sgmcmc_step state");
  const ParamVector f = spec.hamiltonian_grad(z);
  require_dim(f.size(), m, "general_sgmcmc_step grad H");
  ParamVector gamma = spec.gamma ? spec.gamma(z) : ParamVector(m, 0.0);
  ParamVector out(m);
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const double a = spec.diffusion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) +
                       spec.curl(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
      s += a * f[k];
    }
    out[i] = z[i] - epsilon * (s - gamma[i]);
  }
  std::vector<double> xi(m);
  for (auto& x : xi) x = noise();
  const bool diagonal = spec.diffusion.isDiagonal(0.0) ||
                        (spec.diffusion - Eigen::MatrixXd(spec.diffusion.diagonal().asDiagonal())).isZero(0.0);
  if (diagonal) {
    for (std::size_t i = 0; i < m; ++i)
      out[i] += std::sqrt(2.0 * epsilon * spec.diffusion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i))) * xi[i];
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(spec.diffusion);
    const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const Eigen::MatrixXd root = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    const Eigen::VectorXd e = std::sqrt(2.0 * epsilon) * (root * Eigen::Map<const Eigen::VectorXd>(xi.data(), static_cast<Eigen::Index>(m)));
    for (std::size_t i = 0; i < m; ++i) out[i] += e(static_cast<Eigen::Index>(i));
  }
  return out;
}

/// SGHMC as a D/Q instance over z = [theta, p] with H = U + 1/2 p^T M^-1 p:
/// D = blockdiag(0, V), Q = [[0, -I], [I, 0]].
inline DynamicsSpec sghmc_dynamics_spec(VectorField potential_grad, const SghmcConfig& cfg) {
  const auto n = static_cast<Eigen::Index>(cfg.mass.size());
  DynamicsSpec s;
  s.name = "sghmc";
  s.diffusion = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  s.curl = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    s.diffusion(n + i, n + i) = cfg.grad_noise[static_cast<std::size_t>(i)];
    s.curl(i, n + i) = -1.0;
    s.curl(n + i, i) = 1.0;
  }
  s.hamiltonian_grad = [grad = std::move(potential_grad), mass = cfg.mass](std::span<const double> z) {
    const std::size_t k = mass.size();
    ParamVector g = grad(z.subspan(0, k));
    g.resize(2 * k);
    for (std::size_t i = 0; i < k; ++i) g[k + i] = z[k + i] / mass[i];
    return g;
  };
  return s;
}

/// The SGHMC matrices exactly as they are usually printed alongside the
/// update: Q = [[0, I], [-I, V]]. Not skew-symmetric when V != 0; kept for
/// the negative validator check.
inline DynamicsSpec printed_sghmc_dynamics_spec(VectorField potential_grad, const SghmcConfig& cfg) {
  DynamicsSpec s = sghmc_dynamics_spec(std::move(potential_grad), cfg);
  s.name = "sghmc-as-printed";
  const auto n = static_cast<Eigen::Index>(cfg.mass.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    s.curl(i, n + i) = 1.0;
    s.curl(n + i, i) = -1.0;
    s.curl(n + i, n + i) = cfg.grad_noise[static_cast<std::size_t>(i)];
  }
  return s;
}

/// SGLD as a D/Q instance: z = theta, D = I, Q = 0, H = U.
inline DynamicsSpec sgld_dynamics_spec(VectorField potential_grad, std::size_t n) {
  DynamicsSpec s;
  s.name = "sgld";
  const auto m = static_cast<Eigen::Index>(n);
  s.diffusion = Eigen::MatrixXd::Identity(m, m);
  s.curl = Eigen::MatrixXd::Zero(m, m);
  s.hamiltonian_grad = std::move(potential_grad);
  return s;
}

/// Layout of the coupled state z = [theta^1..theta^K, p^1..p^K, c, r].
struct CoupledLayout {
  std::size_t n;
  std::size_t k;
  std::size_t theta(std::size_t i) const { return i * n; }
  std::size_t momentum(std::size_t i) const { return (k + i) * n; }
  std::size_t center() const { return 2 * k * n; }
  std::size_t center_momentum() const { return (2 * k + 1) * n; }
  std::size_t size() const { return (2 * k + 2) * n; }
};

/// Elastic coupling as a D/Q instance: D = diag([0, V, 0, C]), Q made of
/// [[0, -I], [I, 0]] blocks pairing each position with its momentum. The
/// force field is the one the worker and center kernels apply
/// (worker spring alpha (theta^i - c), center spring alpha/K sum (c - theta^i)).
/// With WorkerNoise::gradient and linear scaling this reproduces the kernels
/// step for step under synchronous coupling.
inline DynamicsSpec ec_dynamics_spec(VectorField potential_grad, const EcConfig& ec) {
  const std::size_t n = ec.base.mass.size();
  const CoupledLayout lay{n, ec.workers};
  const auto m = static_cast<Eigen::Index>(lay.size());
  DynamicsSpec s;
  s.name = "ec-sghmc";
  s.diffusion = Eigen::MatrixXd::Zero(m, m);
  s.curl = Eigen::MatrixXd::Zero(m, m);
  auto pair = [&](std::size_t pos, std::size_t mom) {
    for (std::size_t j = 0; j < n; ++j) {
      s.curl(static_cast<Eigen::Index>(pos + j), static_cast<Eigen::Index>(mom + j)) = -1.0;
      s.curl(static_cast<Eigen::Index>(mom + j), static_cast<Eigen::Index>(pos + j)) = 1.0;
    }
  };
  for (std::size_t i = 0; i < lay.k; ++i) {
    pair(lay.theta(i), lay.momentum(i));
    for (std::size_t j = 0; j < n; ++j) {
      const auto q = static_cast<Eigen::Index>(lay.momentum(i) + j);
      s.diffusion(q, q) = ec.base.grad_noise[j];
    }
  }
  pair(lay.center(), lay.center_momentum());
  for (std::size_t j = 0; j < n; ++j) {
    const auto q = static_cast<Eigen::Index>(lay.center_momentum() + j);
    s.diffusion(q, q) = ec.center_noise[j];
  }
  s.hamiltonian_grad = [grad = std::move(potential_grad), lay, mass = ec.base.mass,
                        alpha = ec.alpha](std::span<const double> z) {
    ParamVector f(lay.size());
    const auto c = z.subspan(lay.center(), lay.n);
    std::vector<ParamVector> thetas;
    for (std::size_t i = 0; i < lay.k; ++i) {
      const auto th = z.subspan(lay.theta(i), lay.n);
      thetas.emplace_back(th.begin(), th.end());
      const ParamVector wf = worker_force(grad(th), th, c, alpha);
      std::copy(wf.begin(), wf.end(), f.begin() + static_cast<std::ptrdiff_t>(lay.theta(i)));
      for (std::size_t j = 0; j < lay.n; ++j) f[lay.momentum(i) + j] = z[lay.momentum(i) + j] / mass[j];
    }
    const ParamVector cf = center_force(c, thetas, alpha);
    std::copy(cf.begin(), cf.end(), f.begin() + static_cast<std::ptrdiff_t>(lay.center()));
    for (std::size_t j = 0; j < lay.n; ++j) f[lay.center_momentum() + j] = z[lay.center_momentum() + j] / mass[j];
    return f;
  };
  return s;
}

// ---------------------------------------------------------------------------
// Noise-free limits: momentum form of the coupled sampler vs. EAMSGD
// ---------------------------------------------------------------------------

struct MomentumState {
  ParamVector theta;
  ParamVector velocity;
};

struct CoupledState {
  std::vector<MomentumState> workers;
  MomentumState center;
};

struct OptimizerConfig {
  double epsilon = 0.01;
  double alpha = 1.0;
  double friction = 0.1;  // xi

  void validate() const {
    if (!(epsilon > 0.0)) throw ContractError("OptimizerConfig: epsilon must be > 0");
    if (!(alpha >= 0.0)) throw ContractError("OptimizerConfig: alpha must be >= 0");
    if (!(friction >= 0.0)) throw ContractError("OptimizerConfig: friction must be >= 0");
  }
};

namespace detail {

inline void check_coupled(const CoupledState& s, std::span<const ParamVector> grads) {
  if (s.workers.empty()) throw ContractError("coupled step: no workers");
  require_dim(grads.size(), s.workers.size(), "coupled step grads");
  const std::size_t n = s.center.theta.size();
  require_dim(s.center.velocity.size(), n, "coupled step center velocity");
  for (std::size_t i = 0; i < s.workers.size(); ++i) {
    require_dim(s.workers[i].theta.size(), n, "coupled step worker theta");
    require_dim(s.workers[i].velocity.size(), n, "coupled step worker velocity");
    require_dim(grads[i].size(), n, "coupled step grad");
  }
}

inline std::vector<ParamVector> thetas_of(const CoupledState& s) {
  std::vector<ParamVector> out;
  for (const auto& w : s.workers) out.push_back(w.theta);
  return out;
}

}  // namespace detail

/// Deterministic limit of the coupled sampler in velocity form:
///   theta' = theta + v,  c' = c + h
///   v' = v - eps g - xi v - eps alpha (theta - c)
///   h' = h - xi h - eps alpha (1/K) sum (c - theta)
/// With `couple == false` the alpha terms are dropped.
inline CoupledState ec_deterministic_step(const CoupledState& s, std::span<const ParamVector> grads,
                                          const OptimizerConfig& cfg, bool couple = true) {
  detail::check_coupled(s, grads);
  const double a = couple ? cfg.alpha : 0.0;
  const auto& c = s.center.theta;
  CoupledState next = s;
  for (std::size_t i = 0; i < s.workers.size(); ++i) {
    const auto& w = s.workers[i];
    auto& o = next.workers[i];
    for (std::size_t j = 0; j < c.size(); ++j) {
      o.theta[j] = w.theta[j] + w.velocity[j];
      o.velocity[j] = w.velocity[j] - cfg.epsilon * grads[i][j] - cfg.friction * w.velocity[j] -
                      cfg.epsilon * (a * (w.theta[j] - c[j]));
    }
  }
  const ParamVector cf = center_force(c, detail::thetas_of(s), a);
  for (std::size_t j = 0; j < c.size(); ++j) {
    next.center.theta[j] = c[j] + s.center.velocity[j];
    next.center.velocity[j] = s.center.velocity[j] - cfg.friction * s.center.velocity[j] - cfg.epsilon * cf[j];
  }
  return next;
}

/// EAMSGD with plain momentum:
///   theta' = theta + v - eps alpha (theta - c)
///   c'     = c - eps alpha (1/K) sum (c - theta)
///   v'     = v - eps g - xi v
/// With `couple == false` the center is left alone and the elastic terms dropped.
inline CoupledState eamsgd_step(const CoupledState& s, std::span<const ParamVector> grads,
                                const OptimizerConfig& cfg, bool couple = true) {
  detail::check_coupled(s, grads);
  const double a = couple ? cfg.alpha : 0.0;
  const auto& c = s.center.theta;
  CoupledState next = s;
  for (std::size_t i = 0; i < s.workers.size(); ++i) {
    const auto& w = s.workers[i];
    auto& o = next.workers[i];
    for (std::size_t j = 0; j < c.size(); ++j) {
      o.theta[j] = w.theta[j] + w.velocity[j] - cfg.epsilon * (a * (w.theta[j] - c[j]));
      o.velocity[j] = w.velocity[j] - cfg.epsilon * grads[i][j] - cfg.friction * w.velocity[j];
    }
  }
  const ParamVector cf = center_force(c, detail::thetas_of(s), a);
  for (std::size_t j = 0; j < c.size(); ++j) next.center.theta[j] = c[j] - cfg.epsilon * cf[j];
  return next;
}

}  // namespace ecmcmc
