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
#include <vector>

#include "ecmcmc/dynamics.hpp"
#include "ecmcmc/model.hpp"

using namespace ecmcmc;

namespace {

std::vector<double> normals(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = standard_normal(rng);
  return v;
}

EcConfig ec_config(std::size_t n, double eps, double alpha, double v, double c, std::size_t k) {
  EcConfig ec;
  ec.base = SghmcConfig::isotropic(n, eps, v);
  ec.alpha = alpha;
  ec.center_noise.assign(n, c);
  ec.workers = k;
  return ec;
}

VectorField gaussian_grad(const GaussianTarget& g) {
  return [&g](std::span<const double> th) { return g.grad_potential(th); };
}

}  // namespace

TEST(SghmcStep, FrictionlessDrift) {
  ChainState s{{0.0, 0.0}, {1.0, 2.0}, 0};
  ZeroNoise z;
  const auto cfg = SghmcConfig::isotropic(2, 0.1, 0.0);
  const auto n = sghmc_step(s, ParamVector{0.0, 0.0}, cfg, z);
  EXPECT_DOUBLE_EQ(n.theta[0], 0.1);
  EXPECT_DOUBLE_EQ(n.theta[1], 0.2);
  EXPECT_EQ(n.momentum, (ParamVector{1.0, 2.0}));
  EXPECT_EQ(n.step, 1u);
}

TEST(SghmcStep, GradientAndFriction) {
  ChainState s{{0.0, 0.0}, {1.0, 0.0}, 0};
  ZeroNoise z;
  const auto n = sghmc_step(s, ParamVector{1.0, 0.0}, SghmcConfig::isotropic(2, 0.1, 1.0), z);
  EXPECT_NEAR(n.momentum[0], 0.8, 1e-15);
  EXPECT_EQ(n.momentum[1], 0.0);
}

TEST(SghmcStep, NoiseScalingVariants) {
  ChainState s{{0.0}, {0.0}, 0};
  auto cfg = SghmcConfig::isotropic(1, 0.1, 2.0);
  ScriptedNoise a({1.0});
  EXPECT_NEAR(sghmc_step(s, ParamVector{0.0}, cfg, a).momentum[0], std::sqrt(2 * 0.1 * 2.0), 1e-15);
  cfg.noise_scaling = NoiseScaling::quadratic;
  ScriptedNoise b({1.0});
  EXPECT_NEAR(sghmc_step(s, ParamVector{0.0}, cfg, b).momentum[0], std::sqrt(2 * 0.01 * 2.0), 1e-15);
}

TEST(SghmcStep, Errors) {
  ChainState s{{0.0, 0.0}, {0.0, 0.0}, 0};
  ZeroNoise z;
  const auto cfg = SghmcConfig::isotropic(2, 0.1, 1.0);
  EXPECT_THROW(sghmc_step(s, ParamVector{0.0}, cfg, z), ContractError);
  EXPECT_THROW(sghmc_step(s, ParamVector{0.0, NAN}, cfg, z), ContractError);
  ChainState bad{{0.0, 0.0}, {0.0}, 0};
  EXPECT_THROW(sghmc_step(bad, ParamVector{0.0, 0.0}, cfg, z), ContractError);
  auto neg = cfg;
  neg.epsilon = 0.0;
  EXPECT_THROW(neg.validate(2), ContractError);
  neg = cfg;
  neg.mass[0] = 0.0;
  EXPECT_THROW(neg.validate(2), ContractError);
  neg = cfg;
  neg.grad_noise[1] = -1.0;
  EXPECT_THROW(neg.validate(2), ContractError);
}

TEST(SghmcStep, DeterministicGivenStream) {
  const auto cfg = SghmcConfig::isotropic(3, 0.05, 0.5);
  ChainState a{{0.1, 0.2, 0.3}, {0.0, 0.0, 0.0}, 0}, b = a;
  Rng ra(77), rb(77);
  GaussianNoise na(ra), nb(rb);
  for (int i = 0; i < 50; ++i) {
    a = sghmc_step(a, a.theta, cfg, na);
    b = sghmc_step(b, b.theta, cfg, nb);
  }
  EXPECT_EQ(a.theta, b.theta);
  EXPECT_EQ(a.momentum, b.momentum);
}

TEST(SghmcStep, LongRunMomentsOnStandardGaussian) {
  const auto target = GaussianTarget::standard(1);
  const auto cfg = SghmcConfig::isotropic(1, 1e-2, 1.0);
  Rng rng(2024);
  GaussianNoise noise(rng);
  ChainState s{{0.0}, sample_momentum(cfg.mass, noise), 0};
  for (int i = 0; i < 20000; ++i) s = sghmc_step(s, target.grad_potential(s.theta), cfg, noise);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    s = sghmc_step(s, target.grad_potential(s.theta), cfg, noise);
    sum += s.theta[0];
    sq += s.theta[0] * s.theta[0];
  }
  const double mean = sum / n, var = sq / n - mean * mean;
  EXPECT_NEAR(mean, 0.0, 0.05);
  EXPECT_NEAR(var, 1.0, 0.1);
}

TEST(SghmcStep, EnergyDriftIsSecondOrder) {
  const auto target = GaussianTarget::standard(2);
  auto drift_per_step = [&](double eps) {
    const auto cfg = SghmcConfig::isotropic(2, eps, 0.0);
    ZeroNoise z;
    ChainState s{{1.0, -0.5}, {0.3, 0.8}, 0};
    auto h = [&](const ChainState& c) {
      return target.potential(c.theta) + 0.5 * dot(c.momentum, c.momentum);
    };
    const double h0 = h(s);
    const int steps = static_cast<int>(std::lround(0.1 / eps));
    for (int i = 0; i < steps; ++i) s = sghmc_step(s, target.grad_potential(s.theta), cfg, z);
    return (h(s) - h0) / steps;
  };
  const double d1 = drift_per_step(1e-2), d2 = drift_per_step(5e-3), d3 = drift_per_step(1e-3);
  EXPECT_NEAR(d1 / d2, 4.0, 0.2);
  EXPECT_NEAR(d1 / d3, 100.0, 5.0);
  EXPECT_LT(std::abs(d1), 1e-3);
}

TEST(EcWorkerStep, PureSpringForce) {
  const auto ec = ec_config(2, 0.1, 1.0, 0.0, 0.0, 1);
  ChainState s{{1.0, 0.0}, {0.0, 0.0}, 0};
  ZeroNoise z;
  const auto n = ec_worker_step(s, ParamVector{0.0, 0.0}, ParamVector{0.0, 0.0}, ec, z);
  EXPECT_NEAR(n.momentum[0], -0.1, 1e-15);
  EXPECT_EQ(n.momentum[1], 0.0);
  EXPECT_EQ(n.theta, (ParamVector{1.0, 0.0}));
}

TEST(EcWorkerStep, DecouplesAtZeroAlpha) {
  Rng init(5);
  for (auto scaling : {NoiseScaling::linear, NoiseScaling::quadratic}) {
    auto ec = ec_config(3, 0.05, 0.0, 0.7, 0.4, 1);
    ec.base.noise_scaling = scaling;
    ec.worker_noise = WorkerNoise::gradient_plus_center;
    auto plain = ec.base;
    plain.injected_noise.assign(3, 0.7 + 0.4);
    ChainState a{{0.3, -0.2, 1.0}, {0.1, 0.0, -0.4}, 0}, b = a;
    Rng ra(9), rb(9);
    GaussianNoise na(ra), nb(rb);
    const auto target = GaussianTarget::standard(3);
    for (int i = 0; i < 200; ++i) {
      ParamVector c(3);
      for (auto& x : c) x = 10.0 * standard_normal(init);
      a = ec_worker_step(a, target.grad_potential(a.theta), c, ec, na);
      b = sghmc_step(b, target.grad_potential(b.theta), plain, nb);
      ASSERT_EQ(a.theta, b.theta);
      ASSERT_EQ(a.momentum, b.momentum);
    }
  }
}

TEST(EcWorkerStep, WorkerNoiseSelection) {
  auto ec = ec_config(1, 0.1, 0.0, 1.0, 3.0, 1);
  ChainState s{{0.0}, {0.0}, 0};
  ScriptedNoise a({1.0});
  EXPECT_NEAR(ec_worker_step(s, ParamVector{0.0}, ParamVector{0.0}, ec, a).momentum[0], std::sqrt(0.2 * 1.0), 1e-15);
  ec.worker_noise = WorkerNoise::gradient_plus_center;
  ec.base.noise_scaling = NoiseScaling::quadratic;
  ScriptedNoise b({1.0});
  EXPECT_NEAR(ec_worker_step(s, ParamVector{0.0}, ParamVector{0.0}, ec, b).momentum[0], std::sqrt(0.02 * 4.0), 1e-15);
}

TEST(EcWorkerStep, Errors) {
  const auto ec = ec_config(2, 0.1, 1.0, 0.0, 0.0, 1);
  ChainState s{{1.0, 0.0}, {0.0, 0.0}, 0};
  ZeroNoise z;
  EXPECT_THROW(ec_worker_step(s, ParamVector{0.0, 0.0}, ParamVector{0.0}, ec, z), ContractError);
  EXPECT_THROW(ec_worker_step(s, ParamVector{0.0, 0.0}, ParamVector{INFINITY, 0.0}, ec, z), ContractError);
  auto bad = ec;
  bad.alpha = -1.0;
  EXPECT_THROW(bad.validate(2), ContractError);
  bad = ec;
  bad.workers = 0;
  EXPECT_THROW(bad.validate(2), ContractError);
}

TEST(EcCenterStep, EquilibriumWithoutNoise) {
  const auto ec = ec_config(2, 0.1, 1.0, 1.0, 0.0, 2);
  CenterState c{{0.5, -0.5}, {0.0, 0.0}, 3};
  const std::vector<ParamVector> th{{0.5, -0.5}, {0.5, -0.5}};
  ZeroNoise z;
  const auto n = ec_center_step(c, th, ec, z);
  EXPECT_EQ(n.center, c.center);
  EXPECT_EQ(n.momentum, (ParamVector{0.0, 0.0}));
  EXPECT_EQ(n.version, 4u);
}

TEST(EcCenterStep, EquilibriumMomentumReceivesOnlyNoise) {
  const auto ec = ec_config(1, 0.1, 1.0, 0.0, 2.0, 1);
  CenterState c{{0.5}, {0.0}, 0};
  ScriptedNoise s({1.5});
  const auto n = ec_center_step(c, std::vector<ParamVector>{{0.5}}, ec, s);
  EXPECT_EQ(n.center, c.center);
  EXPECT_NEAR(n.momentum[0], std::sqrt(2 * 0.1 * 2.0) * 1.5, 1e-15);
}

TEST(EcCenterStep, SymmetricWorkersCancel) {
  const auto ec = ec_config(2, 0.1, 1.0, 0.0, 0.5, 2);
  CenterState c{{0.0, 0.0}, {1.0, -1.0}, 0};
  const std::vector<ParamVector> th{{1.0, 0.0}, {-1.0, 0.0}};
  ZeroNoise z;
  const auto n = ec_center_step(c, th, ec, z);
  // Only friction: r - eps C r.
  EXPECT_NEAR(n.momentum[0], 1.0 - 0.1 * 0.5, 1e-15);
  EXPECT_NEAR(n.momentum[1], -1.0 + 0.1 * 0.5, 1e-15);
}

TEST(EcCenterStep, SingleWorkerPull) {
  const auto ec = ec_config(2, 0.1, 1.0, 0.0, 0.0, 1);
  CenterState c{{0.0, 0.0}, {0.0, 0.0}, 0};
  ZeroNoise z;
  const auto n = ec_center_step(c, std::vector<ParamVector>{{1.0, 0.0}}, ec, z);
  EXPECT_NEAR(n.momentum[0], 0.1, 1e-15);
  EXPECT_EQ(n.momentum[1], 0.0);
}

TEST(EcCenterStep, Errors) {
  const auto ec = ec_config(2, 0.1, 1.0, 0.0, 0.0, 1);
  CenterState c{{0.0, 0.0}, {0.0, 0.0}, 0};
  ZeroNoise z;
  EXPECT_THROW(ec_center_step(c, std::vector<ParamVector>{}, ec, z), ContractError);
  EXPECT_THROW(ec_center_step(c, std::vector<ParamVector>{{1.0}}, ec, z), ContractError);
}

TEST(GeneralStep, ZeroMatricesLeaveStateUnchanged) {
  DynamicsSpec s;
  s.diffusion = Eigen::MatrixXd::Zero(3, 3);
  s.curl = Eigen::MatrixXd::Zero(3, 3);
  s.hamiltonian_grad = [](std::span<const double>) { return ParamVector{5.0, -7.0, 1e6}; };
  Rng rng(1);
  GaussianNoise n(rng);
  const ParamVector z{1.0, 2.0, 3.0};
  EXPECT_EQ(general_sgmcmc_step(z, s, 0.3, n), z);
}

TEST(GeneralStep, DenseDiffusionUsesMatrixSquareRoot) {
  DynamicsSpec s;
  s.diffusion = Eigen::MatrixXd{{2.0, 1.0}, {1.0, 2.0}};
  s.curl = Eigen::MatrixXd::Zero(2, 2);
  s.hamiltonian_grad = [](std::span<const double>) { return ParamVector{0.0, 0.0}; };
  // sqrt([[2,1],[1,2]]) = [[a,b],[b,a]] with a = (sqrt3+1)/2, b = (sqrt3-1)/2.
  const double a = (std::sqrt(3.0) + 1.0) / 2.0, b = (std::sqrt(3.0) - 1.0) / 2.0;
  ScriptedNoise n({1.0, 0.0});
  const auto out = general_sgmcmc_step(ParamVector{0.0, 0.0}, s, 0.5, n);
  EXPECT_NEAR(out[0], a, 1e-12);
  EXPECT_NEAR(out[1], b, 1e-12);
}

TEST(GeneralStep, SghmcInstantiationIsBitwiseEqual) {
  const GaussianTarget target({0.5, -1.0}, {{2.0, 0.3}, {0.3, 1.0}});
  SghmcConfig cfg;
  cfg.epsilon = 0.05;
  cfg.mass = {1.0, 2.0};
  cfg.grad_noise = {0.5, 1.5};
  const auto spec = sghmc_dynamics_spec(gaussian_grad(target), cfg);
  ASSERT_TRUE(validate_dynamics(spec).ok());
  ChainState s{{1.0, 1.0}, {0.2, -0.3}, 0};
  ParamVector z{1.0, 1.0, 0.2, -0.3};
  const auto xi = normals(31, 4 * 100);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> chunk(xi.begin() + 4 * t, xi.begin() + 4 * t + 4);
    ScriptedNoise kernel({chunk[2], chunk[3]});
    ScriptedNoise general(chunk);
    s = sghmc_step(s, target.grad_potential(s.theta), cfg, kernel);
    z = general_sgmcmc_step(z, spec, cfg.epsilon, general);
    ASSERT_EQ(z, (ParamVector{s.theta[0], s.theta[1], s.momentum[0], s.momentum[1]})) << "step " << t;
  }
}

TEST(GeneralStep, EcInstantiationReproducesKernels) {
  const std::size_t n = 2, k = 3;
  const auto target = GaussianTarget::standard(n);
  auto ec = ec_config(n, 0.02, 0.8, 0.6, 0.9, k);
  const auto spec = ec_dynamics_spec(gaussian_grad(target), ec);
  ASSERT_TRUE(validate_dynamics(spec).ok());
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
  const auto xi = normals(41, m * 100);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> chunk(xi.begin() + static_cast<long>(m * t), xi.begin() + static_cast<long>(m * (t + 1)));
    std::vector<ParamVector> thetas;
    for (const auto& s : w) thetas.push_back(s.theta);
    for (std::size_t i = 0; i < k; ++i) {
      ScriptedNoise sn(std::vector<double>(chunk.begin() + static_cast<long>(lay.momentum(i)),
                                           chunk.begin() + static_cast<long>(lay.momentum(i) + n)));
      w[i] = ec_worker_step(w[i], target.grad_potential(w[i].theta), c.center, ec, sn);
    }
    ScriptedNoise cn(std::vector<double>(chunk.begin() + static_cast<long>(lay.center_momentum()), chunk.end()));
    c = ec_center_step(c, thetas, ec, cn);
    ScriptedNoise gn(chunk);
    z = general_sgmcmc_step(z, spec, ec.base.epsilon, gn);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        ASSERT_NEAR(z[lay.theta(i) + j], w[i].theta[j], 1e-12);
        ASSERT_NEAR(z[lay.momentum(i) + j], w[i].momentum[j], 1e-12);
      }
    for (std::size_t j = 0; j < n; ++j) {
      ASSERT_NEAR(z[lay.center() + j], c.center[j], 1e-12);
      ASSERT_NEAR(z[lay.center_momentum() + j], c.momentum[j], 1e-12);
    }
  }
}

TEST(GeneralStep, SgldInstantiation) {
  const GaussianTarget target({1.0, 0.0}, {{1.0, 0.2}, {0.2, 0.5}});
  const auto spec = sgld_dynamics_spec(gaussian_grad(target), 2);
  EXPECT_TRUE(validate_dynamics(spec).ok());
  ParamVector a{0.0, 0.0}, b = a;
  Rng ra(8), rb(8);
  GaussianNoise na(ra), nb(rb);
  for (int t = 0; t < 200; ++t) {
    a = sgld_step(a, target.grad_potential(a), 0.01, na);
    b = general_sgmcmc_step(b, spec, 0.01, nb);
    ASSERT_NEAR(a[0], b[0], 1e-12);
    ASSERT_NEAR(a[1], b[1], 1e-12);
  }
}

TEST(ValidateDynamics, ShippedSpecsPass) {
  const auto target = GaussianTarget::standard(2);
  EXPECT_TRUE(validate_dynamics(sghmc_dynamics_spec(gaussian_grad(target), SghmcConfig::isotropic(2, 0.1, 1.0))).ok());
  EXPECT_TRUE(validate_dynamics(sgld_dynamics_spec(gaussian_grad(target), 2)).ok());
  for (std::size_t k : {1u, 2u, 4u})
    EXPECT_TRUE(validate_dynamics(ec_dynamics_spec(gaussian_grad(target), ec_config(2, 0.1, 1.0, 1.0, 1.0, k))).ok());
}

TEST(ValidateDynamics, PrintedSghmcCurlFailsSkewSymmetry) {
  const auto target = GaussianTarget::standard(2);
  const auto r = validate_dynamics(printed_sghmc_dynamics_spec(gaussian_grad(target), SghmcConfig::isotropic(2, 0.1, 1.0)));
  EXPECT_FALSE(r.ok());
  EXPECT_FALSE(r.curl_skew);
  EXPECT_TRUE(r.diffusion_psd);
  EXPECT_FALSE(r.failures.empty());
}

TEST(ValidateDynamics, NegativeDiffusionFailsPsd) {
  DynamicsSpec s;
  s.diffusion = Eigen::MatrixXd::Identity(3, 3);
  s.diffusion(1, 1) = -1.0;
  s.curl = Eigen::MatrixXd::Zero(3, 3);
  const auto r = validate_dynamics(s);
  EXPECT_FALSE(r.diffusion_psd);
  EXPECT_TRUE(r.curl_skew);
  EXPECT_NEAR(r.min_eigenvalue, -1.0, 1e-12);
}

TEST(ValidateDynamics, AsymmetricDiffusionAndNonzeroGamma) {
  DynamicsSpec s;
  s.diffusion = Eigen::MatrixXd{{1.0, 0.1}, {0.0, 1.0}};
  s.curl = Eigen::MatrixXd::Zero(2, 2);
  s.gamma = [](std::span<const double> z) { return ParamVector{z[0], 0.0}; };
  const auto r = validate_dynamics(s);
  EXPECT_FALSE(r.diffusion_symmetric);
  EXPECT_FALSE(r.gamma_zero);
}

TEST(ValidateDynamics, RandomSkewMatricesPass) {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 1 + static_cast<int>(uniform_below(rng, 6));
    Eigen::MatrixXd a(m, m), b(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        a(i, j) = standard_normal(rng);
        b(i, j) = standard_normal(rng);
      }
    DynamicsSpec s;
    s.curl = a - a.transpose();
    s.diffusion = b * b.transpose();
    s.diffusion = 0.5 * (s.diffusion + s.diffusion.transpose());
    EXPECT_TRUE(validate_dynamics(s).ok());
  }
}

TEST(Sgld, ZeroGradientZeroNoise) {
  ZeroNoise z;
  EXPECT_EQ(sgld_step(ParamVector{1.0, -2.0}, ParamVector{0.0, 0.0}, 0.1, z), (ParamVector{1.0, -2.0}));
  EXPECT_THROW(sgld_step(ParamVector{1.0}, ParamVector{0.0, 0.0}, 0.1, z), ContractError);
}

TEST(Sgld, LongRunVariance) {
  Rng rng(55);
  GaussianNoise n(rng);
  ParamVector th{0.0};
  double sum = 0.0, sq = 0.0;
  const int steps = 1000000;
  for (int i = 0; i < steps; ++i) {
    th = sgld_step(th, th, 1e-3, n);
    sum += th[0];
    sq += th[0] * th[0];
  }
  const double mean = sum / steps;
  EXPECT_NEAR(sq / steps - mean * mean, 1.0, 0.1);
}

namespace {

CoupledState coupled(std::vector<ParamVector> thetas, ParamVector center) {
  CoupledState s;
  for (auto& t : thetas) s.workers.push_back({t, ParamVector(t.size(), 0.0)});
  s.center = {center, ParamVector(center.size(), 0.0)};
  return s;
}

}  // namespace

TEST(Deterministic, FixedPointAtCenter) {
  const auto s = coupled({{1.0, 2.0}, {1.0, 2.0}}, {1.0, 2.0});
  const std::vector<ParamVector> g{{0.0, 0.0}, {0.0, 0.0}};
  const OptimizerConfig cfg;
  const auto a = ec_deterministic_step(s, g, cfg);
  const auto b = eamsgd_step(s, g, cfg);
  for (const auto* n : {&a, &b}) {
    EXPECT_EQ(n->center.theta, s.center.theta);
    for (const auto& w : n->workers) {
      EXPECT_EQ(w.theta, (ParamVector{1.0, 2.0}));
      EXPECT_EQ(w.velocity, (ParamVector{0.0, 0.0}));
    }
  }
}

TEST(Deterministic, DecoupledIsMomentumDescent) {
  OptimizerConfig cfg{0.1, 0.0, 0.2};
  auto s = coupled({{1.0, -1.0}}, {5.0, 5.0});
  auto e = s;
  ParamVector th{1.0, -1.0}, v{0.0, 0.0};
  for (int t = 0; t < 30; ++t) {
    const std::vector<ParamVector> g{s.workers[0].theta};
    s = ec_deterministic_step(s, g, cfg);
    const std::vector<ParamVector> ge{e.workers[0].theta};
    e = eamsgd_step(e, ge, cfg);
    for (int j = 0; j < 2; ++j) {
      const double nv = v[j] - 0.1 * th[j] - 0.2 * v[j];
      th[j] += v[j];
      v[j] = nv;
    }
    EXPECT_EQ(s.workers[0].theta, th);
    EXPECT_EQ(e.workers[0].theta, th);
  }
  EXPECT_EQ(e.center.theta, (ParamVector{5.0, 5.0}));
}

TEST(Eamsgd, SingleStepExample) {
  OptimizerConfig cfg{0.1, 1.0, 0.0};
  const auto s = coupled({{1.0, 0.0}}, {0.0, 0.0});
  const auto n = eamsgd_step(s, std::vector<ParamVector>{{0.0, 0.0}}, cfg);
  EXPECT_NEAR(n.workers[0].theta[0], 0.9, 1e-15);
  EXPECT_NEAR(n.center.theta[0], 0.1, 1e-15);
  EXPECT_EQ(n.workers[0].theta[1], 0.0);
}

TEST(Deterministic, ZeroNoiseLimitOfStochasticKernels) {
  // v = eps p, eps_det = eps^2, xi = eps V with V = C, M = I.
  const std::size_t n = 2, k = 3;
  const double eps = 0.1, alpha = 0.7;
  for (double v : {0.0, 0.5}) {
    auto ec = ec_config(n, eps, alpha, v, v, k);
    const GaussianTarget target({0.5, -0.5}, {{1.0, 0.2}, {0.2, 2.0}});
    std::vector<ChainState> w{{{1.0, 0.0}, {0.3, 0.1}, 0}, {{-1.0, 2.0}, {0.0, -0.2}, 0}, {{0.5, 0.5}, {0.0, 0.0}, 0}};
    CenterState c{{0.0, 0.0}, {0.1, 0.0}, 0};
    CoupledState d;
    for (const auto& s : w) d.workers.push_back({s.theta, {eps * s.momentum[0], eps * s.momentum[1]}});
    d.center = {c.center, {eps * c.momentum[0], eps * c.momentum[1]}};
    const OptimizerConfig cfg{eps * eps, alpha, eps * v};
    ZeroNoise z;
    for (int t = 0; t < 100; ++t) {
      std::vector<ParamVector> thetas, grads;
      for (const auto& s : w) thetas.push_back(s.theta);
      for (const auto& s : d.workers) grads.push_back(target.grad_potential(s.theta));
      for (auto& s : w) s = ec_worker_step(s, target.grad_potential(s.theta), c.center, ec, z);
      c = ec_center_step(c, thetas, ec, z);
      d = ec_deterministic_step(d, grads, cfg);
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          ASSERT_NEAR(d.workers[i].theta[j], w[i].theta[j], 1e-12);
          ASSERT_NEAR(d.workers[i].velocity[j], eps * w[i].momentum[j], 1e-12);
        }
      for (std::size_t j = 0; j < n; ++j) {
        ASSERT_NEAR(d.center.theta[j], c.center[j], 1e-12);
        ASSERT_NEAR(d.center.velocity[j], eps * c.momentum[j], 1e-12);
      }
    }
  }
}

TEST(Deterministic, BothArmsConvergeOnBowl) {
  OptimizerConfig cfg{0.01, 1.0, 0.1};
  auto a = coupled({{1.0, 2.0}, {-2.0, 1.0}, {0.5, -1.5}, {3.0, 3.0}}, {0.625, 1.125});
  auto b = a;
  auto grads = [](const CoupledState& s) {
    std::vector<ParamVector> g;
    for (const auto& w : s.workers) g.push_back(w.theta);
    return g;
  };
  for (int t = 0; t < 2000; ++t) {
    a = ec_deterministic_step(a, grads(a), cfg);
    b = eamsgd_step(b, grads(b), cfg);
  }
  for (const auto* s : {&a, &b})
    for (const auto& w : s->workers) EXPECT_LT(std::sqrt(dot(w.theta, w.theta)), 1e-3);
}

TEST(Deterministic, VelocityFormDivergesWhenStiffnessExceedsFriction) {
  // Spectral radius of [[1, 1], [-eps (1 + alpha), 1 - xi]] exceeds 1 once
  // eps (1 + alpha) > xi.
  OptimizerConfig cfg{0.1, 1.0, 0.1};
  auto s = coupled({{1.0}, {-1.0}}, {0.0});
  for (int t = 0; t < 2000; ++t) {
    std::vector<ParamVector> g{s.workers[0].theta, s.workers[1].theta};
    s = ec_deterministic_step(s, g, cfg);
  }
  EXPECT_GT(std::abs(s.workers[0].theta[0]), 1e3);
}

TEST(Deterministic, Errors) {
  const OptimizerConfig cfg;
  const auto s = coupled({{1.0, 0.0}}, {0.0, 0.0});
  EXPECT_THROW(ec_deterministic_step(s, std::vector<ParamVector>{}, cfg), ContractError);
  EXPECT_THROW(eamsgd_step(s, std::vector<ParamVector>{{0.0}}, cfg), ContractError);
  EXPECT_THROW((OptimizerConfig{0.0, 1.0, 0.1}.validate()), ContractError);
}
