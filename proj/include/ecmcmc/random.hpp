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
#include <concepts>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "ecmcmc/core.hpp"

namespace ecmcmc {

// mt19937_64's output sequence is fixed by the standard. The distributions
// in <random> are not, so the helpers below turn raw engine output into
// uniforms and normals themselves to keep runs identical across toolchains.
using Rng = std::mt19937_64;

/// Purpose tags for stream derivation. A worker owns one stream per tag.
enum class Stream : std::uint64_t {
  init = 1,
  noise = 2,
  data = 3,
  delay = 4,
  server = 5,
  dataset = 6,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for stream `tag` of worker `worker` under `master`.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t worker, Stream tag) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ (worker + 0x51ed270b27e1c3a5ULL));
  h = splitmix64(h ^ static_cast<std::uint64_t>(tag));
  return h;
}

inline Rng make_stream(std::uint64_t master, std::uint64_t worker, Stream tag) {
  return Rng(derive_seed(master, worker, tag));
}

/// Uniform on the open interval (0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

/// Unbiased integer in [0, n) by rejection.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
  if (n == 0) throw ContractError("uniform_below: empty range");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

/// Standard normal via Box-Muller; consumes exactly two engine outputs.
inline double standard_normal(Rng& rng) {
  const double u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

template <typename N>
concept NoiseSource = requires(N& n) {
  { n() } -> std::convertible_to<double>;
};

/// Standard-normal draws from a caller-owned stream.
class GaussianNoise {
 public:
  explicit GaussianNoise(Rng& rng) : rng_(&rng) {}
  double operator()() { return standard_normal(*rng_); }

 private:
  Rng* rng_;
};

/// Forces every injected perturbation to zero.
struct ZeroNoise {
  double operator()() const { return 0.0; }
};

/// Replays a fixed sequence of standard-normal values. Used to feed two
/// kernels the same realisation.
class ScriptedNoise {
 public:
  explicit ScriptedNoise(std::vector<double> values) : values_(std::move(values)) {}
  double operator()() {
    if (pos_ >= values_.size()) throw ContractError("ScriptedNoise: sequence exhausted");
    return values_[pos_++];
  }
  std::size_t consumed() const { return pos_; }

 private:
  std::vector<double> values_;
  std::size_t pos_ = 0;
};

/// Wraps another source and records what it hands out.
template <NoiseSource Inner>
class RecordingNoise {
 public:
  explicit RecordingNoise(Inner& inner) : inner_(&inner) {}
  double operator()() {
    const double x = (*inner_)();
    drawn_.push_back(x);
    return x;
  }
  const std::vector<double>& drawn() const { return drawn_; }

 private:
  Inner* inner_;
  std::vector<double> drawn_;
};

}  // namespace ecmcmc
