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
#include <cstddef>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ecmcmc {

/// Dense real parameter vector (positions, momenta or gradients).
using ParamVector = std::vector<double>;

/// Diagonal matrix stored as its diagonal. Mass, gradient-noise and
/// center-noise matrices are all of this form.
using Diagonal = std::vector<double>;

/// Raised when a caller violates an operation's precondition
/// (dimension mismatch, non-finite input, invalid configuration).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

template <typename... Args>
[[noreturn]] void fail(Args&&... args) {
  std::ostringstream os;
  (os << ... << args);
  throw ContractError(os.str());
}

}  // namespace detail

inline void require(bool cond, std::string_view what) {
  if (!cond) throw ContractError(std::string(what));
}

inline void require_dim(std::size_t got, std::size_t want, std::string_view what) {
  if (got != want) detail::fail(what, ": dimension ", got, " != expected ", want);
}

inline bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline void require_finite(std::span<const double> v, std::string_view what) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i])) detail::fail(what, ": non-finite entry at index ", i);
}

inline Diagonal constant_diagonal(std::size_t n, double value) { return Diagonal(n, value); }

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace ecmcmc
