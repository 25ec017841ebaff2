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

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ecmcmc/core.hpp"
#include "ecmcmc/random.hpp"

namespace ecmcmc {

/// Malformed or unreadable input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Labelled observations, stored row-major (one row of `n_features` per point).
struct DataSet {
  std::size_t n_features = 0;
  std::vector<double> features;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * n_features, n_features};
  }
  int n_classes() const {
    return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  }
  void validate() const {
    if (labels.empty()) throw ContractError("DataSet: needs at least one observation");
    if (n_features == 0) throw ContractError("DataSet: zero features");
    require_dim(features.size(), labels.size() * n_features, "DataSet features");
    for (int y : labels)
      if (y < 0) throw ContractError("DataSet: negative label");
    require_finite(features, "DataSet features");
  }
};

struct MinibatchSpec {
  std::size_t batch_size = 1;
  bool with_replacement = false;
};

/// Draws minibatch indices for a dataset of size `n`.
inline std::vector<std::size_t> draw_minibatch(const MinibatchSpec& spec, std::size_t n, Rng& rng) {
  if (spec.batch_size == 0) throw ContractError("draw_minibatch: batch_size must be >= 1");
  if (n == 0) throw ContractError("draw_minibatch: empty dataset");
  std::vector<std::size_t> out;
  out.reserve(spec.batch_size);
  if (spec.with_replacement) {
    for (std::size_t i = 0; i < spec.batch_size; ++i) out.push_back(uniform_below(rng, n));
    return out;
  }
  if (spec.batch_size > n)
    detail::fail("draw_minibatch: batch_size ", spec.batch_size, " > dataset size ", n,
                 " without replacement");
  // Partial Fisher-Yates.
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < spec.batch_size; ++i) {
    const std::size_t j = i + uniform_below(rng, n - i);
    std::swap(idx[i], idx[j]);
    out.push_back(idx[i]);
  }
  return out;
}

/// A potential energy U(theta) = -log posterior + const, with exact and noisy gradients.
///
/// Implementations are immutable after construction and may be shared across
/// worker threads.
class TargetModel {
 public:
  virtual ~TargetModel() = default;

  virtual std::size_t dim() const = 0;
  virtual double potential(std::span<const double> theta) const = 0;
  virtual ParamVector grad_potential(std::span<const double> theta) const = 0;

  /// Gradient estimate as a sampler sees it. The default is exact.
  virtual ParamVector noisy_grad(std::span<const double> theta, Rng& /*data_rng*/) const {
    return grad_potential(theta);
  }

 protected:
  void check_dim(std::span<const double> theta, std::string_view what) const {
    require_dim(theta.size(), dim(), what);
  }
};

/// Multivariate normal target N(mean, covariance).
///
/// Has no dataset. To exercise stochastic-gradient code paths it adds a
/// configured zero-mean Gaussian perturbation (diagonal covariance) to the
/// exact gradient in `noisy_grad`.
class GaussianTarget final : public TargetModel {
 public:
  GaussianTarget(ParamVector mean, const std::vector<std::vector<double>>& covariance,
                 Diagonal grad_noise = {})
      : mean_(std::move(mean)), grad_noise_(std::move(grad_noise)) {
    const std::size_t n = mean_.size();
    if (n == 0) throw ContractError("GaussianTarget: empty mean");
    require_finite(mean_, "GaussianTarget mean");
    require_dim(covariance.size(), n, "GaussianTarget covariance rows");
    cov_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      require_dim(covariance[i].size(), n, "GaussianTarget covariance row");
      for (std::size_t j = 0; j < n; ++j) cov_(i, j) = covariance[i][j];
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < i; ++j)
        if (cov_(i, j) != cov_(j, i)) throw ContractError("GaussianTarget: covariance not symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(cov_);
    if (llt.info() != Eigen::Success || !(llt.matrixL().toDenseMatrix().diagonal().array() > 0).all())
      throw ContractError("GaussianTarget: covariance not positive definite");
    precision_ = llt.solve(Eigen::MatrixXd::Identity(cov_.rows(), cov_.cols()));
    precision_ = 0.5 * (precision_ + precision_.transpose()).eval();
    if (grad_noise_.empty()) grad_noise_.assign(n, 0.0);
    require_dim(grad_noise_.size(), n, "GaussianTarget grad_noise");
    for (double v : grad_noise_)
      if (!(v >= 0.0)) throw ContractError("GaussianTarget: grad_noise entries must be >= 0");
  }

  static GaussianTarget standard(std::size_t n, double grad_noise = 0.0) {
    std::vector<std::vector<double>> cov(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) cov[i][i] = 1.0;
    return GaussianTarget(ParamVector(n, 0.0), cov, Diagonal(n, grad_noise));
  }

  std::size_t dim() const override { return mean_.size(); }
  const ParamVector& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return cov_; }
  const Eigen::MatrixXd& precision() const { return precision_; }
  const Diagonal& grad_noise() const { return grad_noise_; }

  double potential(std::span<const double> theta) const override {
    check_dim(theta, "GaussianTarget::potential");
    const ParamVector g = grad_potential(theta);
    double u = 0.0;
    for (std::size_t i = 0; i < dim(); ++i) u += (theta[i] - mean_[i]) * g[i];
    return 0.5 * u;
  }

  ParamVector grad_potential(std::span<const double> theta) const override {
    check_dim(theta, "GaussianTarget::grad_potential");
    const std::size_t n = dim();
    ParamVector d(n), g(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) d[i] = theta[i] - mean_[i];
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += precision_(i, j) * d[j];
      g[i] = s;
    }
    return g;
  }

  ParamVector noisy_grad(std::span<const double> theta, Rng& rng) const override {
    ParamVector g = grad_potential(theta);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += std::sqrt(grad_noise_[i]) * standard_normal(rng);
    return g;
  }

  /// sqrt((theta-mu)^T Sigma^-1 (theta-mu)).
  double mahalanobis(std::span<const double> theta) const { return std::sqrt(2.0 * potential(theta)); }

 private:
  ParamVector mean_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd precision_;
  Diagonal grad_noise_;
};

/// Shape of a small feed-forward softmax classifier.
///
/// `hidden == 0` gives multinomial logistic regression; otherwise one ReLU
/// hidden layer. Parameters are flattened layer by layer; within a layer the
/// weight matrix comes first (row-major, [out][in]) followed by the bias.
struct NetworkShape {
  std::size_t inputs = 0;
  std::size_t hidden = 0;
  std::size_t classes = 2;

  std::size_t param_count() const {
    if (hidden == 0) return classes * inputs + classes;
    return hidden * inputs + hidden + classes * hidden + classes;
  }
};

/// Bayesian softmax classifier posterior.
///
/// U(theta) = -sum_j log p(y_j | x_j, theta) + lambda * ||theta||^2, where
/// p(y = i | x, theta) is proportional to exp(f_i(x, theta)).
class ClassifierPosterior final : public TargetModel {
 public:
  ClassifierPosterior(NetworkShape shape, DataSet data, double prior_precision, MinibatchSpec batch)
      : shape_(shape), data_(std::move(data)), lambda_(prior_precision), batch_(batch) {
    data_.validate();
    require_dim(data_.n_features, shape_.inputs, "ClassifierPosterior inputs");
    if (shape_.classes < 2) throw ContractError("ClassifierPosterior: need >= 2 classes");
    if (static_cast<std::size_t>(data_.n_classes()) > shape_.classes)
      throw ContractError("ClassifierPosterior: label exceeds class count");
    if (!(lambda_ > 0.0) || !std::isfinite(lambda_))
      throw ContractError("ClassifierPosterior: prior precision must be positive");
    if (batch_.batch_size < 1 || (!batch_.with_replacement && batch_.batch_size > data_.size()))
      throw ContractError("ClassifierPosterior: batch size must lie in [1, N]");
  }

  std::size_t dim() const override { return shape_.param_count(); }
  const NetworkShape& shape() const { return shape_; }
  const DataSet& data() const { return data_; }
  const MinibatchSpec& minibatch() const { return batch_; }
  double prior_precision() const { return lambda_; }

  /// Logits f(x, theta).
  std::vector<double> logits(std::span<const double> theta, std::span<const double> x) const {
    check_dim(theta, "ClassifierPosterior::logits");
    std::vector<double> hidden, out;
    forward(theta, x, hidden, out);
    return out;
  }

  /// -log p(y | x, theta).
  double example_nll(std::span<const double> theta, std::span<const double> x, int y) const {
    const auto z = logits(theta, x);
    return neg_log_softmax(z, y);
  }

  /// Mean per-example negative log likelihood over `set`.
  double mean_nll(std::span<const double> theta, const DataSet& set) const {
    check_dim(theta, "ClassifierPosterior::mean_nll");
    if (set.size() == 0) throw ContractError("mean_nll: empty evaluation set");
    require_dim(set.n_features, shape_.inputs, "mean_nll features");
    std::vector<double> hidden, out;
    double s = 0.0;
    for (std::size_t j = 0; j < set.size(); ++j) {
      forward(theta, set.row(j), hidden, out);
      s += neg_log_softmax(out, set.labels[j]);
    }
    return s / static_cast<double>(set.size());
  }

  double log_prior(std::span<const double> theta) const {
    check_dim(theta, "ClassifierPosterior::log_prior");
    return -lambda_ * dot(theta, theta);
  }

  double potential(std::span<const double> theta) const override {
    check_dim(theta, "ClassifierPosterior::potential");
    std::vector<double> hidden, out;
    double s = 0.0;
    for (std::size_t j = 0; j < data_.size(); ++j) {
      forward(theta, data_.row(j), hidden, out);
      s += neg_log_softmax(out, data_.labels[j]);
    }
    return s - log_prior(theta);
  }

  ParamVector grad_potential(std::span<const double> theta) const override {
    check_dim(theta, "ClassifierPosterior::grad_potential");
    std::vector<std::size_t> all(data_.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return accumulate_grad(theta, all, 1.0);
  }

  /// Minibatch gradient: likelihood part rescaled by N/|B|, prior part unscaled.
  ParamVector stochastic_grad(std::span<const double> theta, std::span<const std::size_t> batch) const {
    check_dim(theta, "ClassifierPosterior::stochastic_grad");
    if (batch.empty()) throw ContractError("stochastic_grad: empty batch");
    for (std::size_t i : batch)
      if (i >= data_.size()) detail::fail("stochastic_grad: index ", i, " out of range ", data_.size());
    const double scale = static_cast<double>(data_.size()) / static_cast<double>(batch.size());
    return accumulate_grad(theta, batch, scale);
  }

  ParamVector noisy_grad(std::span<const double> theta, Rng& rng) const override {
    const auto batch = draw_minibatch(batch_, data_.size(), rng);
    return stochastic_grad(theta, batch);
  }

 private:
  static double neg_log_softmax(std::span<const double> z, int y) {
    const double m = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double v : z) s += std::exp(v - m);
    return std::log(s) + m - z[static_cast<std::size_t>(y)];
  }

  void forward(std::span<const double> theta, std::span<const double> x, std::vector<double>& hidden,
               std::vector<double>& out) const {
    const std::size_t d = shape_.inputs, h = shape_.hidden, c = shape_.classes;
    out.assign(c, 0.0);
    if (h == 0) {
      const double* w = theta.data();
      const double* b = w + c * d;
      for (std::size_t k = 0; k < c; ++k) {
        double s = b[k];
        for (std::size_t i = 0; i < d; ++i) s += w[k * d + i] * x[i];
        out[k] = s;
      }
      return;
    }
    const double* w1 = theta.data();
    const double* b1 = w1 + h * d;
    const double* w2 = b1 + h;
    const double* b2 = w2 + c * h;
    hidden.assign(h, 0.0);
    for (std::size_t k = 0; k < h; ++k) {
      double s = b1[k];
      for (std::size_t i = 0; i < d; ++i) s += w1[k * d + i] * x[i];
      hidden[k] = s > 0.0 ? s : 0.0;
    }
    for (std::size_t k = 0; k < c; ++k) {
      double s = b2[k];
      for (std::size_t i = 0; i < h; ++i) s += w2[k * h + i] * hidden[i];
      out[k] = s;
    }
  }

  ParamVector accumulate_grad(std::span<const double> theta, std::span<const std::size_t> batch,
                              double scale) const {
    const std::size_t d = shape_.inputs, h = shape_.hidden, c = shape_.classes;
    ParamVector g(dim(), 0.0);
    std::vector<double> hidden, out, delta(c), dhidden(h);
    for (std::size_t j : batch) {
      const auto x = data_.row(j);
      forward(theta, x, hidden, out);
      // d(-log softmax_y)/dz = softmax - onehot(y)
      const double m = *std::max_element(out.begin(), out.end());
      double s = 0.0;
      for (std::size_t k = 0; k < c; ++k) {
        delta[k] = std::exp(out[k] - m);
        s += delta[k];
      }
      for (std::size_t k = 0; k < c; ++k) delta[k] /= s;
      delta[static_cast<std::size_t>(data_.labels[j])] -= 1.0;

      if (h == 0) {
        double* gw = g.data();
        double* gb = gw + c * d;
        for (std::size_t k = 0; k < c; ++k) {
          for (std::size_t i = 0; i < d; ++i) gw[k * d + i] += scale * delta[k] * x[i];
          gb[k] += scale * delta[k];
        }
        continue;
      }
      const double* w2 = theta.data() + h * d + h;
      double* gw1 = g.data();
      double* gb1 = gw1 + h * d;
      double* gw2 = gb1 + h;
      double* gb2 = gw2 + c * h;
      std::fill(dhidden.begin(), dhidden.end(), 0.0);
      for (std::size_t k = 0; k < c; ++k) {
        for (std::size_t i = 0; i < h; ++i) {
          gw2[k * h + i] += scale * delta[k] * hidden[i];
          dhidden[i] += w2[k * h + i] * delta[k];
        }
        gb2[k] += scale * delta[k];
      }
      for (std::size_t i = 0; i < h; ++i) {
        if (hidden[i] <= 0.0) continue;
        for (std::size_t q = 0; q < d; ++q) gw1[i * d + q] += scale * dhidden[i] * x[q];
        gb1[i] += scale * dhidden[i];
      }
    }
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += 2.0 * lambda_ * theta[i];
    return g;
  }

  NetworkShape shape_;
  DataSet data_;
  double lambda_;
  MinibatchSpec batch_;
};

/// Two Gaussian blobs with unit isotropic spread, centred at -/+ separation/2
/// along the diagonal direction. Labels alternate 0, 1, 0, ...
inline DataSet make_two_blobs(std::size_t n_features, std::size_t n_points, double separation,
                              std::uint64_t seed) {
  if (n_features == 0 || n_points == 0) throw ContractError("make_two_blobs: empty shape");
  Rng rng = make_stream(seed, 0, Stream::dataset);
  DataSet ds;
  ds.n_features = n_features;
  ds.features.reserve(n_features * n_points);
  const double offset = 0.5 * separation / std::sqrt(static_cast<double>(n_features));
  for (std::size_t j = 0; j < n_points; ++j) {
    const int y = static_cast<int>(j % 2);
    const double sign = y == 0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n_features; ++i) ds.features.push_back(sign * offset + standard_normal(rng));
    ds.labels.push_back(y);
  }
  return ds;
}

/// Reads a CSV dataset: one header row, then one observation per line with
/// the integer class label in the final column.
inline DataSet load_csv_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("csv: missing header row");
  std::size_t header_cols = 1;
  for (char ch : line) header_cols += ch == ',';
  if (header_cols < 2) throw DataError("csv: need at least one feature column and a label column");
  DataSet ds;
  ds.n_features = header_cols - 1;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != header_cols)
      throw DataError("csv: line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                      " columns, expected " + std::to_string(header_cols));
    try {
      for (std::size_t i = 0; i + 1 < cells.size(); ++i) {
        std::size_t used = 0;
        const double v = std::stod(cells[i], &used);
        if (used != cells[i].size() || !std::isfinite(v)) throw std::invalid_argument(cells[i]);
        ds.features.push_back(v);
      }
      std::size_t used = 0;
      const int y = std::stoi(cells.back(), &used);
      if (used != cells.back().size() || y < 0) throw std::invalid_argument(cells.back());
      ds.labels.push_back(y);
    } catch (const std::logic_error&) {
      throw DataError("csv: line " + std::to_string(line_no) + " has a malformed value");
    }
  }
  if (ds.labels.empty()) throw DataError("csv: no observations");
  return ds;
}

inline DataSet load_csv_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("csv: cannot open " + path);
  return load_csv_dataset(in);
}

/// Central finite-difference gradient; coordinate i uses step h * max(1, |theta_i|).
inline ParamVector finite_difference_gradient(const TargetModel& model, std::span<const double> theta,
                                              double h = 1e-5) {
  ParamVector x(theta.begin(), theta.end()), g(theta.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double step = h * std::max(1.0, std::abs(theta[i]));
    x[i] = theta[i] + step;
    const double up = model.potential(x);
    x[i] = theta[i] - step;
    const double down = model.potential(x);
    x[i] = theta[i];
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

/// ||g_fd - g|| / max(||g||, 1e-12) at `theta`.
inline double gradient_relative_error(const TargetModel& model, std::span<const double> theta,
                                      double h = 1e-5) {
  const ParamVector fd = finite_difference_gradient(model, theta, h);
  const ParamVector g = model.grad_potential(theta);
  double num = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) num += (fd[i] - g[i]) * (fd[i] - g[i]);
  return std::sqrt(num) / std::max(norm2(g), 1e-12);
}

}  // namespace ecmcmc
