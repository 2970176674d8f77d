#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numeric>
#include <vector>

#include "sesa/classifiers/model.hpp"

namespace sesa {

// Shared storage for one-vs-rest linear models: score_c(x) = w_c . x + b_c.
class LinearOvrModel : public Model {
 public:
  const RowMatrix& weights() const { return weights_; }
  const std::vector<double>& bias() const { return bias_; }

 protected:
  void scores_one(std::span<const double> x, std::span<double> out) const override {
    for (std::size_t c = 0; c < weights_.rows; ++c)
      out[c] = dot(weights_.row_span(c), x) + bias_[c];
  }

  void save_payload(ByteWriter& w) const override {
    w.u64(weights_.rows);
    w.u64(weights_.cols);
    for (double v : weights_.data) w.f64(v);
    w.f64_vec(bias_);
  }

  void load_payload(ByteReader& r) override {
    auto rows = r.u64();
    auto cols = r.u64();
    weights_ = RowMatrix(rows, cols);
    for (auto& v : weights_.data) v = r.f64();
    bias_ = r.f64_vec();
    require(bias_.size() == rows && cols == n_features_, errc::parse_error,
            "inconsistent linear payload");
  }

  RowMatrix weights_;
  std::vector<double> bias_;
};

// Rosenblatt perceptron, one binary problem per class. Learning rate 1,
// per-epoch shuffle from a per-class stream, stop after an error-free epoch.
class PerceptronModel : public LinearOvrModel {
 public:
  Algo algo() const override { return Algo::perceptron; }

 protected:
  void fit_impl(const RowMatrix& x, const std::vector<int>& y_idx,
                const ClassifierSpec& spec) override {
    std::size_t k = classes_.size(), d = x.cols, n = x.rows;
    weights_ = RowMatrix(k, d);
    bias_.assign(k, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
      Rng rng = Rng::derive(spec.seed, c);
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      double* w = weights_.row(c);
      double& b = bias_[c];
      for (int epoch = 0; epoch < spec.perceptron_max_epochs; ++epoch) {
        rng.shuffle(order);
        bool updated = false;
        for (std::size_t i : order) {
          double y = y_idx[i] == static_cast<int>(c) ? 1.0 : -1.0;
          const double* xi = x.row(i);
          double a = b;
          for (std::size_t j = 0; j < d; ++j) a += w[j] * xi[j];
          if (y * a <= 0.0) {
            for (std::size_t j = 0; j < d; ++j) w[j] += spec.perceptron_lr * y * xi[j];
            b += spec.perceptron_lr * y;
            updated = true;
          }
        }
        if (!updated) break;
      }
    }
  }
};

// Passive-aggressive (PA-I) with an augmented bias column: step size
// tau = min(C, loss / (||x||^2 + 1)); samples visited in natural order,
// stop after an epoch with no update.
class PassiveAggressiveModel : public LinearOvrModel {
 public:
  Algo algo() const override { return Algo::passive_aggressive; }

 protected:
  void fit_impl(const RowMatrix& x, const std::vector<int>& y_idx,
                const ClassifierSpec& spec) override {
    std::size_t k = classes_.size(), d = x.cols, n = x.rows;
    weights_ = RowMatrix(k, d);
    bias_.assign(k, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
      double* w = weights_.row(c);
      double& b = bias_[c];
      for (int epoch = 0; epoch < spec.pa_max_epochs; ++epoch) {
        bool updated = false;
        for (std::size_t i = 0; i < n; ++i) {
          double y = y_idx[i] == static_cast<int>(c) ? 1.0 : -1.0;
          const double* xi = x.row(i);
          double a = b, norm2 = 1.0;
          for (std::size_t j = 0; j < d; ++j) {
            a += w[j] * xi[j];
            norm2 += xi[j] * xi[j];
          }
          double loss = std::max(0.0, 1.0 - y * a);
          if (loss > 0.0) {
            double tau = std::min(spec.pa_c, loss / norm2);
            for (std::size_t j = 0; j < d; ++j) w[j] += tau * y * xi[j];
            b += tau * y;
            updated = true;
          }
        }
        if (!updated) break;
      }
    }
  }
};

// Hinge-loss SGD with L2 penalty on the weights only. Global step counter:
// eta_t = eta0 / sqrt(t), t = 1, 2, ... across all epochs; fixed epoch count.
class SgdModel : public LinearOvrModel {
 public:
  Algo algo() const override { return Algo::sgd; }

 protected:
  void fit_impl(const RowMatrix& x, const std::vector<int>& y_idx,
                const ClassifierSpec& spec) override {
    std::size_t k = classes_.size(), d = x.cols, n = x.rows;
    weights_ = RowMatrix(k, d);
    bias_.assign(k, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
      Rng rng = Rng::derive(spec.seed, c);
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      double* w = weights_.row(c);
      double& b = bias_[c];
      std::uint64_t t = 0;
      for (int epoch = 0; epoch < spec.sgd_epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t i : order) {
          ++t;
          double eta = spec.sgd_eta0 / std::sqrt(static_cast<double>(t));
          double y = y_idx[i] == static_cast<int>(c) ? 1.0 : -1.0;
          const double* xi = x.row(i);
          double a = b;
          for (std::size_t j = 0; j < d; ++j) a += w[j] * xi[j];
          double decay = 1.0 - eta * spec.sgd_alpha;
          if (y * a < 1.0) {
            for (std::size_t j = 0; j < d; ++j) w[j] = decay * w[j] + eta * y * xi[j];
            b += eta * y;
          } else {
            for (std::size_t j = 0; j < d; ++j) w[j] *= decay;
          }
        }
      }
    }
  }
};

// Ridge regression against +-1 targets, closed form with an unpenalized
// intercept; one factorization shared by all classes.
class RidgeModel : public LinearOvrModel {
 public:
  Algo algo() const override { return Algo::ridge; }

 protected:
  void fit_impl(const RowMatrix& x, const std::vector<int>& y_idx,
                const ClassifierSpec& spec) override {
    auto n = static_cast<Eigen::Index>(x.rows);
    auto d = static_cast<Eigen::Index>(x.cols);
    auto k = static_cast<Eigen::Index>(classes_.size());

    Eigen::MatrixXd xa(n, d + 1);
    xa.leftCols(d) = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                     Eigen::RowMajor>>(x.data.data(), n, d);
    xa.col(d).setOnes();

    Eigen::MatrixXd targets = Eigen::MatrixXd::Constant(n, k, -1.0);
    for (Eigen::Index i = 0; i < n; ++i)
      targets(i, y_idx[static_cast<std::size_t>(i)]) = 1.0;

    Eigen::MatrixXd gram = xa.transpose() * xa;
    for (Eigen::Index j = 0; j < d; ++j) gram(j, j) += spec.ridge_alpha;
    Eigen::MatrixXd beta = gram.ldlt().solve(xa.transpose() * targets);  // (d+1) x k

    weights_ = RowMatrix(static_cast<std::size_t>(k), static_cast<std::size_t>(d));
    bias_.resize(static_cast<std::size_t>(k));
    for (Eigen::Index c = 0; c < k; ++c) {
      for (Eigen::Index j = 0; j < d; ++j)
        weights_.at(static_cast<std::size_t>(c), static_cast<std::size_t>(j)) = beta(j, c);
      bias_[static_cast<std::size_t>(c)] = beta(d, c);
    }
  }
};

}  // namespace sesa
