#pragma once

#include <cmath>
#include <deque>
#include <unordered_map>
#include <vector>

#include "sesa/classifiers/model.hpp"

namespace sesa {

// RBF kernel rows, precomputed when the full matrix is small enough and
// served from a bounded FIFO row cache otherwise. K(x, x) = 1 for RBF.
class RbfKernelCache {
 public:
  RbfKernelCache(const RowMatrix& x, double gamma, std::size_t max_bytes = 256u << 20)
      : x_(x), gamma_(gamma) {
    n_ = x.rows;
    if (n_ * n_ <= max_bytes / sizeof(double)) {
      full_.resize(n_ * n_);
      for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
          double v = std::exp(-gamma_ * squared_distance(x_.row_span(i), x_.row_span(j)));
          full_[i * n_ + j] = v;
          full_[j * n_ + i] = v;
        }
    } else {
      max_cached_rows_ = std::max<std::size_t>(4, max_bytes / (sizeof(double) * n_));
    }
  }

  const double* row(std::size_t i) {
    if (!full_.empty()) return full_.data() + i * n_;
    auto it = cache_.find(i);
    if (it != cache_.end()) return it->second.data();
    std::vector<double> r(n_);
    for (std::size_t j = 0; j < n_; ++j)
      r[j] = std::exp(-gamma_ * squared_distance(x_.row_span(i), x_.row_span(j)));
    if (order_.size() >= max_cached_rows_) {
      cache_.erase(order_.front());
      order_.pop_front();
    }
    order_.push_back(i);
    return cache_.emplace(i, std::move(r)).first->second.data();
  }

 private:
  const RowMatrix& x_;
  double gamma_;
  std::size_t n_;
  std::vector<double> full_;
  std::unordered_map<std::size_t, std::vector<double>> cache_;
  std::deque<std::size_t> order_;
  std::size_t max_cached_rows_ = 0;
};

struct SmoResult {
  std::vector<double> alphas;
  double b = 0.0;
  int passes = 0;        // full sweeps executed
  std::uint64_t updates = 0;
  bool converged = false;
};

// Sequential minimal optimization for the soft-margin RBF SVM. Deterministic
// second-index choice: argmax |E_i - E_j| (smallest j on ties); if that pair
// makes no progress, fall back to scanning j in index order. The error cache
// is maintained incrementally. Converges when a full sweep changes nothing.
inline SmoResult train_binary_smo(const RowMatrix& x, const std::vector<double>& y,
                                  double c, double gamma, double tol = 1e-3,
                                  int max_passes = 1000) {
  require(x.rows == y.size(), errc::shape_error, "label count mismatch");
  require(c > 0.0 && gamma > 0.0, errc::parameter_error, "C and gamma must be positive");
  std::size_t n = x.rows;
  SmoResult res;
  res.alphas.assign(n, 0.0);
  if (n < 2) {
    res.converged = true;
    return res;
  }
  RbfKernelCache kernel(x, gamma);
  std::vector<double> err(n);
  for (std::size_t i = 0; i < n; ++i) err[i] = -y[i];
  auto& a = res.alphas;
  double& b = res.b;

  auto try_step = [&](std::size_t i, std::size_t j) {
    if (i == j) return false;
    double lo, hi;
    if (y[i] != y[j]) {
      lo = std::max(0.0, a[j] - a[i]);
      hi = std::min(c, c + a[j] - a[i]);
    } else {
      lo = std::max(0.0, a[i] + a[j] - c);
      hi = std::min(c, a[i] + a[j]);
    }
    if (lo >= hi) return false;
    const double* ki = kernel.row(i);
    double kii = 1.0, kjj = 1.0, kij = ki[j];
    double eta = 2.0 * kij - kii - kjj;
    if (eta >= 0.0) return false;
    double aj = a[j] - y[j] * (err[i] - err[j]) / eta;
    aj = std::clamp(aj, lo, hi);
    if (std::abs(aj - a[j]) < 1e-12) return false;
    double ai = a[i] + y[i] * y[j] * (a[j] - aj);

    double dai = ai - a[i], daj = aj - a[j];
    double b1 = b - err[i] - y[i] * dai * kii - y[j] * daj * kij;
    double b2 = b - err[j] - y[i] * dai * kij - y[j] * daj * kjj;
    double nb;
    if (ai > 0.0 && ai < c) {
      nb = b1;
    } else if (aj > 0.0 && aj < c) {
      nb = b2;
    } else {
      nb = (b1 + b2) / 2.0;
    }
    double db = nb - b;
    const double* kj = kernel.row(j);
    ki = kernel.row(i);  // row(j) may have evicted row(i) in cache mode
    for (std::size_t t = 0; t < n; ++t)
      err[t] += y[i] * dai * ki[t] + y[j] * daj * kj[t] + db;
    a[i] = ai;
    a[j] = aj;
    b = nb;
    return true;
  };

  for (int pass = 0; pass < max_passes; ++pass) {
    res.passes = pass + 1;
    std::uint64_t changed = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double r = err[i] * y[i];
      bool violates = (r < -tol && a[i] < c) || (r > tol && a[i] > 0.0);
      if (!violates) continue;
      std::size_t best_j = i == 0 ? 1 : 0;
      double best_gap = -1.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        double gap = std::abs(err[i] - err[j]);
        if (gap > best_gap) {
          best_gap = gap;
          best_j = j;
        }
      }
      bool stepped = try_step(i, best_j);
      if (!stepped) {
        for (std::size_t j = 0; j < n && !stepped; ++j)
          if (j != i && j != best_j) stepped = try_step(i, j);
      }
      if (stepped) ++changed;
    }
    res.updates += changed;
    if (changed == 0) {
      res.converged = true;
      break;
    }
  }
  return res;
}

// Gamma as 1 / (d * var) with var the population variance of every matrix
// entry; degenerate data falls back to 1.
inline double rbf_gamma_scale(const RowMatrix& x) {
  double mean = 0.0;
  for (double v : x.data) mean += v;
  mean /= static_cast<double>(x.data.size());
  double var = 0.0;
  for (double v : x.data) var += (v - mean) * (v - mean);
  var /= static_cast<double>(x.data.size());
  return var > 0.0 ? 1.0 / (static_cast<double>(x.cols) * var) : 1.0;
}

// One-vs-rest soft-margin RBF SVM trained with SMO.
class SvmModel : public Model {
 public:
  Algo algo() const override { return Algo::svm; }
  double gamma() const { return gamma_; }

 protected:
  struct Machine {
    RowMatrix support;          // support vectors
    std::vector<double> coef;   // alpha_i * y_i
    double b = 0.0;
  };

  void fit_impl(const RowMatrix& x, const std::vector<int>& y_idx,
                const ClassifierSpec& spec) override {
    gamma_ = rbf_gamma_scale(x);
    machines_.clear();
    std::vector<double> y(x.rows);
    for (std::size_t c = 0; c < classes_.size(); ++c) {
      for (std::size_t i = 0; i < x.rows; ++i)
        y[i] = y_idx[i] == static_cast<int>(c) ? 1.0 : -1.0;
      SmoResult res = train_binary_smo(x, y, spec.svm_c, gamma_, spec.svm_tol,
                                       spec.svm_max_passes);
      Machine m;
      m.b = res.b;
      std::vector<std::size_t> sv;
      for (std::size_t i = 0; i < x.rows; ++i)
        if (res.alphas[i] > 0.0) sv.push_back(i);
      m.support = RowMatrix(sv.size(), x.cols);
      m.coef.resize(sv.size());
      for (std::size_t s = 0; s < sv.size(); ++s) {
        std::copy_n(x.row(sv[s]), x.cols, m.support.row(s));
        m.coef[s] = res.alphas[sv[s]] * y[sv[s]];
      }
      machines_.push_back(std::move(m));
    }
  }

  void scores_one(std::span<const double> x, std::span<double> out) const override {
    for (std::size_t c = 0; c < machines_.size(); ++c) {
      const Machine& m = machines_[c];
      double f = m.b;
      for (std::size_t s = 0; s < m.support.rows; ++s)
        f += m.coef[s] * std::exp(-gamma_ * squared_distance(m.support.row_span(s), x));
      out[c] = f;
    }
  }

  void save_payload(ByteWriter& w) const override {
    w.f64(gamma_);
    w.u32(static_cast<std::uint32_t>(machines_.size()));
    for (const auto& m : machines_) {
      w.f64(m.b);
      w.u64(m.support.rows);
      w.u64(m.support.cols);
      for (double v : m.support.data) w.f64(v);
      w.f64_vec(m.coef);
    }
  }

  void load_payload(ByteReader& r) override {
    gamma_ = r.f64();
    auto n = r.u32();
    machines_.clear();
    for (std::uint32_t i = 0; i < n; ++i) {
      Machine m;
      m.b = r.f64();
      auto rows = r.u64();
      auto cols = r.u64();
      m.support = RowMatrix(rows, cols);
      for (auto& v : m.support.data) v = r.f64();
      m.coef = r.f64_vec();
      require(m.coef.size() == rows && cols == n_features_, errc::parse_error,
              "inconsistent svm payload");
      machines_.push_back(std::move(m));
    }
    require(machines_.size() == classes_.size(), errc::parse_error,
            "machine count mismatch");
  }

  double gamma_ = 1.0;
  std::vector<Machine> machines_;
};

}  // namespace sesa
