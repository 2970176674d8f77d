#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "sesa/binio.hpp"
#include "sesa/errors.hpp"
#include "sesa/matrix.hpp"
#include "sesa/timing.hpp"

namespace sesa {

using EigenRowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Eigen::Map<const EigenRowMajor> as_eigen(const RowMatrix& m) {
  return {m.data.data(), static_cast<Eigen::Index>(m.rows), static_cast<Eigen::Index>(m.cols)};
}

// ---- min-max scaling --------------------------------------------------------

// Per-column affine map of the training range onto [0, 1]. Unseen values
// extrapolate linearly (no clamping); constant columns map to 0.
struct MinMaxScaler {
  std::vector<double> mins;
  std::vector<double> ranges;

  static MinMaxScaler fit(const RowMatrix& x) {
    require(x.rows > 0 && x.cols > 0, errc::fit_error, "cannot fit scaler on empty data");
    MinMaxScaler s;
    s.mins.assign(x.cols, 0.0);
    s.ranges.assign(x.cols, 0.0);
    for (std::size_t j = 0; j < x.cols; ++j) {
      double lo = x.at(0, j), hi = x.at(0, j);
      for (std::size_t r = 1; r < x.rows; ++r) {
        lo = std::min(lo, x.at(r, j));
        hi = std::max(hi, x.at(r, j));
      }
      s.mins[j] = lo;
      s.ranges[j] = hi - lo;
    }
    return s;
  }

  void apply_row(std::span<const double> in, std::span<double> out) const {
    for (std::size_t j = 0; j < mins.size(); ++j)
      out[j] = ranges[j] > 0.0 ? (in[j] - mins[j]) / ranges[j] : 0.0;
  }

  RowMatrix apply(const RowMatrix& x) const {
    require(x.cols == mins.size(), errc::shape_error, "scaler width mismatch");
    RowMatrix out(x.rows, x.cols);
    for (std::size_t r = 0; r < x.rows; ++r) apply_row(x.row_span(r), out.row_span(r));
    return out;
  }
};

// ---- variance filtering -----------------------------------------------------

// Keeps the columns whose population variance exceeds the threshold.
struct VarianceFilter {
  double threshold = 1e-8;
  std::vector<std::uint64_t> kept;

  static VarianceFilter fit(const RowMatrix& x, double threshold) {
    require(threshold >= 0.0, errc::parameter_error, "variance threshold must be >= 0");
    require(x.rows > 0, errc::fit_error, "cannot fit filter on empty data");
    VarianceFilter f;
    f.threshold = threshold;
    auto n = static_cast<double>(x.rows);
    for (std::size_t j = 0; j < x.cols; ++j) {
      double mean = 0.0;
      for (std::size_t r = 0; r < x.rows; ++r) mean += x.at(r, j);
      mean /= n;
      double var = 0.0;
      for (std::size_t r = 0; r < x.rows; ++r) {
        double d = x.at(r, j) - mean;
        var += d * d;
      }
      var /= n;
      if (var > threshold) f.kept.push_back(j);
    }
    require(!f.kept.empty(), errc::degenerate_filter,
            "variance filter removed every feature");
    return f;
  }

  void apply_row(std::span<const double> in, std::span<double> out) const {
    for (std::size_t j = 0; j < kept.size(); ++j) out[j] = in[kept[j]];
  }

  RowMatrix apply(const RowMatrix& x) const {
    RowMatrix out(x.rows, kept.size());
    for (std::size_t r = 0; r < x.rows; ++r) apply_row(x.row_span(r), out.row_span(r));
    return out;
  }
};

// ---- PCA --------------------------------------------------------------------

// Eigendecomposition of the sample covariance; keeps the fewest components
// whose cumulative explained variance reaches `energy`.
struct PcaModel {
  double energy = 0.95;
  std::vector<double> mean;
  RowMatrix components;               // k x d, orthonormal rows
  std::vector<double> eigenvalues;    // all d, descending

  static PcaModel fit(const RowMatrix& x, double energy) {
    require(energy > 0.0 && energy <= 1.0, errc::parameter_error,
            "energy must lie in (0, 1]");
    require(x.rows >= 2, errc::degenerate_data, "need at least two rows to fit PCA");
    PcaModel p;
    p.energy = energy;
    auto d = static_cast<Eigen::Index>(x.cols);
    auto xm = as_eigen(x);
    Eigen::VectorXd mu = xm.colwise().mean();
    EigenRowMajor centered = xm.rowwise() - mu.transpose();
    Eigen::MatrixXd cov =
        (centered.transpose() * centered) / static_cast<double>(x.rows - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    require(solver.info() == Eigen::Success, errc::fit_error, "eigendecomposition failed");

    p.mean.assign(mu.data(), mu.data() + d);
    p.eigenvalues.resize(static_cast<std::size_t>(d));
    double total = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      double ev = std::max(solver.eigenvalues()(d - 1 - i), 0.0);
      p.eigenvalues[static_cast<std::size_t>(i)] = ev;
      total += ev;
    }
    require(total > 0.0, errc::degenerate_data, "data has zero total variance");

    std::size_t k = 0;
    double cum = 0.0;
    for (std::size_t i = 0; i < p.eigenvalues.size(); ++i) {
      cum += p.eigenvalues[i];
      if (cum / total >= energy - 1e-12) {
        k = i + 1;
        break;
      }
    }
    if (k == 0) k = p.eigenvalues.size();

    p.components = RowMatrix(k, static_cast<std::size_t>(d));
    for (std::size_t i = 0; i < k; ++i) {
      Eigen::VectorXd v = solver.eigenvectors().col(d - 1 - static_cast<Eigen::Index>(i));
      // Deterministic orientation: the largest-magnitude entry is positive.
      Eigen::Index arg = 0;
      v.cwiseAbs().maxCoeff(&arg);
      if (v(arg) < 0.0) v = -v;
      std::copy(v.data(), v.data() + d, p.components.row(i));
    }
    return p;
  }

  std::size_t out_dim() const { return components.rows; }

  void apply_row(std::span<const double> in, std::span<double> out) const {
    for (std::size_t i = 0; i < components.rows; ++i) {
      const double* w = components.row(i);
      double acc = 0.0;
      for (std::size_t j = 0; j < components.cols; ++j) acc += w[j] * (in[j] - mean[j]);
      out[i] = acc;
    }
  }

  RowMatrix apply(const RowMatrix& x) const {
    require(x.cols == components.cols, errc::shape_error, "pca width mismatch");
    RowMatrix out(x.rows, components.rows);
    for (std::size_t r = 0; r < x.rows; ++r) apply_row(x.row_span(r), out.row_span(r));
    return out;
  }

  double explained_ratio() const {
    double total = 0.0, kept_sum = 0.0;
    for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
      total += eigenvalues[i];
      if (i < components.rows) kept_sum += eigenvalues[i];
    }
    return total > 0.0 ? kept_sum / total : 0.0;
  }
};

// ---- fitted pipeline --------------------------------------------------------

struct PipelineConfig {
  double var_threshold = 1e-8;
  double pca_energy = 0.95;
};

struct FittedPipeline {
  std::size_t input_dim = 0;
  MinMaxScaler scaler;
  VarianceFilter filter;
  PcaModel pca;

  std::size_t out_dim() const { return pca.out_dim(); }

  std::vector<double> transform_row(std::span<const double> in) const {
    timing::assert_untimed();
    require(in.size() == input_dim, errc::shape_error, "pipeline input width mismatch");
    std::vector<double> scaled(input_dim);
    scaler.apply_row(in, scaled);
    std::vector<double> filtered(filter.kept.size());
    filter.apply_row(scaled, filtered);
    std::vector<double> out(pca.out_dim());
    pca.apply_row(filtered, out);
    return out;
  }

  RowMatrix transform(const RowMatrix& x) const {
    timing::assert_untimed();
    require(x.cols == input_dim, errc::shape_error, "pipeline input width mismatch");
    RowMatrix out(x.rows, pca.out_dim());
    std::vector<double> scaled(input_dim);
    std::vector<double> filtered(filter.kept.size());
    for (std::size_t r = 0; r < x.rows; ++r) {
      scaler.apply_row(x.row_span(r), scaled);
      filter.apply_row(scaled, filtered);
      pca.apply_row(filtered, out.row_span(r));
    }
    return out;
  }

  void serialize(ByteWriter& w) const {
    w.u64(input_dim);
    w.f64_vec(scaler.mins);
    w.f64_vec(scaler.ranges);
    w.f64(filter.threshold);
    w.u64(filter.kept.size());
    for (auto j : filter.kept) w.u64(j);
    w.f64(pca.energy);
    w.u64(pca.mean.size());
    for (double v : pca.mean) w.f64(v);
    w.u64(pca.components.rows);
    w.u64(pca.components.cols);
    for (double v : pca.components.data) w.f64(v);
    w.f64_vec(pca.eigenvalues);
  }

  static FittedPipeline deserialize(ByteReader& r) {
    FittedPipeline p;
    p.input_dim = r.u64();
    p.scaler.mins = r.f64_vec();
    p.scaler.ranges = r.f64_vec();
    p.filter.threshold = r.f64();
    auto n_kept = r.u64();
    p.filter.kept.resize(n_kept);
    for (auto& j : p.filter.kept) j = r.u64();
    p.pca.energy = r.f64();
    auto d = r.u64();
    p.pca.mean.resize(d);
    for (auto& v : p.pca.mean) v = r.f64();
    auto k = r.u64();
    auto cols = r.u64();
    p.pca.components = RowMatrix(k, cols);
    for (auto& v : p.pca.components.data) v = r.f64();
    p.pca.eigenvalues = r.f64_vec();
    require(p.scaler.mins.size() == p.input_dim && p.scaler.ranges.size() == p.input_dim,
            errc::parse_error, "inconsistent scaler payload");
    require(cols == n_kept && d == n_kept, errc::parse_error, "inconsistent pca payload");
    return p;
  }
};

inline FittedPipeline fit_pipeline(const RowMatrix& x, const PipelineConfig& cfg = {}) {
  FittedPipeline p;
  p.input_dim = x.cols;
  p.scaler = MinMaxScaler::fit(x);
  RowMatrix scaled = p.scaler.apply(x);
  p.filter = VarianceFilter::fit(scaled, cfg.var_threshold);
  RowMatrix filtered = p.filter.apply(scaled);
  p.pca = PcaModel::fit(filtered, cfg.pca_energy);
  return p;
}

}  // namespace sesa
