#pragma once

#include <algorithm>
#include <vector>

#include "sesa/classifiers/model.hpp"

namespace sesa {

// Brute-force k-nearest-neighbour vote. Neighbours are ordered by
// (squared distance, training index); vote ties go to the smaller class.
class KnnModel : public Model {
 public:
  Algo algo() const override { return Algo::knn; }
  int k() const { return k_; }

 protected:
  void fit_impl(const RowMatrix& x, const std::vector<int>& y_idx,
                const ClassifierSpec& spec) override {
    require(spec.knn_k >= 1, errc::parameter_error, "k must be >= 1");
    train_ = x;
    y_ = y_idx;
    k_ = spec.knn_k;
  }

  void scores_one(std::span<const double> x, std::span<double> out) const override {
    std::fill(out.begin(), out.end(), 0.0);
    auto k = static_cast<std::size_t>(std::min<std::size_t>(
        static_cast<std::size_t>(k_), train_.rows));
    std::vector<std::pair<double, std::size_t>> dist(train_.rows);
    for (std::size_t i = 0; i < train_.rows; ++i)
      dist[i] = {squared_distance(train_.row_span(i), x), i};
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    for (std::size_t i = 0; i < k; ++i)
      out[static_cast<std::size_t>(y_[dist[i].second])] += 1.0;
  }

  void save_payload(ByteWriter& w) const override {
    w.u32(static_cast<std::uint32_t>(k_));
    w.u64(train_.rows);
    w.u64(train_.cols);
    for (double v : train_.data) w.f64(v);
    w.u64(y_.size());
    for (int v : y_) w.u32(static_cast<std::uint32_t>(v));
  }

  void load_payload(ByteReader& r) override {
    k_ = static_cast<int>(r.u32());
    auto rows = r.u64();
    auto cols = r.u64();
    train_ = RowMatrix(rows, cols);
    for (auto& v : train_.data) v = r.f64();
    auto ny = r.u64();
    y_.resize(ny);
    for (auto& v : y_) v = static_cast<int>(r.u32());
    require(ny == rows && cols == n_features_, errc::parse_error,
            "inconsistent knn payload");
  }

  RowMatrix train_;
  std::vector<int> y_;
  int k_ = 5;
};

}  // namespace sesa
