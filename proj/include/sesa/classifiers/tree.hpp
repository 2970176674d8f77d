#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "sesa/classifiers/model.hpp"

namespace sesa {

// CART with Gini impurity. Candidate thresholds are midpoints of consecutive
// distinct sorted values; the scan goes feature-ascending, threshold-ascending
// and only a strictly larger gain replaces the incumbent, so ties resolve to
// the lowest feature, then the lowest threshold. Samples with x[f] <= thr go
// left. Supports sample weights (boosting) and per-split feature subsampling
// (forests).
class ClassificationTree {
 public:
  struct Params {
    int min_samples_split = 2;
    long max_depth = -1;          // -1: unlimited
    std::size_t max_features = 0; // 0: consider every feature
  };

  struct Node {
    bool leaf = true;
    int feature = -1;
    double threshold = 0.0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    std::vector<double> dist;  // leaf only: weighted class counts
  };

  void fit(const RowMatrix& x, const std::vector<int>& y_idx, std::size_t n_classes,
           std::vector<std::size_t> indices, const std::vector<double>* weights,
           const Params& params, Rng* rng) {
    x_ = &x;
    y_ = &y_idx;
    k_ = n_classes;
    weights_ = weights;
    params_ = params;
    rng_ = rng;
    nodes_.clear();
    build(std::move(indices), 0);
    x_ = nullptr;
    y_ = nullptr;
    weights_ = nullptr;
    rng_ = nullptr;
  }

  const Node& leaf_for(std::span<const double> x) const {
    std::uint32_t cur = 0;
    while (!nodes_[cur].leaf)
      cur = x[static_cast<std::size_t>(nodes_[cur].feature)] <= nodes_[cur].threshold
                ? nodes_[cur].left
                : nodes_[cur].right;
    return nodes_[cur];
  }

  int predict_class(std::span<const double> x) const {
    return static_cast<int>(detail::argmax_tie_smallest(leaf_for(x).dist));
  }

  const std::vector<Node>& nodes() const { return nodes_; }

  void serialize(ByteWriter& w) const {
    w.u32(static_cast<std::uint32_t>(nodes_.size()));
    for (const auto& n : nodes_) {
      w.u8(n.leaf ? 1 : 0);
      if (n.leaf) {
        w.f64_vec(n.dist);
      } else {
        w.u32(static_cast<std::uint32_t>(n.feature));
        w.f64(n.threshold);
        w.u32(n.left);
        w.u32(n.right);
      }
    }
  }

  static ClassificationTree deserialize(ByteReader& r) {
    ClassificationTree t;
    auto n = r.u32();
    t.nodes_.resize(n);
    for (auto& node : t.nodes_) {
      node.leaf = r.u8() != 0;
      if (node.leaf) {
        node.dist = r.f64_vec();
      } else {
        node.feature = static_cast<int>(r.u32());
        node.threshold = r.f64();
        node.left = r.u32();
        node.right = r.u32();
        require(node.left < n && node.right < n, errc::parse_error, "bad tree links");
      }
    }
    require(!t.nodes_.empty(), errc::parse_error, "empty tree payload");
    return t;
  }

 private:
  double weight_of(std::size_t i) const { return weights_ ? (*weights_)[i] : 1.0; }

  static double gini(const std::vector<double>& counts, double total) {
    double g = 1.0;
    for (double c : counts) {
      double p = c / total;
      g -= p * p;
    }
    return g;
  }

  std::uint32_t make_leaf(const std::vector<double>& counts) {
    Node n;
    n.leaf = true;
    n.dist = counts;
    nodes_.push_back(std::move(n));
    return static_cast<std::uint32_t>(nodes_.size() - 1);
  }

  std::vector<std::size_t> candidate_features() const {
    std::size_t d = x_->cols;
    std::vector<std::size_t> all(d);
    std::iota(all.begin(), all.end(), 0);
    if (params_.max_features == 0 || params_.max_features >= d || rng_ == nullptr)
      return all;
    for (std::size_t i = 0; i < params_.max_features; ++i) {
      std::size_t j = i + rng_->below(d - i);
      std::swap(all[i], all[j]);
    }
    all.resize(params_.max_features);
    std::sort(all.begin(), all.end());
    return all;
  }

  std::uint32_t build(std::vector<std::size_t> idx, long depth) {
    std::vector<double> counts(k_, 0.0);
    double total = 0.0;
    for (std::size_t i : idx) {
      counts[static_cast<std::size_t>((*y_)[i])] += weight_of(i);
      total += weight_of(i);
    }
    bool pure = false;
    for (double c : counts)
      if (c == total && total > 0.0) pure = true;
    if (pure || idx.size() < static_cast<std::size_t>(params_.min_samples_split) ||
        (params_.max_depth >= 0 && depth >= params_.max_depth) || total <= 0.0)
      return make_leaf(counts);

    double parent_gini = gini(counts, total);
    double best_gain = 0.0;
    int best_feature = -1;
    double best_threshold = 0.0;

    std::vector<std::pair<double, std::size_t>> sorted(idx.size());
    std::vector<double> left_counts(k_);
    for (std::size_t f : candidate_features()) {
      for (std::size_t i = 0; i < idx.size(); ++i)
        sorted[i] = {x_->at(idx[i], f), idx[i]};
      std::sort(sorted.begin(), sorted.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      std::fill(left_counts.begin(), left_counts.end(), 0.0);
      double left_total = 0.0;
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        left_counts[static_cast<std::size_t>((*y_)[sorted[i].second])] +=
            weight_of(sorted[i].second);
        left_total += weight_of(sorted[i].second);
        double lo = sorted[i].first, hi = sorted[i + 1].first;
        if (!(hi > lo)) continue;
        double thr = lo + (hi - lo) / 2.0;
        if (!(lo < thr && thr < hi)) continue;  // adjacent representables
        double right_total = total - left_total;
        if (left_total <= 0.0 || right_total <= 0.0) continue;
        double gl = 1.0, gr = 1.0;
        for (std::size_t c = 0; c < k_; ++c) {
          double pl = left_counts[c] / left_total;
          double pr = (counts[c] - left_counts[c]) / right_total;
          gl -= pl * pl;
          gr -= pr * pr;
        }
        double gain =
            parent_gini - (left_total / total) * gl - (right_total / total) * gr;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = thr;
        }
      }
    }
    if (best_feature < 0) return make_leaf(counts);

    std::vector<std::size_t> left_idx, right_idx;
    for (std::size_t i : idx)
      (x_->at(i, static_cast<std::size_t>(best_feature)) <= best_threshold ? left_idx
                                                                           : right_idx)
          .push_back(i);
    idx.clear();
    idx.shrink_to_fit();

    auto self = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    nodes_[self].leaf = false;
    nodes_[self].feature = best_feature;
    nodes_[self].threshold = best_threshold;
    std::uint32_t l = build(std::move(left_idx), depth + 1);
    std::uint32_t r = build(std::move(right_idx), depth + 1);
    nodes_[self].left = l;
    nodes_[self].right = r;
    return self;
  }

  const RowMatrix* x_ = nullptr;
  const std::vector<int>* y_ = nullptr;
  const std::vector<double>* weights_ = nullptr;
  Rng* rng_ = nullptr;
  std::size_t k_ = 0;
  Params params_;
  std::vector<Node> nodes_;
};

// Depth-limited regression tree splitting on variance reduction; used as the
// base learner of the gradient-boosting model, which rewrites leaf values.
class RegressionTree {
 public:
  struct Node {
    bool leaf = true;
    int feature = -1;
    double threshold = 0.0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    double value = 0.0;
  };

  void fit(const RowMatrix& x, const std::vector<double>& target, int max_depth) {
    x_ = &x;
    target_ = &target;
    max_depth_ = max_depth;
    nodes_.clear();
    std::vector<std::size_t> idx(x.rows);
    std::iota(idx.begin(), idx.end(), 0);
    build(std::move(idx), 0);
    x_ = nullptr;
    target_ = nullptr;
  }

  std::uint32_t leaf_id(std::span<const double> x) const {
    std::uint32_t cur = 0;
    while (!nodes_[cur].leaf)
      cur = x[static_cast<std::size_t>(nodes_[cur].feature)] <= nodes_[cur].threshold
                ? nodes_[cur].left
                : nodes_[cur].right;
    return cur;
  }

  double predict(std::span<const double> x) const { return nodes_[leaf_id(x)].value; }

  std::vector<Node>& nodes() { return nodes_; }
  const std::vector<Node>& nodes() const { return nodes_; }

  void serialize(ByteWriter& w) const {
    w.u32(static_cast<std::uint32_t>(nodes_.size()));
    for (const auto& n : nodes_) {
      w.u8(n.leaf ? 1 : 0);
      if (n.leaf) {
        w.f64(n.value);
      } else {
        w.u32(static_cast<std::uint32_t>(n.feature));
        w.f64(n.threshold);
        w.u32(n.left);
        w.u32(n.right);
      }
    }
  }

  static RegressionTree deserialize(ByteReader& r) {
    RegressionTree t;
    auto n = r.u32();
    t.nodes_.resize(n);
    for (auto& node : t.nodes_) {
      node.leaf = r.u8() != 0;
      if (node.leaf) {
        node.value = r.f64();
      } else {
        node.feature = static_cast<int>(r.u32());
        node.threshold = r.f64();
        node.left = r.u32();
        node.right = r.u32();
        require(node.left < n && node.right < n, errc::parse_error, "bad tree links");
      }
    }
    require(!t.nodes_.empty(), errc::parse_error, "empty tree payload");
    return t;
  }

 private:
  std::uint32_t make_leaf(double sum, std::size_t n) {
    Node node;
    node.leaf = true;
    node.value = n > 0 ? sum / static_cast<double>(n) : 0.0;
    nodes_.push_back(node);
    return static_cast<std::uint32_t>(nodes_.size() - 1);
  }

  std::uint32_t build(std::vector<std::size_t> idx, int depth) {
    double sum = 0.0;
    for (std::size_t i : idx) sum += (*target_)[i];
    auto n = static_cast<double>(idx.size());
    if (idx.size() < 2 || depth >= max_depth_) return make_leaf(sum, idx.size());

    double best_gain = 0.0;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::pair<double, std::size_t>> sorted(idx.size());
    for (std::size_t f = 0; f < x_->cols; ++f) {
      for (std::size_t i = 0; i < idx.size(); ++i)
        sorted[i] = {x_->at(idx[i], f), idx[i]};
      std::sort(sorted.begin(), sorted.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      double left_sum = 0.0;
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        left_sum += (*target_)[sorted[i].second];
        double lo = sorted[i].first, hi = sorted[i + 1].first;
        if (!(hi > lo)) continue;
        double thr = lo + (hi - lo) / 2.0;
        if (!(lo < thr && thr < hi)) continue;
        auto nl = static_cast<double>(i + 1);
        double nr = n - nl;
        double right_sum = sum - left_sum;
        double gain = left_sum * left_sum / nl + right_sum * right_sum / nr - sum * sum / n;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = thr;
        }
      }
    }
    if (best_feature < 0) return make_leaf(sum, idx.size());

    std::vector<std::size_t> left_idx, right_idx;
    for (std::size_t i : idx)
      (x_->at(i, static_cast<std::size_t>(best_feature)) <= best_threshold ? left_idx
                                                                           : right_idx)
          .push_back(i);
    auto self = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    nodes_[self].leaf = false;
    nodes_[self].feature = best_feature;
    nodes_[self].threshold = best_threshold;
    std::uint32_t l = build(std::move(left_idx), depth + 1);
    std::uint32_t r = build(std::move(right_idx), depth + 1);
    nodes_[self].left = l;
    nodes_[self].right = r;
    return self;
  }

  const RowMatrix* x_ = nullptr;
  const std::vector<double>* target_ = nullptr;
  int max_depth_ = 3;
  std::vector<Node> nodes_;
};

// Single unpruned CART classifier.
class DecisionTreeModel : public Model {
 public:
  Algo algo() const override { return Algo::decision_tree; }
  const ClassificationTree& tree() const { return tree_; }

 protected:
  void fit_impl(const RowMatrix& x, const std::vector<int>& y_idx,
                const ClassifierSpec&) override {
    std::vector<std::size_t> idx(x.rows);
    std::iota(idx.begin(), idx.end(), 0);
    tree_.fit(x, y_idx, classes_.size(), std::move(idx), nullptr, {}, nullptr);
  }

  void scores_one(std::span<const double> x, std::span<double> out) const override {
    const auto& dist = tree_.leaf_for(x).dist;
    std::copy(dist.begin(), dist.end(), out.begin());
  }

  void save_payload(ByteWriter& w) const override { tree_.serialize(w); }
  void load_payload(ByteReader& r) override { tree_ = ClassificationTree::deserialize(r); }

  ClassificationTree tree_;
};

}  // namespace sesa
