#pragma once

#include <cmath>
#include <numeric>
#include <vector>

#include "sesa/classifiers/model.hpp"
#include "sesa/classifiers/tree.hpp"

namespace sesa {

namespace detail {
inline std::vector<std::size_t> bootstrap_indices(Rng& rng, std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = rng.below(n);
  return idx;
}
}  // namespace detail

// Common storage for tree-vote ensembles. Every tree casts one vote; ties go
// to the smaller class index.
class TreeVoteModel : public Model {
 public:
  std::size_t tree_count() const { return trees_.size(); }
  const std::vector<ClassificationTree>& trees() const { return trees_; }

 protected:
  void scores_one(std::span<const double> x, std::span<double> out) const override {
    std::fill(out.begin(), out.end(), 0.0);
    for (const auto& t : trees_)
      out[static_cast<std::size_t>(t.predict_class(x))] += 1.0;
  }

  void save_payload(ByteWriter& w) const override {
    w.u32(static_cast<std::uint32_t>(trees_.size()));
    for (const auto& t : trees_) t.serialize(w);
  }

  void load_payload(ByteReader& r) override {
    auto n = r.u32();
    trees_.clear();
    trees_.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) trees_.push_back(ClassificationTree::deserialize(r));
  }

  void fit_forest(const RowMatrix& x, const std::vector<int>& y_idx, int n_trees,
                  std::size_t max_features, std::uint64_t seed) {
    trees_.assign(static_cast<std::size_t>(n_trees), {});
    for (int t = 0; t < n_trees; ++t) {
      Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(t));
      auto idx = detail::bootstrap_indices(rng, x.rows);
      ClassificationTree::Params p;
      p.max_features = max_features;
      trees_[static_cast<std::size_t>(t)].fit(x, y_idx, classes_.size(), std::move(idx),
                                              nullptr, p, &rng);
    }
  }

  std::vector<ClassificationTree> trees_;
};

// Bootstrap aggregation of full CART trees.
class BaggingModel : public TreeVoteModel {
 public:
  Algo algo() const override { return Algo::bagging; }

 protected:
  void fit_impl(const RowMatrix& x, const std::vector<int>& y_idx,
                const ClassifierSpec& spec) override {
    require(spec.bagging_trees >= 1, errc::parameter_error, "need at least one tree");
    fit_forest(x, y_idx, spec.bagging_trees, 0, spec.seed);
  }
};

// Bagged trees that additionally draw floor(sqrt(d)) candidate features at
// every split.
class RandomForestModel : public TreeVoteModel {
 public:
  Algo algo() const override { return Algo::random_forest; }

 protected:
  void fit_impl(const RowMatrix& x, const std::vector<int>& y_idx,
                const ClassifierSpec& spec) override {
    require(spec.forest_trees >= 1, errc::parameter_error, "need at least one tree");
    auto m = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(x.cols)))));
    fit_forest(x, y_idx, spec.forest_trees, m, spec.seed);
  }
};

// SAMME boosting of depth-1 weighted stumps. A perfect stump is kept with
// unit weight and stops the loop; a stump no better than chance is discarded
// and stops the loop.
class AdaBoostModel : public Model {
 public:
  Algo algo() const override { return Algo::ada_boost; }
  const std::vector<double>& round_errors() const { return round_errors_; }
  std::size_t round_count() const { return stumps_.size(); }

 protected:
  void fit_impl(const RowMatrix& x, const std::vector<int>& y_idx,
                const ClassifierSpec& spec) override {
    require(spec.ada_rounds >= 1, errc::parameter_error, "need at least one round");
    std::size_t n = x.rows;
    auto k = static_cast<double>(classes_.size());
    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    ClassificationTree::Params stump_params;
    stump_params.max_depth = 1;

    for (int round = 0; round < spec.ada_rounds; ++round) {
      ClassificationTree stump;
      stump.fit(x, y_idx, classes_.size(), all, &w, stump_params, nullptr);
      double err = 0.0;
      std::vector<bool> miss(n);
      for (std::size_t i = 0; i < n; ++i) {
        miss[i] = stump.predict_class(x.row_span(i)) != y_idx[i];
        if (miss[i]) err += w[i];
      }
      round_errors_.push_back(err);
      if (err == 0.0) {
        stumps_.push_back(std::move(stump));
        alphas_.push_back(1.0);
        break;
      }
      if (err >= 1.0 - 1.0 / k) break;
      double alpha = std::log((1.0 - err) / err) + std::log(k - 1.0);
      double norm = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (miss[i]) w[i] *= std::exp(alpha);
        norm += w[i];
      }
      for (auto& wi : w) wi /= norm;
      stumps_.push_back(std::move(stump));
      alphas_.push_back(alpha);
    }
    if (stumps_.empty()) {
      // Degenerate data: fall back to the (weighted) majority class.
      ClassificationTree leaf;
      ClassificationTree::Params p;
      p.max_depth = 0;
      leaf.fit(x, y_idx, classes_.size(), all, &w, p, nullptr);
      stumps_.push_back(std::move(leaf));
      alphas_.push_back(1.0);
    }
  }

  void scores_one(std::span<const double> x, std::span<double> out) const override {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t r = 0; r < stumps_.size(); ++r)
      out[static_cast<std::size_t>(stumps_[r].predict_class(x))] += alphas_[r];
  }

  void save_payload(ByteWriter& w) const override {
    w.u32(static_cast<std::uint32_t>(stumps_.size()));
    for (std::size_t i = 0; i < stumps_.size(); ++i) {
      w.f64(alphas_[i]);
      stumps_[i].serialize(w);
    }
    w.f64_vec(round_errors_);
  }

  void load_payload(ByteReader& r) override {
    auto n = r.u32();
    stumps_.clear();
    alphas_.clear();
    for (std::uint32_t i = 0; i < n; ++i) {
      alphas_.push_back(r.f64());
      stumps_.push_back(ClassificationTree::deserialize(r));
    }
    round_errors_ = r.f64_vec();
  }

  std::vector<ClassificationTree> stumps_;
  std::vector<double> alphas_;
  std::vector<double> round_errors_;
};

// Multinomial-deviance gradient boosting: class scores start at the log
// priors; each stage fits one depth-limited regression tree per class to the
// softmax residuals and rewrites its leaves with the Newton step
// (K-1)/K * sum(r) / sum((y - r) * (1 - y + r)).
class GradientBoostingModel : public Model {
 public:
  Algo algo() const override { return Algo::gradient_boosting; }
  std::size_t stage_count() const { return trees_.size(); }

 protected:
  void fit_impl(const RowMatrix& x, const std::vector<int>& y_idx,
                const ClassifierSpec& spec) override {
    require(spec.gb_stages >= 1, errc::parameter_error, "need at least one stage");
    require(spec.gb_depth >= 1, errc::parameter_error, "tree depth must be >= 1");
    std::size_t n = x.rows, k = classes_.size();
    lr_ = spec.gb_learning_rate;

    init_.assign(k, 0.0);
    for (int yi : y_idx) init_[static_cast<std::size_t>(yi)] += 1.0;
    for (auto& v : init_) v = std::log(v / static_cast<double>(n));

    RowMatrix scores(n, k);
    for (std::size_t i = 0; i < n; ++i)
      std::copy(init_.begin(), init_.end(), scores.row(i));

    std::vector<double> prob(k), residual(n);
    RowMatrix probs(n, k);
    for (int stage = 0; stage < spec.gb_stages; ++stage) {
      for (std::size_t i = 0; i < n; ++i) {
        const double* s = scores.row(i);
        double mx = *std::max_element(s, s + k);
        double z = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
          prob[c] = std::exp(s[c] - mx);
          z += prob[c];
        }
        for (std::size_t c = 0; c < k; ++c) probs.at(i, c) = prob[c] / z;
      }
      trees_.emplace_back();
      auto& stage_trees = trees_.back();
      stage_trees.reserve(k);
      for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t i = 0; i < n; ++i) {
          double y = y_idx[i] == static_cast<int>(c) ? 1.0 : 0.0;
          residual[i] = y - probs.at(i, c);
        }
        RegressionTree tree;
        tree.fit(x, residual, spec.gb_depth);

        auto& nodes = tree.nodes();
        std::vector<double> num(nodes.size(), 0.0), den(nodes.size(), 0.0);
        std::vector<std::uint32_t> leaf(n);
        for (std::size_t i = 0; i < n; ++i) {
          leaf[i] = tree.leaf_id(x.row_span(i));
          double y = y_idx[i] == static_cast<int>(c) ? 1.0 : 0.0;
          num[leaf[i]] += residual[i];
          den[leaf[i]] += (y - residual[i]) * (1.0 - y + residual[i]);
        }
        double scale = (static_cast<double>(k) - 1.0) / static_cast<double>(k);
        for (std::size_t nd = 0; nd < nodes.size(); ++nd) {
          if (!nodes[nd].leaf) continue;
          nodes[nd].value =
              std::abs(den[nd]) < 1e-150 ? 0.0 : scale * num[nd] / den[nd];
        }
        for (std::size_t i = 0; i < n; ++i)
          scores.at(i, c) += lr_ * nodes[leaf[i]].value;
        stage_trees.push_back(std::move(tree));
      }
    }
  }

  void scores_one(std::span<const double> x, std::span<double> out) const override {
    std::copy(init_.begin(), init_.end(), out.begin());
    for (const auto& stage : trees_)
      for (std::size_t c = 0; c < stage.size(); ++c) out[c] += lr_ * stage[c].predict(x);
  }

  void save_payload(ByteWriter& w) const override {
    w.f64(lr_);
    w.f64_vec(init_);
    w.u32(static_cast<std::uint32_t>(trees_.size()));
    for (const auto& stage : trees_) {
      w.u32(static_cast<std::uint32_t>(stage.size()));
      for (const auto& t : stage) t.serialize(w);
    }
  }

  void load_payload(ByteReader& r) override {
    lr_ = r.f64();
    init_ = r.f64_vec();
    auto n_stages = r.u32();
    trees_.clear();
    for (std::uint32_t s = 0; s < n_stages; ++s) {
      auto per = r.u32();
      require(per == init_.size(), errc::parse_error, "inconsistent boosting payload");
      std::vector<RegressionTree> stage;
      stage.reserve(per);
      for (std::uint32_t c = 0; c < per; ++c) stage.push_back(RegressionTree::deserialize(r));
      trees_.push_back(std::move(stage));
    }
  }

  double lr_ = 0.1;
  std::vector<double> init_;
  std::vector<std::vector<RegressionTree>> trees_;
};

}  // namespace sesa
