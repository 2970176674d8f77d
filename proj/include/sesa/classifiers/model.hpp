#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sesa/binio.hpp"
#include "sesa/errors.hpp"
#include "sesa/matrix.hpp"
#include "sesa/random.hpp"

namespace sesa {

// Benchmark row order.
enum class Algo : std::uint8_t {
  ada_boost,
  bagging,
  decision_tree,
  gradient_boosting,
  knn,
  perceptron,
  passive_aggressive,
  random_forest,
  ridge,
  sgd,
  svm,
};

inline constexpr std::array<Algo, 11> kAllAlgos = {
    Algo::ada_boost,     Algo::bagging, Algo::decision_tree,
    Algo::gradient_boosting, Algo::knn, Algo::perceptron,
    Algo::passive_aggressive, Algo::random_forest, Algo::ridge,
    Algo::sgd,           Algo::svm,
};

inline const char* algo_display(Algo a) {
  switch (a) {
    case Algo::ada_boost: return "AdaBoost";
    case Algo::bagging: return "Bagging";
    case Algo::decision_tree: return "DecisionTree";
    case Algo::gradient_boosting: return "GradientBoosting";
    case Algo::knn: return "KNN";
    case Algo::perceptron: return "Perceptron";
    case Algo::passive_aggressive: return "PassiveAggressive";
    case Algo::random_forest: return "RandomForest";
    case Algo::ridge: return "Ridge";
    case Algo::sgd: return "SGD";
    case Algo::svm: return "SVM";
  }
  return "?";
}

inline Algo parse_algo(std::string name) {
  std::string key;
  for (char c : name)
    if (c != '_' && c != '-' && c != ' ')
      key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (Algo a : kAllAlgos) {
    std::string disp;
    for (char c : std::string(algo_display(a)))
      disp += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (key == disp) return a;
  }
  if (key == "tree") return Algo::decision_tree;
  if (key == "forest") return Algo::random_forest;
  if (key == "pa") return Algo::passive_aggressive;
  if (key == "gboost") return Algo::gradient_boosting;
  raise(errc::usage_error, "unknown classifier '" + name + "'");
}

// Every tunable in one place; defaults reproduce the benchmark configuration.
struct ClassifierSpec {
  Algo algo = Algo::svm;
  std::uint64_t seed = 0;

  int knn_k = 5;
  double perceptron_lr = 1.0;
  int perceptron_max_epochs = 1000;
  double pa_c = 1.0;
  int pa_max_epochs = 100;
  double sgd_alpha = 1e-4;
  double sgd_eta0 = 0.1;
  int sgd_epochs = 50;
  double ridge_alpha = 1.0;
  int bagging_trees = 10;
  int forest_trees = 100;
  int ada_rounds = 50;
  int gb_stages = 100;
  double gb_learning_rate = 0.1;
  int gb_depth = 3;
  double svm_c = 1.0;
  double svm_tol = 1e-3;
  int svm_max_passes = 1000;
};

namespace detail {

inline std::size_t argmax_tie_smallest(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

inline void check_finite(const RowMatrix& x) {
  for (double v : x.data)
    require(std::isfinite(v), errc::data_error, "non-finite value in data matrix");
}

struct LabelMap {
  std::vector<int> classes;  // sorted unique original labels
  std::vector<int> y_idx;    // labels remapped to 0..K-1
};

inline LabelMap map_labels(const std::vector<int>& y) {
  LabelMap m;
  m.classes = y;
  std::sort(m.classes.begin(), m.classes.end());
  m.classes.erase(std::unique(m.classes.begin(), m.classes.end()), m.classes.end());
  m.y_idx.reserve(y.size());
  for (int label : y) {
    auto it = std::lower_bound(m.classes.begin(), m.classes.end(), label);
    m.y_idx.push_back(static_cast<int>(it - m.classes.begin()));
  }
  return m;
}

}  // namespace detail

// Common base: label bookkeeping, input validation, trivial single-class
// shortcut, and the serialization envelope. Concrete models implement
// fit_impl (only called with >= 2 classes) and scores_one.
class Model {
 public:
  virtual ~Model() = default;
  virtual Algo algo() const = 0;

  std::size_t n_features() const { return n_features_; }
  const std::vector<int>& classes() const { return classes_; }
  std::size_t n_classes() const { return classes_.size(); }

  void fit(const RowMatrix& x, const std::vector<int>& y, const ClassifierSpec& spec) {
    require(x.rows > 0 && x.cols > 0, errc::fit_error, "cannot fit on empty data");
    require(y.size() == x.rows, errc::shape_error, "label count mismatch");
    detail::check_finite(x);
    auto mapped = detail::map_labels(y);
    classes_ = std::move(mapped.classes);
    n_features_ = x.cols;
    spec_ = spec;
    if (classes_.size() >= 2) fit_impl(x, mapped.y_idx, spec);
  }

  // Class indices (positions within classes()).
  std::vector<int> predict_idx(const RowMatrix& x) const {
    validate_predict(x);
    std::vector<int> out(x.rows);
    std::vector<double> scores(classes_.size());
    for (std::size_t r = 0; r < x.rows; ++r) out[r] = predict_one(x.row_span(r), scores);
    return out;
  }

  // Original labels.
  std::vector<int> predict(const RowMatrix& x) const {
    auto idx = predict_idx(x);
    std::vector<int> out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
      out[i] = classes_[static_cast<std::size_t>(idx[i])];
    return out;
  }

  RowMatrix decision_scores(const RowMatrix& x) const {
    validate_predict(x);
    RowMatrix out(x.rows, classes_.size());
    for (std::size_t r = 0; r < x.rows; ++r) {
      if (classes_.size() == 1) {
        out.at(r, 0) = 1.0;
      } else {
        scores_one(x.row_span(r), out.row_span(r));
      }
    }
    return out;
  }

  void save(ByteWriter& w) const {
    w.u8(static_cast<std::uint8_t>(algo()));
    w.u64(n_features_);
    w.u32(static_cast<std::uint32_t>(classes_.size()));
    for (int c : classes_) w.u32(static_cast<std::uint32_t>(c));
    if (classes_.size() >= 2) save_payload(w);
  }

  // Counterpart of save(); expects the algo byte to be consumed already.
  void load_body(ByteReader& r) {
    n_features_ = r.u64();
    auto k = r.u32();
    classes_.resize(k);
    for (auto& c : classes_) c = static_cast<int>(r.u32());
    require(!classes_.empty(), errc::parse_error, "model payload has no classes");
    if (classes_.size() >= 2) load_payload(r);
  }

 protected:
  virtual void fit_impl(const RowMatrix& x, const std::vector<int>& y_idx,
                        const ClassifierSpec& spec) = 0;
  virtual void scores_one(std::span<const double> x, std::span<double> out) const = 0;
  virtual void save_payload(ByteWriter& w) const = 0;
  virtual void load_payload(ByteReader& r) = 0;

  virtual int predict_one(std::span<const double> x, std::vector<double>& scratch) const {
    if (classes_.size() == 1) return 0;
    scores_one(x, scratch);
    return static_cast<int>(detail::argmax_tie_smallest(scratch));
  }

  void validate_predict(const RowMatrix& x) const {
    require(!classes_.empty(), errc::fit_error, "model was never fitted");
    require(x.cols == n_features_, errc::shape_error,
            "expected " + std::to_string(n_features_) + " features, got " +
                std::to_string(x.cols));
    detail::check_finite(x);
  }

  std::size_t n_features_ = 0;
  std::vector<int> classes_;
  ClassifierSpec spec_;
};

}  // namespace sesa
