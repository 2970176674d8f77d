#pragma once

#include <memory>

#include "sesa/classifiers/ensemble.hpp"
#include "sesa/classifiers/knn.hpp"
#include "sesa/classifiers/linear.hpp"
#include "sesa/classifiers/model.hpp"
#include "sesa/classifiers/svm.hpp"
#include "sesa/classifiers/tree.hpp"

namespace sesa {

inline std::unique_ptr<Model> make_model(Algo algo) {
  switch (algo) {
    case Algo::ada_boost: return std::make_unique<AdaBoostModel>();
    case Algo::bagging: return std::make_unique<BaggingModel>();
    case Algo::decision_tree: return std::make_unique<DecisionTreeModel>();
    case Algo::gradient_boosting: return std::make_unique<GradientBoostingModel>();
    case Algo::knn: return std::make_unique<KnnModel>();
    case Algo::perceptron: return std::make_unique<PerceptronModel>();
    case Algo::passive_aggressive: return std::make_unique<PassiveAggressiveModel>();
    case Algo::random_forest: return std::make_unique<RandomForestModel>();
    case Algo::ridge: return std::make_unique<RidgeModel>();
    case Algo::sgd: return std::make_unique<SgdModel>();
    case Algo::svm: return std::make_unique<SvmModel>();
  }
  raise(errc::usage_error, "unknown classifier id");
}

inline std::unique_ptr<Model> train(const RowMatrix& x, const std::vector<int>& y,
                                    const ClassifierSpec& spec) {
  auto model = make_model(spec.algo);
  model->fit(x, y, spec);
  return model;
}

inline void save_model(const Model& m, ByteWriter& w) { m.save(w); }

inline std::unique_ptr<Model> load_model(ByteReader& r) {
  auto raw = r.u8();
  require(raw <= static_cast<std::uint8_t>(Algo::svm), errc::parse_error,
          "unknown classifier tag");
  auto model = make_model(static_cast<Algo>(raw));
  model->load_body(r);
  return model;
}

}  // namespace sesa
