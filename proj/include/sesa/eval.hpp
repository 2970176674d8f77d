#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "sesa/classifiers.hpp"
#include "sesa/errors.hpp"
#include "sesa/features.hpp"
#include "sesa/pipeline.hpp"
#include "sesa/timing.hpp"

namespace sesa {

// ---- folds -------------------------------------------------------------------

// Stratified fold assignment over files: per class, indices are shuffled with
// a class-derived stream and dealt round-robin, so the plan is independent of
// both the other classes and the classifier under test.
struct FoldPlan {
  int n_folds = 0;
  std::vector<int> fold_of;  // one entry per input file
};

inline FoldPlan make_folds(const std::vector<FileInfo>& files, int n_folds,
                           std::uint64_t seed) {
  require(n_folds >= 2, errc::parameter_error, "need at least two folds");
  FoldPlan plan;
  plan.n_folds = n_folds;
  plan.fold_of.assign(files.size(), -1);
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < files.size(); ++i)
    by_class[static_cast<int>(files[i].label)].push_back(i);
  require(!by_class.empty(), errc::stratification_error, "no files to fold");
  for (auto& [label, indices] : by_class) {
    require(indices.size() >= static_cast<std::size_t>(n_folds), errc::stratification_error,
            std::string("class ") + label_name(static_cast<Label>(label)) + " has " +
                std::to_string(indices.size()) + " files, need >= " +
                std::to_string(n_folds));
    Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(label));
    rng.shuffle(indices);
    for (std::size_t i = 0; i < indices.size(); ++i)
      plan.fold_of[indices[i]] = static_cast<int>(i % static_cast<std::size_t>(n_folds));
  }
  return plan;
}

// ---- metrics -----------------------------------------------------------------

inline double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
  require(predicted.size() == truth.size(), errc::shape_error,
          "prediction/label count mismatch");
  require(!predicted.empty(), errc::shape_error, "empty prediction vector");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

struct PredictTiming {
  std::vector<int> predicted;   // original labels
  std::vector<double> rep_ms;   // one wall time per repetition
};

// One discarded warmup pass, then `reps` timed passes over the whole matrix.
// The timed region is instrumented so tests can prove no extraction or
// transform work ran inside it.
inline PredictTiming timed_predict(const Model& model, const RowMatrix& x, int reps = 1) {
  require(reps >= 1, errc::parameter_error, "need at least one repetition");
  PredictTiming out;
  out.predicted = model.predict(x);  // warmup; result identical by determinism
  out.rep_ms.reserve(static_cast<std::size_t>(reps));
  for (int rep = 0; rep < reps; ++rep) {
    timing::TimedRegion region;
    auto t0 = timing::Clock::now();
    auto preds = model.predict(x);
    auto t1 = timing::Clock::now();
    out.rep_ms.push_back(timing::ms_between(t0, t1));
    out.predicted = std::move(preds);
  }
  return out;
}

// ---- benchmark ---------------------------------------------------------------

enum class Scoring { test_split, validation_fold };
enum class Granularity { frame, file };

struct BenchmarkOptions {
  std::uint64_t seed = 0;
  int n_folds = 3;
  int reps = 1;
  Scoring scoring = Scoring::test_split;
  Granularity granularity = Granularity::frame;
  PipelineConfig pipeline;
  std::vector<Algo> algos{kAllAlgos.begin(), kAllAlgos.end()};
};

struct Aggregate {
  std::vector<double> folds;
  double mean = 0.0;
  double stdev = 0.0;  // population

  static Aggregate of(std::vector<double> values) {
    Aggregate a;
    a.folds = std::move(values);
    if (a.folds.empty()) return a;
    for (double v : a.folds) a.mean += v;
    a.mean /= static_cast<double>(a.folds.size());
    for (double v : a.folds) a.stdev += (v - a.mean) * (v - a.mean);
    a.stdev = std::sqrt(a.stdev / static_cast<double>(a.folds.size()));
    return a;
  }
};

struct ClassifierResult {
  Algo algo = Algo::svm;
  bool failed = false;
  std::string error;
  Aggregate time_ms;
  Aggregate frame_accuracy;  // fractions in [0, 1]
  Aggregate file_accuracy;
};

struct EvalReport {
  std::uint64_t seed = 0;
  int n_folds = 0;
  int reps = 0;
  Scoring scoring = Scoring::test_split;
  Granularity granularity = Granularity::frame;
  std::string environment;
  std::size_t train_files = 0;
  std::size_t eval_files = 0;
  std::vector<int> pca_dims;  // per fold
  std::vector<ClassifierResult> results;
};

inline std::string environment_note() {
  return "single-threaded timing; " +
         std::to_string(std::thread::hardware_concurrency()) +
         " hardware threads available";
}

namespace detail {

struct RowSubset {
  RowMatrix x;
  std::vector<int> labels;                      // original label values
  std::vector<std::vector<std::size_t>> by_file;  // row offsets per eval file
  std::vector<int> file_labels;
};

inline RowSubset gather_rows(const FeatureMatrix& fm, const std::vector<std::size_t>& files) {
  RowSubset out;
  std::vector<std::vector<std::size_t>> rows_of(fm.files.size());
  for (std::size_t r = 0; r < fm.meta.size(); ++r)
    rows_of[fm.meta[r].file_index].push_back(r);
  std::size_t total = 0;
  for (std::size_t f : files) total += rows_of[f].size();
  out.x = RowMatrix(total, fm.values.cols);
  out.labels.reserve(total);
  std::size_t dst = 0;
  for (std::size_t f : files) {
    std::vector<std::size_t> local;
    for (std::size_t r : rows_of[f]) {
      std::copy_n(fm.values.row(r), fm.values.cols, out.x.row(dst));
      out.labels.push_back(static_cast<int>(fm.files[f].label));
      local.push_back(dst);
      ++dst;
    }
    out.by_file.push_back(std::move(local));
    out.file_labels.push_back(static_cast<int>(fm.files[f].label));
  }
  return out;
}

inline double file_majority_accuracy(const std::vector<int>& predicted,
                                     const RowSubset& subset) {
  std::size_t hits = 0, counted = 0;
  for (std::size_t f = 0; f < subset.by_file.size(); ++f) {
    if (subset.by_file[f].empty()) continue;
    std::map<int, std::size_t> votes;
    for (std::size_t r : subset.by_file[f]) ++votes[predicted[r]];
    int best = votes.begin()->first;
    std::size_t best_count = votes.begin()->second;
    for (const auto& [label, count] : votes)
      if (count > best_count) {
        best = label;
        best_count = count;
      }
    hits += best == subset.file_labels[f];
    ++counted;
  }
  require(counted > 0, errc::shape_error, "no files to score");
  return static_cast<double>(hits) / static_cast<double>(counted);
}

}  // namespace detail

// Cross-validated benchmark over the requested classifiers. Each fold fits
// the preprocessing pipeline on its training files only; scoring uses the
// held-out test split by default or the validation fold when requested.
// A classifier that throws is reported as failed without aborting the run.
inline EvalReport benchmark_all(const FeatureMatrix& fm, const BenchmarkOptions& opt) {
  EvalReport report;
  report.seed = opt.seed;
  report.n_folds = opt.n_folds;
  report.reps = opt.reps;
  report.scoring = opt.scoring;
  report.granularity = opt.granularity;
  report.environment = environment_note();

  std::vector<std::size_t> train_files, test_files;
  for (std::size_t f = 0; f < fm.files.size(); ++f)
    (fm.files[f].split == Split::train ? train_files : test_files).push_back(f);
  require(!train_files.empty(), errc::data_error, "dataset has no training files");
  if (opt.scoring == Scoring::test_split)
    require(!test_files.empty(), errc::data_error, "dataset has no test files");
  report.train_files = train_files.size();
  report.eval_files =
      opt.scoring == Scoring::test_split ? test_files.size() : train_files.size();

  std::vector<FileInfo> train_infos;
  for (std::size_t f : train_files) train_infos.push_back(fm.files[f]);
  FoldPlan plan = make_folds(train_infos, opt.n_folds, opt.seed);

  // Per-fold preprocessed data, shared by every classifier.
  struct FoldData {
    RowMatrix train_x;
    std::vector<int> train_y;
    detail::RowSubset eval;
    RowMatrix eval_x;
    FittedPipeline pipeline;
  };
  std::vector<FoldData> folds;
  for (int f = 0; f < opt.n_folds; ++f) {
    std::vector<std::size_t> fit_files, val_files;
    for (std::size_t i = 0; i < train_files.size(); ++i)
      (plan.fold_of[i] == f ? val_files : fit_files).push_back(train_files[i]);
    require(!fit_files.empty(), errc::stratification_error, "empty training fold");
    auto train_subset = detail::gather_rows(fm, fit_files);
    FoldData fd;
    fd.pipeline = fit_pipeline(train_subset.x, opt.pipeline);
    fd.train_x = fd.pipeline.transform(train_subset.x);
    fd.train_y = std::move(train_subset.labels);
    fd.eval = detail::gather_rows(
        fm, opt.scoring == Scoring::test_split ? test_files : val_files);
    require(!fd.eval.labels.empty(), errc::data_error, "no rows to score");
    fd.eval_x = fd.pipeline.transform(fd.eval.x);
    report.pca_dims.push_back(static_cast<int>(fd.pipeline.out_dim()));
    folds.push_back(std::move(fd));
  }

  for (Algo algo : opt.algos) {
    ClassifierResult cr;
    cr.algo = algo;
    std::vector<double> times, frame_accs, file_accs;
    try {
      for (auto& fd : folds) {
        ClassifierSpec spec;
        spec.algo = algo;
        spec.seed = opt.seed;
        auto model = train(fd.train_x, fd.train_y, spec);
        auto timing = timed_predict(*model, fd.eval_x, opt.reps);
        double rep_mean = 0.0;
        for (double ms : timing.rep_ms) rep_mean += ms;
        times.push_back(rep_mean / static_cast<double>(timing.rep_ms.size()));
        frame_accs.push_back(accuracy(timing.predicted, fd.eval.labels));
        file_accs.push_back(detail::file_majority_accuracy(timing.predicted, fd.eval));
      }
      cr.time_ms = Aggregate::of(std::move(times));
      cr.frame_accuracy = Aggregate::of(std::move(frame_accs));
      cr.file_accuracy = Aggregate::of(std::move(file_accs));
    } catch (const std::exception& e) {
      cr.failed = true;
      cr.error = e.what();
    }
    report.results.push_back(std::move(cr));
  }
  return report;
}

// ---- rendering ----------------------------------------------------------------

inline std::string format_pm(double mean, double stdev) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f ± %.2f", mean, stdev);
  return buf;
}

inline std::string render_markdown(const EvalReport& report) {
  std::string out;
  out += "| Classifier | Time [ms] | Accuracy [%] |\n";
  out += "| --- | --- | --- |\n";
  for (const auto& r : report.results) {
    out += "| ";
    out += algo_display(r.algo);
    out += " | ";
    if (r.failed) {
      out += "failed | failed |\n";
      continue;
    }
    const Aggregate& acc = report.granularity == Granularity::file ? r.file_accuracy
                                                                   : r.frame_accuracy;
    out += format_pm(r.time_ms.mean, r.time_ms.stdev);
    out += " | ";
    out += format_pm(acc.mean * 100.0, acc.stdev * 100.0);
    out += " |\n";
  }
  for (const auto& r : report.results)
    if (r.failed) out += std::string("\n> ") + algo_display(r.algo) + " failed: " + r.error + "\n";
  return out;
}

inline nlohmann::json aggregate_to_json(const Aggregate& a) {
  return {{"folds", a.folds}, {"mean", a.mean}, {"std", a.stdev}};
}

inline Aggregate aggregate_from_json(const nlohmann::json& j) {
  Aggregate a = Aggregate::of(j.at("folds").get<std::vector<double>>());
  return a;
}

inline nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json j;
  j["schema"] = 1;
  j["seed"] = report.seed;
  j["n_folds"] = report.n_folds;
  j["reps"] = report.reps;
  j["scoring"] = report.scoring == Scoring::test_split ? "test" : "validation";
  j["granularity"] = report.granularity == Granularity::file ? "file" : "frame";
  j["environment"] = report.environment;
  j["dataset"] = {{"train_files", report.train_files},
                  {"eval_files", report.eval_files},
                  {"pca_dims", report.pca_dims}};
  j["classifiers"] = nlohmann::json::array();
  for (const auto& r : report.results) {
    nlohmann::json c;
    c["name"] = algo_display(r.algo);
    c["failed"] = r.failed;
    c["error"] = r.error;
    if (!r.failed) {
      c["time_ms"] = aggregate_to_json(r.time_ms);
      c["frame_accuracy"] = aggregate_to_json(r.frame_accuracy);
      c["file_accuracy"] = aggregate_to_json(r.file_accuracy);
    }
    j["classifiers"].push_back(std::move(c));
  }
  return j;
}

inline EvalReport from_json(const nlohmann::json& j) {
  require(j.at("schema").get<int>() == 1, errc::version_error,
          "unsupported report schema");
  EvalReport report;
  report.seed = j.at("seed").get<std::uint64_t>();
  report.n_folds = j.at("n_folds").get<int>();
  report.reps = j.at("reps").get<int>();
  report.scoring = j.at("scoring").get<std::string>() == "validation"
                       ? Scoring::validation_fold
                       : Scoring::test_split;
  report.granularity =
      j.at("granularity").get<std::string>() == "file" ? Granularity::file
                                                       : Granularity::frame;
  report.environment = j.value("environment", std::string{});
  report.train_files = j.at("dataset").at("train_files").get<std::size_t>();
  report.eval_files = j.at("dataset").at("eval_files").get<std::size_t>();
  report.pca_dims = j.at("dataset").at("pca_dims").get<std::vector<int>>();
  for (const auto& c : j.at("classifiers")) {
    ClassifierResult r;
    r.algo = parse_algo(c.at("name").get<std::string>());
    r.failed = c.at("failed").get<bool>();
    r.error = c.at("error").get<std::string>();
    if (!r.failed) {
      r.time_ms = aggregate_from_json(c.at("time_ms"));
      r.frame_accuracy = aggregate_from_json(c.at("frame_accuracy"));
      r.file_accuracy = aggregate_from_json(c.at("file_accuracy"));
    }
    report.results.push_back(std::move(r));
  }
  return report;
}

}  // namespace sesa
