// Command-line interface: fetch/synth/extract/train/evaluate/predict/bench.
//
// Configuration precedence (low to high): built-in defaults, config file
// named by SER_BENCH_CONFIG, --config file, explicit flags.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <map>
#include <string>

#include "sesa/fetch.hpp"
#include "sesa/sesa.hpp"

namespace fs = std::filesystem;

namespace {

struct Cli {
  sesa::RunConfig cfg;
  std::string config_file;
  std::map<std::string, std::string> overrides;  // config-key -> raw value
  std::string wav_input;                         // predict positional
};

void finalize_config(Cli& cli) {
  if (!cli.config_file.empty()) {
    sesa::load_config_file(cli.cfg, cli.config_file);
  } else if (auto env = sesa::env_config_path()) {
    sesa::load_config_file(cli.cfg, *env);
  }
  for (const auto& [key, value] : cli.overrides)
    sesa::apply_config_entry(cli.cfg, key, value);
  sesa::validate_config(cli.cfg);
}

void require_flag(const std::string& value, const std::string& name) {
  sesa::require(!value.empty(), sesa::errc::usage_error,
                "missing required option " + name);
}

std::vector<sesa::Algo> selected_algos(const sesa::RunConfig& cfg) {
  if (cfg.classifier.empty())
    return {sesa::kAllAlgos.begin(), sesa::kAllAlgos.end()};
  return {sesa::parse_algo(cfg.classifier)};
}

sesa::ExtractorConfig extractor_config(const sesa::RunConfig& cfg) {
  sesa::ExtractorConfig ec;
  ec.frame_len = cfg.frame_len;
  ec.hop = cfg.hop;
  return ec;
}

sesa::BenchmarkOptions benchmark_options(const sesa::RunConfig& cfg) {
  sesa::BenchmarkOptions opt;
  opt.seed = cfg.seed;
  opt.n_folds = cfg.folds;
  opt.reps = cfg.reps;
  opt.scoring = cfg.scoring == "validation" ? sesa::Scoring::validation_fold
                                            : sesa::Scoring::test_split;
  opt.granularity = cfg.granularity == "file" ? sesa::Granularity::file
                                              : sesa::Granularity::frame;
  opt.pipeline.pca_energy = cfg.pca_energy;
  opt.pipeline.var_threshold = cfg.var_threshold;
  opt.algos = selected_algos(cfg);
  return opt;
}

void print_manifest_summary(const sesa::DatasetManifest& manifest) {
  std::printf("dataset at %s: %zu files\n", manifest.root.string().c_str(),
              manifest.entries.size());
  for (auto split : {sesa::Split::train, sesa::Split::test}) {
    std::printf("  %s:", sesa::split_name(split));
    for (int l = 0; l < sesa::kNumClasses; ++l)
      std::printf(" %s=%zu", sesa::label_name(static_cast<sesa::Label>(l)),
                  manifest.count(split, static_cast<sesa::Label>(l)));
    std::printf("\n");
  }
}

int cmd_fetch(Cli& cli) {
  finalize_config(cli);
  require_flag(cli.cfg.data, "--data");
  if (cli.cfg.dataset_sha256.empty())
    std::fprintf(stderr,
                 "warning: no dataset_sha256 configured; archive integrity will "
                 "not be verified\n");
  auto manifest =
      sesa::fetch_dataset(cli.cfg.dataset_url, cli.cfg.data, cli.cfg.dataset_sha256);
  print_manifest_summary(manifest);
  return 0;
}

int cmd_synth(Cli& cli) {
  finalize_config(cli);
  require_flag(cli.cfg.data, "--data");
  sesa::SynthSpec spec;
  spec.train_per_class = cli.cfg.train_per_class;
  spec.test_per_class = cli.cfg.test_per_class;
  auto manifest = sesa::synth_corpus(cli.cfg.data, cli.cfg.seed, spec);
  print_manifest_summary(manifest);
  return 0;
}

int cmd_extract(Cli& cli) {
  finalize_config(cli);
  require_flag(cli.cfg.data, "--data");
  require_flag(cli.cfg.out, "--out");
  auto manifest = sesa::load_manifest(cli.cfg.data);
  sesa::FeatureExtractor extractor(extractor_config(cli.cfg));
  auto report = sesa::extract_dataset(manifest, extractor,
                                      static_cast<unsigned>(cli.cfg.threads));
  for (const auto& f : report.failures)
    std::fprintf(stderr, "failed: %s: %s\n", f.path.c_str(), f.message.c_str());
  sesa::require(report.failures.size() * 10 <= manifest.entries.size(),
                sesa::errc::extraction_error,
                std::to_string(report.failures.size()) + " of " +
                    std::to_string(manifest.entries.size()) +
                    " files failed to decode (> 10%)");
  std::size_t counts[sesa::kNumClasses] = {};
  for (const auto& meta : report.features.meta)
    ++counts[static_cast<int>(report.features.files[meta.file_index].label)];
  std::printf("extracted %zu frames from %zu files\n", report.features.meta.size(),
              report.features.files.size());
  for (int l = 0; l < sesa::kNumClasses; ++l)
    std::printf("  %s: %zu frames\n", sesa::label_name(static_cast<sesa::Label>(l)),
                counts[l]);
  sesa::save_features(report.features, cli.cfg.out);
  std::printf("wrote %s\n", cli.cfg.out.c_str());
  return 0;
}

int cmd_train(Cli& cli) {
  finalize_config(cli);
  require_flag(cli.cfg.features, "--features");
  require_flag(cli.cfg.out, "--out");
  sesa::require(fs::exists(cli.cfg.features), sesa::errc::usage_error,
                "feature dump not found: " + cli.cfg.features);
  auto fm = sesa::load_features(cli.cfg.features);

  std::vector<std::size_t> train_rows;
  for (std::size_t r = 0; r < fm.meta.size(); ++r)
    if (fm.files[fm.meta[r].file_index].split == sesa::Split::train)
      train_rows.push_back(r);
  sesa::require(!train_rows.empty(), sesa::errc::data_error,
                "feature dump has no training rows");
  sesa::RowMatrix x(train_rows.size(), fm.values.cols);
  std::vector<int> y(train_rows.size());
  for (std::size_t i = 0; i < train_rows.size(); ++i) {
    std::copy_n(fm.values.row(train_rows[i]), fm.values.cols, x.row(i));
    y[i] = static_cast<int>(fm.files[fm.meta[train_rows[i]].file_index].label);
  }

  sesa::TrainedBundle bundle;
  bundle.seed = cli.cfg.seed;
  bundle.pipeline_config.pca_energy = cli.cfg.pca_energy;
  bundle.pipeline_config.var_threshold = cli.cfg.var_threshold;
  bundle.pipeline = sesa::fit_pipeline(x, bundle.pipeline_config);
  auto xt = bundle.pipeline.transform(x);

  sesa::ClassifierSpec spec;
  spec.algo = cli.cfg.classifier.empty() ? sesa::Algo::svm
                                         : sesa::parse_algo(cli.cfg.classifier);
  spec.seed = cli.cfg.seed;
  bundle.model = sesa::train(xt, y, spec);
  sesa::save_bundle(bundle, cli.cfg.out);
  std::printf("trained %s on %zu frames (%zu -> %zu dims), wrote %s\n",
              sesa::algo_display(spec.algo), xt.rows, bundle.pipeline.input_dim,
              bundle.pipeline.out_dim(), cli.cfg.out.c_str());
  return 0;
}

int cmd_predict(Cli& cli) {
  finalize_config(cli);
  require_flag(cli.cfg.model, "--model");
  sesa::require(!cli.wav_input.empty(), sesa::errc::usage_error,
                "missing WAV input path");
  auto bundle = sesa::load_bundle(cli.cfg.model);
  auto clip = sesa::decode_wav_file(cli.wav_input);
  sesa::FeatureExtractor extractor(extractor_config(cli.cfg));
  auto features = extractor.extract(clip);
  auto transformed = bundle.pipeline.transform(features);
  auto labels = bundle.model->predict(transformed);

  std::map<int, std::size_t> counts;
  for (int l : labels) ++counts[l];
  int best = counts.begin()->first;
  for (const auto& [label, n] : counts)
    if (n > counts[best]) best = label;
  auto name = [](int l) { return sesa::label_name(static_cast<sesa::Label>(l)); };

  if (cli.cfg.format == "json") {
    nlohmann::json j;
    j["file"] = cli.wav_input;
    j["label"] = name(best);
    j["frames"] = labels.size();
    for (const auto& [label, n] : counts) j["frame_counts"][name(label)] = n;
    std::string text = j.dump(2) + "\n";
    if (cli.cfg.out.empty()) {
      std::fputs(text.c_str(), stdout);
    } else {
      sesa::write_file_atomic(cli.cfg.out, text);
    }
  } else {
    std::printf("%s: %s (%zu frames)\n", cli.wav_input.c_str(), name(best),
                labels.size());
    for (const auto& [label, n] : counts)
      std::printf("  %s: %zu\n", name(label), n);
  }
  return 0;
}

int cmd_evaluate(Cli& cli, bool is_bench) {
  finalize_config(cli);
  if (is_bench && cli.cfg.reps < 5) cli.cfg.reps = 5;
  require_flag(cli.cfg.features, "--features");
  sesa::require(fs::exists(cli.cfg.features), sesa::errc::usage_error,
                "feature dump not found: " + cli.cfg.features);
  auto fm = sesa::load_features(cli.cfg.features);
  auto report = sesa::benchmark_all(fm, benchmark_options(cli.cfg));

  std::string markdown = sesa::render_markdown(report);
  std::string json = sesa::to_json(report).dump(2) + "\n";
  if (!cli.cfg.out.empty()) {
    sesa::write_file_atomic(fs::path(cli.cfg.out + ".md"), markdown);
    sesa::write_file_atomic(fs::path(cli.cfg.out + ".json"), json);
    std::printf("wrote %s.md and %s.json\n", cli.cfg.out.c_str(), cli.cfg.out.c_str());
  }
  std::fputs(cli.cfg.format == "json" ? json.c_str() : markdown.c_str(), stdout);
  return 0;
}

void register_common(CLI::App* cmd, Cli& cli) {
  cmd->add_option("--config", cli.config_file, "config file (key=value lines)");
  auto bind = [cmd, &cli](const std::string& flag, const std::string& key,
                          const std::string& help) {
    cmd->add_option_function<std::string>(
        flag, [&cli, key](const std::string& v) { cli.overrides[key] = v; }, help);
  };
  bind("--data", "data", "dataset root directory");
  bind("--out", "out", "output path (reports: path stem)");
  bind("--features", "features", "feature dump path");
  bind("--model", "model", "model file path");
  bind("--seed", "seed", "global random seed");
  bind("--classifier", "classifier", "single classifier to run (default: all)");
  bind("--pca-energy", "pca_energy", "explained-variance target in (0, 1]");
  bind("--var-threshold", "var_threshold", "variance filter threshold");
  bind("--granularity", "granularity", "reported accuracy granularity: frame|file");
  bind("--format", "format", "stdout format: md|json");
  bind("--folds", "folds", "number of cross-validation folds");
  bind("--reps", "reps", "timing repetitions per fold");
  bind("--scoring", "scoring", "scoring mode: test|validation");
  bind("--threads", "threads", "extraction threads (0 = auto)");
  bind("--train-per-class", "train_per_class", "synthetic training files per class");
  bind("--test-per-class", "test_per_class", "synthetic test files per class");
  bind("--url", "dataset_url", "dataset archive URL");
  bind("--checksum", "dataset_sha256", "expected SHA-256 of the archive");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sound event recognition benchmark"};
  app.require_subcommand(1);
  Cli cli;

  auto* fetch = app.add_subcommand("fetch", "download and extract the dataset");
  auto* synth = app.add_subcommand("synth", "generate the synthetic corpus");
  auto* extract = app.add_subcommand("extract", "extract features to a dump file");
  auto* train = app.add_subcommand("train", "fit pipeline + one classifier");
  auto* evaluate = app.add_subcommand("evaluate", "cross-validated benchmark");
  auto* predict = app.add_subcommand("predict", "classify one WAV file");
  auto* bench = app.add_subcommand("bench", "evaluate with timing reps >= 5");
  for (auto* cmd : {fetch, synth, extract, train, evaluate, predict, bench})
    register_common(cmd, cli);
  predict->add_option("wav", cli.wav_input, "input WAV file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (fetch->parsed()) return cmd_fetch(cli);
    if (synth->parsed()) return cmd_synth(cli);
    if (extract->parsed()) return cmd_extract(cli);
    if (train->parsed()) return cmd_train(cli);
    if (evaluate->parsed()) return cmd_evaluate(cli, false);
    if (predict->parsed()) return cmd_predict(cli);
    if (bench->parsed()) return cmd_evaluate(cli, true);
  } catch (const sesa::Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", sesa::errc_name(e.code()), e.what());
    return e.code() == sesa::errc::usage_error ? 2 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
