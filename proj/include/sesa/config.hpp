#pragma once

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>

#include "sesa/binio.hpp"
#include "sesa/errors.hpp"
#include "sesa/eval.hpp"

namespace sesa {

inline constexpr const char* kConfigEnvVar = "SER_BENCH_CONFIG";
inline constexpr const char* kDefaultDatasetUrl =
    "https://zenodo.org/record/3519845/files/SESA.zip";

// Everything a command needs, filled from defaults, then an optional config
// file, then command-line flags (later sources win).
struct RunConfig {
  std::string data;       // dataset root
  std::string features;   // feature dump path
  std::string model;      // model file path
  std::string out;        // report/output path stem
  std::string classifier; // empty: all
  std::string format = "md";        // stdout format: md | json
  std::string granularity = "frame";  // frame | file
  std::string scoring = "test";       // test | validation
  std::uint64_t seed = 0;
  int folds = 3;
  int reps = 1;
  int frame_len = 3200;
  int hop = 1600;
  int threads = 0;  // extraction worker threads, 0 = auto
  int train_per_class = 40;
  int test_per_class = 10;
  double pca_energy = 0.95;
  double var_threshold = 1e-8;
  std::string dataset_url = kDefaultDatasetUrl;
  std::string dataset_sha256;  // empty: not pinned; pass one to verify
};

namespace detail {

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    // stoull would wrap "-3" around instead of failing; insist on digits only
    require(!v.empty() && v.find_first_not_of("0123456789") == std::string::npos,
            errc::usage_error, "");
    std::size_t used = 0;
    auto value = std::stoull(v, &used);
    require(used == v.size(), errc::usage_error, "");
    return value;
  } catch (const std::exception&) {
    raise(errc::usage_error, "config key '" + key + "' needs an unsigned integer, got '" + v + "'");
  }
}

inline int parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    int value = std::stoi(v, &used);
    require(used == v.size(), errc::usage_error, "");
    return value;
  } catch (const std::exception&) {
    raise(errc::usage_error, "config key '" + key + "' needs an integer, got '" + v + "'");
  }
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double value = std::stod(v, &used);
    require(used == v.size(), errc::usage_error, "");
    return value;
  } catch (const std::exception&) {
    raise(errc::usage_error, "config key '" + key + "' needs a number, got '" + v + "'");
  }
}

}  // namespace detail

inline void apply_config_entry(RunConfig& cfg, const std::string& key,
                               const std::string& value) {
  if (key == "data") cfg.data = value;
  else if (key == "features") cfg.features = value;
  else if (key == "model") cfg.model = value;
  else if (key == "out") cfg.out = value;
  else if (key == "classifier") cfg.classifier = value;
  else if (key == "format") cfg.format = value;
  else if (key == "granularity") cfg.granularity = value;
  else if (key == "scoring") cfg.scoring = value;
  else if (key == "seed") cfg.seed = detail::parse_u64(key, value);
  else if (key == "folds") cfg.folds = detail::parse_int(key, value);
  else if (key == "reps") cfg.reps = detail::parse_int(key, value);
  else if (key == "frame_len") cfg.frame_len = detail::parse_int(key, value);
  else if (key == "hop") cfg.hop = detail::parse_int(key, value);
  else if (key == "threads") cfg.threads = detail::parse_int(key, value);
  else if (key == "train_per_class") cfg.train_per_class = detail::parse_int(key, value);
  else if (key == "test_per_class") cfg.test_per_class = detail::parse_int(key, value);
  else if (key == "pca_energy") cfg.pca_energy = detail::parse_double(key, value);
  else if (key == "var_threshold") cfg.var_threshold = detail::parse_double(key, value);
  else if (key == "dataset_url") cfg.dataset_url = value;
  else if (key == "dataset_sha256") cfg.dataset_sha256 = value;
  else raise(errc::usage_error, "unknown config key '" + key + "'");
}

inline void load_config_text(RunConfig& cfg, const std::string& text,
                             const std::string& origin) {
  std::size_t pos = 0, line_no = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    auto eq = line.find('=');
    require(eq != std::string::npos, errc::usage_error,
            origin + ":" + std::to_string(line_no) + ": expected key=value");
    apply_config_entry(cfg, detail::trim(line.substr(0, eq)),
                       detail::trim(line.substr(eq + 1)));
    if (end == text.size()) break;
  }
}

inline void load_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  auto bytes = read_file_bytes(path);
  load_config_text(cfg, std::string(bytes.begin(), bytes.end()), path.string());
}

// Validates the numeric knobs against their documented ranges.
inline void validate_config(const RunConfig& cfg) {
  require(cfg.pca_energy > 0.0 && cfg.pca_energy <= 1.0, errc::usage_error,
          "pca_energy must lie in (0, 1]");
  require(cfg.var_threshold >= 0.0, errc::usage_error, "var_threshold must be >= 0");
  require(cfg.folds >= 2, errc::usage_error, "folds must be >= 2");
  require(cfg.reps >= 1, errc::usage_error, "reps must be >= 1");
  require(cfg.frame_len > 0 && cfg.hop > 0 && cfg.hop <= cfg.frame_len, errc::usage_error,
          "frame/hop must be positive with hop <= frame");
  require(cfg.format == "md" || cfg.format == "json", errc::usage_error,
          "format must be md or json");
  require(cfg.granularity == "frame" || cfg.granularity == "file", errc::usage_error,
          "granularity must be frame or file");
  require(cfg.scoring == "test" || cfg.scoring == "validation", errc::usage_error,
          "scoring must be test or validation");
  require(cfg.threads >= 0, errc::usage_error, "threads must be >= 0");
}

// Config file named by the environment variable, if any.
inline std::optional<std::filesystem::path> env_config_path() {
  const char* v = std::getenv(kConfigEnvVar);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::filesystem::path(v);
}

}  // namespace sesa
