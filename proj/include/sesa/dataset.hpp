#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "sesa/binio.hpp"
#include "sesa/errors.hpp"

namespace sesa {

enum class Split : std::uint8_t { train = 0, test = 1 };

// The four SESA classes; index order is the canonical class index used for
// tie-breaking throughout.
enum class Label : std::uint8_t { casual = 0, explosion = 1, gunshot = 2, siren = 3 };

inline constexpr int kNumClasses = 4;

inline const char* label_name(Label l) {
  switch (l) {
    case Label::casual: return "casual";
    case Label::explosion: return "explosion";
    case Label::gunshot: return "gunshot";
    case Label::siren: return "siren";
  }
  return "?";
}

inline const char* split_name(Split s) { return s == Split::train ? "train" : "test"; }

inline std::string to_lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline std::optional<Label> parse_label(const std::string& token) {
  std::string t = to_lower(token);
  if (t == "casual") return Label::casual;
  if (t == "explosion") return Label::explosion;
  if (t == "gunshot") return Label::gunshot;
  if (t == "siren") return Label::siren;
  return std::nullopt;
}

inline std::optional<Split> parse_split(const std::string& token) {
  std::string t = to_lower(token);
  if (t == "train") return Split::train;
  if (t == "test") return Split::test;
  return std::nullopt;
}

struct ManifestEntry {
  std::string path;  // relative to the dataset root, '/' separators
  Split split;
  Label label;
  std::string source_id;  // unique per file; the relative path
};

struct DatasetManifest {
  std::filesystem::path root;
  std::vector<ManifestEntry> entries;

  std::size_t count(Split s) const {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.split == s;
    return n;
  }
  std::size_t count(Split s, Label l) const {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.split == s && e.label == l;
    return n;
  }
};

namespace detail {

struct CsvRow {
  Split split;
  Label label;
};

// Manifest CSV: header "path,split,label", comma separated, paths relative
// to the dataset root.
inline std::map<std::string, CsvRow> parse_manifest_csv(const std::filesystem::path& csv) {
  std::ifstream in(csv);
  require(in.good(), errc::io_error, "cannot open " + csv.string());
  std::map<std::string, CsvRow> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      require(line == "path,split,label", errc::parse_error,
              "manifest header must be 'path,split,label', got '" + line + "'");
      first = false;
      continue;
    }
    std::istringstream ss(line);
    std::string path, split_tok, label_tok;
    require(std::getline(ss, path, ',') && std::getline(ss, split_tok, ',') &&
                std::getline(ss, label_tok, ','),
            errc::parse_error, "bad manifest row: " + line);
    auto split = parse_split(split_tok);
    require(split.has_value(), errc::parse_error, "unknown split '" + split_tok + "' for " + path);
    auto label = parse_label(label_tok);
    require(label.has_value(), errc::label_error, "unknown label '" + label_tok + "' for " + path);
    require(!rows.count(path), errc::parse_error, "duplicate manifest row for " + path);
    rows[path] = CsvRow{*split, *label};
  }
  require(!first, errc::parse_error, "empty manifest CSV " + csv.string());
  return rows;
}

inline bool is_wav(const std::filesystem::path& p) {
  return to_lower(p.extension().string()) == ".wav";
}

}  // namespace detail

// Build a manifest from a dataset root laid out as root/{train,test}/...
// Labels come from the file's immediate parent directory when it names a
// class, otherwise from a manifest.csv at the root; both present must agree.
inline DatasetManifest load_manifest(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  require(fs::is_directory(root), errc::layout_error, "not a directory: " + root.string());

  std::map<std::string, detail::CsvRow> csv;
  bool have_csv = fs::exists(root / "manifest.csv");
  if (have_csv) csv = detail::parse_manifest_csv(root / "manifest.csv");

  // locate train/ and test/ (case-insensitive) immediate subdirectories
  std::map<Split, fs::path> split_dirs;
  for (const auto& it : fs::directory_iterator(root)) {
    if (!it.is_directory()) continue;
    if (auto s = parse_split(it.path().filename().string())) split_dirs[*s] = it.path();
  }
  require(!split_dirs.empty() || have_csv, errc::layout_error,
          "no train/ or test/ subtree and no manifest.csv under " + root.string());

  DatasetManifest m;
  m.root = root;
  std::map<std::string, ManifestEntry> by_path;

  for (const auto& [split, dir] : split_dirs) {
    for (const auto& it : fs::recursive_directory_iterator(dir)) {
      if (!it.is_regular_file() || !detail::is_wav(it.path())) continue;
      std::string rel = fs::relative(it.path(), root).generic_string();
      std::optional<Label> dir_label =
          parse_label(it.path().parent_path().filename().string());
      std::optional<Label> csv_label;
      std::optional<Split> csv_split;
      if (auto f = csv.find(rel); f != csv.end()) {
        csv_label = f->second.label;
        csv_split = f->second.split;
      }
      require(dir_label || csv_label, errc::label_error,
              "cannot determine label for " + rel +
                  " (parent directory names no class, no manifest.csv row)");
      if (dir_label && csv_label)
        require(*dir_label == *csv_label, errc::label_error,
                "directory and manifest.csv disagree on label for " + rel);
      if (csv_split)
        require(*csv_split == split, errc::layout_error,
                "manifest.csv split disagrees with directory split for " + rel);
      ManifestEntry e;
      e.path = rel;
      e.split = split;
      e.label = dir_label ? *dir_label : *csv_label;
      e.source_id = rel;
      by_path[rel] = e;
    }
  }

  // CSV rows for files outside train/ or test/ subtrees
  for (const auto& [rel, row] : csv) {
    if (by_path.count(rel)) continue;
    require(fs::exists(root / rel), errc::layout_error,
            "manifest.csv row points at missing file " + rel);
    ManifestEntry e;
    e.path = rel;
    e.split = row.split;
    e.label = row.label;
    e.source_id = rel;
    by_path[rel] = e;
  }

  require(!by_path.empty(), errc::layout_error, "no WAV files under " + root.string());
  m.entries.reserve(by_path.size());
  for (auto& [_, e] : by_path) m.entries.push_back(std::move(e));
  std::sort(m.entries.begin(), m.entries.end(), [](const auto& a, const auto& b) {
    return std::tie(a.split, a.path) < std::tie(b.split, b.path);
  });
  return m;
}

inline void write_manifest_csv(const DatasetManifest& m, const std::filesystem::path& path) {
  std::string out = "path,split,label\n";
  for (const auto& e : m.entries) {
    out += e.path;
    out += ',';
    out += split_name(e.split);
    out += ',';
    out += label_name(e.label);
    out += '\n';
  }
  write_file_atomic(path, out);
}

}  // namespace sesa
