#pragma once

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "sesa/binio.hpp"
#include "sesa/dataset.hpp"
#include "sesa/errors.hpp"
#include "sesa/features.hpp"

namespace sesa {

inline constexpr char kFeatureMagic[] = "SESAF1";

// ---- CSV -------------------------------------------------------------------

inline std::string feature_csv_header() {
  std::string h = "file_id,split,label,frame";
  char buf[8];
  for (int i = 1; i <= layout::total; ++i) {
    std::snprintf(buf, sizeof buf, ",f%03d", i);
    h += buf;
  }
  return h;
}

inline std::string to_csv(const FeatureMatrix& fm) {
  std::string out = feature_csv_header();
  out += '\n';
  char buf[32];
  for (std::size_t r = 0; r < fm.values.rows; ++r) {
    const auto& meta = fm.meta[r];
    const auto& file = fm.files[meta.file_index];
    out += file.id;
    out += ',';
    out += split_name(file.split);
    out += ',';
    out += label_name(file.label);
    out += ',';
    out += std::to_string(meta.frame_index);
    const double* row = fm.values.row(r);
    for (int j = 0; j < layout::total; ++j) {
      std::snprintf(buf, sizeof buf, ",%.17g", row[j]);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

namespace detail {
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  cells.push_back(cur);
  return cells;
}
}  // namespace detail

inline FeatureMatrix from_csv(const std::string& text) {
  FeatureMatrix fm;
  std::vector<double> values;
  std::size_t pos = 0;
  bool saw_header = false;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!saw_header) {
      require(line == feature_csv_header(), errc::parse_error, "unexpected feature CSV header");
      saw_header = true;
      continue;
    }
    auto cells = detail::split_csv_line(line);
    require(cells.size() == 4 + layout::total, errc::parse_error,
            "wrong cell count on line " + std::to_string(line_no));
    auto split = parse_split(cells[1]);
    auto label = parse_label(cells[2]);
    require(split && label, errc::parse_error,
            "bad split or label on line " + std::to_string(line_no));
    FileInfo info{cells[0], *split, *label};
    std::uint32_t file_index;
    if (!fm.files.empty() && fm.files.back().id == info.id) {
      file_index = static_cast<std::uint32_t>(fm.files.size() - 1);
    } else {
      for (const auto& f : fm.files)
        require(f.id != info.id, errc::parse_error, "non-contiguous file rows: " + info.id);
      file_index = static_cast<std::uint32_t>(fm.files.size());
      fm.files.push_back(info);
    }
    std::uint32_t frame_index = 0;
    try {
      frame_index = static_cast<std::uint32_t>(std::stoul(cells[3]));
    } catch (const std::exception&) {
      raise(errc::parse_error, "bad frame index on line " + std::to_string(line_no));
    }
    fm.meta.push_back({file_index, frame_index});
    for (int j = 0; j < layout::total; ++j) {
      const std::string& cell = cells[static_cast<std::size_t>(4 + j)];
      char* tail = nullptr;
      double v = std::strtod(cell.c_str(), &tail);
      require(tail == cell.c_str() + cell.size() && !cell.empty(), errc::parse_error,
              "bad numeric cell on line " + std::to_string(line_no));
      values.push_back(v);
    }
  }
  require(saw_header, errc::parse_error, "missing feature CSV header");
  fm.values = RowMatrix(fm.meta.size(), layout::total);
  std::copy(values.begin(), values.end(), fm.values.data.begin());
  return fm;
}

// ---- binary ----------------------------------------------------------------

inline std::vector<std::uint8_t> to_binary(const FeatureMatrix& fm) {
  ByteWriter w;
  w.bytes(reinterpret_cast<const std::uint8_t*>(kFeatureMagic), 6);
  w.u32(static_cast<std::uint32_t>(fm.files.size()));
  for (const auto& f : fm.files) {
    w.str(f.id);
    w.u8(static_cast<std::uint8_t>(f.split));
    w.u8(static_cast<std::uint8_t>(f.label));
  }
  w.u64(fm.values.rows);
  w.u32(static_cast<std::uint32_t>(fm.values.cols));
  for (std::size_t r = 0; r < fm.values.rows; ++r) {
    w.u32(fm.meta[r].file_index);
    w.u32(fm.meta[r].frame_index);
    const double* row = fm.values.row(r);
    for (std::size_t j = 0; j < fm.values.cols; ++j) w.f64(row[j]);
  }
  return std::move(w.data());
}

inline FeatureMatrix from_binary(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes.data(), bytes.size());
  for (int i = 0; i < 6; ++i)
    require(r.u8() == static_cast<std::uint8_t>(kFeatureMagic[i]), errc::parse_error,
            "bad feature file magic");
  FeatureMatrix fm;
  std::uint32_t n_files = r.u32();
  fm.files.reserve(n_files);
  for (std::uint32_t i = 0; i < n_files; ++i) {
    FileInfo f;
    f.id = r.str();
    auto split = r.u8();
    auto label = r.u8();
    require(split <= 1, errc::parse_error, "bad split tag");
    require(label < kNumClasses, errc::parse_error, "bad label tag");
    f.split = static_cast<Split>(split);
    f.label = static_cast<Label>(label);
    fm.files.push_back(std::move(f));
  }
  std::uint64_t n_rows = r.u64();
  std::uint32_t n_cols = r.u32();
  require(n_cols == layout::total, errc::parse_error, "unexpected feature width");
  fm.values = RowMatrix(n_rows, n_cols);
  fm.meta.reserve(n_rows);
  for (std::uint64_t row = 0; row < n_rows; ++row) {
    RowMeta m{r.u32(), r.u32()};
    require(m.file_index < fm.files.size(), errc::parse_error, "row references unknown file");
    fm.meta.push_back(m);
    double* dst = fm.values.row(row);
    for (std::uint32_t j = 0; j < n_cols; ++j) dst[j] = r.f64();
  }
  require(r.remaining() == 0, errc::parse_error, "trailing bytes in feature file");
  return fm;
}

inline void save_features(const FeatureMatrix& fm, const std::filesystem::path& path) {
  if (path.extension() == ".csv") {
    write_file_atomic(path, to_csv(fm));
  } else {
    write_file_atomic(path, to_binary(fm));
  }
}

inline FeatureMatrix load_features(const std::filesystem::path& path) {
  auto bytes = read_file_bytes(path);
  if (bytes.size() >= 6 && std::equal(bytes.begin(), bytes.begin() + 6,
                                      reinterpret_cast<const std::uint8_t*>(kFeatureMagic)))
    return from_binary(bytes);
  return from_csv(std::string(bytes.begin(), bytes.end()));
}

}  // namespace sesa
