// Independent reference implementations and fixtures used to cross-check the
// library.  Everything here is deliberately written in the most direct way
// possible (quadratic DFT, linear scans, textbook formulas) so that agreement
// with the optimized library code is meaningful evidence of correctness.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "sesa/errors.hpp"
#include "sesa/matrix.hpp"
#include "sesa/random.hpp"

namespace oracle {

// Runs fn and reports the library error code it raised, if any.
template <typename Fn>
inline std::optional<sesa::errc> thrown_code(Fn&& fn) {
  try {
    fn();
  } catch (const sesa::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

inline constexpr double kPi = 3.14159265358979323846;

// O(n^2) discrete Fourier transform, straight from the definition.
inline std::vector<std::complex<double>> naive_dft(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t t = 0; t < n; ++t) {
      const double ang = -2.0 * kPi * static_cast<double>(k) *
                         static_cast<double>(t) / static_cast<double>(n);
      acc += x[t] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

// Orthonormal DCT-II straight from the definition.
inline std::vector<double> naive_dct2_ortho(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      acc += x[t] * std::cos(kPi / static_cast<double>(n) *
                             (static_cast<double>(t) + 0.5) *
                             static_cast<double>(k));
    }
    const double scale =
        (k == 0) ? std::sqrt(1.0 / static_cast<double>(n))
                 : std::sqrt(2.0 / static_cast<double>(n));
    out[k] = scale * acc;
  }
  return out;
}

// Brute-force k nearest neighbours: all pairwise distances, stable ordering by
// (distance, index).  Returns the indices of the k closest training rows.
inline std::vector<std::size_t> brute_force_knn(const sesa::RowMatrix& train,
                                                const double* query,
                                                std::size_t k) {
  std::vector<std::pair<double, std::size_t>> d(train.rows);
  for (std::size_t i = 0; i < train.rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < train.cols; ++j) {
      const double diff = train.at(i, j) - query[j];
      s += diff * diff;
    }
    d[i] = {s, i};
  }
  std::sort(d.begin(), d.end());
  k = std::min(k, d.size());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = d[i].second;
  return out;
}

// Majority vote with ties broken toward the smallest label.
inline int majority_label(const std::vector<int>& labels) {
  std::map<int, int> counts;
  for (int l : labels) ++counts[l];
  int best = labels.front();
  int best_count = -1;
  for (const auto& [label, count] : counts) {
    if (count > best_count) {
      best = label;
      best_count = count;
    }
  }
  return best;
}

// Counting accuracy oracle.
inline double counting_accuracy(const std::vector<int>& truth,
                                const std::vector<int>& pred) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    if (truth[i] == pred[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

// --- Small labelled datasets -------------------------------------------------

struct Dataset {
  sesa::RowMatrix x;
  std::vector<int> y;
};

// Two well-separated Gaussian blobs at (0,0) and (5,5).
inline Dataset blob2(std::size_t per_class = 20, std::uint64_t seed = 7) {
  sesa::Rng rng(seed);
  Dataset d;
  d.x = sesa::RowMatrix(2 * per_class, 2);
  d.y.resize(2 * per_class);
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const int cls = i < per_class ? 0 : 1;
    const double cx = cls == 0 ? 0.0 : 5.0;
    d.x.at(i, 0) = cx + 0.5 * rng.normal();
    d.x.at(i, 1) = cx + 0.5 * rng.normal();
    d.y[i] = cls;
  }
  return d;
}

// Four jittered clusters at the XOR corners, labelled by corner (4 classes).
inline Dataset xor4(std::size_t per_corner = 10, std::uint64_t seed = 11) {
  sesa::Rng rng(seed);
  const double corners[4][2] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  Dataset d;
  d.x = sesa::RowMatrix(4 * per_corner, 2);
  d.y.resize(4 * per_corner);
  for (std::size_t c = 0; c < 4; ++c) {
    for (std::size_t i = 0; i < per_corner; ++i) {
      const std::size_t r = c * per_corner + i;
      d.x.at(r, 0) = corners[c][0] + 0.05 * rng.normal();
      d.x.at(r, 1) = corners[c][1] + 0.05 * rng.normal();
      d.y[r] = static_cast<int>(c);
    }
  }
  return d;
}

// Degenerate single-class set.
inline Dataset const1(std::size_t n = 8) {
  Dataset d;
  d.x = sesa::RowMatrix(n, 3);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      d.x.at(i, j) = static_cast<double>(i + j);
  d.y.assign(n, 2);
  return d;
}

// --- Misc helpers ------------------------------------------------------------

inline std::vector<double> sine(double freq_hz, double sr, std::size_t n,
                                double amp = 0.5, double phase = 0.0) {
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i)
    s[i] = amp * std::sin(2.0 * kPi * freq_hz * static_cast<double>(i) / sr +
                          phase);
  return s;
}

// Unique scratch directory for a test file; removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    auto base = std::filesystem::temp_directory_path();
    std::random_device rd;
    for (int attempt = 0; attempt < 64; ++attempt) {
      auto candidate = base / (tag + "-" + std::to_string(rd()));
      std::error_code ec;
      if (std::filesystem::create_directories(candidate, ec)) {
        path_ = candidate;
        return;
      }
    }
    throw std::runtime_error("could not create temp dir for " + tag);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace oracle
