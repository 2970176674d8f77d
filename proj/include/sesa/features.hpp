#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "sesa/audio.hpp"
#include "sesa/dataset.hpp"
#include "sesa/dsp.hpp"
#include "sesa/errors.hpp"
#include "sesa/matrix.hpp"

namespace sesa {

// dB floor used wherever a logarithm is taken; silence must stay finite.
inline constexpr double kDbFloor = 1e-10;

// Fixed 149-column layout of one feature vector (0-based offsets).
namespace layout {
inline constexpr int chroma_cens = 0;    // 12
inline constexpr int chroma_cqt = 12;    // 12
inline constexpr int chroma_stft = 24;   // 12
inline constexpr int mel = 36;           // 20
inline constexpr int mfcc_slaney = 56;   // 20
inline constexpr int mfcc_htk = 76;      // 20
inline constexpr int mfcc_delta = 96;    // 20
inline constexpr int mfcc_delta2 = 116;  // 20
inline constexpr int rms = 136;          // 1
inline constexpr int centroid = 137;     // 1
inline constexpr int bandwidth = 138;    // 1
inline constexpr int contrast = 139;     // 7
inline constexpr int flatness = 146;     // 1
inline constexpr int rolloff = 147;      // 1
inline constexpr int zcr = 148;          // 1
inline constexpr int total = 149;

struct BlockInfo {
  const char* name;
  int offset;
  int size;
};

inline constexpr std::array<BlockInfo, 15> blocks = {{
    {"chroma_cens", chroma_cens, 12},
    {"chroma_cqt", chroma_cqt, 12},
    {"chroma_stft", chroma_stft, 12},
    {"mel", mel, 20},
    {"mfcc_slaney", mfcc_slaney, 20},
    {"mfcc_htk", mfcc_htk, 20},
    {"mfcc_delta", mfcc_delta, 20},
    {"mfcc_delta2", mfcc_delta2, 20},
    {"rms", rms, 1},
    {"centroid", centroid, 1},
    {"bandwidth", bandwidth, 1},
    {"contrast", contrast, 7},
    {"flatness", flatness, 1},
    {"rolloff", rolloff, 1},
    {"zcr", zcr, 1},
}};

inline const char* feature_name(int column) {
  for (const auto& b : blocks)
    if (column >= b.offset && column < b.offset + b.size) return b.name;
  return "?";
}
}  // namespace layout

// ---- per-frame scalar features --------------------------------------------

inline double rms(std::span<const double> frame) {
  double s = 0.0;
  for (double x : frame) s += x * x;
  return frame.empty() ? 0.0 : std::sqrt(s / static_cast<double>(frame.size()));
}

// Fraction of adjacent sample pairs whose sign differs; zero counts as
// non-negative.
inline double zcr(std::span<const double> frame) {
  if (frame.size() < 2) return 0.0;
  std::size_t count = 0;
  bool prev = frame[0] >= 0.0;
  for (std::size_t i = 1; i < frame.size(); ++i) {
    bool cur = frame[i] >= 0.0;
    count += cur != prev;
    prev = cur;
  }
  return static_cast<double>(count) / static_cast<double>(frame.size() - 1);
}

inline double spectral_centroid(std::span<const double> mags, std::span<const double> freqs) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < mags.size(); ++k) {
    num += freqs[k] * mags[k];
    den += mags[k];
  }
  return den > 0.0 ? num / den : 0.0;
}

inline double spectral_bandwidth(std::span<const double> mags, std::span<const double> freqs) {
  double den = 0.0;
  for (double m : mags) den += m;
  if (den <= 0.0) return 0.0;
  double c = spectral_centroid(mags, freqs);
  double num = 0.0;
  for (std::size_t k = 0; k < mags.size(); ++k) {
    double d = freqs[k] - c;
    num += mags[k] * d * d;
  }
  return std::sqrt(num / den);
}

// Geometric over arithmetic mean of the power spectrum, floored at kDbFloor.
inline double spectral_flatness(std::span<const double> mags) {
  if (mags.empty()) return 0.0;
  double log_sum = 0.0, sum = 0.0;
  for (double m : mags) {
    double p = std::max(m * m, kDbFloor);
    log_sum += std::log(p);
    sum += p;
  }
  double n = static_cast<double>(mags.size());
  return std::exp(log_sum / n) / (sum / n);
}

// Smallest bin frequency below which `fraction` of the spectral power lies.
inline double spectral_rolloff(std::span<const double> mags, std::span<const double> freqs,
                               double fraction = 0.85) {
  require(fraction > 0.0 && fraction <= 1.0, errc::parameter_error,
          "rolloff fraction must be in (0, 1]");
  double total = 0.0;
  for (double m : mags) total += m * m;
  if (total <= 0.0) return 0.0;
  double cum = 0.0;
  for (std::size_t k = 0; k < mags.size(); ++k) {
    cum += mags[k] * mags[k];
    if (cum >= fraction * total) return freqs[k];
  }
  return freqs.back();
}

inline constexpr std::array<double, 8> kContrastEdges = {0.0,    200.0,  400.0,  800.0,
                                                         1600.0, 3200.0, 6400.0, 8000.0};

// Per-band peak-minus-valley level in dB. Peak/valley are linear means of
// the top/bottom alpha-quantile magnitudes (at least one bin each).
inline std::array<double, 7> spectral_contrast(std::span<const double> mags,
                                               std::span<const double> freqs,
                                               double alpha = 0.02) {
  std::array<double, 7> out{};
  std::array<std::vector<double>, 7> bands;
  for (std::size_t k = 0; k < mags.size(); ++k) {
    double f = freqs[k];
    if (f > kContrastEdges.back()) continue;
    int b = 6;
    while (b > 0 && f < kContrastEdges[static_cast<std::size_t>(b)]) --b;
    bands[static_cast<std::size_t>(b)].push_back(mags[k]);
  }
  auto db = [](double x) { return 20.0 * std::log10(std::max(x, kDbFloor)); };
  for (std::size_t b = 0; b < 7; ++b) {
    auto& band = bands[b];
    if (band.empty()) {
      out[b] = 0.0;
      continue;
    }
    std::sort(band.begin(), band.end());
    auto cnt = std::max<std::size_t>(1, static_cast<std::size_t>(alpha * static_cast<double>(band.size())));
    double valley = std::accumulate(band.begin(), band.begin() + static_cast<std::ptrdiff_t>(cnt), 0.0) /
                    static_cast<double>(cnt);
    double peak = std::accumulate(band.end() - static_cast<std::ptrdiff_t>(cnt), band.end(), 0.0) /
                  static_cast<double>(cnt);
    out[b] = db(peak) - db(valley);
  }
  return out;
}

// ---- banded / cepstral features -------------------------------------------

// Filterbank applied to the power spectrum.
inline std::vector<double> melspectrogram_row(std::span<const double> mags,
                                              const MelFilterbank& fb) {
  std::vector<double> out(fb.weights.rows, 0.0);
  for (std::size_t m = 0; m < fb.weights.rows; ++m) {
    const double* w = fb.weights.row(m);
    double acc = 0.0;
    for (std::size_t k = 0; k < mags.size(); ++k) acc += w[k] * mags[k] * mags[k];
    out[m] = acc;
  }
  return out;
}

// Log-mel (10*log10, floored) through the orthonormal DCT-II.
inline std::vector<double> mfcc_from_mel(std::span<const double> mel_power, int n_coeffs = 20) {
  std::vector<double> db(mel_power.size());
  for (std::size_t i = 0; i < mel_power.size(); ++i)
    db[i] = 10.0 * std::log10(std::max(mel_power[i], kDbFloor));
  return dct2_ortho(db, n_coeffs);
}

// Regression-slope delta over +-4 frames, edges replicated; order 2 applies
// the operator twice.
inline RowMatrix delta(const RowMatrix& series, int order = 1) {
  require(order == 1 || order == 2, errc::parameter_error, "delta order must be 1 or 2");
  require(series.rows >= 1, errc::parameter_error, "empty series");
  const double denom = 60.0;  // 2 * sum_{n=1..4} n^2
  RowMatrix out(series.rows, series.cols);
  auto clamp_row = [&](std::ptrdiff_t t) {
    t = std::clamp<std::ptrdiff_t>(t, 0, static_cast<std::ptrdiff_t>(series.rows) - 1);
    return series.row(static_cast<std::size_t>(t));
  };
  for (std::size_t t = 0; t < series.rows; ++t) {
    double* dst = out.row(t);
    for (int n = 1; n <= 4; ++n) {
      const double* fwd = clamp_row(static_cast<std::ptrdiff_t>(t) + n);
      const double* bwd = clamp_row(static_cast<std::ptrdiff_t>(t) - n);
      for (std::size_t j = 0; j < series.cols; ++j) dst[j] += n * (fwd[j] - bwd[j]);
    }
    for (std::size_t j = 0; j < series.cols; ++j) dst[j] /= denom;
  }
  return order == 1 ? out : delta(out, 1);
}

// Pitch-class map for STFT bins: class of round(12*log2(f/440)) + 69, mod 12,
// with class 0 = C. Bin 0 (DC) is excluded.
inline std::vector<int> chroma_bin_classes(std::span<const double> freqs) {
  std::vector<int> cls(freqs.size(), -1);
  for (std::size_t k = 1; k < freqs.size(); ++k) {
    if (freqs[k] <= 0.0) continue;
    auto midi = static_cast<long>(std::lround(12.0 * std::log2(freqs[k] / 440.0))) + 69;
    cls[k] = static_cast<int>(((midi % 12) + 12) % 12);
  }
  return cls;
}

// Power per pitch class, max-normalized. All-zero frames stay zero.
inline std::array<double, 12> chroma_stft_row(std::span<const double> mags,
                                              std::span<const int> bin_class) {
  std::array<double, 12> out{};
  for (std::size_t k = 0; k < mags.size(); ++k) {
    if (bin_class[k] < 0) continue;
    out[static_cast<std::size_t>(bin_class[k])] += mags[k] * mags[k];
  }
  double mx = *std::max_element(out.begin(), out.end());
  if (mx > 0.0)
    for (auto& v : out) v /= mx;
  return out;
}

// Fold CQT magnitudes by pitch class (bin 0 = C), max-normalized.
inline std::array<double, 12> chroma_cqt_row(std::span<const double> cqt_mags) {
  std::array<double, 12> out{};
  for (std::size_t k = 0; k < cqt_mags.size(); ++k) out[k % 12] += cqt_mags[k];
  double mx = *std::max_element(out.begin(), out.end());
  if (mx > 0.0)
    for (auto& v : out) v /= mx;
  return out;
}

// CENS: L1-normalize, quantize against {0.05, 0.1, 0.2, 0.4}, smooth each
// channel with a 9-frame Hann kernel (edge-truncated, renormalized), then
// L2-normalize per frame.
inline RowMatrix chroma_cens(const RowMatrix& chroma) {
  constexpr int half = 4;
  std::array<double, 9> win{};
  for (int i = 0; i < 9; ++i)
    win[static_cast<std::size_t>(i)] = 0.5 * (1.0 - std::cos(kTwoPi * (i + 1) / 10.0));

  RowMatrix quant(chroma.rows, chroma.cols);
  for (std::size_t t = 0; t < chroma.rows; ++t) {
    const double* src = chroma.row(t);
    double l1 = 0.0;
    for (std::size_t j = 0; j < chroma.cols; ++j) l1 += std::abs(src[j]);
    double* dst = quant.row(t);
    for (std::size_t j = 0; j < chroma.cols; ++j) {
      double v = l1 > 0.0 ? src[j] / l1 : 0.0;
      double q = 0.0;
      for (double thr : {0.05, 0.1, 0.2, 0.4}) q += v > thr ? 0.25 : 0.0;
      dst[j] = q;
    }
  }

  RowMatrix out(chroma.rows, chroma.cols);
  for (std::size_t t = 0; t < chroma.rows; ++t) {
    double wsum = 0.0;
    double* dst = out.row(t);
    for (int o = -half; o <= half; ++o) {
      auto tt = static_cast<std::ptrdiff_t>(t) + o;
      if (tt < 0 || tt >= static_cast<std::ptrdiff_t>(chroma.rows)) continue;
      double w = win[static_cast<std::size_t>(o + half)];
      wsum += w;
      const double* src = quant.row(static_cast<std::size_t>(tt));
      for (std::size_t j = 0; j < chroma.cols; ++j) dst[j] += w * src[j];
    }
    double l2 = 0.0;
    for (std::size_t j = 0; j < chroma.cols; ++j) {
      dst[j] /= wsum;
      l2 += dst[j] * dst[j];
    }
    if (l2 > 0.0) {
      l2 = std::sqrt(l2);
      for (std::size_t j = 0; j < chroma.cols; ++j) dst[j] /= l2;
    }
  }
  return out;
}

// ---- assembly --------------------------------------------------------------

// Positional assembly of one 149-vector; callers may fill blocks in any
// order. finish() checks completeness and finiteness.
class FeatureVectorBuilder {
 public:
  FeatureVectorBuilder() { values_.fill(0.0); }

  FeatureVectorBuilder& set(int offset, std::span<const double> v) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      values_[static_cast<std::size_t>(offset) + i] = v[i];
      filled_[static_cast<std::size_t>(offset) + i] = true;
    }
    return *this;
  }
  FeatureVectorBuilder& set(int offset, double v) { return set(offset, std::span(&v, 1)); }

  std::array<double, layout::total> finish(int frame_index = -1) const {
    for (int i = 0; i < layout::total; ++i) {
      require(filled_[static_cast<std::size_t>(i)], errc::extraction_error,
              std::string("feature ") + layout::feature_name(i) + " never assembled");
      require(std::isfinite(values_[static_cast<std::size_t>(i)]), errc::extraction_error,
              std::string("non-finite value in ") + layout::feature_name(i) + " at frame " +
                  std::to_string(frame_index));
    }
    return values_;
  }

 private:
  std::array<double, layout::total> values_{};
  std::array<bool, layout::total> filled_{};
};

struct ExtractorConfig {
  int sample_rate = 16000;
  int frame_len = 3200;
  int hop = 1600;
  int fft_len = 4096;
  int n_mels = 20;
  int n_mfcc = 20;
  double cqt_fmin = 32.703;  // C1
  int cqt_bins = 84;
};

// Computes the full 149-column feature matrix for one clip. Construction
// precomputes filterbanks and kernels; extract() is const and thread-safe.
class FeatureExtractor {
 public:
  explicit FeatureExtractor(const ExtractorConfig& cfg = {})
      : cfg_(cfg),
        mel_slaney_(mel_filterbank(cfg.n_mels, 0.0, cfg.sample_rate / 2.0, MelScale::slaney,
                                   cfg.fft_len, cfg.sample_rate)),
        mel_htk_(mel_filterbank(cfg.n_mels, 0.0, cfg.sample_rate / 2.0, MelScale::htk,
                                cfg.fft_len, cfg.sample_rate)),
        cqt_kernels_(make_cqt_kernels(cfg.cqt_fmin, 12, cfg.cqt_bins, cfg.frame_len,
                                      cfg.sample_rate)) {}

  const ExtractorConfig& config() const { return cfg_; }

  RowMatrix extract(const AudioClip& raw) const {
    AudioClip clip = normalize_rate(raw, cfg_.sample_rate);
    FrameSet fs = frame_signal(clip, cfg_.frame_len, cfg_.hop);
    Spectrogram spec = stft(fs, cfg_.fft_len, Window::hann);
    RowMatrix cqt_mags = cqt(fs, cqt_kernels_);
    std::vector<int> bin_class = chroma_bin_classes(spec.bin_freqs);

    std::size_t n = fs.frames.rows;
    RowMatrix mfcc_sl(n, static_cast<std::size_t>(cfg_.n_mfcc));
    RowMatrix mfcc_htk(n, static_cast<std::size_t>(cfg_.n_mfcc));
    RowMatrix chroma_cqt_frames(n, 12);
    RowMatrix out(n, layout::total);

    for (std::size_t t = 0; t < n; ++t) {
      auto mel_sl = melspectrogram_row(spec.mags.row_span(t), mel_slaney_);
      auto mel_ht = melspectrogram_row(spec.mags.row_span(t), mel_htk_);
      auto c_sl = mfcc_from_mel(mel_sl, cfg_.n_mfcc);
      auto c_ht = mfcc_from_mel(mel_ht, cfg_.n_mfcc);
      std::copy(c_sl.begin(), c_sl.end(), mfcc_sl.row(t));
      std::copy(c_ht.begin(), c_ht.end(), mfcc_htk.row(t));
      auto ch_cqt = chroma_cqt_row(cqt_mags.row_span(t));
      std::copy(ch_cqt.begin(), ch_cqt.end(), chroma_cqt_frames.row(t));

      FeatureVectorBuilder b;
      b.set(layout::chroma_cqt, ch_cqt);
      b.set(layout::chroma_stft, chroma_stft_row(spec.mags.row_span(t), bin_class));
      b.set(layout::mel, mel_sl);
      b.set(layout::mfcc_slaney, c_sl);
      b.set(layout::mfcc_htk, c_ht);
      b.set(layout::rms, rms(fs.frames.row_span(t)));
      b.set(layout::centroid, spectral_centroid(spec.mags.row_span(t), spec.bin_freqs));
      b.set(layout::bandwidth, spectral_bandwidth(spec.mags.row_span(t), spec.bin_freqs));
      b.set(layout::contrast, spectral_contrast(spec.mags.row_span(t), spec.bin_freqs));
      b.set(layout::flatness, spectral_flatness(spec.mags.row_span(t)));
      b.set(layout::rolloff, spectral_rolloff(spec.mags.row_span(t), spec.bin_freqs));
      b.set(layout::zcr, zcr(fs.frames.row_span(t)));
      // temporal blocks are patched in below
      b.set(layout::chroma_cens, std::array<double, 12>{});
      b.set(layout::mfcc_delta, std::vector<double>(static_cast<std::size_t>(cfg_.n_mfcc), 0.0));
      b.set(layout::mfcc_delta2, std::vector<double>(static_cast<std::size_t>(cfg_.n_mfcc), 0.0));
      auto row = b.finish(static_cast<int>(t));
      std::copy(row.begin(), row.end(), out.row(t));
    }

    RowMatrix d1 = delta(mfcc_sl, 1);
    RowMatrix d2 = delta(mfcc_sl, 2);
    RowMatrix cens = chroma_cens(chroma_cqt_frames);
    for (std::size_t t = 0; t < n; ++t) {
      double* dst = out.row(t);
      for (int j = 0; j < 12; ++j) dst[layout::chroma_cens + j] = cens.at(t, static_cast<std::size_t>(j));
      for (int j = 0; j < cfg_.n_mfcc; ++j) {
        dst[layout::mfcc_delta + j] = d1.at(t, static_cast<std::size_t>(j));
        dst[layout::mfcc_delta2 + j] = d2.at(t, static_cast<std::size_t>(j));
        require(std::isfinite(dst[layout::mfcc_delta + j]) &&
                    std::isfinite(dst[layout::mfcc_delta2 + j]),
                errc::extraction_error, "non-finite delta at frame " + std::to_string(t));
      }
      for (int j = 0; j < 12; ++j)
        require(std::isfinite(dst[layout::chroma_cens + j]), errc::extraction_error,
                "non-finite cens at frame " + std::to_string(t));
    }
    return out;
  }

 private:
  ExtractorConfig cfg_;
  MelFilterbank mel_slaney_;
  MelFilterbank mel_htk_;
  CqtKernelSet cqt_kernels_;
};

// ---- dataset-level extraction ---------------------------------------------

struct FileInfo {
  std::string id;  // relative path within the dataset root
  Split split;
  Label label;
};

struct RowMeta {
  std::uint32_t file_index;
  std::uint32_t frame_index;
};

struct FeatureMatrix {
  std::vector<FileInfo> files;
  std::vector<RowMeta> meta;  // one per row of `values`
  RowMatrix values;           // n_rows x 149
};

struct ExtractFailure {
  std::string path;
  std::string message;
};

struct ExtractReport {
  FeatureMatrix features;
  std::vector<ExtractFailure> failures;
};

// Extract every manifest entry. Files are processed in parallel; outputs are
// assembled in manifest order so the result is deterministic.
inline ExtractReport extract_dataset(const DatasetManifest& manifest,
                                     const FeatureExtractor& extractor,
                                     unsigned n_threads = 0) {
  if (n_threads == 0) {
    n_threads = std::thread::hardware_concurrency();
    if (n_threads == 0) n_threads = 1;
  }
  struct PerFile {
    RowMatrix rows;
    std::string error;
  };
  std::vector<PerFile> results(manifest.entries.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= manifest.entries.size()) return;
      try {
        AudioClip clip = decode_wav_file(manifest.root / manifest.entries[i].path);
        results[i].rows = extractor.extract(clip);
      } catch (const std::exception& e) {
        results[i].error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  ExtractReport report;
  std::size_t total_rows = 0;
  for (const auto& r : results)
    if (r.error.empty()) total_rows += r.rows.rows;
  report.features.values = RowMatrix(total_rows, layout::total);
  report.features.meta.reserve(total_rows);
  std::size_t row = 0;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const auto& entry = manifest.entries[i];
    if (!results[i].error.empty()) {
      report.failures.push_back({entry.path, results[i].error});
      continue;
    }
    auto file_index = static_cast<std::uint32_t>(report.features.files.size());
    report.features.files.push_back({entry.path, entry.split, entry.label});
    for (std::size_t t = 0; t < results[i].rows.rows; ++t) {
      std::copy_n(results[i].rows.row(t), layout::total, report.features.values.row(row));
      report.features.meta.push_back({file_index, static_cast<std::uint32_t>(t)});
      ++row;
    }
  }
  return report;
}

}  // namespace sesa
