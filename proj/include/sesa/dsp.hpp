#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "sesa/audio.hpp"
#include "sesa/errors.hpp"
#include "sesa/fft.hpp"
#include "sesa/matrix.hpp"

namespace sesa {

inline constexpr double kTwoPi = 6.283185307179586;

enum class Window { hann, rect };

// Periodic Hann, the analysis window used throughout.
inline std::vector<double> hann_periodic(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) w[i] = 0.5 * (1.0 - std::cos(kTwoPi * i / n));
  return w;
}

struct Spectrogram {
  RowMatrix mags;                 // n_frames x (fft_len/2 + 1), non-negative
  std::vector<double> bin_freqs;  // Hz per bin
  int fft_len = 0;
  int sample_rate = 0;

  std::size_t n_bins() const { return bin_freqs.size(); }
};

// Magnitude STFT over an already-framed signal. Each frame is windowed,
// zero-padded to fft_len and transformed; bins 0..fft_len/2 are kept.
inline Spectrogram stft(const FrameSet& fs, int fft_len = 4096, Window window = Window::hann) {
  require(fft_len >= fs.frame_len, errc::parameter_error, "fft_len must be >= frame_len");
  FftPlan plan(static_cast<std::size_t>(fft_len));
  std::vector<double> win = window == Window::hann ? hann_periodic(fs.frame_len)
                                                   : std::vector<double>(fs.frame_len, 1.0);
  std::size_t n_bins = static_cast<std::size_t>(fft_len) / 2 + 1;
  Spectrogram spec;
  spec.fft_len = fft_len;
  spec.sample_rate = fs.sample_rate;
  spec.bin_freqs.resize(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k)
    spec.bin_freqs[k] = static_cast<double>(k) * fs.sample_rate / fft_len;
  spec.mags = RowMatrix(fs.frames.rows, n_bins);

  std::vector<std::complex<double>> buf(static_cast<std::size_t>(fft_len));
  std::vector<double> frame(static_cast<std::size_t>(fs.frame_len));
  for (std::size_t t = 0; t < fs.frames.rows; ++t) {
    const double* src = fs.frames.row(t);
    for (int i = 0; i < fs.frame_len; ++i) frame[static_cast<std::size_t>(i)] = src[i] * win[i];
    std::fill(buf.begin(), buf.end(), std::complex<double>{});
    for (int i = 0; i < fs.frame_len; ++i) buf[static_cast<std::size_t>(i)] = frame[i];
    plan.forward(buf);
    double* out = spec.mags.row(t);
    for (std::size_t k = 0; k < n_bins; ++k) out[k] = std::abs(buf[k]);
  }
  return spec;
}

// ---- mel scales ----------------------------------------------------------

enum class MelScale { slaney, htk };

inline double hz_to_mel(double f, MelScale scale) {
  require(f >= 0.0, errc::domain_error, "negative frequency");
  if (scale == MelScale::htk) return 2595.0 * std::log10(1.0 + f / 700.0);
  // Slaney: linear below 1 kHz, logarithmic above
  constexpr double lin_step = 200.0 / 3.0;
  constexpr double log_step = 0.06875177742094912;  // ln(6.4)/27
  if (f < 1000.0) return f / lin_step;
  return 15.0 + std::log(f / 1000.0) / log_step;
}

inline double mel_to_hz(double mel, MelScale scale) {
  require(mel >= 0.0, errc::domain_error, "negative mel value");
  if (scale == MelScale::htk) return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
  constexpr double lin_step = 200.0 / 3.0;
  constexpr double log_step = 0.06875177742094912;
  if (mel < 15.0) return mel * lin_step;
  return 1000.0 * std::exp(log_step * (mel - 15.0));
}

struct MelFilterbank {
  RowMatrix weights;  // n_mels x n_bins
  MelScale scale;
  double fmin = 0.0, fmax = 0.0;
  std::vector<double> break_freqs;  // n_mels + 2 triangle break points, Hz

  // continuous triangle for filter m, unit peak (before any normalization)
  double triangle(std::size_t m, double f) const {
    double lo = break_freqs[m], mid = break_freqs[m + 1], hi = break_freqs[m + 2];
    if (f <= lo || f >= hi) return 0.0;
    return f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
  }
};

// Triangular filters with break points equally spaced on the chosen mel
// scale. Slaney rows are area-normalized by 2/(hi-lo); HTK rows keep unit
// peaks.
inline MelFilterbank mel_filterbank(int n_mels, double fmin, double fmax, MelScale scale,
                                    int fft_len, int sample_rate) {
  require(n_mels >= 1, errc::parameter_error, "n_mels must be >= 1");
  require(fmin >= 0.0 && fmin < fmax && fmax <= sample_rate / 2.0, errc::parameter_error,
          "need 0 <= fmin < fmax <= Nyquist");
  MelFilterbank fb;
  fb.scale = scale;
  fb.fmin = fmin;
  fb.fmax = fmax;
  double mel_lo = hz_to_mel(fmin, scale);
  double mel_hi = hz_to_mel(fmax, scale);
  fb.break_freqs.resize(static_cast<std::size_t>(n_mels) + 2);
  for (int i = 0; i < n_mels + 2; ++i)
    fb.break_freqs[static_cast<std::size_t>(i)] =
        mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1), scale);

  std::size_t n_bins = static_cast<std::size_t>(fft_len) / 2 + 1;
  fb.weights = RowMatrix(static_cast<std::size_t>(n_mels), n_bins);
  for (std::size_t m = 0; m < static_cast<std::size_t>(n_mels); ++m) {
    double norm = scale == MelScale::slaney
                      ? 2.0 / (fb.break_freqs[m + 2] - fb.break_freqs[m])
                      : 1.0;
    for (std::size_t k = 0; k < n_bins; ++k) {
      double f = static_cast<double>(k) * sample_rate / fft_len;
      fb.weights.at(m, k) = norm * fb.triangle(m, f);
    }
  }
  return fb;
}

// ---- DCT -----------------------------------------------------------------

// Orthonormal DCT-II: c_k = s_k * sum_j v_j cos(pi k (2j+1) / (2n)),
// s_0 = sqrt(1/n), s_k = sqrt(2/n).
inline std::vector<double> dct2_ortho(std::span<const double> v, int n_out) {
  auto n = v.size();
  require(n >= 1, errc::parameter_error, "empty input");
  require(n_out >= 1 && static_cast<std::size_t>(n_out) <= n, errc::parameter_error,
          "need 1 <= n_out <= n");
  std::vector<double> c(static_cast<std::size_t>(n_out));
  double pi = 3.141592653589793;
  for (int k = 0; k < n_out; ++k) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      acc += v[j] * std::cos(pi * k * (2.0 * static_cast<double>(j) + 1.0) / (2.0 * static_cast<double>(n)));
    double s = k == 0 ? std::sqrt(1.0 / static_cast<double>(n))
                      : std::sqrt(2.0 / static_cast<double>(n));
    c[static_cast<std::size_t>(k)] = s * acc;
  }
  return c;
}

// ---- constant-Q ----------------------------------------------------------

struct CqtKernel {
  double freq = 0.0;      // center frequency, Hz
  int full_len = 0;       // N_k = ceil(Q * sr / f_k)
  int offset = 0;         // placement of the kernel inside a frame
  std::vector<std::complex<double>> taps;  // windowed exponential / norm
};

struct CqtKernelSet {
  double fmin = 0.0;
  double quality = 0.0;  // Q = 1 / (2^(1/12) - 1)
  int bins_per_octave = 12;
  int sample_rate = 0;
  int frame_len = 0;
  std::vector<CqtKernel> kernels;
};

// Direct time-domain CQT kernels on the analysis-frame grid. Kernels longer
// than the frame keep their centered slice, rescaled so the window mass
// matches the full-length kernel.
inline CqtKernelSet make_cqt_kernels(double fmin, int bins_per_octave, int n_bins,
                                     int frame_len, int sample_rate) {
  require(fmin > 0.0 && n_bins >= 1 && bins_per_octave >= 1, errc::parameter_error,
          "bad CQT parameters");
  double top = fmin * std::pow(2.0, static_cast<double>(n_bins - 1) / bins_per_octave);
  require(top < sample_rate / 2.0, errc::parameter_error,
          "top CQT bin reaches Nyquist");
  CqtKernelSet set;
  set.fmin = fmin;
  set.bins_per_octave = bins_per_octave;
  set.sample_rate = sample_rate;
  set.frame_len = frame_len;
  set.quality = 1.0 / (std::pow(2.0, 1.0 / bins_per_octave) - 1.0);
  set.kernels.resize(static_cast<std::size_t>(n_bins));
  for (int k = 0; k < n_bins; ++k) {
    CqtKernel& ker = set.kernels[static_cast<std::size_t>(k)];
    ker.freq = fmin * std::pow(2.0, static_cast<double>(k) / bins_per_octave);
    ker.full_len = static_cast<int>(std::ceil(set.quality * sample_rate / ker.freq));
    int used = std::min(ker.full_len, frame_len);
    int cut = ker.full_len > frame_len ? (ker.full_len - frame_len) / 2 : 0;
    ker.offset = ker.full_len < frame_len ? (frame_len - ker.full_len) / 2 : 0;
    double full_mass = 0.0, used_mass = 0.0;
    auto hann_at = [&](int i) {
      return 0.5 * (1.0 - std::cos(kTwoPi * i / ker.full_len));
    };
    for (int i = 0; i < ker.full_len; ++i) full_mass += hann_at(i);
    for (int i = 0; i < used; ++i) used_mass += hann_at(cut + i);
    double renorm = used_mass > 0.0 ? full_mass / used_mass : 1.0;
    ker.taps.resize(static_cast<std::size_t>(used));
    for (int i = 0; i < used; ++i) {
      double w = hann_at(cut + i) * renorm / ker.full_len;
      double ang = -kTwoPi * ker.freq * (cut + i) / sample_rate;
      ker.taps[static_cast<std::size_t>(i)] = {w * std::cos(ang), w * std::sin(ang)};
    }
  }
  return set;
}

inline RowMatrix cqt(const FrameSet& fs, const CqtKernelSet& set) {
  require(fs.frame_len == set.frame_len && fs.sample_rate == set.sample_rate,
          errc::parameter_error, "kernel set built for a different frame grid");
  RowMatrix out(fs.frames.rows, set.kernels.size());
  for (std::size_t t = 0; t < fs.frames.rows; ++t) {
    const double* frame = fs.frames.row(t);
    for (std::size_t k = 0; k < set.kernels.size(); ++k) {
      const CqtKernel& ker = set.kernels[k];
      double re = 0.0, im = 0.0;
      const double* x = frame + ker.offset;
      for (std::size_t i = 0; i < ker.taps.size(); ++i) {
        re += x[i] * ker.taps[i].real();
        im += x[i] * ker.taps[i].imag();
      }
      out.at(t, k) = std::hypot(re, im);
    }
  }
  return out;
}

inline RowMatrix cqt(const FrameSet& fs, double fmin = 32.703, int bins_per_octave = 12,
                     int n_bins = 84) {
  return cqt(fs, make_cqt_kernels(fmin, bins_per_octave, n_bins, fs.frame_len, fs.sample_rate));
}

}  // namespace sesa
