#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "sesa/errors.hpp"

namespace sesa {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 Cooley-Tukey with precomputed bit-reversal and twiddles.
// Sizes are powers of two; 4096 is the hot case.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n) : n_(n) {
    require(is_pow2(n), errc::parameter_error, "FFT size must be a power of two");
    bitrev_.resize(n);
    std::size_t log2n = 0;
    while ((std::size_t{1} << log2n) < n) ++log2n;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (std::size_t b = 0; b < log2n; ++b) r |= ((i >> b) & 1) << (log2n - 1 - b);
      bitrev_[i] = r;
    }
    twiddle_.resize(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
      double ang = -6.283185307179586 * static_cast<double>(k) / static_cast<double>(n);
      twiddle_[k] = {std::cos(ang), std::sin(ang)};
    }
  }

  std::size_t size() const { return n_; }

  void forward(std::vector<std::complex<double>>& a) const {
    require(a.size() == n_, errc::parameter_error, "FFT input size mismatch");
    for (std::size_t i = 0; i < n_; ++i)
      if (bitrev_[i] > i) std::swap(a[i], a[bitrev_[i]]);
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      std::size_t step = n_ / len;
      for (std::size_t i = 0; i < n_; i += len) {
        for (std::size_t j = 0; j < len / 2; ++j) {
          auto u = a[i + j];
          auto v = a[i + j + len / 2] * twiddle_[j * step];
          a[i + j] = u + v;
          a[i + j + len / 2] = u - v;
        }
      }
    }
  }

  // Real input zero-padded to the plan size; returns all n bins.
  std::vector<std::complex<double>> forward_real(std::span<const double> x) const {
    require(x.size() <= n_, errc::parameter_error, "input longer than FFT size");
    std::vector<std::complex<double>> a(n_);
    for (std::size_t i = 0; i < x.size(); ++i) a[i] = {x[i], 0.0};
    forward(a);
    return a;
  }

 private:
  std::size_t n_;
  std::vector<std::size_t> bitrev_;
  std::vector<std::complex<double>> twiddle_;
};

inline std::vector<std::complex<double>> fft(std::span<const double> x, std::size_t n) {
  return FftPlan(n).forward_real(x);
}

}  // namespace sesa
