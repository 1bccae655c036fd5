#pragma once

#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "qmean/core.hpp"

namespace qmean::detail {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// In-place iterative radix-2 FFT. `invert` computes the unscaled inverse;
/// callers divide by n themselves.
inline void fft_radix2(std::vector<std::complex<double>>& a, bool invert) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = 2.0 * std::numbers::pi / static_cast<double>(len) * (invert ? 1.0 : -1.0);
    const std::complex<double> wlen(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const std::complex<double> u = a[i + j];
        const std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

inline std::vector<std::complex<double>> dft(const TemplateVector& x) {
  std::vector<std::complex<double>> a(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) a[i] = x[i];
  fft_radix2(a, false);
  return a;
}

/// Circular cross-correlation c[k] = <x, shift_k(y)> = sum_j x[j]*y[(j+k) mod n]
/// from precomputed spectra: c = IDFT(conj(X) . Y).
inline void correlation_from_spectra(const std::vector<std::complex<double>>& X,
                                     const std::vector<std::complex<double>>& Y,
                                     std::vector<std::complex<double>>& scratch,
                                     std::vector<double>& out) {
  const std::size_t n = X.size();
  scratch.resize(n);
  for (std::size_t f = 0; f < n; ++f) scratch[f] = std::conj(X[f]) * Y[f];
  fft_radix2(scratch, true);
  out.resize(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = scratch[k].real() * inv_n;
}

/// Direct O(n^2) fallback used for non power-of-two sizes.
inline void correlation_direct(const TemplateVector& x, const TemplateVector& y,
                               std::vector<double>& out) {
  const std::size_t n = x.size();
  out.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += x[j] * y[(j + k) % n];
    out[k] = s;
  }
}

inline void circular_correlation(const TemplateVector& x, const TemplateVector& y,
                                 std::vector<double>& out) {
  require_same_dimension(x, y);
  if (is_power_of_two(x.size())) {
    std::vector<std::complex<double>> scratch;
    correlation_from_spectra(dft(x), dft(y), scratch, out);
  } else {
    correlation_direct(x, y, out);
  }
}

}  // namespace qmean::detail
