// Iterative radix-2 FFT and the FFT-based discrete Hilbert transform.
// Power-of-two lengths only, which is all the spectral pipeline uses.
#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "spinlab/core.hpp"

namespace spinlab {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place Cooley-Tukey. Forward uses e^{-i 2 pi k n / N}; the inverse
// includes the 1/N factor.
inline void fft_inplace(std::vector<cx>& data, bool inverse = false) {
  const std::size_t n = data.size();
  if (!is_power_of_two(n)) throw std::invalid_argument("FFT length must be a power of two");
  // bit reversal
  for (std::size_t i = 1, rev = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; rev & bit; bit >>= 1) rev ^= bit;
    rev ^= bit;
    if (i < rev) std::swap(data[i], data[rev]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = (inverse ? 2.0 : -2.0) * kPi / static_cast<double>(len);
    const cx w_len = std::polar(1.0, angle);
    for (std::size_t start = 0; start < n; start += len) {
      cx w = 1.0;
      for (std::size_t k = 0; k < len / 2; ++k) {
        const cx even = data[start + k];
        const cx odd = data[start + k + len / 2] * w;
        data[start + k] = even + odd;
        data[start + k + len / 2] = even - odd;
        w *= w_len;
      }
    }
  }
  if (inverse)
    for (auto& v : data) v /= static_cast<double>(n);
}

inline std::vector<cx> fft(const std::vector<double>& series) {
  std::vector<cx> data(series.begin(), series.end());
  fft_inplace(data);
  return data;
}

// Discrete Hilbert transform via the analytic-signal filter: multiply
// positive frequencies by -i, negative by +i, zero DC and Nyquist.
// Convention check: hilbert(cos) = sin.
inline std::vector<double> discrete_hilbert(const std::vector<double>& series) {
  const std::size_t n = series.size();
  std::vector<cx> data(series.begin(), series.end());
  fft_inplace(data);
  data[0] = 0.0;
  if (n % 2 == 0) data[n / 2] = 0.0;
  for (std::size_t k = 1; k < (n + 1) / 2; ++k) data[k] *= cx(0.0, -1.0);
  for (std::size_t k = n / 2 + 1; k < n; ++k) data[k] *= cx(0.0, 1.0);
  fft_inplace(data, true);
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = data[k].real();
  return out;
}

}  // namespace spinlab
