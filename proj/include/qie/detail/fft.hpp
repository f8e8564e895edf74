#pragma once

// Iterative radix-2 complex FFT, enough for zero-padded linear convolution.

#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace qie::detail {

class Fft {
 public:
  explicit Fft(std::size_t n) : n_(n) {
    if (n == 0 || (n & (n - 1)) != 0)
      throw std::invalid_argument("FFT length must be a power of two");
    roots_.resize(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
      double angle = -2.0 * std::numbers::pi * double(k) / double(n);
      roots_[k] = std::polar(1.0, angle);
    }
  }

  std::size_t size() const { return n_; }

  void transform(std::span<std::complex<double>> a, bool inverse) const {
    if (a.size() != n_) throw std::invalid_argument("FFT buffer size mismatch");
    // Bit-reversal permutation.
    for (std::size_t i = 1, j = 0; i < n_; ++i) {
      std::size_t bit = n_ >> 1;
      for (; j & bit; bit >>= 1) j ^= bit;
      j ^= bit;
      if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      std::size_t stride = n_ / len;
      for (std::size_t block = 0; block < n_; block += len) {
        for (std::size_t k = 0; k < len / 2; ++k) {
          std::complex<double> w = roots_[k * stride];
          if (inverse) w = std::conj(w);
          std::complex<double> u = a[block + k];
          std::complex<double> v = a[block + k + len / 2] * w;
          a[block + k] = u + v;
          a[block + k + len / 2] = u - v;
        }
      }
    }
    if (inverse) {
      double scale = 1.0 / double(n_);
      for (auto& c : a) c *= scale;
    }
  }

 private:
  std::size_t n_;
  std::vector<std::complex<double>> roots_;
};

inline std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace qie::detail
