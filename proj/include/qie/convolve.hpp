#pragma once

/*
 * Discretization of (K * f)(x) = int K(x-y) f(y) dy on the grid.
 *
 * The sample vectors live at nodes x_i = -L + i*h, so the lags x_j - x_i are
 * integer multiples of h while the sampled kernel arguments sit halfway
 * between them (the grid has no node at 0).  The zero-padded discrete
 * convolution c_s = sum_i K_i f_{s-i} therefore approximates (K*f) on a grid
 * offset by h/2 from the nodes:
 *
 *   h * c_s  ~  (K*f)(s*h - 2L),   node x_j at s = j + (n-1)/2.
 *
 * Both convolution paths evaluate the same discrete quantity at the nodes by
 * interpolating c at the half-integer index with the symmetric 4-tap stencil
 * (-1, 9, 9, -1)/16 (midpoint error 3/128 h^4 f'''').  The stencil is itself
 * a convolution, so commutativity and bilinearity are exact.
 *
 * A deliberately periodic (unpadded, unshifted) mode exists only so the
 * verification suite can demonstrate that wraparound breaks the Young bound.
 */

#include <complex>
#include <vector>

#include "qie/detail/fft.hpp"
#include "qie/grid.hpp"
#include "qie/norms.hpp"

namespace qie {

enum class ConvolutionMode { zero_padded, periodic };

class ConvolutionPlan {
 public:
  explicit ConvolutionPlan(const GridSpec& grid)
      : grid_(grid),
        padded_(detail::next_power_of_two(2 * std::size_t(grid.points) - 1)),
        fft_(padded_) {}

  const GridSpec& grid() const { return grid_; }
  std::size_t padded_length() const { return padded_; }
  const detail::Fft& fft() const { return fft_; }

 private:
  GridSpec grid_;
  std::size_t padded_;
  detail::Fft fft_;
};

namespace detail {

// Interpolate the raw linear-convolution sequence c (valid on [0, 2n-2])
// back onto the nodes and apply the h quadrature weight.
inline GridFunction slice_to_nodes(const GridSpec& grid, std::span<const double> c) {
  const int n = grid.points;
  const double h = grid.spacing;
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    std::size_t s0 = std::size_t(j + n / 2 - 1);
    out[std::size_t(j)] =
        h * (-c[s0 - 1] + 9.0 * c[s0] + 9.0 * c[s0 + 1] - c[s0 + 2]) / 16.0;
  }
  return GridFunction(grid, std::move(out));
}

}  // namespace detail

inline GridFunction convolve_fft(const GridFunction& K, const GridFunction& f,
                                 const ConvolutionPlan& plan) {
  detail::require_same_grid(K, f);
  if (!(K.grid() == plan.grid())) throw GridError("grid mismatch with convolution plan");
  const std::size_t n = std::size_t(K.size());
  const std::size_t P = plan.padded_length();
  std::vector<std::complex<double>> a(P), b(P);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = K.values()[i];
    b[i] = f.values()[i];
  }
  plan.fft().transform(a, false);
  plan.fft().transform(b, false);
  for (std::size_t i = 0; i < P; ++i) a[i] *= b[i];
  plan.fft().transform(a, true);
  std::vector<double> c(2 * n - 1);
  for (std::size_t s = 0; s < c.size(); ++s) c[s] = a[s].real();
  return detail::slice_to_nodes(K.grid(), c);
}

inline GridFunction convolve_fft(const GridFunction& K, const GridFunction& f,
                                 ConvolutionMode mode = ConvolutionMode::zero_padded) {
  detail::require_same_grid(K, f);
  if (mode == ConvolutionMode::periodic) {
    // Naive circular convolution, kept for fault injection.
    const std::size_t n = std::size_t(K.size());
    detail::Fft fft(n);
    std::vector<std::complex<double>> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = K.values()[i];
      b[i] = f.values()[i];
    }
    fft.transform(a, false);
    fft.transform(b, false);
    for (std::size_t i = 0; i < n; ++i) a[i] *= b[i];
    fft.transform(a, true);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = K.grid().spacing * a[i].real();
    return GridFunction(K.grid(), std::move(out));
  }
  ConvolutionPlan plan(K.grid());
  return convolve_fft(K, f, plan);
}

// O(n^2) summation of the identical discrete quantity; oracle for the FFT path.
inline GridFunction convolve_direct(const GridFunction& K, const GridFunction& f) {
  detail::require_same_grid(K, f);
  const int n = K.size();
  const auto& kv = K.values();
  const auto& fv = f.values();
  // Only the slice of c touched by the interpolation stencil is needed.
  const int s_lo = n / 2 - 2;
  const int s_hi = n + n / 2 + 1;
  std::vector<double> c(std::size_t(2 * n - 1), 0.0);
  for (int s = s_lo; s <= s_hi; ++s) {
    const int i0 = std::max(0, s - (n - 1));
    const int i1 = std::min(n - 1, s);
    double sum = 0.0;
    for (int i = i0; i <= i1; ++i) sum += kv[std::size_t(i)] * fv[std::size_t(s - i)];
    c[std::size_t(s)] = sum;
  }
  return detail::slice_to_nodes(K.grid(), c);
}

struct YoungDefect {
  double l2_defect = 0.0;     // ||K*f||_2 - ||K||_1 ||f||_2
  double deriv_defect = 0.0;  // ||(K*f)'||_2 - ||K'||_1 ||f||_2
};

inline YoungDefect young_defect(const GridFunction& K, const GridFunction& f,
                                ConvolutionMode mode = ConvolutionMode::zero_padded) {
  GridFunction conv = convolve_fft(K, f, mode);
  YoungDefect d;
  const double f_l2 = norm_l2(f);
  d.l2_defect = norm_l2(conv) - norm_l1(K) * f_l2;
  d.deriv_defect = norm_l2(derivative(conv)) - norm_l1(derivative(K)) * f_l2;
  return d;
}

}  // namespace qie
