#pragma once

// Seeded generators of smooth decaying test functions (Gaussian mixtures)
// used by the property sweeps and the contraction probes.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "qie/grid.hpp"
#include "qie/norms.hpp"

namespace qie {

struct MixtureOptions {
  int min_terms = 1;
  int max_terms = 4;
  double center_span = 0.4;  // centers in [-span*L, span*L]
  double min_width = 0.02;   // widths relative to L
  double max_width = 0.125;
};

inline GridFunction gaussian_mixture(const GridSpec& grid, std::mt19937_64& rng,
                                     const MixtureOptions& options = {}) {
  const double L = grid.half_width;
  std::uniform_int_distribution<int> terms(options.min_terms, options.max_terms);
  std::uniform_real_distribution<double> amp(0.2, 1.0);
  std::uniform_real_distribution<double> sign01(0.0, 1.0);
  std::uniform_real_distribution<double> center(-options.center_span * L,
                                                options.center_span * L);
  std::uniform_real_distribution<double> width(options.min_width * L, options.max_width * L);

  for (int attempt = 0; attempt < 32; ++attempt) {
    const int k = terms(rng);
    std::vector<double> a(static_cast<std::size_t>(k));
    std::vector<double> c(static_cast<std::size_t>(k));
    std::vector<double> s(static_cast<std::size_t>(k));
    for (int t = 0; t < k; ++t) {
      a[std::size_t(t)] = amp(rng) * (sign01(rng) < 0.5 ? -1.0 : 1.0);
      c[std::size_t(t)] = center(rng);
      s[std::size_t(t)] = width(rng);
    }
    std::vector<double> values(std::size_t(grid.points), 0.0);
    for (int i = 0; i < grid.points; ++i) {
      double x = grid.node(i);
      double v = 0.0;
      for (int t = 0; t < k; ++t) {
        double z = (x - c[std::size_t(t)]) / s[std::size_t(t)];
        v += a[std::size_t(t)] * std::exp(-0.5 * z * z);
      }
      values[std::size_t(i)] = v;
    }
    GridFunction f(grid, std::move(values));
    if (norm_h1(f) > 1e-8) return f;  // reject near-perfect cancellation
  }
  throw GridError("failed to generate a nontrivial mixture");
}

// Random element of the ball ||v||_H1(R,R^N) <= rho (norm drawn in [0.1, 1]*rho).
inline VectorGridFunction random_ball_element(const GridSpec& grid, int n_components,
                                              double rho, std::mt19937_64& rng) {
  std::vector<GridFunction> comps;
  comps.reserve(std::size_t(n_components));
  for (int m = 0; m < n_components; ++m) comps.push_back(gaussian_mixture(grid, rng));
  VectorGridFunction v(std::move(comps));
  std::uniform_real_distribution<double> target(0.1, 1.0);
  double scale = target(rng) * rho / norm_h1(v);
  return scale * v;
}

}  // namespace qie
