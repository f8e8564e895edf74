#pragma once

/*
 * Quadrature realizations of the norms driving the analysis:
 *
 *   ||f||_2^2   = int f^2          (trapezoid)
 *   ||f||_H1^2  = ||f||_2^2 + ||f'||_2^2
 *   ||K||_W11   = ||K||_1 + ||K'||_1
 *   ||u||_H1(R,R^N)^2 = sum_m ||u_m||_H1^2
 *
 * plus the C^1(ball) norm of a vector nonlinearity,
 *   ||g||_C1 = sum_m [ max_I |g_m| + sum_n max_I |dg_m/dz_n| ],
 * estimated by a dense 1-D scan for N = 1 and by seeded sampling with local
 * refinement for N >= 2 (a lower estimate, flagged as such).
 */

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "qie/expr.hpp"
#include "qie/grid.hpp"

namespace qie {

inline double norm_l2(const GridFunction& f) {
  return std::sqrt(detail::trapezoid_range(f, 0, f.size() - 1, detail::square));
}

inline double norm_l1(const GridFunction& f) {
  return detail::trapezoid_range(f, 0, f.size() - 1, [](double v) { return std::fabs(v); });
}

inline double norm_linf(const GridFunction& f) {
  double m = 0.0;
  for (double v : f.values()) m = std::max(m, std::fabs(v));
  return m;
}

inline double norm_h1(const GridFunction& f) {
  return std::hypot(norm_l2(f), norm_l2(derivative(f)));
}

inline double norm_w11(const GridFunction& f) {
  return norm_l1(f) + norm_l1(derivative(f));
}

inline double norm_h1(const VectorGridFunction& u) {
  double sq = 0.0;
  for (int m = 0; m < u.components(); ++m) {
    double l2 = norm_l2(u[m]);
    double dl2 = norm_l2(derivative(u[m]));
    sq += l2 * l2 + dl2 * dl2;
  }
  return std::sqrt(sq);
}

struct NormReport {
  std::optional<double> l1, l2, linf, h1, w11;
};

inline NormReport norm_report(const GridFunction& f) {
  NormReport r;
  r.l1 = norm_l1(f);
  r.l2 = norm_l2(f);
  r.linf = norm_linf(f);
  r.h1 = norm_h1(f);
  r.w11 = norm_w11(f);
  return r;
}

// ---------------------------------------------------------------------------
// C^1 norm over the closed ball |z| <= radius in R^N.

struct BallNormOptions {
  int scan_points = 10000;     // intervals of the 1-D scan (N = 1)
  int sample_count = 100000;   // ball samples (N >= 2)
  int refine_candidates = 10;  // best candidates refined by pattern search
  std::uint64_t seed = 1;
};

struct BallNormEstimate {
  double value = 0.0;
  bool lower_estimate = false;  // true for the sampled (N >= 2) path
};

namespace detail {

inline double eval_u(const Expr& e, std::span<const double> z) {
  EvalPoint p;
  p.u = z;
  return eval_at(e, p);
}

// Pattern search for max |phi| from a start point, projected onto the ball.
inline double refine_max_abs(const Expr& phi, std::vector<double> z, double radius) {
  const std::size_t dim = z.size();
  auto project = [&](std::vector<double>& p) {
    double r2 = 0.0;
    for (double c : p) r2 += c * c;
    double r = std::sqrt(r2);
    if (r > radius)
      for (double& c : p) c *= radius / r;
  };
  project(z);
  double best = std::fabs(eval_u(phi, z));
  double step = radius / 10.0;
  std::vector<double> trial(dim);
  while (step > 1e-9 * radius) {
    bool improved = false;
    for (std::size_t d = 0; d < dim; ++d) {
      for (double dir : {1.0, -1.0}) {
        trial = z;
        trial[d] += dir * step;
        project(trial);
        double v = std::fabs(eval_u(phi, trial));
        if (v > best) {
          best = v;
          z = trial;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return best;
}

}  // namespace detail

inline BallNormEstimate c1_norm_over_ball(std::span<const Expr> g, double radius,
                                          const BallNormOptions& options = {}) {
  if (!(radius > 0.0)) throw std::invalid_argument("ball radius must be positive");
  const int N = int(g.size());
  if (N < 1) throw std::invalid_argument("empty nonlinearity");
  for (const Expr& gm : g) {
    auto usage = gm.variables();
    if (usage.uses_x) throw std::invalid_argument("nonlinearity may not use x");
    if (usage.max_u > N)
      throw std::invalid_argument("nonlinearity uses u" + std::to_string(usage.max_u) +
                                  " but N = " + std::to_string(N));
  }

  // One scalar max per g_m and per partial derivative.
  std::vector<Expr> scalars;
  scalars.reserve(std::size_t(N) * std::size_t(N + 1));
  for (const Expr& gm : g) {
    scalars.push_back(gm);
    for (int n = 1; n <= N; ++n) scalars.push_back(differentiate(gm, n));
  }

  std::vector<double> maxima(scalars.size(), 0.0);
  BallNormEstimate result;

  if (N == 1) {
    const int S = std::max(options.scan_points, 10000);
    std::vector<double> z(1);
    for (int j = 0; j <= S; ++j) {
      z[0] = -radius + 2.0 * radius * double(j) / double(S);
      for (std::size_t s = 0; s < scalars.size(); ++s)
        maxima[s] = std::max(maxima[s], std::fabs(detail::eval_u(scalars[s], z)));
    }
    result.lower_estimate = false;
  } else {
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    struct Candidate {
      double value;
      std::vector<double> point;
    };
    std::vector<std::vector<Candidate>> best(scalars.size());
    std::vector<double> z(static_cast<std::size_t>(N));
    for (int s = 0; s < std::max(options.sample_count, 100000); ++s) {
      // Uniform in the ball: gaussian direction, radius ~ r * U^(1/N).
      double r2 = 0.0;
      for (double& c : z) {
        c = gauss(rng);
        r2 += c * c;
      }
      double scale =
          radius * std::pow(unif(rng), 1.0 / double(N)) / std::max(std::sqrt(r2), 1e-300);
      for (double& c : z) c *= scale;
      for (std::size_t k = 0; k < scalars.size(); ++k) {
        double v = std::fabs(detail::eval_u(scalars[k], z));
        auto& heap = best[k];
        if (int(heap.size()) < options.refine_candidates) {
          heap.push_back({v, z});
        } else {
          std::size_t worst = 0;
          for (std::size_t i = 1; i < heap.size(); ++i)
            if (heap[i].value < heap[worst].value) worst = i;
          if (v > heap[worst].value) heap[worst] = {v, z};
        }
      }
    }
    for (std::size_t k = 0; k < scalars.size(); ++k)
      for (const auto& cand : best[k])
        maxima[k] = std::max(maxima[k], detail::refine_max_abs(scalars[k], cand.point, radius));
    result.lower_estimate = true;
  }

  double total = 0.0;
  for (double m : maxima) total += m;
  result.value = total;
  return result;
}

// ---------------------------------------------------------------------------
// Inequality diagnostics.

// ||f||_inf / ||f||_H1; bounded by 1/sqrt(2) up to grid error.
inline double embedding_ratio(const GridFunction& f) {
  double h1 = norm_h1(f);
  if (h1 == 0.0) throw GridError("embedding ratio of the zero function");
  return norm_linf(f) / h1;
}

struct EmbeddingCheck {
  double ratio = 0.0;
  bool certified = false;  // false when the truncation diagnostic fails
  double tail_fraction = 0.0;
};

inline EmbeddingCheck embedding_check(const GridFunction& f, double tail_tolerance) {
  EmbeddingCheck c;
  c.ratio = embedding_ratio(f);
  c.tail_fraction = truncation_diagnostic(f).tail_fraction;
  c.certified = c.tail_fraction <= tail_tolerance;
  return c;
}

// ||f*g||_H1 - c_a ||f||_H1 ||g||_H1 for the pointwise product.
inline double algebra_defect(const GridFunction& f, const GridFunction& g, double c_a) {
  return norm_h1(f * g) - c_a * norm_h1(f) * norm_h1(g);
}

inline double default_algebra_constant() { return std::sqrt(2.5); }

}  // namespace qie
