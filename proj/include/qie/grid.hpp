#pragma once

/*
 * Uniform truncation of the real line: n nodes x_i = -L + i*h with
 * h = 2L/(n-1), so x_0 = -L and x_{n-1} = L.  Grid functions are plain
 * sample vectors; derivatives use second-order finite differences
 * (central in the interior, one-sided at the two boundary nodes).
 */

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qie/expr.hpp"

namespace qie {

class GridError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GridSpec {
  double half_width = 0.0;  // L
  int points = 0;           // n
  double spacing = 0.0;     // h = 2L/(n-1)

  double node(int i) const { return -half_width + spacing * double(i); }
  bool operator==(const GridSpec& other) const {
    return half_width == other.half_width && points == other.points;
  }
};

inline GridSpec make_grid(double half_width, int points) {
  if (!(half_width > 0.0)) throw GridError("grid half-width must be positive");
  if (points < 16) throw GridError("grid needs at least 16 points");
  if (points % 2 != 0) throw GridError("grid point count must be even");
  GridSpec g;
  g.half_width = half_width;
  g.points = points;
  g.spacing = 2.0 * half_width / double(points - 1);
  return g;
}

class GridFunction {
 public:
  GridFunction() = default;
  GridFunction(GridSpec grid, std::vector<double> values)
      : grid_(grid), values_(std::move(values)) {
    if (int(values_.size()) != grid_.points)
      throw GridError("value count does not match grid");
    for (double v : values_)
      if (!std::isfinite(v)) throw GridError("non-finite sample value");
  }

  const GridSpec& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  int size() const { return grid_.points; }
  double operator[](int i) const { return values_[std::size_t(i)]; }
  double x(int i) const { return grid_.node(i); }

 private:
  GridSpec grid_;
  std::vector<double> values_;
};

namespace detail {

inline void require_same_grid(const GridFunction& a, const GridFunction& b) {
  if (!(a.grid() == b.grid())) throw GridError("grid mismatch");
}

template <typename F>
GridFunction zip(const GridFunction& a, const GridFunction& b, F&& f) {
  require_same_grid(a, b);
  std::vector<double> out(a.values().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a.values()[i], b.values()[i]);
  return GridFunction(a.grid(), std::move(out));
}

}  // namespace detail

inline GridFunction operator+(const GridFunction& a, const GridFunction& b) {
  return detail::zip(a, b, [](double x, double y) { return x + y; });
}
inline GridFunction operator-(const GridFunction& a, const GridFunction& b) {
  return detail::zip(a, b, [](double x, double y) { return x - y; });
}
inline GridFunction operator*(const GridFunction& a, const GridFunction& b) {
  return detail::zip(a, b, [](double x, double y) { return x * y; });
}
inline GridFunction operator*(double s, const GridFunction& f) {
  std::vector<double> out(f.values());
  for (double& v : out) v *= s;
  return GridFunction(f.grid(), std::move(out));
}

inline GridFunction constant(const GridSpec& grid, double value) {
  return GridFunction(grid, std::vector<double>(std::size_t(grid.points), value));
}

// Sample an expression in x alone onto the grid.
inline GridFunction sample(const Expr& e, const GridSpec& grid) {
  auto usage = e.variables();
  if (usage.max_u > 0)
    throw GridError("expression to sample may only use the variable x");
  std::vector<double> values(std::size_t(grid.points));
  for (int i = 0; i < grid.points; ++i) {
    EvalPoint p;
    double xv = grid.node(i);
    p.x = xv;
    try {
      values[std::size_t(i)] = eval_at(e, p);
    } catch (const EvalError& err) {
      throw GridError("sample failed at node " + std::to_string(i) + " (x=" +
                      std::to_string(xv) + "): " + err.what());
    }
  }
  return GridFunction(grid, std::move(values));
}

// Second-order finite-difference derivative.
inline GridFunction derivative(const GridFunction& f) {
  const int n = f.size();
  if (n < 3) throw GridError("derivative needs at least 3 nodes");
  const double h = f.grid().spacing;
  const auto& v = f.values();
  std::vector<double> d(static_cast<std::size_t>(n));
  d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
  for (int i = 1; i + 1 < n; ++i)
    d[std::size_t(i)] = (v[std::size_t(i + 1)] - v[std::size_t(i - 1)]) / (2.0 * h);
  d[std::size_t(n - 1)] =
      (3.0 * v[std::size_t(n - 1)] - 4.0 * v[std::size_t(n - 2)] + v[std::size_t(n - 3)]) /
      (2.0 * h);
  return GridFunction(f.grid(), std::move(d));
}

namespace detail {

// Composite trapezoid over a node range [first, last].
inline double trapezoid_range(const GridFunction& f, int first, int last,
                              double (*transform)(double)) {
  if (last <= first) return 0.0;
  const auto& v = f.values();
  double sum = 0.5 * (transform(v[std::size_t(first)]) + transform(v[std::size_t(last)]));
  for (int i = first + 1; i < last; ++i) sum += transform(v[std::size_t(i)]);
  return sum * f.grid().spacing;
}

inline double square(double v) { return v * v; }

}  // namespace detail

struct TruncationDiagnostic {
  double boundary_max = 0.0;  // max(|f(-L)|, |f(L)|)
  double tail_fraction = 0.0; // L^2 mass in the outer 5% of nodes per side
};

inline TruncationDiagnostic truncation_diagnostic(const GridFunction& f) {
  const int n = f.size();
  TruncationDiagnostic diag;
  diag.boundary_max = std::max(std::fabs(f[0]), std::fabs(f[n - 1]));
  const int m = std::max(2, int(std::floor(0.05 * double(n))));
  const double total = detail::trapezoid_range(f, 0, n - 1, detail::square);
  if (total == 0.0) return diag;
  const double tails = detail::trapezoid_range(f, 0, m - 1, detail::square) +
                       detail::trapezoid_range(f, n - m, n - 1, detail::square);
  diag.tail_fraction = tails / total;
  return diag;
}

class VectorGridFunction {
 public:
  VectorGridFunction() = default;
  explicit VectorGridFunction(std::vector<GridFunction> components)
      : components_(std::move(components)) {
    if (components_.empty()) throw GridError("vector grid function needs N >= 1");
    for (const auto& c : components_) detail::require_same_grid(components_.front(), c);
  }

  static VectorGridFunction zero(const GridSpec& grid, int n_components) {
    std::vector<GridFunction> comps;
    comps.reserve(std::size_t(n_components));
    for (int m = 0; m < n_components; ++m) comps.push_back(constant(grid, 0.0));
    return VectorGridFunction(std::move(comps));
  }

  int components() const { return int(components_.size()); }
  const GridFunction& operator[](int m) const { return components_[std::size_t(m)]; }
  const GridSpec& grid() const { return components_.front().grid(); }

 private:
  std::vector<GridFunction> components_;
};

inline VectorGridFunction operator+(const VectorGridFunction& a, const VectorGridFunction& b) {
  if (a.components() != b.components()) throw GridError("component count mismatch");
  std::vector<GridFunction> out;
  out.reserve(std::size_t(a.components()));
  for (int m = 0; m < a.components(); ++m) out.push_back(a[m] + b[m]);
  return VectorGridFunction(std::move(out));
}

inline VectorGridFunction operator-(const VectorGridFunction& a, const VectorGridFunction& b) {
  if (a.components() != b.components()) throw GridError("component count mismatch");
  std::vector<GridFunction> out;
  out.reserve(std::size_t(a.components()));
  for (int m = 0; m < a.components(); ++m) out.push_back(a[m] - b[m]);
  return VectorGridFunction(std::move(out));
}

inline VectorGridFunction operator*(double s, const VectorGridFunction& f) {
  std::vector<GridFunction> out;
  out.reserve(std::size_t(f.components()));
  for (int m = 0; m < f.components(); ++m) out.push_back(s * f[m]);
  return VectorGridFunction(std::move(out));
}

// CSV with header "x,value".
inline void write_csv(std::ostream& os, const GridFunction& f) {
  os << "x,value\n";
  for (int i = 0; i < f.size(); ++i)
    os << detail::format_double(f.x(i)) << ',' << detail::format_double(f[i]) << '\n';
}

// CSV with header "x,u1,...,uN".
inline void write_csv(std::ostream& os, const VectorGridFunction& u) {
  os << "x";
  for (int m = 1; m <= u.components(); ++m) os << ",u" << m;
  os << '\n';
  for (int i = 0; i < u.grid().points; ++i) {
    os << detail::format_double(u.grid().node(i));
    for (int m = 0; m < u.components(); ++m) os << ',' << detail::format_double(u[m][i]);
    os << '\n';
  }
}

}  // namespace qie
