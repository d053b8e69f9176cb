#pragma once

// Graphs z -> (z, u(z)) over a disk sampled on a square grid: the second
// fundamental form h(u)^i_j = D_j(D^i u / sqrt(1 + |Du|^2)) by centered
// differences, and the distance to the best-fitting spherical cap.

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "wulffstab/errors.hpp"
#include "wulffstab/mesh.hpp"
#include "wulffstab/optimize.hpp"

namespace wulffstab {

// n x n nodes on [-half, half]^2, row-major with x varying fastest.
struct FlatGrid {
  int n = 201;
  double half = 0.9;
  double radius = 0.9;  // domain is the disk |z| <= radius

  FlatGrid() = default;
  FlatGrid(int nodes, double half_width, double disk_radius) : n(nodes), half(half_width), radius(disk_radius) {
    if (n < 9) throw DomainError("flat grid needs at least 9 nodes per side");
    if (!(half > 0.0) || !(radius > 0.0)) throw DomainError("flat grid extent must be positive");
  }

  double spacing() const { return 2.0 * half / (n - 1); }
  double coord(int i) const { return -half + spacing() * i; }
  Vec2 point(int i, int j) const { return {coord(i), coord(j)}; }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * n + i; }
  std::size_t size() const { return static_cast<std::size_t>(n) * n; }
  bool inside(int i, int j) const { return point(i, j).norm() <= radius + 1e-12; }

  std::vector<double> sample(const std::function<double(const Vec2&)>& u) const {
    std::vector<double> v(size(), std::numeric_limits<double>::quiet_NaN());
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        if (inside(i, j)) v[index(i, j)] = u(point(i, j));
    return v;
  }
};

enum class DifferenceOrder { second = 2, fourth = 4 };

struct FlatShape {
  TensorField h{{}, TensorKind::mixed};  // one entry per grid node, zero where invalid
  std::vector<char> valid;
  std::size_t valid_count = 0;
  std::size_t trimmed = 0;  // nodes dropped by the gradient gate
  std::string warning;
};

namespace detail {

// Centered first difference along (di, dj); NaN if a stencil node is missing.
inline double centered(const std::vector<double>& f, const FlatGrid& g, int i, int j, int di, int dj,
                       DifferenceOrder order) {
  auto at = [&](int k) -> double {
    const int a = i + k * di, b = j + k * dj;
    if (a < 0 || b < 0 || a >= g.n || b >= g.n) return std::numeric_limits<double>::quiet_NaN();
    return f[g.index(a, b)];
  };
  const double h = g.spacing();
  if (order == DifferenceOrder::second) return (at(1) - at(-1)) / (2.0 * h);
  return (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * h);
}

}  // namespace detail

// gradient_gate: nodes with |Du| above it are treated as the cap rim and trimmed.
inline FlatShape flat_graph_shape(const FlatGrid& g, const std::vector<double>& u,
                                  DifferenceOrder order = DifferenceOrder::fourth, double gradient_gate = 10.0) {
  if (u.size() != g.size()) throw DomainError("flat_graph_shape: field size does not match the grid");
  if (!(g.radius < 1.0)) throw DomainError("flat_graph_shape: disk radius must be below 1");
  const std::size_t n = g.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> v1(n, nan), v2(n, nan);
  std::size_t trimmed = 0;
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      const std::size_t k = g.index(i, j);
      const double ux = detail::centered(u, g, i, j, 1, 0, order);
      const double uy = detail::centered(u, g, i, j, 0, 1, order);
      if (!std::isfinite(ux) || !std::isfinite(uy)) continue;
      const double grad2 = ux * ux + uy * uy;
      if (grad2 > gradient_gate * gradient_gate) {
        ++trimmed;
        continue;
      }
      const double w = std::sqrt(1.0 + grad2);
      v1[k] = ux / w;
      v2[k] = uy / w;
    }
  FlatShape out;
  out.h.values.assign(n, Mat2::Zero());
  out.valid.assign(n, 0);
  out.trimmed = trimmed;
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      Mat2 m;
      // m(i, j) = D_j V^i
      m(0, 0) = detail::centered(v1, g, i, j, 1, 0, order);
      m(0, 1) = detail::centered(v1, g, i, j, 0, 1, order);
      m(1, 0) = detail::centered(v2, g, i, j, 1, 0, order);
      m(1, 1) = detail::centered(v2, g, i, j, 0, 1, order);
      if (!m.allFinite()) continue;
      const std::size_t k = g.index(i, j);
      out.h.values[k] = m;
      out.valid[k] = 1;
      ++out.valid_count;
    }
  if (trimmed > 0)
    out.warning = "trimmed domain: " + std::to_string(trimmed) + " nodes exceed the gradient gate " +
                  std::to_string(gradient_gate);
  return out;
}

inline double spherical_cap(const Vec2& z, double lambda) {
  return 1.0 - std::sqrt(1.0 - lambda * lambda * z.squaredNorm());
}

// Discrete W^{2,p} norm over the nodes where all difference stencils exist.
inline double flat_w2p_norm(const FlatGrid& g, const std::vector<double>& v, double p,
                            DifferenceOrder order = DifferenceOrder::fourth) {
  check_exponent(p);
  const std::size_t n = g.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> dx(n, nan), dy(n, nan);
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      dx[g.index(i, j)] = detail::centered(v, g, i, j, 1, 0, order);
      dy[g.index(i, j)] = detail::centered(v, g, i, j, 0, 1, order);
    }
  const double cell = g.spacing() * g.spacing();
  double sum = 0.0;
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      const double xx = detail::centered(dx, g, i, j, 1, 0, order);
      const double xy = detail::centered(dx, g, i, j, 0, 1, order);
      const double yx = detail::centered(dy, g, i, j, 1, 0, order);
      const double yy = detail::centered(dy, g, i, j, 0, 1, order);
      const std::size_t k = g.index(i, j);
      const double hess = std::sqrt(xx * xx + xy * xy + yx * yx + yy * yy);
      const double grad = std::hypot(dx[k], dy[k]);
      if (!std::isfinite(hess) || !std::isfinite(grad) || !std::isfinite(v[k])) continue;
      sum += cell * (std::pow(std::abs(v[k]), p) + std::pow(grad, p) + std::pow(hess, p));
    }
  return std::pow(sum, 1.0 / p);
}

struct CapFit {
  double lambda = 0.0;
  double residual = 0.0;
  std::string warning;
};

// Minimizes ||u - cap_lambda||_{W^{2,p}} over lambda in (0, 1/radius).
inline CapFit cap_fit_residual(const FlatGrid& g, const std::vector<double>& u, double p = 2.0,
                               DifferenceOrder order = DifferenceOrder::fourth) {
  if (u.size() != g.size()) throw DomainError("cap_fit_residual: field size does not match the grid");
  const double top = (1.0 - 1e-6) / g.radius;
  std::vector<double> diff(u.size());
  auto residual = [&](double lambda) {
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i) {
        const std::size_t k = g.index(i, j);
        diff[k] = std::isfinite(u[k]) ? u[k] - spherical_cap(g.point(i, j), lambda)
                                      : std::numeric_limits<double>::quiet_NaN();
      }
    return flat_w2p_norm(g, diff, p, order);
  };
  const ScalarMinimum r = kink_minimize(residual, 0.0, top);
  CapFit fit{r.x, r.value, {}};
  if (fit.lambda * g.radius > 0.99)
    fit.warning = "trimmed domain: fitted cap reaches the rim, lambda |z| -> 1";
  return fit;
}

}  // namespace wulffstab
