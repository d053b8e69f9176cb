#pragma once

// Derivative-free minimizers: Brent (Boost.Math) in one variable and
// Nelder-Mead in a few.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <cstdint>
#include <limits>
#include <vector>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include <Eigen/Dense>

namespace wulffstab {

struct ScalarMinimum {
  double x = 0.0;
  double value = 0.0;
};

// Brent's method on [a, b].  Boost caps the x tolerance at sqrt(epsilon),
// which suffices for smooth minima.
template <class F>
ScalarMinimum brent_minimize(F&& f, double a, double b, std::uintmax_t max_iter = 500) {
  const auto r = boost::math::tools::brent_find_minima(f, a, b, std::numeric_limits<double>::digits, max_iter);
  return {r.first, r.second};
}

// Convex f with a kink at the minimum, e.g. a norm that reaches zero.  There
// the value error equals the x error, so the Brent estimate is polished by
// bisecting the sign of a symmetric difference.
template <class F>
ScalarMinimum kink_minimize(F&& f, double a, double b) {
  ScalarMinimum m = brent_minimize(f, a, b);
  const double span = b - a;
  const double delta = 1e-12 * span;
  auto slope = [&](double x) { return f(x + delta) - f(x - delta); };
  const double lo = std::max(a + delta, m.x - 1e-6 * span), hi = std::min(b - delta, m.x + 1e-6 * span);
  const double slo = slope(lo), shi = slope(hi);
  if (!(slo < 0.0 && shi > 0.0)) return m;
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::bisect(slope, lo, hi, boost::math::tools::eps_tolerance<double>(50), iters);
  const double x = 0.5 * (r.first + r.second);
  const double v = f(x);
  return v < m.value ? ScalarMinimum{x, v} : m;
}

struct SimplexOptions {
  double step = 0.1;     // initial simplex edge
  double x_tol = 1e-12;  // simplex diameter
  double f_tol = 1e-16;  // spread of values
  int max_iter = 2000;
};

struct SimplexResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
};

// Nelder-Mead with the standard coefficients (1, 2, 1/2, 1/2).
template <class F>
SimplexResult nelder_mead(F&& f, const Eigen::VectorXd& x0, const SimplexOptions& opt = {}) {
  const Eigen::Index n = x0.size();
  std::vector<Eigen::VectorXd> x(static_cast<std::size_t>(n + 1), x0);
  std::vector<double> fx(static_cast<std::size_t>(n + 1));
  for (Eigen::Index k = 0; k < n; ++k) x[static_cast<std::size_t>(k + 1)][k] += opt.step;
  for (std::size_t k = 0; k < x.size(); ++k) fx[k] = f(x[k]);
  std::vector<std::size_t> ord(x.size());
  int it = 0;
  for (; it < opt.max_iter; ++it) {
    std::iota(ord.begin(), ord.end(), std::size_t{0});
    std::stable_sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
    const std::size_t lo = ord.front(), hi = ord.back(), second = ord[ord.size() - 2];
    double diam = 0.0;
    for (std::size_t k = 1; k < ord.size(); ++k) diam = std::max(diam, (x[ord[k]] - x[lo]).norm());
    if (diam < opt.x_tol || fx[hi] - fx[lo] < opt.f_tol) break;
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t k = 0; k + 1 < ord.size(); ++k) centroid += x[ord[k]];
    centroid /= static_cast<double>(n);
    const Eigen::VectorXd xr = centroid + (centroid - x[hi]);
    const double fr = f(xr);
    if (fr < fx[lo]) {
      const Eigen::VectorXd xe = centroid + 2.0 * (centroid - x[hi]);
      const double fe = f(xe);
      if (fe < fr) {
        x[hi] = xe;
        fx[hi] = fe;
      } else {
        x[hi] = xr;
        fx[hi] = fr;
      }
    } else if (fr < fx[second]) {
      x[hi] = xr;
      fx[hi] = fr;
    } else {
      const Eigen::VectorXd xc = centroid + 0.5 * (x[hi] - centroid);
      const double fc = f(xc);
      if (fc < fx[hi]) {
        x[hi] = xc;
        fx[hi] = fc;
      } else {
        for (std::size_t k = 1; k < ord.size(); ++k) {
          x[ord[k]] = x[lo] + 0.5 * (x[ord[k]] - x[lo]);
          fx[ord[k]] = f(x[ord[k]]);
        }
      }
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(fx.begin(), fx.end()) - fx.begin());
  return {x[best], fx[best], it};
}

}  // namespace wulffstab
