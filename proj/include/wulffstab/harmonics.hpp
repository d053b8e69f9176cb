#pragma once

// Real spherical harmonics, orthonormal on the unit sphere, evaluated as
// solid harmonics r^l Y_lm(x/r) so that the same recurrence works for plain
// doubles and for Taylor jets (exact ambient derivatives).
//
// Index convention: k = l*l + l + m, m in [-l, l]; m > 0 carries cos(m phi),
// m < 0 carries sin(|m| phi).  No Condon-Shortley phase.

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace wulffstab {

constexpr int harmonic_index(int l, int m) { return l * l + l + m; }
constexpr int harmonic_count(int band) { return (band + 1) * (band + 1); }

inline double harmonic_norm(int l, int m) {
  const int am = m < 0 ? -m : m;
  const double ratio = std::exp(std::lgamma(l - am + 1.0) - std::lgamma(l + am + 1.0));
  if (am == 0) return std::sqrt((2.0 * l + 1.0) / (4.0 * std::numbers::pi));
  return std::sqrt((2.0 * l + 1.0) / (2.0 * std::numbers::pi) * ratio);
}

// Fills out[harmonic_index(l, m)] with the solid harmonic of degree l for all l <= band.
template <class T>
void solid_harmonics(const std::array<T, 3>& x, int band, std::vector<T>& out) {
  if (band < 0) throw std::invalid_argument("solid_harmonics: negative band");
  out.assign(static_cast<std::size_t>(harmonic_count(band)), T(0.0));
  const T r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];

  // A_m + i B_m = (x + i y)^m
  std::vector<T> cosm(static_cast<std::size_t>(band + 1), T(0.0));
  std::vector<T> sinm(static_cast<std::size_t>(band + 1), T(0.0));
  cosm[0] = T(1.0);
  sinm[0] = T(0.0);
  for (int m = 1; m <= band; ++m) {
    cosm[m] = x[0] * cosm[m - 1] - x[1] * sinm[m - 1];
    sinm[m] = x[0] * sinm[m - 1] + x[1] * cosm[m - 1];
  }

  // Pi_l^m: m-th derivative of the Legendre polynomial, homogenized with r^2.
  std::vector<T> pi(static_cast<std::size_t>(band + 1), T(0.0));
  double diag = 1.0;  // (2m-1)!!
  for (int m = 0; m <= band; ++m) {
    if (m > 0) diag *= (2.0 * m - 1.0);
    T prev2(0.0);
    T prev1(diag);
    pi[m] = prev1;
    if (m + 1 <= band) {
      pi[m + 1] = (2.0 * m + 1.0) * x[2] * prev1;
      prev2 = prev1;
      prev1 = pi[m + 1];
    }
    for (int l = m + 2; l <= band; ++l) {
      pi[l] = ((2.0 * l - 1.0) * x[2] * prev1 - (l + m - 1.0) * r2 * prev2) / double(l - m);
      prev2 = prev1;
      prev1 = pi[l];
    }
    for (int l = m; l <= band; ++l) {
      if (m == 0) {
        out[harmonic_index(l, 0)] = harmonic_norm(l, 0) * pi[l];
      } else {
        const double nrm = harmonic_norm(l, m);
        out[harmonic_index(l, m)] = nrm * (pi[l] * cosm[m]);
        out[harmonic_index(l, -m)] = nrm * (pi[l] * sinm[m]);
      }
    }
  }
}

// Single solid harmonic of degree l and order m.
template <class T>
T solid_harmonic(const std::array<T, 3>& x, int l, int m) {
  if (l < 0 || m < -l || m > l) throw std::invalid_argument("solid_harmonic: bad (l, m)");
  std::vector<T> all;
  solid_harmonics(x, l, all);
  return all[harmonic_index(l, m)];
}

}  // namespace wulffstab
