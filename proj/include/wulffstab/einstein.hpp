#pragma once

// Pointwise eigenvalue algebra for hypersurfaces of R^{n+1}, n >= 3: Ricci
// spectrum from the principal curvatures, pinching, the polynomials
//   p(lambda) = sum_{i != j} (lambda_i lambda_j - kappa)^2
//   q(lambda) = sum_i (Lambda_i - (n-1) kappa)^2
// their zero sets and the range of p/q, and the exponent alpha(p, q).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wulffstab/errors.hpp"
#include "wulffstab/optimize.hpp"
#include "wulffstab/parallel.hpp"

namespace wulffstab {

using VecX = Eigen::VectorXd;

struct EigenSpectrum {
  VecX lambda;  // sorted ascending
  double kappa = 0.0;

  EigenSpectrum(VecX values, double k) : lambda(std::move(values)), kappa(k) {
    if (lambda.size() < 3) throw DomainError("spectra need dimension n >= 3");
    std::sort(lambda.data(), lambda.data() + lambda.size());
  }
  int n() const { return static_cast<int>(lambda.size()); }
};

// Lambda_j = lambda_j sum_{k != j} lambda_k
inline VecX ricci_spectrum(const VecX& lambda) {
  const double s = lambda.sum();
  VecX out(lambda.size());
  for (Eigen::Index j = 0; j < lambda.size(); ++j) out[j] = lambda[j] * (s - lambda[j]);
  return out;
}

inline VecX ricci_spectrum(const EigenSpectrum& s) { return ricci_spectrum(s.lambda); }

// |A - tr A / n Id|^2 for a diagonal A with entries v.
inline double trace_free_squared(const VecX& v) {
  const double n = static_cast<double>(v.size());
  return v.squaredNorm() - v.sum() * v.sum() / n;
}

struct PinchingCheck {
  bool applicable = false;
  double ricci = 0.0;        // |Ric_0|^2
  double bound = 0.0;        // (n-1) Lambda^2 |h_0|^2
  double sharp_bound = 0.0;  // (n-2)^2 Lambda^2 |h_0|^2
  bool pass = false;         // ricci >= bound
  bool sharp_pass = false;   // ricci >= sharp_bound
};

// Both sides use the plain trace-free norms; the pairwise-difference form
// sum_{i != j} |a_i - a_j|^2 = 2n |a_0|^2 gives the same comparison.
inline PinchingCheck pinching_check(const EigenSpectrum& s, double lambda_low) {
  PinchingCheck c;
  if (!(lambda_low > 0.0) || s.lambda.minCoeff() < lambda_low) return c;
  c.applicable = true;
  const double n = static_cast<double>(s.n());
  const double h0 = trace_free_squared(s.lambda);
  c.ricci = trace_free_squared(ricci_spectrum(s.lambda));
  c.bound = (n - 1.0) * lambda_low * lambda_low * h0;
  c.sharp_bound = (n - 2.0) * (n - 2.0) * lambda_low * lambda_low * h0;
  const double slack = 1e-12 * (std::abs(c.ricci) + std::abs(c.bound)) + 1e-300;
  c.pass = c.ricci >= c.bound - slack;
  c.sharp_pass = c.ricci >= c.sharp_bound - slack;
  return c;
}

struct PolyValues {
  double p = 0.0;
  double q = 0.0;
};

inline PolyValues polys(const VecX& lambda, double kappa) {
  const Eigen::Index n = lambda.size();
  PolyValues v;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j) {
        const double d = lambda[i] * lambda[j] - kappa;
        v.p += d * d;
      }
  const double s = lambda.sum();
  const double target = static_cast<double>(n - 1) * kappa;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = lambda[i] * (s - lambda[i]) - target;
    v.q += d * d;
  }
  return v;
}

inline PolyValues polys(const EigenSpectrum& s) { return polys(s.lambda, s.kappa); }

// alpha = 1 for n < q <= p/2, p/q - 1 for p/2 <= q < p.
inline double alpha_exponent(int n, double p, double q) {
  if (!(q > n) || !(q < p)) throw DomainError("alpha_exponent requires n < q < p");
  return q <= p / 2.0 ? 1.0 : p / q - 1.0;
}

// ---- deterministic random streams ----------------------------------------------

// Independent generator for (seed, stream, batch).
inline std::mt19937_64 batch_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t batch) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(batch),
                    static_cast<std::uint32_t>(batch >> 32)};
  return std::mt19937_64(seq);
}

inline constexpr std::size_t kBatch = 1 << 15;

inline VecX gaussian_vector(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g(0.0, 1.0);
  VecX v(n);
  for (int i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

inline VecX sphere_vector(std::mt19937_64& rng, int n) {
  VecX v = gaussian_vector(rng, n);
  while (v.norm() < 1e-8) v = gaussian_vector(rng, n);
  return v / v.norm();
}

inline std::string format_vector(const VecX& v) {
  std::string s = "(";
  char buf[32];
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%s%.6g", i ? ";" : "", v[i]);
    s += buf;
  }
  return s + ")";
}

// ---- pinching survey ---------------------------------------------------------------

struct PinchingSurvey {
  int n = 0;
  std::size_t samples = 0;
  std::size_t violations = 0;
  std::size_t sharp_violations = 0;
  double worst_ratio = std::numeric_limits<double>::infinity();  // min |Ric_0|^2 / bound
  VecX worst_lambda;
  double worst_lambda_low = 0.0;
};

// Spectra with Lambda_low ~ U(0.1, 2) and lambda_i ~ U(Lambda_low, 5 Lambda_low).
inline PinchingSurvey pinching_survey(int n, std::size_t samples, std::uint64_t seed) {
  if (n < 3) throw DomainError("pinching survey needs n >= 3");
  const std::size_t batches = (samples + kBatch - 1) / kBatch;
  std::vector<PinchingSurvey> part(batches);
  parallel_for(batches, [&](std::size_t b) {
    auto rng = batch_rng(seed, 0x70u + static_cast<std::uint64_t>(n), b);
    std::uniform_real_distribution<double> low(0.1, 2.0), u(0.0, 1.0);
    PinchingSurvey& s = part[b];
    const std::size_t count = std::min(kBatch, samples - b * kBatch);
    for (std::size_t k = 0; k < count; ++k) {
      const double lam = low(rng);
      VecX v(n);
      for (int i = 0; i < n; ++i) v[i] = lam * (1.0 + 4.0 * u(rng));
      const PinchingCheck c = pinching_check(EigenSpectrum(v, 0.0), lam);
      ++s.samples;
      if (!c.pass) ++s.violations;
      if (!c.sharp_pass) ++s.sharp_violations;
      if (c.bound > 0.0 && c.ricci / c.bound < s.worst_ratio) {
        s.worst_ratio = c.ricci / c.bound;
        s.worst_lambda = EigenSpectrum(v, 0.0).lambda;
        s.worst_lambda_low = lam;
      }
    }
  });
  PinchingSurvey out;
  out.n = n;
  for (const auto& s : part) {
    out.samples += s.samples;
    out.violations += s.violations;
    out.sharp_violations += s.sharp_violations;
    if (s.worst_ratio < out.worst_ratio) {
      out.worst_ratio = s.worst_ratio;
      out.worst_lambda = s.worst_lambda;
      out.worst_lambda_low = s.worst_lambda_low;
    }
  }
  return out;
}

// ---- zero sets -------------------------------------------------------------------------

// Common zeros of p and q as characterized for kappa < 0, = 0 (on the unit
// sphere of spectra) and > 0.
inline std::vector<VecX> expected_zeros(int n, double kappa) {
  std::vector<VecX> z;
  if (kappa == 0.0) {
    for (int i = 0; i < n; ++i) {
      z.push_back(VecX::Unit(n, i));
      z.push_back(-VecX::Unit(n, i));
    }
  } else if (kappa > 0.0) {
    z.push_back(std::sqrt(kappa) * VecX::Ones(n));
    z.push_back(-std::sqrt(kappa) * VecX::Ones(n));
  }
  return z;
}

inline double distance_to_set(const VecX& x, const std::vector<VecX>& set) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& z : set) d = std::min(d, (x - z).norm());
  return d;
}

struct ZeroSetCheck {
  int n = 0;
  double kappa = 0.0;
  std::size_t starts = 0;
  std::size_t p_zeros = 0;            // local minima of p with value ~ 0
  std::size_t q_zeros = 0;
  std::size_t unexpected = 0;         // zeros of p or q away from the characterization
  double expected_residual = 0.0;     // max (p + q) on the characterized points
  double min_off_zero = std::numeric_limits<double>::infinity();  // min p + q outside balls, sampled
  bool pass = false;
  std::string counterexample;         // first unexpected zero, "p" or "q" and location
};

// Local minimization of p and of q from random starts; every near-zero
// minimum must lie on the characterized set.  For kappa = 0 both
// polynomials are 4-homogeneous, so the search runs on the unit sphere.
inline ZeroSetCheck verify_zero_sets(int n, double kappa, std::size_t starts, std::size_t samples,
                                     std::uint64_t seed) {
  if (n < 3) throw DomainError("zero-set check needs n >= 3");
  ZeroSetCheck out;
  out.n = n;
  out.kappa = kappa;
  out.starts = starts;
  const auto zeros = expected_zeros(n, kappa);
  for (const auto& z : zeros) {
    const PolyValues v = polys(z, kappa);
    out.expected_residual = std::max(out.expected_residual, v.p + v.q);
  }
  const bool sphere = kappa == 0.0;
  const double scale = std::max(1.0, std::sqrt(std::abs(kappa)));
  auto project = [&](const VecX& x) -> VecX { return sphere ? VecX(x / x.norm()) : x; };
  const double zero_tol = 1e-10 * std::pow(scale, 4);
  const double ball = 0.1 * scale;

  struct Found {
    std::size_t p = 0, q = 0, unexpected = 0;
    std::string example;
    double min_off = std::numeric_limits<double>::infinity();
  };
  const std::size_t batches = (starts + 63) / 64;
  std::vector<Found> part(batches);
  parallel_for(batches, [&](std::size_t b) {
    auto rng = batch_rng(seed, 0x2e00u + static_cast<std::uint64_t>(n * 16) + static_cast<std::uint64_t>(kappa + 8), b);
    Found& f = part[b];
    const std::size_t count = std::min<std::size_t>(64, starts - b * 64);
    for (std::size_t k = 0; k < count; ++k) {
      const VecX x0 = sphere ? sphere_vector(rng, n) : VecX(1.5 * scale * gaussian_vector(rng, n));
      for (int which = 0; which < 2; ++which) {
        auto obj = [&](const VecX& x) {
          const PolyValues v = polys(project(x), kappa);
          return which == 0 ? v.p : v.q;
        };
        SimplexOptions opt;
        opt.step = 0.2 * scale;
        opt.x_tol = 1e-11 * scale;
        opt.f_tol = 0.0;
        opt.max_iter = 4000;
        SimplexResult r = nelder_mead(obj, x0, opt);
        opt.step = 1e-3 * scale;
        r = nelder_mead(obj, r.x, opt);  // restart to escape a collapsed simplex
        if (r.value > zero_tol) continue;
        (which == 0 ? f.p : f.q) += 1;
        const VecX at = project(r.x);
        if (distance_to_set(at, zeros) > 1e-4 * scale) {
          ++f.unexpected;
          if (f.example.empty()) f.example = std::string(which == 0 ? "p" : "q") + " = 0 at " + format_vector(at);
        }
      }
    }
    // sampled lower bound of p + q away from the characterized zeros
    auto srng = batch_rng(seed, 0x2f00u + static_cast<std::uint64_t>(n * 16) + static_cast<std::uint64_t>(kappa + 8), b);
    const std::size_t per = samples / batches + 1;
    for (std::size_t k = 0; k < per; ++k) {
      const VecX x = sphere ? sphere_vector(srng, n) : VecX(1.5 * scale * gaussian_vector(srng, n));
      if (distance_to_set(x, zeros) < ball) continue;
      const PolyValues v = polys(x, kappa);
      f.min_off = std::min(f.min_off, v.p + v.q);
    }
  });
  for (const auto& f : part) {
    out.p_zeros += f.p;
    out.q_zeros += f.q;
    out.unexpected += f.unexpected;
    if (out.counterexample.empty()) out.counterexample = f.example;
    out.min_off_zero = std::min(out.min_off_zero, f.min_off);
  }
  out.pass = out.unexpected == 0 && out.expected_residual <= 1e-20 * std::pow(scale, 4) + 1e-24 &&
             out.min_off_zero > 0.0;
  return out;
}

// ---- ratio bounds ----------------------------------------------------------------------

struct RatioBound {
  int n = 0;
  double kappa = 0.0;
  double c1 = std::numeric_limits<double>::infinity();  // inf p/q
  double c2 = 0.0;                                       // sup p/q
  std::size_t samples = 0;
  std::size_t resampled = 0;
  VecX argmin;
  VecX argmax;
  std::string regime_min;
  std::string regime_max;

  std::string extremizer() const {
    return "min@" + regime_min + format_vector(argmin) + " max@" + regime_max + format_vector(argmax);
  }
};

// Estimates inf and sup of p/q by stratified sampling (unit sphere with the
// kappa = 0 ratio, Gaussian bulk, shrinking balls around the zeros) and a
// local refinement of the best samples.  Samples on the common zero set are
// skipped; samples with q ~ 0 but p > 0 are redrawn and counted.
inline RatioBound ratio_bounds(int n, double kappa, std::size_t budget, std::uint64_t seed,
                               double kappa_bound = 10.0) {
  if (n < 3) throw DomainError("ratio bounds need n >= 3");
  if (std::abs(kappa) > kappa_bound) throw DomainError("kappa outside the configured bound");
  const auto zeros = expected_zeros(n, kappa);
  const double scale = std::max(1.0, std::sqrt(std::abs(kappa)));

  enum Regime { sphere, bulk, balls };
  auto regime_name = [](int r) { return r == sphere ? std::string("sphere") : r == bulk ? "bulk" : "ball"; };
  auto ratio_at = [&](const VecX& x, int regime) {
    const PolyValues v = regime == sphere ? polys(x / x.norm(), 0.0) : polys(x, kappa);
    return std::pair<double, double>(v.p, v.q);
  };

  struct Part {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    VecX xlo, xhi;
    int rlo = 0, rhi = 0;
    std::size_t samples = 0, resampled = 0;
  };
  const std::size_t batches = (budget + kBatch - 1) / kBatch;
  std::vector<Part> part(batches);
  parallel_for(batches, [&](std::size_t b) {
    auto rng = batch_rng(seed, 0x3a00u + static_cast<std::uint64_t>(n * 16) + static_cast<std::uint64_t>(kappa + 8), b);
    std::uniform_int_distribution<int> pick_zero(0, std::max(0, static_cast<int>(zeros.size()) - 1));
    std::uniform_int_distribution<int> pick_radius(1, 4);
    Part& s = part[b];
    const std::size_t count = std::min(kBatch, budget - b * kBatch);
    for (std::size_t k = 0; k < count; ++k) {
      const int regime = zeros.empty() ? static_cast<int>(k % 2) : static_cast<int>(k % 3);
      for (int attempt = 0; attempt < 16; ++attempt) {
        VecX x;
        if (regime == sphere) {
          x = sphere_vector(rng, n);
        } else if (regime == bulk) {
          x = 1.5 * scale * gaussian_vector(rng, n);
        } else {
          const VecX& z = zeros[static_cast<std::size_t>(pick_zero(rng))];
          const double r = scale * std::pow(10.0, -pick_radius(rng));
          x = z + r * sphere_vector(rng, n);
          if (kappa == 0.0) x /= x.norm();
        }
        const auto [p, q] = ratio_at(x, regime);
        const double tiny = 1e-24 * std::pow(scale * std::max(1.0, x.norm()), 4);
        if (q <= tiny) {
          if (p <= tiny) break;  // common zero: excluded
          ++s.resampled;         // q vanishes alone: redraw
          continue;
        }
        ++s.samples;
        const double r = p / q;
        if (r < s.lo) {
          s.lo = r;
          s.xlo = x;
          s.rlo = regime;
        }
        if (r > s.hi) {
          s.hi = r;
          s.xhi = x;
          s.rhi = regime;
        }
        break;
      }
    }
  });
  RatioBound out;
  out.n = n;
  out.kappa = kappa;
  int rlo = 0, rhi = 0;
  for (const auto& s : part) {
    out.samples += s.samples;
    out.resampled += s.resampled;
    if (s.lo < out.c1) {
      out.c1 = s.lo;
      out.argmin = s.xlo;
      rlo = s.rlo;
    }
    if (s.hi > out.c2) {
      out.c2 = s.hi;
      out.argmax = s.xhi;
      rhi = s.rhi;
    }
  }
  // local refinement inside the regime of each extremizer
  auto refine = [&](VecX x, int regime, double sign) {
    auto obj = [&](const VecX& y) {
      const auto [p, q] = ratio_at(y, regime);
      if (!(q > 0.0)) return std::numeric_limits<double>::infinity();
      return sign * p / q;
    };
    SimplexOptions opt;
    opt.step = 1e-2 * std::max(x.norm(), 1e-3);
    opt.x_tol = 1e-12;
    opt.f_tol = 0.0;
    opt.max_iter = 3000;
    const SimplexResult r = nelder_mead(obj, x, opt);
    return std::pair<VecX, double>(regime == sphere ? VecX(r.x / r.x.norm()) : r.x, sign * r.value);
  };
  if (out.argmin.size()) {
    const auto [x, v] = refine(out.argmin, rlo, 1.0);
    if (v < out.c1 && std::isfinite(v)) {
      out.c1 = v;
      out.argmin = x;
    }
  }
  if (out.argmax.size()) {
    const auto [x, v] = refine(out.argmax, rhi, -1.0);
    if (v > out.c2 && std::isfinite(v)) {
      out.c2 = v;
      out.argmax = x;
    }
  }
  out.regime_min = regime_name(rlo);
  out.regime_max = regime_name(rhi);
  return out;
}

}  // namespace wulffstab
