#pragma once

// Differential operators on a Wulff mesh W (the round sphere is the case
// F = 1).  Fields on W are functions of the normal nu, so derivatives are
// taken in the gnomonic chart of the sphere of normals and converted with
// the Cahn-Hoffman differential A = A_F: dx/dy = E A, metric g = A^2.
//
// Two derivative routes:
//   spectral  band-limited fields, exact chart jets from the harmonic expansion
//   one_ring  local least-squares fits; the Hessian is the iterated gradient

#include <cmath>
#include <span>
#include <vector>

#include "wulffstab/errors.hpp"
#include "wulffstab/integrand.hpp"
#include "wulffstab/mesh.hpp"
#include "wulffstab/parallel.hpp"

namespace wulffstab {

enum class DerivativeMode { spectral, one_ring };

inline const char* mode_name(DerivativeMode m) { return m == DerivativeMode::spectral ? "spectral" : "one_ring"; }

// Gradient (ambient tangent vectors) and covariant Hessian written in the
// orthonormal sphere frame E at every node.
struct FieldDerivatives {
  std::vector<double> value;
  std::vector<Vec3> gradient;
  TensorField hessian{{}, TensorKind::bilinear};
};

namespace detail {

inline void check_size(const WulffMesh& w, std::size_t n) {
  if (n != w.size()) throw DomainError("field size does not match the base mesh");
}

// Ambient gradient on W from sphere-chart first derivatives.
inline Vec3 gradient_from_chart(const WulffMesh& w, std::size_t i, const Vec2& du) {
  return w.frame(i) * w.differential[i].ldlt().solve(du);
}

}  // namespace detail

// Chart jets of a scalar at every node, by either route.
inline std::vector<ChartJet> chart_jets(const ScalarField& u, DerivativeMode mode, const Stencil* stencil,
                                        const SpectralBasis* basis) {
  if (mode == DerivativeMode::spectral) {
    if (!basis) throw DomainError("spectral derivatives need a spectral basis");
    const SphericalExpansion s = u.spectrum ? *u.spectrum : basis->analyze(u.values);
    return basis->jets(s);
  }
  if (!stencil) throw DomainError("one-ring derivatives need a stencil");
  return stencil->fit_all(u.values);
}

inline std::vector<Vec3> surface_gradient(const WulffMesh& w, const Stencil& stencil, std::span<const double> u) {
  detail::check_size(w, u.size());
  std::vector<Vec3> out(u.size());
  parallel_for(u.size(), [&](std::size_t i) { out[i] = detail::gradient_from_chart(w, i, stencil.fit(i, u).grad); });
  return out;
}

// div X = g^{ij} <d_i X, d_j x> for a tangent field X on W.
inline std::vector<double> surface_divergence(const WulffMesh& w, const Stencil& stencil, std::span<const Vec3> x) {
  detail::check_size(w, x.size());
  std::vector<double> out(x.size());
  parallel_for(x.size(), [&](std::size_t i) {
    const PointJet j = stencil.fit(i, x);
    const Mat2 m = j.d1.transpose() * w.tangent(i);
    out[i] = w.metric(i).inverse().cwiseProduct(m.transpose()).sum();
  });
  return out;
}

inline std::vector<double> laplacian(const WulffMesh& w, const Stencil& stencil, std::span<const double> u) {
  const auto g = surface_gradient(w, stencil, u);
  return surface_divergence(w, stencil, g);
}

// Gradient and covariant Hessian.  Spectral: chart Hessian minus the
// Christoffel term of W.  One-ring: <d_i grad u, d_j x>, symmetrized.
inline FieldDerivatives derivatives(const WulffMesh& w, const ScalarField& u, DerivativeMode mode,
                                    const Stencil* stencil, const SpectralBasis* basis) {
  detail::check_size(w, u.size());
  const std::size_t n = u.size();
  const auto jets = chart_jets(u, mode, stencil, basis);
  FieldDerivatives d;
  d.value.resize(n);
  d.gradient.resize(n);
  d.hessian.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    d.value[i] = mode == DerivativeMode::spectral ? jets[i].value : u.values[i];
    d.gradient[i] = detail::gradient_from_chart(w, i, jets[i].grad);
  }
  parallel_for(n, [&](std::size_t i) {
    const Mat2& a = w.differential[i];
    const Mat2 ainv = a.inverse();
    Mat2 hc;
    if (mode == DerivativeMode::spectral) {
      // Gamma^k_ij du_k = <x_ij, grad u>
      hc = jets[i].hess;
      for (int p = 0; p < 2; ++p)
        for (int q = 0; q < 2; ++q) hc(p, q) -= w.second[i][static_cast<std::size_t>(p + q)].dot(d.gradient[i]);
    } else {
      if (!stencil->has_hessian(i)) throw StencilError("one-ring too small for second derivatives");
      const PointJet gj = stencil->fit(i, std::span<const Vec3>(d.gradient));
      hc = gj.d1.transpose() * w.tangent(i);
      hc = 0.5 * (hc + hc.transpose()).eval();
    }
    d.hessian.values[i] = ainv * hc * ainv;
  });
  return d;
}

struct SobolevNorm {
  double value = 0.0;     // sum of the three parts
  double lp = 0.0;
  double gradient = 0.0;
  double hessian = 0.0;
};

// ||u||_{L^p} + ||grad u||_{L^p} + ||Hess u||_{L^p} on W.
inline SobolevNorm w2p_norm(const WulffMesh& w, const ScalarField& u, double p, DerivativeMode mode,
                            const Stencil* stencil, const SpectralBasis* basis) {
  check_exponent(p);
  const FieldDerivatives d = derivatives(w, u, mode, stencil, basis);
  std::vector<double> g(d.gradient.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = d.gradient[i].norm();
  SobolevNorm s;
  s.lp = lp_norm(d.value, w.weight, p);
  s.gradient = lp_norm(g, w.weight, p);
  s.hessian = lp_norm(d.hessian, w.weight, p);
  s.value = s.lp + s.gradient + s.hessian;
  return s;
}

// L[u] = div(A_F grad u) + H u with A_F at nu_W and H the mean curvature of W.
//
// Spectral route: A_F grad_W u is the sphere gradient of u(nu), so
// L[u] = tr(A^{-1} Hess_S2 u) + tr(A^{-1}) u.  One-ring route: the field
// A_F grad u is formed explicitly and its divergence fitted.
inline std::vector<double> stability_operator(const WulffMesh& w, const ScalarField& u, DerivativeMode mode,
                                              const Stencil* stencil, const SpectralBasis* basis) {
  detail::check_size(w, u.size());
  const std::size_t n = u.size();
  std::vector<double> out(n);
  if (mode == DerivativeMode::spectral) {
    const auto jets = chart_jets(u, mode, stencil, basis);
    parallel_for(n, [&](std::size_t i) {
      const Mat2 ainv = w.differential[i].inverse();
      out[i] = ainv.cwiseProduct(jets[i].hess).sum() + w.mean_curvature[i] * jets[i].value;
    });
    return out;
  }
  if (!stencil) throw DomainError("one-ring derivatives need a stencil");
  const auto grad = surface_gradient(w, *stencil, u.values);
  std::vector<Vec3> flux(n);
  parallel_for(n, [&](std::size_t i) { flux[i] = w.integrand.anisotropy_ambient(w.normal(i)) * grad[i]; });
  const auto div = surface_divergence(w, *stencil, flux);
  for (std::size_t i = 0; i < n; ++i) out[i] = div[i] + w.mean_curvature[i] * u.values[i];
  return out;
}

// L^2(W) inner product with the mesh weights, summed in node order.
inline double inner(const WulffMesh& w, std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += w.weight[i] * a[i] * b[i];
  return s;
}

}  // namespace wulffstab
