#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "wulffstab/operators.hpp"

using namespace wulffstab;

namespace {

const Mat3 kEllipsoid = Vec3(1.0, 1.0, 4.0).asDiagonal();

ScalarField linear_normal(const WulffMesh& w, const Vec3& c, const SpectralBasis* b) {
  ScalarField f;
  f.values.resize(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) f.values[i] = c.dot(w.normal(i));
  if (b) f.spectrum = b->analyze(f.values);
  return f;
}

double relative_l2(const WulffMesh& w, const std::vector<double>& a, const std::vector<double>& ref) {
  return std::sqrt(inner(w, a, a) / inner(w, ref, ref));
}

}  // namespace

TEST(Operators, SpectralStabilityOperatorOnSphereHarmonic) {
  // F = 1: L = Laplacian + 2, so L[Y_2m] = -4 Y_2m
  const WulffMesh s = round_sphere(build_sphere_mesh(4));
  const SpectralBasis b(s.sphere, 6);
  const ScalarField y = b.field(single_harmonic(2, 1));
  const auto l = stability_operator(s, y, DerivativeMode::spectral, nullptr, &b);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(l[i], -4.0 * y.values[i], 1e-11);
}

TEST(Operators, OneRingStabilityEigenvalue) {
  const WulffMesh s = round_sphere(build_sphere_mesh(5));
  const Stencil st(s.sphere, StencilKind::one_ring_quadratic);
  const SpectralBasis b(s.sphere, 4);
  const ScalarField y = b.field(single_harmonic(2, 0));
  const auto l = stability_operator(s, y, DerivativeMode::one_ring, &st, nullptr);
  const double ev = inner(s, l, y.values) / inner(s, y.values, y.values);
  EXPECT_NEAR(ev, -4.0, 0.08);
}

TEST(Operators, OneRingLaplacianOfHarmonic) {
  const WulffMesh s = round_sphere(build_sphere_mesh(5));
  const Stencil st(s.sphere, StencilKind::one_ring_quadratic);
  const SpectralBasis b(s.sphere, 4);
  const ScalarField y = b.field(single_harmonic(2, -2));
  const auto lap = laplacian(s, st, y.values);
  std::vector<double> expected(y.values.size());
  for (std::size_t i = 0; i < expected.size(); ++i) expected[i] = -6.0 * y.values[i];
  std::vector<double> diff(lap.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = lap[i] - expected[i];
  EXPECT_LT(relative_l2(s, diff, expected), 0.02);
}

TEST(Operators, TranslationModesAreInTheKernel) {
  const WulffMesh w = build_wulff(Integrand::quadratic_form(kEllipsoid), 5);
  const Stencil st(w.sphere, StencilKind::one_ring_quadratic);
  const SpectralBasis b(w.sphere, 8);
  for (const Vec3& c : {Vec3(1, 0, 0), Vec3(0.2, -0.5, 0.8)}) {
    const ScalarField phi = linear_normal(w, c, &b);
    const auto ls = stability_operator(w, phi, DerivativeMode::spectral, nullptr, &b);
    const auto lo = stability_operator(w, phi, DerivativeMode::one_ring, &st, nullptr);
    EXPECT_LT(relative_l2(w, ls, phi.values), 1e-10);
    EXPECT_LT(relative_l2(w, lo, phi.values), 0.02);
  }
}

TEST(Operators, SobolevNormOfHarmonic) {
  // ||Y_2||_2 = 1, ||grad Y_2||_2^2 = 6, ||Hess Y_2||_2^2 = 36 - 6 (Bochner on S^2)
  const WulffMesh s = round_sphere(build_sphere_mesh(5));
  const SpectralBasis b(s.sphere, 6);
  const SobolevNorm n = w2p_norm(s, b.field(single_harmonic(2, 0)), 2.0, DerivativeMode::spectral, nullptr, &b);
  EXPECT_NEAR(n.lp, 1.0, 2e-3);
  EXPECT_NEAR(n.gradient, std::sqrt(6.0), 5e-3);
  EXPECT_NEAR(n.hessian, std::sqrt(30.0), 1e-2);
  EXPECT_NEAR(n.value, n.lp + n.gradient + n.hessian, 1e-14);
}

TEST(Operators, SpectralAndOneRingHessiansAgree) {
  const WulffMesh w = build_wulff(Integrand::quadratic_form(kEllipsoid), 5);
  const Stencil st(w.sphere, StencilKind::one_ring_quadratic);
  const SpectralBasis b(w.sphere, 8);
  const ScalarField u = b.field(single_harmonic(3, 1));
  const auto ds = derivatives(w, u, DerivativeMode::spectral, nullptr, &b);
  const auto d1 = derivatives(w, u, DerivativeMode::one_ring, &st, nullptr);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    num += w.weight[i] * (ds.hessian.values[i] - d1.hessian.values[i]).squaredNorm();
    den += w.weight[i] * ds.hessian.values[i].squaredNorm();
  }
  EXPECT_LT(std::sqrt(num / den), 0.05);
}

TEST(Operators, MissingStencilIsAnError) {
  const WulffMesh s = round_sphere(build_sphere_mesh(2));
  ScalarField u;
  u.values.assign(s.size(), 1.0);
  EXPECT_THROW(stability_operator(s, u, DerivativeMode::one_ring, nullptr, nullptr), DomainError);
  u.values.pop_back();
  EXPECT_THROW(w2p_norm(s, u, 2.0, DerivativeMode::one_ring, nullptr, nullptr), DomainError);
}
