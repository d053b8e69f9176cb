#include <cmath>
#include <numbers>
#include <numeric>

#include <gtest/gtest.h>

#include "wulffstab/mesh.hpp"

using namespace wulffstab;

namespace {

double y20(const Vec3& x) { return std::sqrt(5.0 / (16.0 * std::numbers::pi)) * (3.0 * x[2] * x[2] - 1.0); }

}  // namespace

TEST(Mesh, IcosphereCounts) {
  for (int level = 0; level <= 5; ++level) {
    const auto m = SphereMesh::icosphere(level);
    EXPECT_EQ(m->size(), 10u * (1u << (2 * level)) + 2u);
    EXPECT_EQ(m->faces().size(), 20u * (1u << (2 * level)));
  }
  EXPECT_THROW(SphereMesh::icosphere(9), DomainError);
}

TEST(Mesh, WeightsSumToSphereArea) {
  const auto m = build_sphere_mesh(4);
  const double total = std::accumulate(m->weights().begin(), m->weights().end(), 0.0);
  EXPECT_NEAR(total, 4.0 * std::numbers::pi, 1e-11);
  for (const auto& v : m->vertices()) EXPECT_NEAR(v.norm(), 1.0, 1e-15);
}

TEST(Mesh, FramesAreOrthonormalAndTangent) {
  const auto m = build_sphere_mesh(3);
  for (std::size_t i = 0; i < m->size(); ++i) {
    const Mat32& e = m->frame(i);
    EXPECT_NEAR((e.transpose() * e - Mat2::Identity()).norm(), 0.0, 1e-14);
    EXPECT_NEAR((e.transpose() * m->vertex(i)).norm(), 0.0, 1e-14);
  }
}

TEST(Mesh, SphericalTriangleArea) {
  // octant triangle: area pi / 2
  EXPECT_NEAR(spherical_triangle_area(Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()), std::numbers::pi / 2, 1e-14);
}

TEST(Mesh, SpectralAnalysisRecoversHarmonic) {
  const auto m = build_sphere_mesh(4);
  const SpectralBasis b(m, 8);
  std::vector<double> v(m->size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = y20(m->vertex(i)) + 0.5 * std::sqrt(3.0 / (4.0 * std::numbers::pi)) * m->vertex(i)[2];
  const SphericalExpansion e = b.analyze(v);
  for (int k = 0; k < e.coeffs.size(); ++k) {
    const double expect = k == harmonic_index(2, 0) ? 1.0 : k == harmonic_index(1, 0) ? 0.5 : 0.0;
    EXPECT_NEAR(e.coeffs[k], expect, 1e-12) << "index " << k;
  }
  EXPECT_THROW(SpectralBasis(m, 200), DomainError);
}

TEST(Mesh, SpectralJetsMatchAnalyticDerivatives) {
  // In the gnomonic chart at the north pole y -> (y, 1)/|.|: Y20 = c (3/(1+|y|^2) - 1),
  // value 2c, gradient 0, Hessian -6c Id.
  const auto m = build_sphere_mesh(3);
  const SpectralBasis b(m, 4);
  const auto jets = b.jets(single_harmonic(2, 0));
  const double c = std::sqrt(5.0 / (16.0 * std::numbers::pi));
  for (std::size_t i = 0; i < m->size(); ++i) {
    if ((m->vertex(i) - Vec3::UnitZ()).norm() > 1e-12) continue;
    EXPECT_NEAR(jets[i].value, 2.0 * c, 1e-13);
    EXPECT_NEAR(jets[i].grad.norm(), 0.0, 1e-13);
    EXPECT_NEAR((jets[i].hess + 6.0 * c * Mat2::Identity()).norm(), 0.0, 1e-12);
  }
}

TEST(Mesh, OneRingGradientConverges) {
  // gradient of the linear function <a, x> restricted to the sphere: P a
  const Vec3 a(0.3, -0.7, 0.2);
  std::vector<double> err;
  for (int level : {3, 4, 5}) {
    const auto m = build_sphere_mesh(level);
    const Stencil st(m, StencilKind::one_ring_quadratic);
    std::vector<double> v(m->size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.dot(m->vertex(i));
    double worst = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const ChartJet j = st.fit(i, v);
      worst = std::max(worst, (m->frame(i) * j.grad - tangent_projector(m->vertex(i)) * a).norm());
    }
    err.push_back(worst);
  }
  EXPECT_LT(err[1], err[0]);
  EXPECT_LT(err[2], err[1]);
  EXPECT_LT(err[2], 1e-3);
}

TEST(Mesh, LpNorms) {
  const auto m = build_sphere_mesh(3);
  const std::vector<double> ones(m->size(), 1.0);
  const double area = 4.0 * std::numbers::pi;
  EXPECT_NEAR(lp_norm(ones, m->weights(), 2.0), std::sqrt(area), 1e-12);
  EXPECT_NEAR(lp_norm(ones, m->weights(), 4.0), std::pow(area, 0.25), 1e-12);
  EXPECT_THROW(lp_norm(ones, m->weights(), 1.0), DomainError);
  EXPECT_THROW(check_exponent(0.5), DomainError);
  EXPECT_EQ(sup_norm(std::vector<double>{1.0, -3.0, 2.0}), 3.0);
}
