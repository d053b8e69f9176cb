#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "wulffstab/surface.hpp"

using namespace wulffstab;

namespace {

const Mat3 kEllipsoid = Vec3(1.0, 1.0, 4.0).asDiagonal();

ScalarField constant_field(std::size_t n, double v, const SpectralBasis& b) {
  ScalarField f;
  f.values.assign(n, v);
  f.spectrum = b.analyze(f.values);
  return f;
}

}  // namespace

TEST(Surface, ExpGraphOfConstantIsScaledSphere) {
  const auto m = build_sphere_mesh(4);
  const SpectralBasis b(m, 6);
  const double r = 1.3;
  const SurfaceGeometry g = exp_graph(m, constant_field(m->size(), std::log(r), b), DerivativeMode::spectral, nullptr, &b);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_NEAR(g.mean_curvature[i], 2.0 / r, 1e-12);
    EXPECT_NEAR((g.normal[i] - m->vertex(i)).norm(), 0.0, 1e-12);
  }
  EXPECT_NEAR(g.area(), 4.0 * std::numbers::pi * r * r, 1e-8);
}

TEST(Surface, RadialGraphOfConstantIsParallelSurface) {
  // W + delta nu_W for the round sphere is the sphere of radius 1 + delta
  const WulffMesh s = round_sphere(build_sphere_mesh(4));
  const SpectralBasis b(s.sphere, 6);
  const double delta = 0.2;
  const SurfaceGeometry g = radial_graph(s, constant_field(s.size(), delta, b), DerivativeMode::spectral, nullptr, &b);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(g.mean_curvature[i], 2.0 / (1.0 + delta), 1e-12);
}

TEST(Surface, RadialGraphOfZeroIsTheWulffShape) {
  const WulffMesh w = build_wulff(Integrand::quadratic_form(kEllipsoid), 4);
  const SpectralBasis b(w.sphere, 6);
  const SurfaceGeometry g = radial_graph(w, constant_field(w.size(), 0.0, b), DerivativeMode::spectral, nullptr, &b);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_NEAR((g.position[i] - w.position[i]).norm(), 0.0, 1e-14);
    EXPECT_NEAR((g.normal[i] - w.normal(i)).norm(), 0.0, 1e-12);
    EXPECT_NEAR(g.mean_curvature[i], w.mean_curvature[i], 1e-10);
  }
}

TEST(Surface, TraceOfGaussMapDifferentialIsMeanCurvature) {
  const auto m = build_sphere_mesh(4);
  const SpectralBasis b(m, 8);
  const SurfaceGeometry g = exp_graph(m, b.field(single_harmonic(3, 2, 0.1)), DerivativeMode::spectral, nullptr, &b);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(g.shape.values[i].trace(), g.mean_curvature[i], 1e-12);
}

TEST(Surface, TubularNeighbourhoodIsEnforced) {
  const WulffMesh w = build_wulff(Integrand::quadratic_form(kEllipsoid), 3);
  const SpectralBasis b(w.sphere, 4);
  EXPECT_THROW(radial_graph(w, constant_field(w.size(), -0.95, b), DerivativeMode::spectral, nullptr, &b),
               TubularError);
}

TEST(Surface, CertificatePassesForSmallGraph) {
  const auto m = build_sphere_mesh(4);
  const SpectralBasis b(m, 8);
  const SurfaceGeometry g = exp_graph(m, b.field(single_harmonic(3, 2, 0.05)), DerivativeMode::spectral, nullptr, &b);
  const GraphCertificate c = projection_certificate(g);
  EXPECT_TRUE(c.pass);
  EXPECT_GE(c.eta, 0.9);
  // round trip: recovered radial distance equals e^f - 1 over the unit sphere
  const auto f = b.synthesize(single_harmonic(3, 2, 0.05));
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(c.radius[i], std::exp(f[i]) - 1.0, 1e-9);
}

TEST(Surface, CertificateFailsForDumbbell) {
  // surface of revolution about the x axis with a thin neck: not a graph over S^2
  const auto m = build_sphere_mesh(4);
  const Stencil st(m, StencilKind::two_ring_cubic);
  std::vector<Vec3> pos(m->size());
  for (std::size_t i = 0; i < pos.size(); ++i) {
    const Vec3& v = m->vertex(i);
    const double s = 0.05 + 2.0 * v[0] * v[0];
    pos[i] = Vec3(v[0], s * v[1], s * v[2]);
  }
  const SurfaceGeometry g = surface_from_positions(st, pos);
  const GraphCertificate c = projection_certificate(g);
  EXPECT_FALSE(c.pass);
  EXPECT_LE(c.eta, 0.0);
}

TEST(Surface, FittedGeometryConvergesOnWulffShape) {
  const Integrand f = Integrand::quadratic_form(kEllipsoid);
  std::vector<double> err;
  for (int level : {3, 4, 5}) {
    const WulffMesh w = build_wulff(f, level);
    const Stencil st(w.sphere, StencilKind::two_ring_cubic);
    const SurfaceGeometry g = surface_from_positions(st, w.position);
    double e = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) e = std::max(e, std::abs(g.mean_curvature[i] - w.mean_curvature[i]));
    err.push_back(e);
  }
  EXPECT_LT(err[1], err[0]);
  EXPECT_LT(err[2], err[1]);
}

TEST(Surface, HausdorffOfConcentricSphere) {
  const auto m = build_sphere_mesh(4);
  const WulffMesh s = round_sphere(m);
  const double delta = 0.03;
  std::vector<Vec3> big(m->size());
  for (std::size_t i = 0; i < big.size(); ++i) big[i] = (1.0 + delta) * m->vertex(i);
  const HausdorffResult h = hausdorff_distance(big, s.position);
  EXPECT_NEAR(h.distance, delta, 0.2 * delta);
}

TEST(Surface, HausdorffRemovesTranslation) {
  const auto m = build_sphere_mesh(4);
  const WulffMesh s = round_sphere(m);
  const Vec3 t(0.1, -0.05, 0.2);
  std::vector<Vec3> moved(m->size());
  for (std::size_t i = 0; i < moved.size(); ++i) moved[i] = m->vertex(i) + t;
  const HausdorffResult h = hausdorff_distance(moved, s.position);
  EXPECT_LE(h.distance, 1e-6);
  EXPECT_NEAR((h.translation + t).norm(), 0.0, 1e-6);  // applied to the surface
}

TEST(Surface, HausdorffOfSmallExpGraph) {
  const auto m = build_sphere_mesh(5);
  const SpectralBasis b(m, 4);
  const auto f = b.synthesize(single_harmonic(2, 0, 0.01));
  double oracle = 0.0;
  for (double v : f) oracle = std::max(oracle, std::abs(std::exp(v) - 1.0));
  const SurfaceGeometry g = exp_graph(m, b.field(single_harmonic(2, 0, 0.01)), DerivativeMode::spectral, nullptr, &b);
  const HausdorffResult h = hausdorff_distance(g, round_sphere(m));
  EXPECT_NEAR(h.distance, oracle, 0.1 * oracle);
}

TEST(Surface, TranslationEquivariance) {
  const auto m = build_sphere_mesh(4);
  const SpectralBasis b(m, 8);
  const SurfaceGeometry g = exp_graph(m, b.field(single_harmonic(3, 1, 0.05)), DerivativeMode::spectral, nullptr, &b);
  const Vec3 t(0.02, 0.03, -0.01);
  const SurfaceGeometry moved = translated(g, t);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_LE((moved.position[i] - g.position[i] - t).norm(), 1e-15);
    EXPECT_EQ(moved.normal[i], g.normal[i]);
    EXPECT_EQ(moved.mean_curvature[i], g.mean_curvature[i]);
  }
  std::vector<Vec3> back(moved.position);
  for (auto& p : back) p -= t;
  EXPECT_LE(hausdorff_distance(back, g.position).distance, 1e-10);
}

TEST(Surface, GraphPointMatchesGeometry) {
  const auto m = build_sphere_mesh(3);
  const SpectralBasis b(m, 6);
  GraphSurface s;
  s.param = Parametrization::exponential;
  s.radius = single_harmonic(2, 1, 0.1);
  const SurfaceGeometry g = exp_graph(m, b.field(s.radius), DerivativeMode::spectral, nullptr, &b);
  for (std::size_t i = 0; i < m->size(); i += 7)
    EXPECT_NEAR((graph_point(Integrand::constant(), s, m->vertex(i)).position - g.position[i]).norm(), 0.0, 1e-13);
}
