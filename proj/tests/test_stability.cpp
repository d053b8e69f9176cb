#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "wulffstab/stability.hpp"

using namespace wulffstab;

namespace {

const Mat3 kEllipsoid = Vec3(1.0, 1.0, 4.0).asDiagonal();

const StabilitySetup& sphere_setup() {
  static const StabilitySetup s(Integrand::constant(), 4, 8);
  return s;
}

}  // namespace

TEST(Stability, KernelExpansionIsLinearNormal) {
  const auto m = build_sphere_mesh(3);
  const SpectralBasis b(m, 2);
  const Vec3 c(0.3, -1.2, 0.7);
  const auto v = b.synthesize(kernel_expansion(c));
  for (std::size_t i = 0; i < m->size(); ++i) EXPECT_NEAR(v[i], c.dot(m->vertex(i)), 1e-13);
}

TEST(Stability, KernelFrameProjectsTranslationModes) {
  const WulffMesh w = build_wulff(Integrand::quadratic_form(kEllipsoid), 4);
  const KernelFrame frame(w);
  EXPECT_LT(frame.gram_residual(), 1e-12);
  const Vec3 c(0.1, 0.4, -0.25);
  std::vector<double> phi(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) phi[i] = c.dot(w.normal(i));
  EXPECT_NEAR((frame.component(phi) - c).norm(), 0.0, 1e-13);
  // an even function has no translation component
  std::vector<double> even(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) even[i] = w.normal(i)[2] * w.normal(i)[2];
  EXPECT_NEAR(frame.component(even).norm(), 0.0, 1e-13);
}

TEST(Stability, CenteringRecoversTranslationOfSphere) {
  const StabilitySetup& s = sphere_setup();
  const Vec3 t = Vec3(0.03, -0.02, 0.0346410161513775).normalized() * 0.05;
  const CenteringResult r = center(s.base(), s.frame(), translated_wulff(s, t));
  EXPECT_TRUE(r.converged);
  EXPECT_LE((r.c - t).norm(), 1e-4);
  EXPECT_LE(r.iterations, 10);
}

TEST(Stability, CenteringRecoversTranslationOfEllipsoid) {
  const StabilitySetup s(Integrand::quadratic_form(kEllipsoid), 4, 8);
  const Vec3 t(0.02, 0.01, -0.03);
  const CenteringResult r = center(s.base(), s.frame(), translated_wulff(s, t));
  EXPECT_TRUE(r.converged);
  EXPECT_LE((r.c - t).norm(), 1e-4);
}

TEST(Stability, CenteringRejectsNonGraphs) {
  const StabilitySetup& s = sphere_setup();
  GraphSurface g;
  g.param = Parametrization::exponential;
  g.radius = single_harmonic(6, 3, 0.3);
  CenteringOptions opt;
  opt.threshold = 0.95;
  EXPECT_THROW(center(s.base(), s.frame(), g, 1.0, opt), CertificateError);
}

TEST(Stability, RatioUndefinedOnWulffShape) {
  const StabilitySetup& s = sphere_setup();
  GraphSurface g;
  g.radius = single_harmonic(2, 0, 0.0);
  const StabilityMeasurement m = stability_ratio(s, g);
  EXPECT_LT(m.deficit, 1e-13);
  EXPECT_FALSE(m.ratio.has_value());
}

TEST(Stability, KernelPerturbationHasNoLinearDeficit) {
  // W + eps phi_c is a translate to first order: deficit O(eps^2), kernel-free distance 0
  const StabilitySetup& s = sphere_setup();
  PerturbationFamily fam;
  fam.kind = PerturbationFamily::Kind::kernel;
  fam.direction = Vec3(0.48, -0.6, 0.64);
  fam.param = Parametrization::radial;
  const StabilityMeasurement a = stability_ratio(s, fam.surface(1e-3));
  const StabilityMeasurement b = stability_ratio(s, fam.surface(2e-3));
  EXPECT_NEAR(std::log2(b.deficit / a.deficit), 2.0, 0.05);
  EXPECT_LT(a.distance, 1e-12);
  EXPECT_NEAR((a.kernel - 1e-3 * fam.direction).norm(), 0.0, 1e-15);
}

TEST(Stability, HarmonicSweepIsLinear) {
  const StabilitySetup& s = sphere_setup();
  PerturbationFamily fam;  // exponential graph of eps Y20
  const SweepResult r = scaling_sweep(s, fam, {1e-4, 3e-4, 1e-3, 3e-3, 1e-2});
  ASSERT_FALSE(r.truncated);
  ASSERT_TRUE(r.distance_fit && r.deficit_fit);
  EXPECT_NEAR(r.distance_fit->slope, 1.0, 0.05);
  EXPECT_NEAR(r.deficit_fit->slope, 1.0, 0.05);
  EXPECT_LT(r.ratio_drift, 1.1);
  for (const auto& row : r.rows)
    EXPECT_NEAR(row.measurement.oscillation.lambda_star / row.measurement.oscillation.mean_over_n, 1.0, 0.05);
}

TEST(Stability, ScalingFitOfPowerLaw) {
  const std::vector<double> eps{1e-3, 2e-3, 5e-3, 1e-2, 2e-2};
  std::vector<double> y;
  for (double e : eps) y.push_back(3.0 * std::pow(e, 1.5));
  const ScalingFit f = fit_scaling(eps, y);
  EXPECT_NEAR(f.slope, 1.5, 1e-12);
  EXPECT_NEAR(std::exp(f.intercept), 3.0, 1e-10);
  EXPECT_NEAR(f.r2, 1.0, 1e-12);
}

TEST(Stability, AmplitudeListsAreValidated) {
  EXPECT_THROW(check_amplitudes(std::vector<double>{1e-3, 1e-2, 1e-1}), DomainError);
  EXPECT_THROW(check_amplitudes(std::vector<double>{0.0, 1e-3, 1e-2, 1e-1, 1.0}), DomainError);
  EXPECT_THROW(check_amplitudes(std::vector<double>{1e-3, 2e-3, 3e-3, 4e-3, 5e-3}), DomainError);
  EXPECT_NO_THROW(check_amplitudes(std::vector<double>{1e-3, 2e-3, 3e-3, 4e-3, 1e-2}));
}

TEST(Stability, ReprojectionOfConcentricSphere) {
  const StabilitySetup& s = sphere_setup();
  GraphSurface g;
  g.param = Parametrization::exponential;
  g.radius = single_harmonic(0, 0, std::log(1.1) * std::sqrt(4.0 * std::numbers::pi));
  const Reprojection r = reproject(s.base(), g, 1.0, Vec3::Zero());
  ASSERT_TRUE(r.converged);
  // exponential graphs report log of the radial distance
  for (double u : r.radius) EXPECT_NEAR(u, std::log(1.1), 1e-12);
}
