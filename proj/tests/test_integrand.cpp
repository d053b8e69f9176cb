#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "wulffstab/integrand.hpp"

using namespace wulffstab;

namespace {

const Mat3 kEllipsoid = Vec3(1.0, 1.0, 4.0).asDiagonal();

}  // namespace

TEST(Integrand, ConstantGivesUnitSphere) {
  const WulffMesh w = build_wulff(Integrand::constant(), 4);
  for (std::size_t i = 0; i < w.size(); ++i) {
    EXPECT_NEAR((w.position[i] - w.normal(i)).norm(), 0.0, 1e-12);
    EXPECT_NEAR(w.mean_curvature[i], 2.0, 1e-12);
  }
}

TEST(Integrand, QuadraticFormGivesEllipsoid) {
  // support function sqrt(nu^T M nu) <-> ellipsoid x^T M^{-1} x = 1 with x = M nu / F
  const WulffMesh w = build_wulff(Integrand::quadratic_form(kEllipsoid), 5);
  const Mat3 inv = kEllipsoid.inverse();
  double worst = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const Vec3& nu = w.normal(i);
    worst = std::max(worst, std::abs(w.position[i].dot(inv * w.position[i]) - 1.0));
    const Vec3 expected = kEllipsoid * nu / std::sqrt(nu.dot(kEllipsoid * nu));
    EXPECT_NEAR((w.position[i] - expected).norm(), 0.0, 1e-12);
  }
  EXPECT_LE(worst, 1e-10);
}

TEST(Integrand, AreaOfUnitSphere) {
  const WulffMesh w = build_wulff(Integrand::constant(), 5);
  EXPECT_NEAR(w.area(), 4.0 * std::numbers::pi, 1e-9);
}

TEST(Integrand, GaugeMatchesClosedForms) {
  const Integrand one = Integrand::constant();
  const Integrand quad = Integrand::quadratic_form(kEllipsoid);
  const Mat3 inv = kEllipsoid.inverse();
  for (const Vec3& x : {Vec3(0.3, 0.2, 1.5), Vec3(-2.0, 0.1, 0.4), Vec3(0.0, 0.0, -3.0)}) {
    EXPECT_NEAR(gauge(one, x).value, x.norm(), 1e-13);
    EXPECT_NEAR(gauge(quad, x).value, std::sqrt(x.dot(inv * x)), 1e-12);
  }
  EXPECT_THROW(gauge(one, Vec3::Zero()), DomainError);
}

TEST(Integrand, GaugeIsOneOnWulffShape) {
  const Integrand f = Integrand::fourier_perturbed(Integrand::constant(), {{3, 1, 0.05}, {2, 0, 0.04}});
  const WulffMesh w = build_wulff(f, 3);
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(gauge(f, w.position[i]).value, 1.0, 1e-10);
}

TEST(Integrand, RobinIdentityByFiniteDifferences) {
  // dF*(x)[c] = <nu_W, c> / F(nu_W) on W
  const Integrand f = Integrand::quadratic_form(kEllipsoid);
  const WulffMesh w = build_wulff(f, 3);
  const double h = 1e-6;
  for (std::size_t i = 0; i < w.size(); i += 17)
    for (int k = 0; k < 3; ++k) {
      const Vec3 c = Vec3::Unit(k);
      const double fd = (gauge(f, w.position[i] + h * c).value - gauge(f, w.position[i] - h * c).value) / (2 * h);
      EXPECT_NEAR(fd, w.normal(i)[k] / f.value(w.normal(i)), 1e-7);
    }
}

TEST(Integrand, AnisotropyOfQuadraticForm) {
  // Tangential Hessian of the homogeneous extension sqrt(x^T M x), which already contains the F Id term:
  // A_F = (P M P) / F - (P M nu)(P M nu)^T / F^3, P the tangent projector
  const Integrand f = Integrand::quadratic_form(kEllipsoid);
  const Vec3 nu = Vec3(0.3, -0.4, 0.5).normalized();
  const double F = std::sqrt(nu.dot(kEllipsoid * nu));
  const Mat3 P = Mat3::Identity() - nu * nu.transpose();
  const Vec3 g = P * kEllipsoid * nu;
  const Mat3 expected = P * kEllipsoid * P / F - g * g.transpose() / (F * F * F);
  EXPECT_NEAR((f.anisotropy_ambient(nu) - expected).norm(), 0.0, 1e-12);
}

TEST(Integrand, NonEllipticIntegrandIsRejected) {
  // F = 1 + a Y_60 stays positive but D^2F + F loses definiteness for a large enough a
  const Integrand f = Integrand::fourier_perturbed(Integrand::constant(), {{6, 0, 0.9}});
  ASSERT_LT(f.ellipticity_margin(), 0.0);
  EXPECT_THROW(build_wulff(f, 3), EllipticityError);
}

TEST(Integrand, RejectsBadInputs) {
  EXPECT_THROW(Integrand::constant(0.0), DomainError);
  EXPECT_THROW(Integrand::quadratic_form(Vec3(1.0, -1.0, 1.0).asDiagonal()), DomainError);
  EXPECT_THROW(Integrand::constant().value(Vec3(1.0, 1.0, 0.0)), DomainError);
  EXPECT_THROW(build_wulff(Integrand::constant(), 1), DomainError);
}

TEST(Integrand, HashIsStable) {
  const Integrand a = Integrand::quadratic_form(kEllipsoid);
  const Integrand b = Integrand::quadratic_form(kEllipsoid);
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_NE(a.hash(), Integrand::constant().hash());
}

TEST(Integrand, MeshRoundTrip) {
  const WulffMesh w = build_wulff(Integrand::quadratic_form(kEllipsoid), 2);
  std::stringstream ss;
  write_mesh(ss, w);
  std::string first;
  std::getline(std::istringstream(ss.str()) >> std::ws, first);
  EXPECT_EQ(first, "# wulffstab-mesh 1");
  const MeshFile m = read_mesh(ss);
  EXPECT_EQ(m.level, 2);
  EXPECT_EQ(m.integrand_hash, w.integrand.hash());
  ASSERT_EQ(m.positions.size(), w.size());
  ASSERT_EQ(m.faces.size(), w.sphere->faces().size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    EXPECT_EQ(m.positions[i], w.position[i]);
    EXPECT_EQ(m.normals[i], w.normal(i));
  }
  std::istringstream bad("# wulffstab-mesh 1\nv 1 2\n");
  EXPECT_THROW(read_mesh(bad), std::runtime_error);
}
