#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "wulffstab/einstein.hpp"

using namespace wulffstab;

namespace {

// Oracle: eigenvalues of Ric = H h - h^2 for h = Q diag(lambda) Q^T.
VecX dense_ricci_eigenvalues(const VecX& lambda, std::mt19937_64& rng) {
  const int n = static_cast<int>(lambda.size());
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = g(rng);
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ();
  Eigen::MatrixXd h = q * lambda.asDiagonal() * q.transpose();
  h = 0.5 * (h + h.transpose()).eval();
  const Eigen::MatrixXd ric = h.trace() * h - h * h;
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(ric).eigenvalues();
}

VecX sorted(VecX v) {
  std::sort(v.data(), v.data() + v.size());
  return v;
}

// Oracle: || Riem - (kappa/2) g wedge g ||^2 over all four indices, Riem = (1/2) h wedge h, h diagonal.
double riemann_deviation(const VecX& lam, double kappa) {
  const int n = static_cast<int>(lam.size());
  auto delta = [](int a, int b) { return a == b ? 1.0 : 0.0; };
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          const double hik = lam[i] * delta(i, k), hjl = lam[j] * delta(j, l);
          const double hil = lam[i] * delta(i, l), hjk = lam[j] * delta(j, k);
          const double riem = hik * hjl - hil * hjk;
          const double model = kappa * (delta(i, k) * delta(j, l) - delta(i, l) * delta(j, k));
          s += (riem - model) * (riem - model);
        }
  return s;
}

}  // namespace

TEST(Einstein, SpectrumIsSortedAndAtLeastThreeDimensional) {
  const EigenSpectrum s(VecX::LinSpaced(4, 3.0, 0.0), 1.0);
  EXPECT_TRUE(std::is_sorted(s.lambda.data(), s.lambda.data() + 4));
  EXPECT_THROW(EigenSpectrum(VecX::Ones(2), 0.0), DomainError);
}

TEST(Einstein, RicciSpectrumExamples) {
  std::mt19937_64 rng(7);
  EXPECT_NEAR((ricci_spectrum(VecX::Ones(3)) - 2.0 * VecX::Ones(3)).norm(), 0.0, 1e-15);
  const VecX lam = (VecX(3) << 0.0, 1.0, 1.0).finished();
  const VecX expected = (VecX(3) << 0.0, 1.0, 1.0).finished();
  EXPECT_NEAR((ricci_spectrum(lam) - expected).norm(), 0.0, 1e-15);
  EXPECT_NEAR((sorted(ricci_spectrum(lam)) - dense_ricci_eigenvalues(lam, rng)).norm(), 0.0, 1e-12);
}

TEST(Einstein, RicciSpectrumMatchesMatrixRoute) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 2.0);
  for (int n : {3, 4, 5})
    for (int k = 0; k < 100; ++k) {
      VecX lam(n);
      for (int i = 0; i < n; ++i) lam[i] = g(rng);
      const VecX a = sorted(ricci_spectrum(lam));
      const VecX b = dense_ricci_eigenvalues(lam, rng);
      EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, b.cwiseAbs().maxCoeff()));
      // scalar curvature two ways
      EXPECT_NEAR(a.sum(), lam.sum() * lam.sum() - lam.squaredNorm(), 1e-12 * (1 + lam.squaredNorm()));
    }
}

TEST(Einstein, PinchingUmbilic) {
  const PinchingCheck c = pinching_check(EigenSpectrum(VecX::Ones(3), 0.0), 0.7);
  EXPECT_TRUE(c.applicable);
  EXPECT_EQ(c.ricci, 0.0);
  EXPECT_EQ(c.bound, 0.0);
  EXPECT_TRUE(c.pass);
}

TEST(Einstein, PinchingCounterexampleInDimensionThree) {
  // lambda = (1, 1, 2), Lambda_low = 1: Lambda = (3, 3, 4), |Ric_0|^2 = 2/3, |h_0|^2 = 2/3,
  // so (n-1) Lambda^2 |h_0|^2 = 4/3 > |Ric_0|^2 while (n-2)^2 Lambda^2 |h_0|^2 = 2/3 holds with equality.
  const PinchingCheck c = pinching_check(EigenSpectrum((VecX(3) << 1.0, 1.0, 2.0).finished(), 0.0), 1.0);
  ASSERT_TRUE(c.applicable);
  EXPECT_NEAR(c.ricci, 2.0 / 3.0, 1e-14);
  EXPECT_NEAR(c.bound, 4.0 / 3.0, 1e-14);
  EXPECT_FALSE(c.pass);
  EXPECT_NEAR(c.sharp_bound, 2.0 / 3.0, 1e-14);
  EXPECT_TRUE(c.sharp_pass);
}

TEST(Einstein, PinchingNotApplicableBelowLowerBound) {
  EXPECT_FALSE(pinching_check(EigenSpectrum((VecX(3) << 0.5, 1.0, 2.0).finished(), 0.0), 1.0).applicable);
  EXPECT_FALSE(pinching_check(EigenSpectrum(VecX::Ones(3), 0.0), 0.0).applicable);
}

TEST(Einstein, PinchingSurveyByDimension) {
  EXPECT_EQ(pinching_survey(4, 100000, 3).violations, 0u);
  EXPECT_EQ(pinching_survey(5, 100000, 3).violations, 0u);
  const PinchingSurvey s3 = pinching_survey(3, 100000, 3);
  EXPECT_GT(s3.violations, 0u);
  EXPECT_EQ(s3.sharp_violations, 0u);
}

TEST(Einstein, PolynomialZeros) {
  const PolyValues a = polys(VecX::Ones(4), 1.0);
  EXPECT_EQ(a.p, 0.0);
  EXPECT_EQ(a.q, 0.0);
  const PolyValues b = polys(VecX::Unit(3, 0), 0.0);
  EXPECT_EQ(b.p, 0.0);
  EXPECT_EQ(b.q, 0.0);
}

TEST(Einstein, PolynomialsAgainstTensorNorms) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int n : {3, 4, 5})
    for (double kappa : {-1.0, 0.0, 0.7}) {
      VecX lam(n);
      for (int i = 0; i < n; ++i) lam[i] = g(rng);
      const PolyValues v = polys(lam, kappa);
      // p is half the full four-index norm (each ordered pair appears in two index slots with equal sign)
      EXPECT_NEAR(v.p, 0.5 * riemann_deviation(lam, kappa), 1e-10 * (1 + v.p));
      // q = |Ric - (n-1) kappa g|^2
      const VecX ric = dense_ricci_eigenvalues(lam, rng);
      EXPECT_NEAR(v.q, (ric.array() - (n - 1) * kappa).square().sum(), 1e-10 * (1 + v.q));
    }
}

TEST(Einstein, HomogeneityAtKappaZero) {
  const VecX lam = (VecX(4) << 0.3, -1.1, 0.8, 2.0).finished();
  const double t = 1.7;
  const PolyValues a = polys(lam, 0.0), b = polys(t * lam, 0.0);
  EXPECT_NEAR(b.p, std::pow(t, 4) * a.p, 1e-12 * b.p);
  EXPECT_NEAR(b.q, std::pow(t, 4) * a.q, 1e-12 * b.q);
}

TEST(Einstein, RatioNearAxisTendsToOne) {
  // base e_1, mu = t e_2: p ~ 2 t^2, q ~ 2 t^2
  for (int n : {3, 4}) {
    const double t = 1e-5;
    const PolyValues v = polys(VecX::Unit(n, 0) + t * VecX::Unit(n, 1), 0.0);
    EXPECT_NEAR(v.p / (2 * t * t), 1.0, 1e-4);
    EXPECT_NEAR(v.q / (2 * t * t), 1.0, 1e-4);
  }
}

TEST(Einstein, ZeroSetsInDimensionThree) {
  for (double kappa : {-1.0, 0.0, 1.0}) {
    const ZeroSetCheck z = verify_zero_sets(3, kappa, 64, 20000, 9);
    EXPECT_TRUE(z.pass) << "kappa " << kappa << " " << z.counterexample;
  }
}

TEST(Einstein, RicciZerosOffTheRiemannZeroSetForNegativeKappa) {
  // n = 4, kappa = -1: lambda = sqrt(3) (1, -1, 1, -1) has Lambda_j = -3 = (n-1) kappa but p > 0
  const VecX lam = std::sqrt(3.0) * (VecX(4) << 1.0, -1.0, 1.0, -1.0).finished();
  const PolyValues v = polys(lam, -1.0);
  EXPECT_NEAR(v.q, 0.0, 1e-24);
  EXPECT_GT(v.p, 1.0);
  const ZeroSetCheck z = verify_zero_sets(4, -1.0, 32, 1000, 9);
  EXPECT_FALSE(z.pass);
  EXPECT_GT(z.unexpected, 0u);
}

TEST(Einstein, RatioBoundsAtKappaZero) {
  const RatioBound r = ratio_bounds(3, 0.0, 100000, 13);
  EXPECT_GT(r.c1, 0.0);
  EXPECT_TRUE(std::isfinite(r.c2));
  EXPECT_LE(r.c1, r.c2);
  EXPECT_EQ(r.samples, 100000u);
  EXPECT_FALSE(r.extremizer().empty());
  // limits found analytically: 1/2 at (1,1,1), 2 near the axes
  EXPECT_NEAR(r.c1, 0.5, 1e-6);
  EXPECT_NEAR(r.c2, 2.0, 1e-3);
  EXPECT_THROW(ratio_bounds(3, 11.0, 10, 1), DomainError);
}

TEST(Einstein, RatioBoundsAreDeterministic) {
  const RatioBound a = ratio_bounds(4, 1.0, 70000, 21), b = ratio_bounds(4, 1.0, 70000, 21);
  EXPECT_EQ(a.c1, b.c1);
  EXPECT_EQ(a.c2, b.c2);
  EXPECT_EQ(a.extremizer(), b.extremizer());
}

TEST(Einstein, AlphaExponent) {
  EXPECT_EQ(alpha_exponent(3, 10.0, 4.0), 1.0);
  EXPECT_EQ(alpha_exponent(3, 10.0, 8.0), 0.25);
  EXPECT_EQ(alpha_exponent(3, 10.0, 5.0), 1.0);
  EXPECT_EQ(10.0 / 5.0 - 1.0, 1.0);  // both branches agree at q = p/2
  EXPECT_THROW(alpha_exponent(3, 10.0, 3.0), DomainError);
  EXPECT_THROW(alpha_exponent(3, 10.0, 10.0), DomainError);
}
