#include <cmath>

#include <gtest/gtest.h>

#include "wulffstab/flat.hpp"

using namespace wulffstab;

namespace {

double max_deviation(const FlatShape& s, const Mat2& target) {
  double worst = 0.0;
  for (std::size_t k = 0; k < s.valid.size(); ++k)
    if (s.valid[k]) worst = std::max(worst, (s.h.values[k] - target).norm());
  return worst;
}

}  // namespace

TEST(Flat, SphereCapHasConstantShape) {
  // radius-1/lambda sphere through 0: (1 - sqrt(1 - lambda^2 |z|^2)) / lambda, h = lambda Id
  const FlatGrid g(201, 0.9, 0.9);
  const double lambda = 0.5;
  const auto u = g.sample([&](const Vec2& z) { return spherical_cap(z, lambda) / lambda; });
  const FlatShape s = flat_graph_shape(g, u);
  EXPECT_GT(s.valid_count, 20000u);
  EXPECT_LE(max_deviation(s, lambda * Mat2::Identity()), 1e-4);
  EXPECT_LE(max_deviation(flat_graph_shape(g, u, DifferenceOrder::second), lambda * Mat2::Identity()), 1e-4);
}

TEST(Flat, LiteralModelFunctionHasLambdaSquaredAtOrigin) {
  // 1 - sqrt(1 - lambda^2 |z|^2) = lambda^2 |z|^2 / 2 + O(|z|^4)
  const FlatGrid g(201, 0.9, 0.9);
  const auto u = g.sample([](const Vec2& z) { return spherical_cap(z, 0.5); });
  const FlatShape s = flat_graph_shape(g, u);
  const std::size_t centre = g.index(100, 100);
  ASSERT_TRUE(s.valid[centre]);
  EXPECT_NEAR((s.h.values[centre] - 0.25 * Mat2::Identity()).norm(), 0.0, 1e-8);
}

TEST(Flat, QuadraticAtOrigin) {
  const Mat2 q = (Mat2() << 0.8, -0.3, -0.3, 0.4).finished();
  const FlatGrid g(101, 0.5, 0.5);
  const auto u = g.sample([&](const Vec2& z) { return 0.5 * z.dot(q * z); });
  const FlatShape s = flat_graph_shape(g, u);
  EXPECT_NEAR((s.h.values[g.index(50, 50)] - q).norm(), 0.0, 1e-8);
}

TEST(Flat, MatchesNestedDifferenceOracle) {
  auto u = [](double x, double y) { return 0.3 * std::sin(x) * std::cos(2 * y) + 0.1 * x * x * y; };
  const FlatGrid g(201, 0.9, 0.9);
  const FlatShape s = flat_graph_shape(g, g.sample([&](const Vec2& z) { return u(z[0], z[1]); }));
  // oracle: V^i = D^i u / sqrt(1 + |Du|^2) from central differences of u, then D_j V^i
  const double e = 1e-4;
  auto v = [&](double x, double y) {
    const double ux = (u(x + e, y) - u(x - e, y)) / (2 * e);
    const double uy = (u(x, y + e) - u(x, y - e)) / (2 * e);
    const double w = std::sqrt(1 + ux * ux + uy * uy);
    return Vec2(ux / w, uy / w);
  };
  const double d = 1e-3;
  for (int i = 20; i < 181; i += 23)
    for (int j = 20; j < 181; j += 29) {
      if (!s.valid[g.index(i, j)]) continue;
      const double x = g.coord(i), y = g.coord(j);
      Mat2 h;
      h.col(0) = (v(x + d, y) - v(x - d, y)) / (2 * d);
      h.col(1) = (v(x, y + d) - v(x, y - d)) / (2 * d);
      EXPECT_LE((s.h.values[g.index(i, j)] - h).norm(), 1e-6) << "at " << x << ", " << y;
    }
}

TEST(Flat, CapFitRecoversLambda) {
  const FlatGrid g(201, 0.9, 0.9);
  const auto u = g.sample([](const Vec2& z) { return spherical_cap(z, 0.5); });
  const CapFit f = cap_fit_residual(g, u, 4.0);
  EXPECT_NEAR(f.lambda, 0.5, 1e-9);
  EXPECT_LE(f.residual, 1e-8);
  EXPECT_TRUE(f.warning.empty());
}

TEST(Flat, SteepRimIsTrimmed) {
  const FlatGrid g(101, 0.9, 0.9);
  const auto u = g.sample([](const Vec2& z) { return spherical_cap(z, 1.1); });
  const FlatShape s = flat_graph_shape(g, u, DifferenceOrder::fourth, 2.0);
  EXPECT_GT(s.trimmed, 0u);
  EXPECT_FALSE(s.warning.empty());
}

TEST(Flat, RejectsBadGrids) {
  EXPECT_THROW(FlatGrid(5, 0.9, 0.9), DomainError);
  const FlatGrid g(11, 1.0, 1.0);
  EXPECT_THROW(flat_graph_shape(g, std::vector<double>(g.size(), 0.0)), DomainError);
  EXPECT_THROW(flat_graph_shape(FlatGrid(11, 0.5, 0.5), std::vector<double>(3, 0.0)), DomainError);
}
