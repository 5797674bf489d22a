#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "sfr/errors.hpp"
#include "sfr/greens.hpp"
#include "sfr/random.hpp"

using namespace sfr;

namespace {

Point2 random_point(Rng& rng, double lo = -3.0, double hi = 3.0) {
  return {rng.uniform(lo, hi), rng.uniform(lo, hi)};
}

UnitVec2 random_direction(Rng& rng) {
  const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
  return UnitVec2::normalized(std::cos(a), std::sin(a));
}

}  // namespace

TEST(Wavenumber, RejectsNonPositive) {
  EXPECT_THROW(Wavenumber(0.0), DomainError);
  EXPECT_THROW(Wavenumber(-1.0), DomainError);
  EXPECT_THROW(Wavenumber(std::nan("")), DomainError);
  EXPECT_THROW(Wavenumber::from_frequency(0.0, 343.0), DomainError);
  EXPECT_NEAR(Wavenumber::from_frequency(343.0, 343.0).value(), 2.0 * std::numbers::pi, 1e-15);
}

TEST(UnitVec, RejectsNonUnit) {
  EXPECT_THROW(UnitVec2::from_components(1.0, 1.0), DomainError);
  EXPECT_NO_THROW(UnitVec2::from_components(0.6, 0.8));
  EXPECT_THROW(UnitVec2::normalized(0.0, 0.0), DomainError);
}

TEST(Green2d, UnitDistanceValue) {
  const auto g = green_2d({0.0, 0.0}, {1.0, 0.0}, Wavenumber(1.0));
  EXPECT_NEAR(g.real(), 0.02206424, 1e-8);
  EXPECT_NEAR(g.imag(), -0.19129942, 1e-8);
}

TEST(Green2d, Reciprocity) {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto y = random_point(rng), r = random_point(rng);
    const Wavenumber k(rng.uniform(0.5, 20.0));
    EXPECT_EQ(green_2d(y, r, k), green_2d(r, y, k));
  }
}

TEST(Green2d, CoincidentPoints) {
  EXPECT_THROW(green_2d({1.0, 2.0}, {1.0, 2.0}, Wavenumber(3.0)), CoincidentPointsError);
  EXPECT_THROW(green_2d({1.0, 2.0}, {1.0 + 5e-13, 2.0}, Wavenumber(3.0)), CoincidentPointsError);
  EXPECT_THROW(green_2d_normal_derivative({0.0, 0.0}, {0.0, 0.0}, Wavenumber(1.0), UnitVec2::from_components(1, 0)),
               CoincidentPointsError);
}

TEST(Green2d, HelmholtzResidual) {
  Rng rng(2);
  const double h = 1e-4;
  for (int i = 0; i < 50; ++i) {
    const Wavenumber k(rng.uniform(1.0, 20.0));
    const auto y = random_point(rng);
    Point2 r;
    do r = random_point(rng);
    while (distance(r, y) <= 0.1);
    const auto g = [&](double dx, double dy) { return green_2d(y, {r.x + dx, r.y + dy}, k); };
    const Complex lap = (g(h, 0) + g(-h, 0) + g(0, h) + g(0, -h) - 4.0 * g(0, 0)) / (h * h);
    const Complex residual = lap + k.value() * k.value() * g(0, 0);
    const double scale = std::abs(lap) + k.value() * k.value() * std::abs(g(0, 0));
    EXPECT_LT(std::abs(residual) / scale, 1e-3);
  }
}

TEST(Green2d, DecaysWithDistance) {
  const Wavenumber k(5.0);
  double prev = INFINITY;
  for (int i = 0; i < 1000; ++i) {
    const double d = 0.01 + (10.0 - 0.01) * i / 999.0;
    const double m = std::abs(green_2d({0.0, 0.0}, {d, 0.0}, k));
    EXPECT_LT(m, prev) << "d=" << d;
    prev = m;
  }
}

TEST(Green2dNormal, PerpendicularIsZero) {
  const auto v = green_2d_normal_derivative({0.0, 0.0}, {2.0, 0.0}, Wavenumber(3.0), UnitVec2::from_components(0, 1));
  EXPECT_EQ(v, Complex(0.0, 0.0));
}

TEST(Green2dNormal, MatchesFiniteDifference) {
  Rng rng(3);
  const double h = 1e-6;
  for (int i = 0; i < 100; ++i) {
    const Wavenumber k(rng.uniform(0.5, 20.0));
    const auto y = random_point(rng);
    Point2 r;
    do r = random_point(rng);
    while (distance(r, y) <= 0.1);
    const auto n = random_direction(rng);
    const Point2 step{h * n.x(), h * n.y()};
    const Complex fd = (green_2d(y + step, r, k) - green_2d(y - step, r, k)) / (2 * h);
    EXPECT_LT(std::abs(green_2d_normal_derivative(y, r, k, n) - fd), 1e-6);
  }
}

TEST(Green2dNormal, FlippingNormalNegates) {
  Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    const auto y = random_point(rng), r = random_point(rng);
    const auto n = random_direction(rng);
    const Wavenumber k(2.0);
    EXPECT_EQ(green_2d_normal_derivative(y, r, k, -n), -green_2d_normal_derivative(y, r, k, n));
  }
}

TEST(Green2dNormal, LinearInDirection) {
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const auto y = random_point(rng), r = random_point(rng);
    const double k = rng.uniform(0.5, 10.0);
    const double a = rng.normal(), b = rng.normal();
    const double n1x = rng.normal(), n1y = rng.normal(), n2x = rng.normal(), n2y = rng.normal();
    const auto f = [&](double nx, double ny) { return detail::green_2d_directional_derivative(y, r, k, nx, ny); };
    const Complex lhs = f(a * n1x + b * n2x, a * n1y + b * n2y);
    const Complex rhs = a * f(n1x, n1y) + b * f(n2x, n2y);
    EXPECT_LT(std::abs(lhs - rhs), 1e-12 * (1.0 + std::abs(rhs)));
  }
}

TEST(Green3d, UnitDistanceModulus) {
  for (double k : {0.1, 1.0, 7.3}) {
    const auto g = green_3d({0, 0, 0}, {0, 1, 0}, Wavenumber(k));
    EXPECT_NEAR(std::abs(g), 1.0 / (4.0 * std::numbers::pi), 1e-15);
  }
}

TEST(Green3d, FullPeriodPhase) {
  const auto g = green_3d({0, 0, 0}, {0, 0, 2}, Wavenumber(std::numbers::pi));
  EXPECT_NEAR(g.real(), 1.0 / (8.0 * std::numbers::pi), 1e-12);
  EXPECT_NEAR(g.imag(), 0.0, 1e-12);
}

TEST(Green3d, ZeroWavenumberRejected) {
  EXPECT_THROW(green_3d({0, 0, 0}, {1, 0, 0}, Wavenumber(0.0)), DomainError);
  EXPECT_THROW(green_3d({0, 0, 0}, {0, 0, 0}, Wavenumber(1.0)), CoincidentPointsError);
}
