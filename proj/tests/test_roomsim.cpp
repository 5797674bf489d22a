#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "sfr/errors.hpp"
#include "sfr/random.hpp"
#include "sfr/roomsim.hpp"

using namespace sfr;

namespace {

RoomSpec paper_room(double beta) {
  RoomSpec room;
  room.beta = beta;
  return room;
}

Point2 random_interior(Rng& rng, const RoomSpec& room, double margin) {
  return {rng.uniform(margin, room.length_x - margin), rng.uniform(margin, room.length_y - margin)};
}

}  // namespace

TEST(ReflectionFromT60, PaperRoom) {
  // alpha = (24 ln 10 / c) A / (P t60), recomputed by hand.
  const double alpha = (24.0 * std::log(10.0) / 343.0) * 20.0 / (18.0 * 0.4);
  const auto est = reflection_from_t60(5.0, 4.0, 0.4, 343.0);
  EXPECT_NEAR(est.beta, std::sqrt(1.0 - alpha), 1e-15);
  // the quoted values 0.44753 and 0.74329 are rounded
  EXPECT_NEAR(alpha, 0.44753, 2e-5);
  EXPECT_NEAR(est.beta, 0.74329, 2e-5);
  EXPECT_FALSE(est.fully_absorbing);
}

TEST(ReflectionFromT60, LongReverberationClamps) {
  EXPECT_EQ(reflection_from_t60(5.0, 4.0, 1e9, 343.0).beta, 0.999);
  EXPECT_EQ(reflection_from_t60(5.0, 4.0, INFINITY, 343.0).beta, 0.999);
}

TEST(ReflectionFromT60, FullyAbsorbingFlag) {
  const auto est = reflection_from_t60(5.0, 4.0, 0.01, 343.0);
  EXPECT_EQ(est.beta, 0.0);
  EXPECT_TRUE(est.fully_absorbing);
  EXPECT_THROW(reflection_from_t60(5.0, 4.0, 0.0, 343.0), DomainError);
}

TEST(RoomSpec, Validation) {
  EXPECT_NO_THROW(paper_room(0.5).validate());
  auto bad = paper_room(1.0);
  EXPECT_THROW(bad.validate(), DomainError);
  bad = paper_room(0.5);
  bad.source = {5.0, 1.0};
  EXPECT_THROW(bad.validate(), DomainError);
  bad = paper_room(0.5);
  bad.c = 0.0;
  EXPECT_THROW(bad.validate(), DomainError);
}

TEST(RoomSpec, RegionMustBeSourceFreeAndInside) {
  const auto room = paper_room(0.5);
  EXPECT_NO_THROW(validate_region({{0.5, 0.5}, 2.0, 2.0}, room));
  EXPECT_THROW(validate_region({{2.5, 0.5}, 2.0, 2.0}, room), DomainError);
  EXPECT_THROW(validate_region({{0.0, 0.5}, 2.0, 2.0}, room), DomainError);
}

TEST(ImageSource, OrderZeroIsDirectPath) {
  Rng rng(1);
  const Wavenumber k = Wavenumber::from_frequency(390.625, 343.0);
  for (double beta : {0.0, 0.3, 0.9}) {
    const auto room = paper_room(beta);
    for (int i = 0; i < 20; ++i) {
      const auto r = random_interior(rng, room, 0.1);
      EXPECT_EQ(image_source_field(room, r, k, 0), green_2d(room.source, r, k));
    }
  }
}

TEST(ImageSource, ZeroBetaMatchesDirectPathBitForBit) {
  Rng rng(2);
  const Wavenumber k = Wavenumber::from_frequency(625.0, 343.0);
  const auto room = paper_room(0.0);
  for (int i = 0; i < 20; ++i) {
    const auto r = random_interior(rng, room, 0.1);
    EXPECT_EQ(image_source_field(room, r, k, 10), image_source_field(room, r, k, 0));
  }
}

TEST(ImageSource, SelfConvergence) {
  Rng rng(3);
  const Wavenumber k = Wavenumber::from_frequency(390.0, 343.0);
  const auto room = paper_room(0.74);
  for (int i = 0; i < 20; ++i) {
    const auto r = random_interior(rng, room, 0.1);
    const auto p40 = image_source_field(room, r, k, 40);
    const auto p20 = image_source_field(room, r, k, 20);
    EXPECT_LT(std::abs(p40 - p20) / std::abs(p40), 1e-3);
  }
}

TEST(ImageSource, LowOrderImagesByHand) {
  const auto room = paper_room(0.5);
  const Wavenumber k(3.0);
  const Point2 r{1.0, 2.0};
  const double xs = room.source.x, ys = room.source.y, lx = 10.0, ly = 8.0;
  const auto g = [&](double x, double y) { return green_2d({x, y}, r, k); };
  const Complex first = g(-xs, ys) + g(lx - xs, ys) + g(xs, -ys) + g(xs, ly - ys);
  const Complex second = g(-xs, -ys) + g(lx - xs, -ys) + g(-xs, ly - ys) + g(xs + lx, ys) + g(xs - lx, ys) +
                         g(xs, ys + ly) + g(xs, ys - ly) + g(lx - xs, ly - ys);
  const Complex expected = g(xs, ys) + 0.5 * first + 0.25 * second;
  EXPECT_LT(std::abs(image_source_field(room, r, k, 1) - expected), 1e-14);
}

TEST(ImageSource, BatchMatchesPointwise) {
  Rng rng(4);
  const auto room = paper_room(0.74);
  const Wavenumber k(7.0);
  std::vector<Point2> pts;
  for (int i = 0; i < 10; ++i) pts.push_back(random_interior(rng, room, 0.1));
  const auto batch = image_source_field(room, pts, k, 15);
  for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_EQ(batch[i], image_source_field(room, pts[i], k, 15));
}

TEST(ImageSource, CoincidenceWithSource) {
  const auto room = paper_room(0.5);
  EXPECT_THROW(image_source_field(room, room.source, Wavenumber(1.0), 3), CoincidentPointsError);
}

TEST(ImageSource, HelmholtzResidual) {
  Rng rng(5);
  const auto room = paper_room(reflection_from_t60(5.0, 4.0, 0.4, 343.0).beta);
  const double h = 1e-3;
  for (double f : {109.375, 390.625, 1046.875}) {
    const Wavenumber k = Wavenumber::from_frequency(f, 343.0);
    for (int i = 0; i < 10; ++i) {
      Point2 r;
      do r = random_interior(rng, room, 0.2);
      while (distance(r, room.source) < 0.2);
      const auto p = [&](double dx, double dy) { return image_source_field(room, {r.x + dx, r.y + dy}, k, 10); };
      const Complex lap = (p(h, 0) + p(-h, 0) + p(0, h) + p(0, -h) - 4.0 * p(0, 0)) / (h * h);
      const double kk = k.value() * k.value();
      EXPECT_LT(std::abs(lap + kk * p(0, 0)) / (kk * std::abs(p(0, 0))), 1e-2) << "f=" << f;
    }
  }
}

TEST(ImageSource, SquareRoomSymmetry) {
  RoomSpec room;
  room.length_x = room.length_y = 4.0;
  room.source = {2.0, 2.0};
  room.beta = 0.8;
  const Wavenumber k = Wavenumber::from_frequency(300.0, 343.0);
  Rng rng(6);
  for (int i = 0; i < 20; ++i) {
    const auto r = random_interior(rng, room, 0.1);
    const auto p = image_source_field(room, r, k, 20);
    const double tol = 1e-10 * std::max(1.0, std::abs(p));
    EXPECT_LT(std::abs(image_source_field(room, {4.0 - r.x, r.y}, k, 20) - p), tol);
    EXPECT_LT(std::abs(image_source_field(room, {r.x, 4.0 - r.y}, k, 20) - p), tol);
    EXPECT_LT(std::abs(image_source_field(room, {r.y, r.x}, k, 20) - p), tol);
  }
}

TEST(MakeGrid, TwoByTwoCorners) {
  const auto g = make_grid({{0.5, 0.5}, 2.0, 2.0}, 2, 2);
  ASSERT_EQ(g.size(), 4u);
  EXPECT_EQ(g[0], (Point2{0.5, 0.5}));
  EXPECT_EQ(g[1], (Point2{2.5, 0.5}));
  EXPECT_EQ(g[2], (Point2{0.5, 2.5}));
  EXPECT_EQ(g[3], (Point2{2.5, 2.5}));
}

TEST(MakeGrid, ThirtyByThirty) {
  const Region region{{0.5, 0.5}, 2.0, 2.0};
  const auto g = make_grid(region, 30, 30);
  ASSERT_EQ(g.size(), 900u);
  EXPECT_NEAR(g[1].x - g[0].x, 2.0 / 29.0, 1e-12);
  EXPECT_NEAR(g[30].y - g[0].y, 2.0 / 29.0, 1e-12);
  EXPECT_NEAR(2.0 / 29.0, 0.06897, 1e-5);
  for (const auto& p : g) EXPECT_TRUE(region.contains(p));
  EXPECT_EQ(g.back(), (Point2{2.5, 2.5}));
  EXPECT_THROW(make_grid(region, 1, 30), DomainError);
}

TEST(Measurements, NoiselessEqualsField) {
  const auto room = paper_room(0.74);
  const auto pos = make_grid({{0.5, 0.5}, 2.0, 2.0}, 5, 5);
  const auto m = simulate_measurements(room, pos, 390.625, 40, std::nullopt, 7);
  const Wavenumber k = Wavenumber::from_frequency(390.625, room.c);
  ASSERT_EQ(m.size(), pos.size());
  EXPECT_EQ(m.frequency_hz, 390.625);
  for (std::size_t i = 0; i < pos.size(); ++i) EXPECT_EQ(m.values[i], image_source_field(room, pos[i], k, 40));
}

TEST(Measurements, NoiseDeterministic) {
  const auto room = paper_room(0.74);
  const auto pos = make_grid({{0.5, 0.5}, 2.0, 2.0}, 5, 5);
  const auto a = simulate_measurements(room, pos, 390.625, 10, 10.0, 7);
  const auto b = simulate_measurements(room, pos, 390.625, 10, 10.0, 7);
  const auto c = simulate_measurements(room, pos, 390.625, 10, 10.0, 8);
  EXPECT_EQ(a.values, b.values);
  EXPECT_NE(a.values, c.values);
}

TEST(Measurements, NoisePowerMatchesSnr) {
  Rng rng(8);
  std::vector<Complex> clean(10000);
  for (auto& v : clean) v = {rng.normal(), rng.normal()};
  const auto noisy = add_measurement_noise(clean, 20.0, 99);
  double e2 = 0.0, p2 = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    e2 += std::norm(noisy[i] - clean[i]);
    p2 += std::norm(clean[i]);
  }
  EXPECT_NEAR(10.0 * std::log10(e2 / p2), -20.0, 0.5);
}

TEST(Measurements, ShapeValidation) {
  Measurements m;
  m.positions = {{1.0, 1.0}};
  EXPECT_THROW(m.validate(), ShapeError);
}
