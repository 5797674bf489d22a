#include "sfr/roomsim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "sfr/errors.hpp"
#include "sfr/random.hpp"

namespace sfr {

void RoomSpec::validate() const {
  if (!(length_x > 0.0) || !(length_y > 0.0)) throw DomainError("room dimensions must be positive");
  if (!(source.x > 0.0 && source.x < length_x && source.y > 0.0 && source.y < length_y)) {
    throw DomainError("source must lie strictly inside the room");
  }
  if (!(beta >= 0.0 && beta < 1.0)) throw DomainError("reflection coefficient must be in [0, 1)");
  if (!(c > 0.0)) throw DomainError("speed of sound must be positive");
}

void validate_region(const Region& region, const RoomSpec& room) {
  if (!(region.side_x > 0.0) || !(region.side_y > 0.0)) throw DomainError("region sides must be positive");
  if (!(region.origin.x > 0.0 && region.origin.y > 0.0 && region.x_max() < room.length_x &&
        region.y_max() < room.length_y)) {
    throw DomainError("region must lie strictly inside the room");
  }
  if (region.contains(room.source, 0.0)) throw DomainError("region must not contain the source");
}

void Measurements::validate() const {
  if (positions.size() != values.size()) throw ShapeError("measurements: positions/values length mismatch");
}

ReflectionEstimate reflection_from_t60(double length_x, double length_y, double t60, double c) {
  if (!(t60 > 0.0)) throw DomainError("t60 must be positive");
  if (!(length_x > 0.0 && length_y > 0.0 && c > 0.0)) throw DomainError("invalid room for t60 conversion");
  const double area = length_x * length_y;
  const double perimeter = 2.0 * (length_x + length_y);
  const double alpha = (24.0 * std::numbers::ln10 / c) * area / (perimeter * t60);
  if (alpha >= 1.0) return {0.0, true};
  return {std::clamp(std::sqrt(std::max(0.0, 1.0 - alpha)), 0.0, 0.999), false};
}

namespace {

struct Image {
  Point2 position;
  double weight;
};

std::vector<Image> build_images(const RoomSpec& room, int max_order) {
  if (max_order < 0) throw DomainError("max_order must be non-negative");
  std::vector<Image> images;
  for (int nx = -max_order - 1; nx <= max_order + 1; ++nx) {
    for (int ny = -max_order - 1; ny <= max_order + 1; ++ny) {
      for (int sx = 0; sx <= 1; ++sx) {
        for (int sy = 0; sy <= 1; ++sy) {
          const int order = std::abs(2 * nx - sx) + std::abs(2 * ny - sy);
          if (order > 2 * max_order) continue;
          const Point2 pos{(1 - 2 * sx) * room.source.x + 2.0 * nx * room.length_x,
                           (1 - 2 * sy) * room.source.y + 2.0 * ny * room.length_y};
          images.push_back({pos, std::pow(room.beta, order)});
        }
      }
    }
  }
  // Direct path first, so that max_order = 0 and beta = 0 give bit-identical sums.
  std::stable_sort(images.begin(), images.end(),
                   [](const Image& a, const Image& b) { return a.weight > b.weight; });
  return images;
}

Complex sum_images(const std::vector<Image>& images, Point2 r, Wavenumber k) {
  Complex total{0.0, 0.0};
  for (const auto& img : images) {
    if (distance(img.position, r) <= kCoincidenceThreshold) {
      throw CoincidentPointsError("image_source_field: receiver coincides with an image source");
    }
    if (img.weight == 0.0) continue;
    total += img.weight * green_2d(img.position, r, k);
  }
  return total;
}

}  // namespace

Complex image_source_field(const RoomSpec& room, Point2 r, Wavenumber k, int max_order) {
  room.validate();
  return sum_images(build_images(room, max_order), r, k);
}

std::vector<Complex> image_source_field(const RoomSpec& room, std::span<const Point2> points,
                                        Wavenumber k, int max_order) {
  room.validate();
  const auto images = build_images(room, max_order);
  std::vector<Complex> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(sum_images(images, p, k));
  return out;
}

std::vector<Point2> make_grid(const Region& region, int nx, int ny) {
  if (nx < 2 || ny < 2) throw DomainError("make_grid: nx and ny must be at least 2");
  std::vector<Point2> grid;
  grid.reserve(static_cast<std::size_t>(nx) * ny);
  const double dx = region.side_x / (nx - 1);
  const double dy = region.side_y / (ny - 1);
  for (int iy = 0; iy < ny; ++iy) {
    const double y = iy == ny - 1 ? region.y_max() : region.origin.y + iy * dy;
    for (int ix = 0; ix < nx; ++ix) {
      const double x = ix == nx - 1 ? region.x_max() : region.origin.x + ix * dx;
      grid.push_back({x, y});
    }
  }
  return grid;
}

std::vector<Complex> add_measurement_noise(std::span<const Complex> clean, double snr_db,
                                           std::uint64_t seed) {
  std::vector<Complex> out(clean.begin(), clean.end());
  if (clean.empty()) return out;
  double power = 0.0;
  for (const auto& v : clean) power += std::norm(v);
  const double variance = power / (static_cast<double>(clean.size()) * std::pow(10.0, snr_db / 10.0));
  const double sigma = std::sqrt(0.5 * variance);
  Rng rng(seed);
  for (auto& v : out) {
    const double re = rng.normal();
    const double im = rng.normal();
    v += Complex{sigma * re, sigma * im};
  }
  return out;
}

Measurements simulate_measurements(const RoomSpec& room, std::span<const Point2> positions,
                                   double frequency_hz, int max_order,
                                   std::optional<double> snr_db, std::uint64_t seed) {
  for (const auto& p : positions) {
    if (!room.contains(p)) throw DomainError("simulate_measurements: position outside the room");
  }
  const auto k = Wavenumber::from_frequency(frequency_hz, room.c);
  Measurements m;
  m.positions.assign(positions.begin(), positions.end());
  m.frequency_hz = frequency_hz;
  m.values = image_source_field(room, positions, k, max_order);
  if (snr_db) m.values = add_measurement_noise(m.values, *snr_db, seed);
  return m;
}

}  // namespace sfr
