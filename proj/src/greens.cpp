#include "sfr/greens.hpp"

#include <cmath>
#include <numbers>

#include "sfr/errors.hpp"

namespace sfr {

Wavenumber::Wavenumber(double k) : k_(k) {
  if (!std::isfinite(k) || !(k > 0.0)) throw DomainError("Wavenumber must be positive and finite");
}

Wavenumber Wavenumber::from_frequency(double frequency_hz, double speed_of_sound) {
  if (!(speed_of_sound > 0.0)) throw DomainError("speed of sound must be positive");
  return Wavenumber(2.0 * std::numbers::pi * frequency_hz / speed_of_sound);
}

Complex green_2d(Point2 y, Point2 r, Wavenumber k) {
  const double d = distance(r, y);
  if (!(d > kCoincidenceThreshold)) throw CoincidentPointsError("green_2d: coincident points");
  const Complex h0 = hankel1(0, k.value() * d);
  // -(j/4)(J0 + jY0) = Y0/4 - j J0/4
  return {0.25 * h0.imag(), -0.25 * h0.real()};
}

namespace detail {

Complex green_2d_directional_derivative(Point2 y, Point2 r, double k, double nx, double ny) {
  const double dx = y.x - r.x;
  const double dy = y.y - r.y;
  const double d = std::hypot(dx, dy);
  if (!(d > kCoincidenceThreshold)) {
    throw CoincidentPointsError("green_2d_normal_derivative: coincident points");
  }
  const Complex h1 = hankel1(1, k * d);
  const double scale = 0.25 * k * (dx * nx + dy * ny) / d;
  // (j k / 4) H1 * projection
  return {-scale * h1.imag(), scale * h1.real()};
}

}  // namespace detail

Complex green_2d_normal_derivative(Point2 y, Point2 r, Wavenumber k, UnitVec2 n) {
  return detail::green_2d_directional_derivative(y, r, k.value(), n.x(), n.y());
}

Complex green_3d(const Point3& y, const Point3& r, Wavenumber k) {
  const double d = distance(r, y);
  if (!(d > kCoincidenceThreshold)) throw CoincidentPointsError("green_3d: coincident points");
  const double amp = 1.0 / (4.0 * std::numbers::pi * d);
  const double phase = k.value() * d;
  return {amp * std::cos(phase), amp * std::sin(phase)};
}

}  // namespace sfr
