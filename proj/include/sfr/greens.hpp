#pragma once

#include "sfr/geometry.hpp"
#include "sfr/special_math.hpp"

namespace sfr {

/// Acoustic wavenumber k = omega / c in rad/m. Always strictly positive and finite.
class Wavenumber {
 public:
  explicit Wavenumber(double k);
  static Wavenumber from_frequency(double frequency_hz, double speed_of_sound);

  double value() const noexcept { return k_; }

 private:
  double k_;
};

/// Points closer than this are treated as coincident by the Green's functions.
inline constexpr double kCoincidenceThreshold = 1e-12;

/// Free-field 2D Green's function G(y, r) = -(j/4) H0^(1)(k |r - y|).
/// Throws CoincidentPointsError when |r - y| <= 1e-12.
Complex green_2d(Point2 y, Point2 r, Wavenumber k);

/// Derivative of green_2d with respect to the source point y along the direction n.
///
/// With d = |r - y| and dH0/dz = -H1,
///
///   dG/dn_y = (j k / 4) H1^(1)(k d) ((y - r) . n) / d.
///
/// Positive when n points away from r and G grows along n. In the boundary
/// integral the normal is the outward normal of the integration contour.
Complex green_2d_normal_derivative(Point2 y, Point2 r, Wavenumber k, UnitVec2 n);

/// Free-field 3D Green's function e^{j k d} / (4 pi d).
Complex green_3d(const Point3& y, const Point3& r, Wavenumber k);

namespace detail {

/// green_2d_normal_derivative for an arbitrary (non-normalized) direction (nx, ny).
/// No unit-length check; the result is linear in the direction.
Complex green_2d_directional_derivative(Point2 y, Point2 r, double k, double nx, double ny);

}  // namespace detail
}  // namespace sfr
