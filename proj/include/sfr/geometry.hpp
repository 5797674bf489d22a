#pragma once

#include <cmath>

namespace sfr {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Point2, Point2) = default;
};

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

inline double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

inline double distance(const Point3& a, const Point3& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

/// Unit-length direction in the plane. Construction rejects vectors whose
/// squared norm differs from one by more than 1e-12.
class UnitVec2 {
 public:
  static UnitVec2 from_components(double x, double y);
  /// Normalizes (x, y); throws DomainError for the zero vector.
  static UnitVec2 normalized(double x, double y);

  double x() const noexcept { return x_; }
  double y() const noexcept { return y_; }
  UnitVec2 operator-() const noexcept { return UnitVec2(-x_, -y_); }
  friend bool operator==(UnitVec2, UnitVec2) = default;

 private:
  UnitVec2(double x, double y) : x_(x), y_(y) {}
  double x_;
  double y_;
};

/// Axis-aligned rectangle given by its bottom-left corner and side lengths.
struct Region {
  Point2 origin;
  double side_x = 0.0;
  double side_y = 0.0;

  double x_max() const { return origin.x + side_x; }
  double y_max() const { return origin.y + side_y; }
  Point2 center() const { return {origin.x + 0.5 * side_x, origin.y + 0.5 * side_y}; }
  double perimeter() const { return 2.0 * (side_x + side_y); }
  /// Closed containment with a small absolute slack.
  bool contains(Point2 p, double slack = 1e-12) const;
  /// Distance from an interior point to the nearest edge (negative outside).
  double interior_distance(Point2 p) const;
  /// Rectangle grown outward by `offset` on every side.
  Region expanded(double offset) const;

  friend bool operator==(const Region&, const Region&) = default;
};

}  // namespace sfr
