#include "sfr/geometry.hpp"

#include <algorithm>

#include "sfr/errors.hpp"

namespace sfr {

UnitVec2 UnitVec2::from_components(double x, double y) {
  const double n2 = x * x + y * y;
  if (!std::isfinite(n2) || std::abs(n2 - 1.0) > 1e-12) {
    throw DomainError("UnitVec2: vector is not unit length");
  }
  return UnitVec2(x, y);
}

UnitVec2 UnitVec2::normalized(double x, double y) {
  const double n = std::hypot(x, y);
  if (!(n > 0.0) || !std::isfinite(n)) throw DomainError("UnitVec2: cannot normalize zero vector");
  return UnitVec2(x / n, y / n);
}

bool Region::contains(Point2 p, double slack) const {
  return p.x >= origin.x - slack && p.x <= x_max() + slack && p.y >= origin.y - slack &&
         p.y <= y_max() + slack;
}

double Region::interior_distance(Point2 p) const {
  return std::min({p.x - origin.x, x_max() - p.x, p.y - origin.y, y_max() - p.y});
}

Region Region::expanded(double offset) const {
  return Region{{origin.x - offset, origin.y - offset}, side_x + 2.0 * offset, side_y + 2.0 * offset};
}

}  // namespace sfr
