#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sfr/geometry.hpp"
#include "sfr/greens.hpp"

namespace sfr {

/// Rectangular 2D room [0, length_x] x [0, length_y] with one point source
/// and a uniform wall reflection coefficient.
struct RoomSpec {
  double length_x = 5.0;
  double length_y = 4.0;
  Point2 source{3.2, 1.0};
  double beta = 0.0;
  double c = 343.0;

  /// Throws DomainError on an invalid room.
  void validate() const;
  bool contains(Point2 p) const { return p.x >= 0 && p.x <= length_x && p.y >= 0 && p.y <= length_y; }
};

/// Checks that `region` lies strictly inside the room and does not contain the source.
void validate_region(const Region& region, const RoomSpec& room);

/// Microphone positions with their complex pressure readings at one frequency.
struct Measurements {
  std::vector<Point2> positions;
  std::vector<Complex> values;
  double frequency_hz = 0.0;

  std::size_t size() const { return positions.size(); }
  /// Throws ShapeError when positions and values differ in length.
  void validate() const;
};

struct ReflectionEstimate {
  double beta = 0.0;
  /// Set when the absorption estimate reached 1 and beta was forced to 0.
  bool fully_absorbing = false;
};

/// Wall reflection coefficient for a target reverberation time, using the
/// two-dimensional Sabine estimate alpha = (24 ln 10 / c) A / (P t60),
/// A = Lx Ly, P = 2 (Lx + Ly), beta = sqrt(1 - alpha) clamped to [0, 0.999].
ReflectionEstimate reflection_from_t60(double length_x, double length_y, double t60, double c);

/// Frequency-domain image-source sum at r. Images are indexed by
/// (n_x, n_y, s_x, s_y), s in {0, 1}; the image sits at
/// ((1 - 2 s_x) x_s + 2 n_x Lx, (1 - 2 s_y) y_s + 2 n_y Ly) and has reflection
/// order o = |2 n_x - s_x| + |2 n_y - s_y|. Images with o <= 2 max_order
/// contribute beta^o G(image, r), so max_order counts lattice shells
/// (|n_x| + |n_y| is about o / 2) and max_order = 0 is the direct path alone.
Complex image_source_field(const RoomSpec& room, Point2 r, Wavenumber k, int max_order);

/// Image-source field at many points; the image list is built once.
std::vector<Complex> image_source_field(const RoomSpec& room, std::span<const Point2> points,
                                        Wavenumber k, int max_order);

/// Row-major grid (x fastest) of nx * ny equally spaced points spanning the closed region.
std::vector<Point2> make_grid(const Region& region, int nx, int ny);

/// Adds circularly-symmetric complex Gaussian noise whose per-sample power is
/// ||p||^2 / (M 10^(snr_db / 10)). Deterministic in `seed`.
std::vector<Complex> add_measurement_noise(std::span<const Complex> clean, double snr_db,
                                           std::uint64_t seed);

/// Ground-truth microphone readings s_m = p(r_m) + e_m (noiseless when snr_db is empty).
Measurements simulate_measurements(const RoomSpec& room, std::span<const Point2> positions,
                                   double frequency_hz, int max_order,
                                   std::optional<double> snr_db, std::uint64_t seed);

}  // namespace sfr
