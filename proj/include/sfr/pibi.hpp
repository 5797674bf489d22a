#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sfr/geometry.hpp"
#include "sfr/greens.hpp"
#include "sfr/neural.hpp"
#include "sfr/roomsim.hpp"

namespace sfr {

/// Quadrature nodes on the rectangular integration contour.
struct BoundaryDiscretization {
  std::vector<Point2> points;
  std::vector<UnitVec2> normals;  // outward
  std::vector<double> weights;    // arc length per node, m
  Region outline;                 // the (offset) rectangle the nodes lie on

  std::size_t size() const { return points.size(); }
};

/// How the learned densities enter the boundary integral.
///  - single_layer:       p(r) = sum_i w_i G(y_i, r) s_i
///  - double_layer:       p(r) = -sum_i w_i dG/dn(y_i, r) s_i
///  - direct_two_density: p(r) = sum_i w_i [dG/dn(y_i, r) h_i - G(y_i, r) q_i]
/// In the last mode each network has two outputs, (h, q). With G = -(j/4) H0,
/// h = p and q = dp/dn on the contour reproduce an interior field p.
enum class BieRepresentation { single_layer, double_layer, direct_two_density };

std::string to_string(BieRepresentation mode);
/// Throws std::invalid_argument on an unknown name.
BieRepresentation parse_representation(const std::string& name);

/// Number of network outputs (density channels) a representation needs.
int density_channels(BieRepresentation mode);

/// Places n_int nodes at the midpoints of equal arc-length segments around the
/// region grown by `offset`, walking counter-clockwise from the bottom-left
/// corner. Nodes closer than 1e-9 m to a corner are moved half a segment along
/// the contour.
BoundaryDiscretization discretize_boundary(const Region& region, int n_int, double offset);
/// As above, and rejects contours that leave the room.
BoundaryDiscretization discretize_boundary(const Region& region, int n_int, double offset,
                                           const RoomSpec& room);

struct PibiModel {
  MlpParams net_re;
  MlpParams net_im;
  BoundaryDiscretization boundary;
  BieRepresentation representation = BieRepresentation::single_layer;
  Wavenumber k{1.0};
};

/// Builds a model with freshly initialized networks (seeded) for a region.
PibiModel make_pibi_model(const BoundaryDiscretization& boundary, BieRepresentation mode, Wavenumber k,
                          std::uint64_t seed, std::vector<int> hidden_sizes = {64, 64, 64});

/// Complex densities at the boundary nodes, one column per channel
/// (n_int x channels): net_re(y_i) + j net_im(y_i).
Eigen::MatrixXcd boundary_densities(const PibiModel& model);

/// Quadrature matrices mapping each density channel to pressures at `points`.
/// kernels[c](m, i) is the weight of channel c at node i for point m.
/// Points within 1e-12 m of a node get a zero entry (see reconstruct).
std::vector<Eigen::MatrixXcd> assemble_kernels(const BoundaryDiscretization& boundary,
                                               BieRepresentation mode, Wavenumber k,
                                               std::span<const Point2> points);

/// Minimum distance an evaluation point must keep from the contour.
inline constexpr double kMinBoundaryDistance = 1e-6;

/// Pressure at an interior point. Throws NearBoundaryError if r is not
/// strictly inside the contour by more than 1e-6 m.
Complex evaluate_field(const PibiModel& model, Point2 r);

/// Field evaluated from explicit densities (n_int x channels) instead of the networks.
Complex evaluate_field(const BoundaryDiscretization& boundary, BieRepresentation mode, Wavenumber k,
                       const Eigen::MatrixXcd& densities, Point2 r);

struct PibiLossGrads {
  double loss = 0.0;
  MlpParams grad_re;
  MlpParams grad_im;
};

/// L = sum_m |s_m - p(r_m)|^2 and its exact gradient with respect to both networks.
PibiLossGrads pibi_loss_and_grads(const PibiModel& model, const Measurements& measurements);

struct PibiConfig {
  int n_int = 200;
  double offset = 0.1;
  int steps = 5000;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  BieRepresentation representation = BieRepresentation::single_layer;
  double c = 343.0;
};

struct PibiTrainResult {
  PibiModel model;
  /// steps + 1 entries: the loss before each update, then the final loss.
  std::vector<double> loss_trace;
};

/// Full-batch Adam training of both density networks on the measurement misfit.
/// Throws TrainingError if the loss becomes non-finite.
PibiTrainResult train_pibi(const Region& region, const Measurements& measurements, const PibiConfig& config);

struct Reconstruction {
  std::vector<Complex> values;
  /// 1 where the point violated the boundary-distance precondition.
  std::vector<std::uint8_t> near_boundary;

  std::size_t flagged() const;
};

/// Field at every grid point. Points too close to the contour are still
/// evaluated (terms at coincident nodes are dropped) and flagged.
Reconstruction reconstruct(const PibiModel& model, std::span<const Point2> grid);

/// Writes <prefix>.re.mlp, <prefix>.im.mlp and the sidecar <prefix>.json
/// (contour rectangle, node count, representation, k).
void save_pibi(const std::string& prefix, const PibiModel& model);
PibiModel load_pibi(const std::string& prefix);

}  // namespace sfr
