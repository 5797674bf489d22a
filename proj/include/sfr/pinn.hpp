#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sfr/geometry.hpp"
#include "sfr/greens.hpp"
#include "sfr/neural.hpp"
#include "sfr/roomsim.hpp"

namespace sfr {

/// Physics-informed baseline: two real networks (real and imaginary part of
/// the pressure) penalized by the Helmholtz residual with weight lambda.
struct PinnModel {
  MlpParams net_re;
  MlpParams net_im;
  Wavenumber k{1.0};
  double lambda = 1e-3;
};

PinnModel make_pinn_model(Wavenumber k, double lambda, std::uint64_t seed,
                          const std::vector<int>& layer_sizes = kDefaultLayerSizes);

/// n_coll points uniform on the region; a pure function of (seed, step).
std::vector<Point2> sample_collocation(const Region& region, int n_coll, std::uint64_t seed, std::int64_t step);

/// (lap + k^2) f at r.
double helmholtz_residual(const MlpParams& net, Point2 r, Wavenumber k);

struct PinnLossGrads {
  double loss = 0.0;
  double data_loss = 0.0;
  double pde_loss = 0.0;
  MlpParams grad_re;
  MlpParams grad_im;
};

/// loss = sum_m |s_m - (f_re + j f_im)(r_m)|^2 + lambda sum_n [res_re(r_n)^2 + res_im(r_n)^2]
/// with exact parameter gradients through both the value and Laplacian paths.
PinnLossGrads pinn_loss_and_grads(const PinnModel& model, const Measurements& measurements,
                                  std::span<const Point2> colloc);

struct PinnConfig {
  int n_coll = 200;
  int steps = 5000;
  double lr = 1e-3;
  double lambda = 1e-3;
  std::uint64_t seed = 0;
  double c = 343.0;
};

struct PinnTrainResult {
  PinnModel model;
  /// steps + 1 entries: combined loss before each update, then the final loss
  /// (on the last step's collocation set).
  std::vector<double> loss_trace;
};

/// Trains the two networks independently with Adam, drawing fresh collocation
/// points every step. Throws TrainingError on a non-finite loss.
PinnTrainResult train_pinn(const Region& region, const Measurements& measurements, const PinnConfig& config);

/// f_re + j f_im at every point.
std::vector<Complex> evaluate_pinn(const PinnModel& model, std::span<const Point2> points);

/// Writes <prefix>.re.mlp, <prefix>.im.mlp and <prefix>.json (k, lambda).
void save_pinn(const std::string& prefix, const PinnModel& model);
PinnModel load_pinn(const std::string& prefix);

}  // namespace sfr
