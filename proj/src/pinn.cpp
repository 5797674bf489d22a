#include "sfr/pinn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "sfr/errors.hpp"
#include "sfr/random.hpp"

namespace sfr {

PinnModel make_pinn_model(Wavenumber k, double lambda, std::uint64_t seed, const std::vector<int>& layer_sizes) {
  if (!(lambda >= 0.0)) throw DomainError("pinn: lambda must be non-negative");
  return PinnModel{init_mlp(layer_sizes, derive_seed({seed, 0})), init_mlp(layer_sizes, derive_seed({seed, 1})), k,
                   lambda};
}

std::vector<Point2> sample_collocation(const Region& region, int n_coll, std::uint64_t seed, std::int64_t step) {
  if (n_coll < 1) throw DomainError("sample_collocation: n_coll must be positive");
  Rng rng(derive_seed({seed, static_cast<std::uint64_t>(step), 0xC011ULL}));
  std::vector<Point2> pts;
  pts.reserve(static_cast<std::size_t>(n_coll));
  for (int i = 0; i < n_coll; ++i) {
    const double x = rng.uniform(region.origin.x, region.x_max());
    const double y = rng.uniform(region.origin.y, region.y_max());
    pts.push_back({x, y});
  }
  return pts;
}

double helmholtz_residual(const MlpParams& net, Point2 r, Wavenumber k) {
  const auto d = forward_io_derivs(net, r);
  return d.laplacian + k.value() * k.value() * d.value;
}

namespace {

struct PartLoss {
  double data = 0.0;
  double pde = 0.0;
  MlpParams grad;
};

// One real-valued network: sum_m (t_m - f(x_m))^2 + lambda sum_n (lap f + k^2 f)^2.
PartLoss part_loss_and_grad(const MlpParams& net, const Eigen::MatrixXd& mic_inputs, const Eigen::VectorXd& targets,
                            const Eigen::MatrixXd& colloc_inputs, double k2, double lambda) {
  PartLoss out;
  const auto trace = forward_trace(net, mic_inputs);
  const Eigen::RowVectorXd residual = targets.transpose() - trace.output.row(0);
  out.data = residual.squaredNorm();
  out.grad = backprop(net, trace, -2.0 * residual);

  if (lambda > 0.0 && colloc_inputs.cols() > 0) {
    const auto d = forward_io_derivs(net, colloc_inputs);
    const Eigen::MatrixXd res = d.laplacian + k2 * d.value;
    out.pde = res.squaredNorm();
    const Eigen::MatrixXd up_lap = 2.0 * lambda * res;
    const Eigen::MatrixXd up_val = k2 * up_lap;
    out.grad.flat() += backprop_io_derivs(net, colloc_inputs, up_val, up_lap).flat();
  }
  return out;
}

Eigen::VectorXd real_parts(const std::vector<Complex>& v, bool imag) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = imag ? v[i].imag() : v[i].real();
  return out;
}

void check_model(const PinnModel& model) {
  if (!model.net_re.same_shape(model.net_im)) throw ShapeError("pinn: real and imaginary networks differ");
  if (model.net_re.input_dim() != 2 || model.net_re.output_dim() != 1) {
    throw ShapeError("pinn: networks must map 2 inputs to 1 output");
  }
  if (!(model.lambda >= 0.0)) throw DomainError("pinn: lambda must be non-negative");
}

}  // namespace

PinnLossGrads pinn_loss_and_grads(const PinnModel& model, const Measurements& measurements,
                                  std::span<const Point2> colloc) {
  check_model(model);
  measurements.validate();
  const auto mic_inputs = to_inputs(measurements.positions);
  const auto colloc_inputs = to_inputs(colloc);
  const double k2 = model.k.value() * model.k.value();
  auto re = part_loss_and_grad(model.net_re, mic_inputs, real_parts(measurements.values, false), colloc_inputs, k2,
                               model.lambda);
  auto im = part_loss_and_grad(model.net_im, mic_inputs, real_parts(measurements.values, true), colloc_inputs, k2,
                               model.lambda);
  PinnLossGrads out;
  out.data_loss = re.data + im.data;
  out.pde_loss = re.pde + im.pde;
  out.loss = out.data_loss + model.lambda * out.pde_loss;
  out.grad_re = std::move(re.grad);
  out.grad_im = std::move(im.grad);
  return out;
}

PinnTrainResult train_pinn(const Region& region, const Measurements& measurements, const PinnConfig& config) {
  if (measurements.size() == 0) throw DomainError("train_pinn: need at least one measurement");
  if (config.steps < 0) throw DomainError("train_pinn: steps must be non-negative");
  measurements.validate();
  const auto k = Wavenumber::from_frequency(measurements.frequency_hz, config.c);
  PinnTrainResult result{make_pinn_model(k, config.lambda, config.seed), {}};
  auto& model = result.model;

  const double k2 = k.value() * k.value();
  const auto mic_inputs = to_inputs(measurements.positions);
  const Eigen::VectorXd targets_re = real_parts(measurements.values, false);
  const Eigen::VectorXd targets_im = real_parts(measurements.values, true);
  auto adam_re = AdamState::zeros(static_cast<Eigen::Index>(model.net_re.size()), config.lr);
  auto adam_im = AdamState::zeros(static_cast<Eigen::Index>(model.net_im.size()), config.lr);

  result.loss_trace.reserve(static_cast<std::size_t>(config.steps) + 1);
  for (int step = 0; step <= config.steps; ++step) {
    const auto colloc = sample_collocation(region, config.n_coll, config.seed, std::min(step, std::max(config.steps - 1, 0)));
    const auto colloc_inputs = to_inputs(colloc);
    auto re = part_loss_and_grad(model.net_re, mic_inputs, targets_re, colloc_inputs, k2, config.lambda);
    auto im = part_loss_and_grad(model.net_im, mic_inputs, targets_im, colloc_inputs, k2, config.lambda);
    const double loss = re.data + im.data + config.lambda * (re.pde + im.pde);
    if (!std::isfinite(loss)) {
      std::ostringstream msg;
      msg << "train_pinn: non-finite loss " << loss << " at step " << step;
      throw TrainingError(msg.str());
    }
    result.loss_trace.push_back(loss);
    if (step == config.steps) break;
    adam_step(adam_re, model.net_re, re.grad);
    adam_step(adam_im, model.net_im, im.grad);
  }
  return result;
}

std::vector<Complex> evaluate_pinn(const PinnModel& model, std::span<const Point2> points) {
  check_model(model);
  const auto x = to_inputs(points);
  const Eigen::MatrixXd re = forward(model.net_re, x);
  const Eigen::MatrixXd im = forward(model.net_im, x);
  std::vector<Complex> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    out[i] = {re(0, static_cast<Eigen::Index>(i)), im(0, static_cast<Eigen::Index>(i))};
  }
  return out;
}

void save_pinn(const std::string& prefix, const PinnModel& model) {
  save_mlp(prefix + ".re.mlp", model.net_re);
  save_mlp(prefix + ".im.mlp", model.net_im);
  const nlohmann::json meta{{"model", "pinn"}, {"k", model.k.value()}, {"lambda", model.lambda}};
  std::ofstream out(prefix + ".json");
  if (!out) throw std::runtime_error("save_pinn: cannot open " + prefix + ".json");
  out << meta.dump(2) << '\n';
}

PinnModel load_pinn(const std::string& prefix) {
  std::ifstream in(prefix + ".json");
  if (!in) throw std::runtime_error("load_pinn: cannot open " + prefix + ".json");
  const auto meta = nlohmann::json::parse(in);
  PinnModel model{load_mlp(prefix + ".re.mlp"), load_mlp(prefix + ".im.mlp"), Wavenumber(meta.at("k").get<double>()),
                  meta.at("lambda").get<double>()};
  check_model(model);
  return model;
}

}  // namespace sfr
