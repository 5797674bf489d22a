#include "sfr/pibi.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

#include "sfr/errors.hpp"
#include "sfr/random.hpp"

namespace sfr {

std::string to_string(BieRepresentation mode) {
  switch (mode) {
    case BieRepresentation::single_layer: return "single_layer";
    case BieRepresentation::double_layer: return "double_layer";
    case BieRepresentation::direct_two_density: return "direct_two_density";
  }
  return "unknown";
}

BieRepresentation parse_representation(const std::string& name) {
  if (name == "single_layer") return BieRepresentation::single_layer;
  if (name == "double_layer") return BieRepresentation::double_layer;
  if (name == "direct_two_density") return BieRepresentation::direct_two_density;
  throw std::invalid_argument("unknown representation '" + name + "'");
}

int density_channels(BieRepresentation mode) {
  return mode == BieRepresentation::direct_two_density ? 2 : 1;
}

BoundaryDiscretization discretize_boundary(const Region& region, int n_int, double offset) {
  if (n_int < 4) throw DomainError("discretize_boundary: need at least 4 integration points");
  if (!(offset >= 0.0) || !std::isfinite(offset)) throw DomainError("discretize_boundary: offset must be >= 0");
  if (!(region.side_x > 0.0) || !(region.side_y > 0.0)) throw DomainError("discretize_boundary: empty region");

  BoundaryDiscretization b;
  b.outline = region.expanded(offset);
  const double lx = b.outline.side_x;
  const double ly = b.outline.side_y;
  const double perimeter = b.outline.perimeter();
  const double seg = perimeter / n_int;
  const std::array<double, 5> corners{0.0, lx, lx + ly, 2.0 * lx + ly, perimeter};
  const double x0 = b.outline.origin.x;
  const double y0 = b.outline.origin.y;

  b.points.reserve(static_cast<std::size_t>(n_int));
  b.normals.reserve(static_cast<std::size_t>(n_int));
  b.weights.assign(static_cast<std::size_t>(n_int), seg);
  for (int i = 0; i < n_int; ++i) {
    double t = (i + 0.5) * seg;
    for (double c : corners) {
      if (std::abs(t - c) < 1e-9) {
        t = std::fmod(t + 0.5 * seg, perimeter);
        break;
      }
    }
    if (t < lx) {
      b.points.push_back({x0 + t, y0});
      b.normals.push_back(UnitVec2::from_components(0.0, -1.0));
    } else if (t < lx + ly) {
      b.points.push_back({x0 + lx, y0 + (t - lx)});
      b.normals.push_back(UnitVec2::from_components(1.0, 0.0));
    } else if (t < 2.0 * lx + ly) {
      b.points.push_back({x0 + lx - (t - lx - ly), y0 + ly});
      b.normals.push_back(UnitVec2::from_components(0.0, 1.0));
    } else {
      b.points.push_back({x0, y0 + ly - (t - 2.0 * lx - ly)});
      b.normals.push_back(UnitVec2::from_components(-1.0, 0.0));
    }
  }
  return b;
}

BoundaryDiscretization discretize_boundary(const Region& region, int n_int, double offset,
                                           const RoomSpec& room) {
  auto b = discretize_boundary(region, n_int, offset);
  const Region& o = b.outline;
  if (!(o.origin.x > 0.0 && o.origin.y > 0.0 && o.x_max() < room.length_x && o.y_max() < room.length_y)) {
    throw DomainError("discretize_boundary: offset contour leaves the room");
  }
  return b;
}

PibiModel make_pibi_model(const BoundaryDiscretization& boundary, BieRepresentation mode, Wavenumber k,
                          std::uint64_t seed, std::vector<int> hidden_sizes) {
  std::vector<int> sizes{2};
  sizes.insert(sizes.end(), hidden_sizes.begin(), hidden_sizes.end());
  sizes.push_back(density_channels(mode));
  return PibiModel{init_mlp(sizes, derive_seed({seed, 0})), init_mlp(sizes, derive_seed({seed, 1})), boundary,
                   mode, k};
}

namespace {

void check_model(const PibiModel& model) {
  if (!model.net_re.same_shape(model.net_im)) throw ShapeError("pibi: real and imaginary networks differ");
  if (model.net_re.output_dim() != density_channels(model.representation)) {
    throw ShapeError("pibi: network outputs do not match the representation");
  }
  if (model.boundary.size() == 0) throw ShapeError("pibi: empty boundary");
}

Eigen::MatrixXcd combine(const Eigen::MatrixXd& re, const Eigen::MatrixXd& im) {
  // re, im: channels x n_int -> n_int x channels
  Eigen::MatrixXcd d(re.cols(), re.rows());
  d.real() = re.transpose();
  d.imag() = im.transpose();
  return d;
}

// Kernel entries for one evaluation point and node: single-layer and double-layer parts.
struct KernelPair {
  Complex single;
  Complex dbl;
};

KernelPair kernel_entry(const BoundaryDiscretization& b, std::size_t i, Point2 r, Wavenumber k,
                        bool need_single, bool need_double) {
  const double d = distance(b.points[i], r);
  if (!(d > kCoincidenceThreshold)) return {};
  KernelPair kp{};
  const double w = b.weights[i];
  if (need_single) kp.single = w * green_2d(b.points[i], r, k);
  if (need_double) kp.dbl = -w * green_2d_normal_derivative(b.points[i], r, k, b.normals[i]);
  return kp;
}

void check_interior(const BoundaryDiscretization& b, Point2 r) {
  if (!(b.outline.interior_distance(r) > kMinBoundaryDistance)) {
    throw NearBoundaryError("evaluation point is not strictly inside the integration contour");
  }
}

}  // namespace

Eigen::MatrixXcd boundary_densities(const PibiModel& model) {
  check_model(model);
  const auto x = to_inputs(model.boundary.points);
  return combine(forward(model.net_re, x), forward(model.net_im, x));
}

std::vector<Eigen::MatrixXcd> assemble_kernels(const BoundaryDiscretization& boundary,
                                               BieRepresentation mode, Wavenumber k,
                                               std::span<const Point2> points) {
  const auto m = static_cast<Eigen::Index>(points.size());
  const auto n = static_cast<Eigen::Index>(boundary.size());
  const bool need_single = mode != BieRepresentation::double_layer;
  const bool need_double = mode != BieRepresentation::single_layer;
  Eigen::MatrixXcd single = need_single ? Eigen::MatrixXcd::Zero(m, n) : Eigen::MatrixXcd();
  Eigen::MatrixXcd dbl = need_double ? Eigen::MatrixXcd::Zero(m, n) : Eigen::MatrixXcd();
  for (Eigen::Index row = 0; row < m; ++row) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto kp = kernel_entry(boundary, static_cast<std::size_t>(i), points[static_cast<std::size_t>(row)],
                                   k, need_single, need_double);
      if (need_single) single(row, i) = kp.single;
      if (need_double) dbl(row, i) = kp.dbl;
    }
  }
  switch (mode) {
    case BieRepresentation::single_layer: return {std::move(single)};
    case BieRepresentation::double_layer: return {std::move(dbl)};
    case BieRepresentation::direct_two_density: return {-dbl, -single};  // (h, q)
  }
  return {};
}

namespace {

Eigen::VectorXcd apply_kernels(const std::vector<Eigen::MatrixXcd>& kernels, const Eigen::MatrixXcd& densities) {
  Eigen::VectorXcd p = kernels.front() * densities.col(0);
  for (std::size_t c = 1; c < kernels.size(); ++c) p += kernels[c] * densities.col(static_cast<Eigen::Index>(c));
  return p;
}

}  // namespace

Complex evaluate_field(const BoundaryDiscretization& boundary, BieRepresentation mode, Wavenumber k,
                       const Eigen::MatrixXcd& densities, Point2 r) {
  check_interior(boundary, r);
  if (densities.rows() != static_cast<Eigen::Index>(boundary.size()) || densities.cols() != density_channels(mode)) {
    throw ShapeError("evaluate_field: density matrix shape mismatch");
  }
  const Point2 pts[1] = {r};
  return apply_kernels(assemble_kernels(boundary, mode, k, pts), densities)(0);
}

Complex evaluate_field(const PibiModel& model, Point2 r) {
  check_interior(model.boundary, r);
  return evaluate_field(model.boundary, model.representation, model.k, boundary_densities(model), r);
}

namespace {

// Loss and network gradients for precomputed kernels and node inputs.
//   e = s - sum_c K_c sigma_c,  L = |e|^2
//   dL/d Re(sigma_c) = -2 Re(K_c^H e),  dL/d Im(sigma_c) = -2 Im(K_c^H e)
struct PibiProblem {
  Eigen::MatrixXd inputs;
  std::vector<Eigen::MatrixXcd> kernels;
  Eigen::VectorXcd targets;
};

PibiProblem make_problem(const BoundaryDiscretization& boundary, BieRepresentation mode, Wavenumber k,
                         const Measurements& measurements) {
  measurements.validate();
  for (const auto& p : measurements.positions) check_interior(boundary, p);
  PibiProblem prob;
  prob.inputs = to_inputs(boundary.points);
  prob.kernels = assemble_kernels(boundary, mode, k, measurements.positions);
  prob.targets = Eigen::Map<const Eigen::VectorXcd>(measurements.values.data(),
                                                     static_cast<Eigen::Index>(measurements.values.size()));
  return prob;
}

PibiLossGrads loss_and_grads(const PibiProblem& prob, const MlpParams& net_re, const MlpParams& net_im) {
  const auto trace_re = forward_trace(net_re, prob.inputs);
  const auto trace_im = forward_trace(net_im, prob.inputs);
  const Eigen::MatrixXcd densities = combine(trace_re.output, trace_im.output);
  const Eigen::VectorXcd residual = prob.targets - apply_kernels(prob.kernels, densities);

  const auto channels = static_cast<Eigen::Index>(prob.kernels.size());
  const Eigen::Index n = prob.inputs.cols();
  Eigen::MatrixXd up_re(channels, n);
  Eigen::MatrixXd up_im(channels, n);
  for (Eigen::Index c = 0; c < channels; ++c) {
    const Eigen::VectorXcd g = prob.kernels[static_cast<std::size_t>(c)].adjoint() * residual;
    up_re.row(c) = -2.0 * g.real().transpose();
    up_im.row(c) = -2.0 * g.imag().transpose();
  }
  return {residual.squaredNorm(), backprop(net_re, trace_re, up_re), backprop(net_im, trace_im, up_im)};
}

}  // namespace

PibiLossGrads pibi_loss_and_grads(const PibiModel& model, const Measurements& measurements) {
  check_model(model);
  const auto prob = make_problem(model.boundary, model.representation, model.k, measurements);
  return loss_and_grads(prob, model.net_re, model.net_im);
}

PibiTrainResult train_pibi(const Region& region, const Measurements& measurements, const PibiConfig& config) {
  if (measurements.size() == 0) throw DomainError("train_pibi: need at least one measurement");
  if (config.steps < 0) throw DomainError("train_pibi: steps must be non-negative");
  const auto k = Wavenumber::from_frequency(measurements.frequency_hz, config.c);
  const auto boundary = discretize_boundary(region, config.n_int, config.offset);

  PibiTrainResult result{make_pibi_model(boundary, config.representation, k, config.seed), {}};
  auto& model = result.model;
  const auto prob = make_problem(boundary, config.representation, k, measurements);

  auto adam_re = AdamState::zeros(static_cast<Eigen::Index>(model.net_re.size()), config.lr);
  auto adam_im = AdamState::zeros(static_cast<Eigen::Index>(model.net_im.size()), config.lr);
  result.loss_trace.reserve(static_cast<std::size_t>(config.steps) + 1);
  for (int step = 0; step <= config.steps; ++step) {
    auto lg = loss_and_grads(prob, model.net_re, model.net_im);
    if (!std::isfinite(lg.loss)) {
      std::ostringstream msg;
      msg << "train_pibi: non-finite loss " << lg.loss << " at step " << step;
      throw TrainingError(msg.str());
    }
    result.loss_trace.push_back(lg.loss);
    if (step == config.steps) break;
    adam_step(adam_re, model.net_re, lg.grad_re);
    adam_step(adam_im, model.net_im, lg.grad_im);
  }
  return result;
}

std::size_t Reconstruction::flagged() const {
  std::size_t n = 0;
  for (auto f : near_boundary) n += f;
  return n;
}

Reconstruction reconstruct(const PibiModel& model, std::span<const Point2> grid) {
  check_model(model);
  const auto densities = boundary_densities(model);
  const auto kernels = assemble_kernels(model.boundary, model.representation, model.k, grid);
  Reconstruction out;
  const Eigen::VectorXcd p = apply_kernels(kernels, densities);
  out.values.assign(p.data(), p.data() + p.size());
  out.near_boundary.reserve(grid.size());
  for (const auto& r : grid) {
    out.near_boundary.push_back(model.boundary.outline.interior_distance(r) > kMinBoundaryDistance ? 0 : 1);
  }
  return out;
}

void save_pibi(const std::string& prefix, const PibiModel& model) {
  save_mlp(prefix + ".re.mlp", model.net_re);
  save_mlp(prefix + ".im.mlp", model.net_im);
  const auto& o = model.boundary.outline;
  nlohmann::json meta{{"model", "pibi"},
                      {"representation", to_string(model.representation)},
                      {"k", model.k.value()},
                      {"n_int", model.boundary.size()},
                      {"contour", {{"origin", {o.origin.x, o.origin.y}}, {"sides", {o.side_x, o.side_y}}}}};
  std::ofstream out(prefix + ".json");
  if (!out) throw std::runtime_error("save_pibi: cannot open " + prefix + ".json");
  out << meta.dump(2) << '\n';
}

PibiModel load_pibi(const std::string& prefix) {
  std::ifstream in(prefix + ".json");
  if (!in) throw std::runtime_error("load_pibi: cannot open " + prefix + ".json");
  const auto meta = nlohmann::json::parse(in);
  const auto& c = meta.at("contour");
  const Region outline{{c.at("origin").at(0).get<double>(), c.at("origin").at(1).get<double>()},
                       c.at("sides").at(0).get<double>(),
                       c.at("sides").at(1).get<double>()};
  PibiModel model{load_mlp(prefix + ".re.mlp"),
                  load_mlp(prefix + ".im.mlp"),
                  discretize_boundary(outline, meta.at("n_int").get<int>(), 0.0),
                  parse_representation(meta.at("representation").get<std::string>()),
                  Wavenumber(meta.at("k").get<double>())};
  check_model(model);
  return model;
}

}  // namespace sfr
