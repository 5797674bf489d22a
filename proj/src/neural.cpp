#include "sfr/neural.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "sfr/errors.hpp"
#include "sfr/random.hpp"

namespace sfr {

std::size_t count_params(std::span<const int> layer_sizes) {
  if (layer_sizes.size() < 2) throw DomainError("count_params: need at least two layer sizes");
  std::size_t total = 0;
  for (std::size_t i = 0; i + 1 < layer_sizes.size(); ++i) {
    if (layer_sizes[i] <= 0 || layer_sizes[i + 1] <= 0) {
      throw DomainError("count_params: layer sizes must be positive");
    }
    const auto n_in = static_cast<std::size_t>(layer_sizes[i]);
    const auto n_out = static_cast<std::size_t>(layer_sizes[i + 1]);
    total += n_in * n_out + n_out;
  }
  return total;
}

MlpParams::MlpParams(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
  const auto total = count_params(sizes_);
  offsets_.reserve(sizes_.size());
  Eigen::Index offset = 0;
  for (int l = 0; l + 1 < static_cast<int>(sizes_.size()); ++l) {
    offsets_.push_back(offset);
    offset += static_cast<Eigen::Index>(sizes_[l]) * sizes_[l + 1] + sizes_[l + 1];
  }
  flat_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(total));
}

Eigen::Map<const RowMatrix> MlpParams::weight(int layer) const {
  return {flat_.data() + offsets_[layer], sizes_[layer + 1], sizes_[layer]};
}

Eigen::Map<RowMatrix> MlpParams::weight(int layer) {
  return {flat_.data() + offsets_[layer], sizes_[layer + 1], sizes_[layer]};
}

Eigen::Map<const Eigen::VectorXd> MlpParams::bias(int layer) const {
  return {flat_.data() + offsets_[layer] + static_cast<Eigen::Index>(sizes_[layer]) * sizes_[layer + 1],
          sizes_[layer + 1]};
}

Eigen::Map<Eigen::VectorXd> MlpParams::bias(int layer) {
  return {flat_.data() + offsets_[layer] + static_cast<Eigen::Index>(sizes_[layer]) * sizes_[layer + 1],
          sizes_[layer + 1]};
}

MlpParams init_mlp(const std::vector<int>& layer_sizes, std::uint64_t seed) {
  MlpParams params(layer_sizes);
  Rng rng(seed);
  for (int l = 0; l < params.num_layers(); ++l) {
    auto w = params.weight(l);
    const double bound = std::sqrt(6.0 / (w.rows() + w.cols()));
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-bound, bound);
    }
  }
  return params;
}

namespace {

void check_inputs(const MlpParams& params, const Eigen::MatrixXd& inputs) {
  if (params.num_layers() < 1) throw ShapeError("network has no layers");
  if (inputs.rows() != params.input_dim()) throw ShapeError("input dimension does not match network");
}

// z = W a + b broadcast over columns.
Eigen::MatrixXd affine(const MlpParams& params, int layer, const Eigen::MatrixXd& a) {
  Eigen::MatrixXd z = params.weight(layer) * a;
  z.colwise() += params.bias(layer);
  return z;
}

Eigen::MatrixXd tanh_of(const Eigen::MatrixXd& z) { return z.array().tanh().matrix(); }

}  // namespace

Eigen::MatrixXd forward(const MlpParams& params, const Eigen::MatrixXd& inputs) {
  check_inputs(params, inputs);
  Eigen::MatrixXd a = inputs;
  const int last = params.num_layers() - 1;
  for (int l = 0; l < last; ++l) a = tanh_of(affine(params, l, a));
  return affine(params, last, a);
}

Eigen::MatrixXd to_inputs(std::span<const Point2> points) {
  Eigen::MatrixXd x(2, static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    x(0, static_cast<Eigen::Index>(i)) = points[i].x;
    x(1, static_cast<Eigen::Index>(i)) = points[i].y;
  }
  return x;
}

namespace {

Eigen::MatrixXd single_input(const MlpParams& params, Point2 r) {
  if (params.input_dim() != 2) throw ShapeError("point evaluation needs a 2-input network");
  Eigen::MatrixXd x(2, 1);
  x << r.x, r.y;
  return x;
}

void require_scalar_output(const MlpParams& params) {
  if (params.output_dim() != 1) throw ShapeError("point evaluation needs a single-output network");
}

// Per hidden layer: inputs to the layer and the pre-activation derivative channels.
struct DerivLayerCache {
  Eigen::MatrixXd a_prev;
  std::vector<Eigen::MatrixXd> j_prev;
  Eigen::MatrixXd l_prev;
  Eigen::MatrixXd t;
  std::vector<Eigen::MatrixXd> zj;
  Eigen::MatrixXd zl;
};

struct DerivForward {
  IoDerivsBatch out;
  std::vector<DerivLayerCache> hidden;
  // Inputs to the output layer.
  Eigen::MatrixXd a_last;
  std::vector<Eigen::MatrixXd> j_last;
  Eigen::MatrixXd l_last;
};

// Propagates (value, Jacobian columns, Laplacian) through the network.
//   z = W a + b,  Jz_c = W J_c,  Lz = W L
//   a' = tanh(z), J'_c = s1 Jz_c, L' = s2 sum_c Jz_c^2 + s1 Lz
// with s1 = 1 - t^2 and s2 = -2 t s1.
DerivForward forward_with_derivs(const MlpParams& params, const Eigen::MatrixXd& inputs, bool keep_cache) {
  check_inputs(params, inputs);
  const Eigen::Index d = inputs.rows();
  const Eigen::Index batch = inputs.cols();
  Eigen::MatrixXd a = inputs;
  std::vector<Eigen::MatrixXd> jac(static_cast<std::size_t>(d));
  for (Eigen::Index c = 0; c < d; ++c) {
    jac[c] = Eigen::MatrixXd::Zero(d, batch);
    jac[c].row(c).setOnes();
  }
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(d, batch);

  DerivForward fwd;
  const int last = params.num_layers() - 1;
  for (int l = 0; l < last; ++l) {
    const auto w = params.weight(l);
    DerivLayerCache cache;
    Eigen::MatrixXd z = affine(params, l, a);
    cache.zj.resize(jac.size());
    for (std::size_t c = 0; c < jac.size(); ++c) cache.zj[c] = w * jac[c];
    cache.zl = w * lap;
    cache.t = tanh_of(z);
    const Eigen::ArrayXXd t = cache.t.array();
    const Eigen::ArrayXXd s1 = 1.0 - t.square();
    const Eigen::ArrayXXd s2 = -2.0 * t * s1;
    Eigen::ArrayXXd q = Eigen::ArrayXXd::Zero(z.rows(), batch);
    for (const auto& zj : cache.zj) q += zj.array().square();
    Eigen::MatrixXd new_lap = (s2 * q + s1 * cache.zl.array()).matrix();
    std::vector<Eigen::MatrixXd> new_jac(jac.size());
    for (std::size_t c = 0; c < jac.size(); ++c) new_jac[c] = (s1 * cache.zj[c].array()).matrix();
    if (keep_cache) {
      cache.a_prev = std::move(a);
      cache.j_prev = std::move(jac);
      cache.l_prev = std::move(lap);
    }
    a = cache.t;
    jac = std::move(new_jac);
    lap = std::move(new_lap);
    if (keep_cache) fwd.hidden.push_back(std::move(cache));
  }
  const auto w_out = params.weight(last);
  fwd.out.value = affine(params, last, a);
  fwd.out.grad.resize(jac.size());
  for (std::size_t c = 0; c < jac.size(); ++c) fwd.out.grad[c] = w_out * jac[c];
  fwd.out.laplacian = w_out * lap;
  if (keep_cache) {
    fwd.a_last = std::move(a);
    fwd.j_last = std::move(jac);
    fwd.l_last = std::move(lap);
  }
  return fwd;
}

}  // namespace

double forward(const MlpParams& params, Point2 r) {
  require_scalar_output(params);
  return forward(params, single_input(params, r))(0, 0);
}

IoDerivsBatch forward_io_derivs(const MlpParams& params, const Eigen::MatrixXd& inputs) {
  return forward_with_derivs(params, inputs, false).out;
}

IoDerivs forward_io_derivs(const MlpParams& params, Point2 r) {
  require_scalar_output(params);
  const auto batch = forward_io_derivs(params, single_input(params, r));
  return {batch.value(0, 0), {batch.grad[0](0, 0), batch.grad[1](0, 0)}, batch.laplacian(0, 0)};
}

ForwardTrace forward_trace(const MlpParams& params, const Eigen::MatrixXd& inputs) {
  check_inputs(params, inputs);
  ForwardTrace trace;
  const int last = params.num_layers() - 1;
  trace.activations.reserve(static_cast<std::size_t>(last) + 1);
  trace.activations.push_back(inputs);
  for (int l = 0; l < last; ++l) trace.activations.push_back(tanh_of(affine(params, l, trace.activations.back())));
  trace.output = affine(params, last, trace.activations.back());
  return trace;
}

MlpParams backprop(const MlpParams& params, const ForwardTrace& trace, const Eigen::MatrixXd& upstream) {
  const int layers = params.num_layers();
  if (static_cast<int>(trace.activations.size()) != layers) throw ShapeError("backprop: trace does not match network");
  if (upstream.rows() != params.output_dim() || upstream.cols() != trace.activations.front().cols()) {
    throw ShapeError("backprop: upstream shape mismatch");
  }
  MlpParams grads(params.layer_sizes());
  Eigen::MatrixXd delta = upstream;  // adjoint of the current layer's pre-activation
  for (int l = layers - 1; l >= 0; --l) {
    const auto& a = trace.activations[static_cast<std::size_t>(l)];
    grads.weight(l).noalias() = delta * a.transpose();
    grads.bias(l) = delta.rowwise().sum();
    if (l == 0) break;
    Eigen::MatrixXd da = params.weight(l).transpose() * delta;
    delta = (da.array() * (1.0 - a.array().square())).matrix();
  }
  return grads;
}

MlpParams backprop(const MlpParams& params, const Eigen::MatrixXd& inputs,
                   const Eigen::MatrixXd& upstream) {
  return backprop(params, forward_trace(params, inputs), upstream);
}

MlpParams backprop(const MlpParams& params, Point2 r, double upstream) {
  require_scalar_output(params);
  Eigen::MatrixXd up(1, 1);
  up(0, 0) = upstream;
  return backprop(params, single_input(params, r), up);
}

// Reverse pass through the derivative propagation of forward_with_derivs.
// For a hidden layer with adjoints (abar, Jbar_c, Lbar) of its outputs:
//   zbar    = abar s1 + sum_c Jbar_c Jz_c s2 + Lbar (s3 sum_c Jz_c^2 + s2 Lz)
//   Jzbar_c = Jbar_c s1 + 2 Lbar s2 Jz_c
//   Lzbar   = Lbar s1
// where s3 = (1 - t^2)(6 t^2 - 2) is the third derivative of tanh.
MlpParams backprop_io_derivs(const MlpParams& params, const Eigen::MatrixXd& inputs,
                             const Eigen::MatrixXd& up_value, const Eigen::MatrixXd& up_laplacian) {
  check_inputs(params, inputs);
  if (up_value.rows() != params.output_dim() || up_value.cols() != inputs.cols() ||
      up_laplacian.rows() != up_value.rows() || up_laplacian.cols() != up_value.cols()) {
    throw ShapeError("backprop_io_derivs: upstream shape mismatch");
  }
  const auto fwd = forward_with_derivs(params, inputs, true);
  const int last = params.num_layers() - 1;
  MlpParams grads(params.layer_sizes());

  const auto w_out = params.weight(last);
  grads.weight(last).noalias() = up_value * fwd.a_last.transpose();
  grads.weight(last).noalias() += up_laplacian * fwd.l_last.transpose();
  grads.bias(last) = up_value.rowwise().sum();
  if (last == 0) return grads;

  Eigen::MatrixXd abar = w_out.transpose() * up_value;
  Eigen::MatrixXd lbar = w_out.transpose() * up_laplacian;
  std::vector<Eigen::MatrixXd> jbar;  // empty means identically zero

  for (int l = last - 1; l >= 0; --l) {
    const auto& cache = fwd.hidden[static_cast<std::size_t>(l)];
    const Eigen::ArrayXXd t = cache.t.array();
    const Eigen::ArrayXXd s1 = 1.0 - t.square();
    const Eigen::ArrayXXd s2 = -2.0 * t * s1;
    const Eigen::ArrayXXd s3 = s1 * (6.0 * t.square() - 2.0);
    Eigen::ArrayXXd q = Eigen::ArrayXXd::Zero(t.rows(), t.cols());
    for (const auto& zj : cache.zj) q += zj.array().square();

    const Eigen::ArrayXXd lb = lbar.array();
    Eigen::ArrayXXd zbar = abar.array() * s1 + lb * (s3 * q + s2 * cache.zl.array());
    std::vector<Eigen::MatrixXd> jzbar(cache.zj.size());
    for (std::size_t c = 0; c < cache.zj.size(); ++c) {
      Eigen::ArrayXXd jz = 2.0 * lb * s2 * cache.zj[c].array();
      if (!jbar.empty()) {
        zbar += jbar[c].array() * cache.zj[c].array() * s2;
        jz += jbar[c].array() * s1;
      }
      jzbar[c] = jz.matrix();
    }
    const Eigen::MatrixXd lzbar = (lb * s1).matrix();
    const Eigen::MatrixXd zbar_m = zbar.matrix();

    auto gw = grads.weight(l);
    gw.noalias() = zbar_m * cache.a_prev.transpose();
    for (std::size_t c = 0; c < jzbar.size(); ++c) gw.noalias() += jzbar[c] * cache.j_prev[c].transpose();
    gw.noalias() += lzbar * cache.l_prev.transpose();
    grads.bias(l) = zbar_m.rowwise().sum();
    if (l == 0) break;

    const auto w = params.weight(l);
    abar = w.transpose() * zbar_m;
    lbar = w.transpose() * lzbar;
    jbar.resize(jzbar.size());
    for (std::size_t c = 0; c < jzbar.size(); ++c) jbar[c] = w.transpose() * jzbar[c];
  }
  return grads;
}

AdamState AdamState::zeros(Eigen::Index n, double lr) {
  AdamState s;
  s.first_moment = Eigen::VectorXd::Zero(n);
  s.second_moment = Eigen::VectorXd::Zero(n);
  s.lr = lr;
  return s;
}

void adam_step(AdamState& state, Eigen::Ref<Eigen::VectorXd> params,
               const Eigen::Ref<const Eigen::VectorXd>& grads) {
  if (params.size() != grads.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw ShapeError("adam_step: parameter, gradient and moment sizes differ");
  }
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  state.first_moment = state.beta1 * state.first_moment + (1.0 - state.beta1) * grads;
  state.second_moment =
      state.beta2 * state.second_moment + (1.0 - state.beta2) * grads.cwiseProduct(grads);
  const double step = state.lr / c1;
  const double root_c2 = std::sqrt(c2);
  params.array() -= step * state.first_moment.array() /
                    (state.second_moment.array().sqrt() / root_c2 + state.eps);
}

void adam_step(AdamState& state, MlpParams& params, const MlpParams& grads) {
  if (!params.same_shape(grads)) throw ShapeError("adam_step: gradient architecture differs");
  adam_step(state, params.flat(), grads.flat());
}

namespace {

std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xFFu) << (8 * (7 - i));
    return r;
  }
}

}  // namespace

void save_mlp(std::ostream& out, const MlpParams& params) {
  out << "mlp";
  for (int s : params.layer_sizes()) out << ' ' << s;
  out << '\n';
  for (Eigen::Index i = 0; i < params.flat().size(); ++i) {
    const std::uint64_t bits = to_little_endian(std::bit_cast<std::uint64_t>(params.flat()[i]));
    out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
  if (!out) throw std::runtime_error("save_mlp: write failed");
}

MlpParams load_mlp(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("load_mlp: missing header");
  std::istringstream hs(header);
  std::string tag;
  hs >> tag;
  if (tag != "mlp") throw std::runtime_error("load_mlp: bad header tag");
  std::vector<int> sizes;
  for (int s; hs >> s;) sizes.push_back(s);
  MlpParams params(sizes);
  for (Eigen::Index i = 0; i < params.flat().size(); ++i) {
    std::uint64_t bits = 0;
    if (!in.read(reinterpret_cast<char*>(&bits), sizeof bits)) {
      throw std::runtime_error("load_mlp: truncated parameter array");
    }
    params.flat()[i] = std::bit_cast<double>(to_little_endian(bits));
  }
  return params;
}

void save_mlp(const std::string& path, const MlpParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_mlp: cannot open " + path);
  save_mlp(out, params);
}

MlpParams load_mlp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_mlp: cannot open " + path);
  return load_mlp(in);
}

}  // namespace sfr
