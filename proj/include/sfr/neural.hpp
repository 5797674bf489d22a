#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sfr/geometry.hpp"

namespace sfr {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Layer sizes of the networks used throughout: 2 inputs, three hidden layers of 64, one output.
inline const std::vector<int> kDefaultLayerSizes{2, 64, 64, 64, 1};

/// Number of trainable parameters: sum over layers of n_in * n_out + n_out.
std::size_t count_params(std::span<const int> layer_sizes);

/// Weights and biases of a fully-connected network, stored in one flat
/// buffer. Layer l occupies weight(l) (n_out x n_in, row-major) followed by
/// bias(l) (n_out). The same type holds parameter gradients.
class MlpParams {
 public:
  MlpParams() = default;
  /// Zero-initialized parameters for the given architecture.
  explicit MlpParams(std::vector<int> layer_sizes);

  const std::vector<int>& layer_sizes() const noexcept { return sizes_; }
  int num_layers() const noexcept { return static_cast<int>(sizes_.size()) - 1; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  std::size_t size() const noexcept { return static_cast<std::size_t>(flat_.size()); }

  Eigen::Map<const RowMatrix> weight(int layer) const;
  Eigen::Map<RowMatrix> weight(int layer);
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const;
  Eigen::Map<Eigen::VectorXd> bias(int layer);

  const Eigen::VectorXd& flat() const noexcept { return flat_; }
  Eigen::VectorXd& flat() noexcept { return flat_; }

  bool same_shape(const MlpParams& other) const { return sizes_ == other.sizes_; }
  friend bool operator==(const MlpParams& a, const MlpParams& b) {
    return a.sizes_ == b.sizes_ && a.flat_ == b.flat_;
  }

 private:
  std::vector<int> sizes_;
  std::vector<Eigen::Index> offsets_;
  Eigen::VectorXd flat_;
};

/// Glorot-uniform weights (bound sqrt(6 / (n_in + n_out))) and zero biases.
MlpParams init_mlp(const std::vector<int>& layer_sizes, std::uint64_t seed);

/// Network output for a batch of inputs given as columns. Hidden layers use
/// tanh, the output layer is linear. Returns output_dim x batch.
Eigen::MatrixXd forward(const MlpParams& params, const Eigen::MatrixXd& inputs);

/// Scalar output at one point; requires a 2-input, 1-output network.
double forward(const MlpParams& params, Point2 r);

/// Value, input gradient and Laplacian (trace of the input Hessian) of every
/// output, for a batch of inputs. Matrices are output_dim x batch; `grad`
/// has one matrix per input dimension.
struct IoDerivsBatch {
  Eigen::MatrixXd value;
  std::vector<Eigen::MatrixXd> grad;
  Eigen::MatrixXd laplacian;
};

IoDerivsBatch forward_io_derivs(const MlpParams& params, const Eigen::MatrixXd& inputs);

struct IoDerivs {
  double value = 0.0;
  std::array<double, 2> grad{};
  double laplacian = 0.0;
};

IoDerivs forward_io_derivs(const MlpParams& params, Point2 r);

/// Parameter gradient of sum_b upstream(:, b) . forward(inputs(:, b)).
MlpParams backprop(const MlpParams& params, const Eigen::MatrixXd& inputs,
                   const Eigen::MatrixXd& upstream);

MlpParams backprop(const MlpParams& params, Point2 r, double upstream);

/// Layer inputs kept from a forward pass so that a later backprop does not
/// recompute them. `output` equals forward(params, inputs) bit for bit.
struct ForwardTrace {
  std::vector<Eigen::MatrixXd> activations;  // activations[l] feeds layer l
  Eigen::MatrixXd output;
};

ForwardTrace forward_trace(const MlpParams& params, const Eigen::MatrixXd& inputs);
MlpParams backprop(const MlpParams& params, const ForwardTrace& trace, const Eigen::MatrixXd& upstream);

/// Parameter gradient of sum_b [up_value(:, b) . f(x_b) + up_laplacian(:, b) . lap f(x_b)].
/// Used for losses on PDE residuals of the network.
MlpParams backprop_io_derivs(const MlpParams& params, const Eigen::MatrixXd& inputs,
                             const Eigen::MatrixXd& up_value, const Eigen::MatrixXd& up_laplacian);

/// Packs points as a 2 x n input matrix.
Eigen::MatrixXd to_inputs(std::span<const Point2> points);

struct AdamState {
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  std::int64_t step_count = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  /// Zero moments for `n` parameters.
  static AdamState zeros(Eigen::Index n, double lr);
};

/// One bias-corrected Adam update of `params` in place. Throws ShapeError on size mismatch.
void adam_step(AdamState& state, Eigen::Ref<Eigen::VectorXd> params,
               const Eigen::Ref<const Eigen::VectorXd>& grads);
void adam_step(AdamState& state, MlpParams& params, const MlpParams& grads);

/// Checkpoint: one text line "mlp <s0> <s1> ...\n" followed by the flat
/// parameter array as little-endian IEEE-754 doubles.
void save_mlp(std::ostream& out, const MlpParams& params);
MlpParams load_mlp(std::istream& in);
void save_mlp(const std::string& path, const MlpParams& params);
MlpParams load_mlp(const std::string& path);

}  // namespace sfr
