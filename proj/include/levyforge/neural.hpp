#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "levyforge/data.hpp"

namespace levyforge::neural {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixView = Eigen::Map<RowMatrix>;
using ConstMatrixView = Eigen::Map<const RowMatrix>;
using VectorView = Eigen::Map<Eigen::VectorXd>;
using ConstVectorView = Eigen::Map<const Eigen::VectorXd>;

// ---------------------------------------------------------------------------
// Dense network
// ---------------------------------------------------------------------------

/// Fully connected net, rectifier on hidden layers and an affine output.
/// All weights live in one flat buffer, layer by layer: W^(l) row-major
/// (out x in) followed by b^(l).
class DenseNet {
 public:
  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization.
  DenseNet(std::vector<std::size_t> layer_dims, std::uint64_t seed);
  static DenseNet zeros(std::vector<std::size_t> layer_dims);

  const std::vector<std::size_t>& layer_dims() const noexcept { return dims_; }
  std::size_t n_layers() const noexcept { return dims_.size() - 1; }
  std::size_t input_size() const noexcept { return dims_.front(); }
  std::size_t output_size() const noexcept { return dims_.back(); }
  std::size_t parameter_count() const noexcept { return params_.size(); }

  /// Affine layer l in [0, n_layers).
  ConstMatrixView weights(std::size_t l) const;
  ConstVectorView biases(std::size_t l) const;
  MatrixView mutable_weights(std::size_t l);
  VectorView mutable_biases(std::size_t l);

  std::span<const double> parameters() const noexcept { return params_; }
  /// Any access through the mutable views invalidates outstanding caches.
  std::span<double> mutable_parameters();

  std::uint64_t revision() const noexcept { return revision_; }

 private:
  explicit DenseNet(std::vector<std::size_t> layer_dims);
  void touch();

  std::vector<std::size_t> dims_;
  std::vector<std::size_t> offsets_;  // start of W^(l); b^(l) follows it
  std::vector<double> params_;
  std::uint64_t revision_ = 0;
};

struct DenseCache {
  std::vector<Eigen::VectorXd> activations;     // a^(0) = x ... a^(L) = output
  std::vector<Eigen::VectorXd> preactivations;  // W a + b for each layer
  std::uint64_t revision = 0;
};

struct DenseForward {
  Eigen::VectorXd output;
  DenseCache cache;
};

DenseForward dense_forward(const DenseNet& net, std::span<const double> x);

/// Gradient of a scalar loss with respect to every parameter, given
/// dLoss/dOutput. Flat layout matches DenseNet::parameters().
std::vector<double> dense_backward(const DenseNet& net, const DenseCache& cache,
                                   std::span<const double> loss_grad);

// ---------------------------------------------------------------------------
// LSTM
// ---------------------------------------------------------------------------

enum class Gate : std::size_t { forget = 0, input = 1, candidate = 2, output = 3 };

/// Single-layer LSTM with a scalar affine head on the final hidden state.
/// Flat layout: the four gate matrices stacked as one (4H x (I+H)) row-major
/// block in forget/input/candidate/output order, then the four bias vectors,
/// then the head weights (H) and head bias.
class LstmWeights {
 public:
  LstmWeights(std::size_t input_size, std::size_t hidden_size, std::uint64_t seed);
  static LstmWeights zeros(std::size_t input_size, std::size_t hidden_size);

  std::size_t input_size() const noexcept { return input_; }
  std::size_t hidden_size() const noexcept { return hidden_; }
  std::size_t concat_size() const noexcept { return input_ + hidden_; }
  std::size_t parameter_count() const noexcept { return params_.size(); }

  ConstMatrixView stacked_gates() const;
  ConstVectorView stacked_biases() const;
  ConstMatrixView gate(Gate g) const;
  ConstVectorView gate_bias(Gate g) const;
  ConstVectorView head_weights() const;
  double head_bias() const noexcept { return params_.back(); }

  MatrixView mutable_gate(Gate g);
  VectorView mutable_gate_bias(Gate g);
  VectorView mutable_head_weights();
  void set_head_bias(double b) noexcept { params_.back() = b; }

  std::span<const double> parameters() const noexcept { return params_; }
  std::span<double> mutable_parameters() noexcept { return params_; }

  friend bool operator==(const LstmWeights&, const LstmWeights&) = default;

 private:
  LstmWeights(std::size_t input_size, std::size_t hidden_size);
  std::size_t bias_offset() const noexcept { return 4 * hidden_ * concat_size(); }
  std::size_t head_offset() const noexcept { return bias_offset() + 4 * hidden_; }

  std::size_t input_ = 0;
  std::size_t hidden_ = 0;
  std::vector<double> params_;
};

struct LstmStep {
  Eigen::VectorXd concat;  // [x_t, h_{t-1}]
  Eigen::VectorXd f, i, c_tilde, o;
  Eigen::VectorXd c, h;
};

struct LstmTrajectory {
  std::vector<LstmStep> steps;
  Eigen::VectorXd head_mask;  // dropout mask on h_T, ones when unused
  double prediction = 0.0;
};

/// `sequence` holds T consecutive input vectors, flattened (T * input_size).
/// `head_mask`, when given, multiplies h_T elementwise before the head.
LstmTrajectory lstm_forward(const LstmWeights& w, std::span<const double> sequence,
                            std::span<const double> head_mask = {});

/// Backpropagation through time for a loss whose derivative with respect to
/// the prediction is `dloss_dprediction`.
std::vector<double> lstm_backward(const LstmWeights& w, const LstmTrajectory& trajectory,
                                  double dloss_dprediction);

/// Gradient of (prediction - target)^2.
std::vector<double> lstm_bptt(const LstmWeights& w, std::span<const double> sequence, double target);

// ---------------------------------------------------------------------------
// Optimization
// ---------------------------------------------------------------------------

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;  // decoupled, applied as params -= lr * wd * params

  AdamState() = default;
  AdamState(std::size_t n, double learning_rate) : m(n, 0.0), v(n, 0.0), lr(learning_rate) {}
};

/// One bias-corrected Adam update in place.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

/// Plain gradient descent, W <- W - lr dL/dW.
void sgd_step(std::span<double> params, std::span<const double> grads, double lr);

struct LstmHyper {
  std::size_t hidden_size = 16;
  double lr = 1e-2;
  std::size_t epochs = 200;
  std::uint64_t seed = 0;
  std::size_t batch_size = 0;  // 0 = full batch
  double dropout = 0.0;        // on the final hidden state, training only
  double weight_decay = 0.0;
};

struct TrainResult {
  LstmWeights weights;
  std::vector<double> loss_trace;  // mean squared error per epoch, before its update
};

/// Adam on the one-step-ahead squared error, targets[i][0]. Scalar inputs.
TrainResult train_lstm(const data::WindowedDataset& dataset, const LstmHyper& hyper);

double lstm_predict(const LstmWeights& w, std::span<const double> window);

/// Mean squared one-step error on `dataset`.
double lstm_mse(const LstmWeights& w, const data::WindowedDataset& dataset);

}  // namespace levyforge::neural
