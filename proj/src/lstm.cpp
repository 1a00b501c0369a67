#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "levyforge/error.hpp"
#include "levyforge/neural.hpp"
#include "levyforge/rng.hpp"

namespace levyforge::neural {

namespace {

Eigen::VectorXd logistic(const Eigen::VectorXd& z) {
  return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

}  // namespace

LstmWeights::LstmWeights(std::size_t input_size, std::size_t hidden_size)
    : input_(input_size), hidden_(hidden_size) {
  require(input_size > 0 && hidden_size > 0, ErrorKind::shape,
          "lstm input and hidden sizes must be positive");
  params_.assign(head_offset() + hidden_ + 1, 0.0);
}

LstmWeights::LstmWeights(std::size_t input_size, std::size_t hidden_size, std::uint64_t seed)
    : LstmWeights(input_size, hidden_size) {
  Rng rng(seed);
  const double gate_bound = 1.0 / std::sqrt(static_cast<double>(concat_size()));
  std::uniform_real_distribution<double> gate_u(-gate_bound, gate_bound);
  for (std::size_t k = 0; k < head_offset(); ++k) params_[k] = gate_u(rng);
  const double head_bound = 1.0 / std::sqrt(static_cast<double>(hidden_));
  std::uniform_real_distribution<double> head_u(-head_bound, head_bound);
  for (std::size_t k = head_offset(); k < params_.size(); ++k) params_[k] = head_u(rng);
}

LstmWeights LstmWeights::zeros(std::size_t input_size, std::size_t hidden_size) {
  return LstmWeights(input_size, hidden_size);
}

ConstMatrixView LstmWeights::stacked_gates() const {
  return ConstMatrixView(params_.data(), static_cast<Eigen::Index>(4 * hidden_),
                         static_cast<Eigen::Index>(concat_size()));
}

ConstVectorView LstmWeights::stacked_biases() const {
  return ConstVectorView(params_.data() + bias_offset(), static_cast<Eigen::Index>(4 * hidden_));
}

ConstMatrixView LstmWeights::gate(Gate g) const {
  const auto k = static_cast<std::size_t>(g);
  return ConstMatrixView(params_.data() + k * hidden_ * concat_size(),
                         static_cast<Eigen::Index>(hidden_), static_cast<Eigen::Index>(concat_size()));
}

ConstVectorView LstmWeights::gate_bias(Gate g) const {
  const auto k = static_cast<std::size_t>(g);
  return ConstVectorView(params_.data() + bias_offset() + k * hidden_,
                         static_cast<Eigen::Index>(hidden_));
}

ConstVectorView LstmWeights::head_weights() const {
  return ConstVectorView(params_.data() + head_offset(), static_cast<Eigen::Index>(hidden_));
}

MatrixView LstmWeights::mutable_gate(Gate g) {
  const auto k = static_cast<std::size_t>(g);
  return MatrixView(params_.data() + k * hidden_ * concat_size(),
                    static_cast<Eigen::Index>(hidden_), static_cast<Eigen::Index>(concat_size()));
}

VectorView LstmWeights::mutable_gate_bias(Gate g) {
  const auto k = static_cast<std::size_t>(g);
  return VectorView(params_.data() + bias_offset() + k * hidden_, static_cast<Eigen::Index>(hidden_));
}

VectorView LstmWeights::mutable_head_weights() {
  return VectorView(params_.data() + head_offset(), static_cast<Eigen::Index>(hidden_));
}

LstmTrajectory lstm_forward(const LstmWeights& w, std::span<const double> sequence,
                            std::span<const double> head_mask) {
  const std::size_t n_in = w.input_size();
  require(!sequence.empty(), ErrorKind::shape, "lstm sequence is empty");
  require(sequence.size() % n_in == 0, ErrorKind::shape,
          "sequence length " + std::to_string(sequence.size()) + " is not a multiple of input size " +
              std::to_string(n_in));
  const auto H = static_cast<Eigen::Index>(w.hidden_size());
  require(head_mask.empty() || head_mask.size() == w.hidden_size(), ErrorKind::shape,
          "head mask must have hidden_size entries");

  const std::size_t T = sequence.size() / n_in;
  LstmTrajectory traj;
  traj.steps.reserve(T);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(H);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(H);
  const auto W = w.stacked_gates();
  const auto b = w.stacked_biases();
  for (std::size_t t = 0; t < T; ++t) {
    LstmStep s;
    s.concat.resize(static_cast<Eigen::Index>(w.concat_size()));
    for (std::size_t k = 0; k < n_in; ++k) s.concat[static_cast<Eigen::Index>(k)] = sequence[t * n_in + k];
    s.concat.tail(H) = h;
    const Eigen::VectorXd z = W * s.concat + b;
    s.f = logistic(z.segment(0, H));
    s.i = logistic(z.segment(H, H));
    s.c_tilde = z.segment(2 * H, H).array().tanh();
    s.o = logistic(z.segment(3 * H, H));
    s.c = s.f.cwiseProduct(c) + s.i.cwiseProduct(s.c_tilde);
    s.h = s.o.cwiseProduct(Eigen::VectorXd(s.c.array().tanh()));
    h = s.h;
    c = s.c;
    traj.steps.push_back(std::move(s));
  }
  if (head_mask.empty()) {
    traj.head_mask = Eigen::VectorXd::Ones(H);
  } else {
    traj.head_mask = ConstVectorView(head_mask.data(), H);
  }
  traj.prediction = w.head_weights().dot(traj.head_mask.cwiseProduct(h)) + w.head_bias();
  return traj;
}

std::vector<double> lstm_backward(const LstmWeights& w, const LstmTrajectory& traj,
                                  double dloss_dprediction) {
  require(!traj.steps.empty() && traj.steps.front().concat.size() ==
                                     static_cast<Eigen::Index>(w.concat_size()),
          ErrorKind::contract, "trajectory does not match these weights");
  const auto H = static_cast<Eigen::Index>(w.hidden_size());
  const auto C = static_cast<Eigen::Index>(w.concat_size());
  std::vector<double> grads(w.parameter_count(), 0.0);
  MatrixView dW(grads.data(), 4 * H, C);
  VectorView db(grads.data() + 4 * H * C, 4 * H);
  VectorView dhead(grads.data() + 4 * H * C + 4 * H, H);

  const Eigen::VectorXd& h_T = traj.steps.back().h;
  dhead = dloss_dprediction * traj.head_mask.cwiseProduct(h_T);
  grads.back() = dloss_dprediction;

  const auto W = w.stacked_gates();
  Eigen::VectorXd dh = dloss_dprediction * w.head_weights().cwiseProduct(traj.head_mask);
  Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(H);
  Eigen::VectorXd dz(4 * H);
  for (std::size_t t = traj.steps.size(); t-- > 0;) {
    const LstmStep& s = traj.steps[t];
    const Eigen::VectorXd c_prev = t > 0 ? traj.steps[t - 1].c : Eigen::VectorXd::Zero(H);
    const Eigen::ArrayXd tc = s.c.array().tanh();
    const Eigen::ArrayXd dc = dc_next.array() + dh.array() * s.o.array() * (1.0 - tc * tc);
    dz.segment(0, H) = (dc * c_prev.array() * s.f.array() * (1.0 - s.f.array())).matrix();
    dz.segment(H, H) = (dc * s.c_tilde.array() * s.i.array() * (1.0 - s.i.array())).matrix();
    dz.segment(2 * H, H) =
        (dc * s.i.array() * (1.0 - s.c_tilde.array() * s.c_tilde.array())).matrix();
    dz.segment(3 * H, H) = (dh.array() * tc * s.o.array() * (1.0 - s.o.array())).matrix();
    dW.noalias() += dz * s.concat.transpose();
    db += dz;
    dc_next = (dc * s.f.array()).matrix();
    dh = (W.transpose() * dz).tail(H);
  }
  return grads;
}

std::vector<double> lstm_bptt(const LstmWeights& w, std::span<const double> sequence, double target) {
  const LstmTrajectory traj = lstm_forward(w, sequence);
  return lstm_backward(w, traj, 2.0 * (traj.prediction - target));
}

double lstm_predict(const LstmWeights& w, std::span<const double> window) {
  return lstm_forward(w, window).prediction;
}

double lstm_mse(const LstmWeights& w, const data::WindowedDataset& dataset) {
  require(!dataset.empty(), ErrorKind::size, "dataset is empty");
  double total = 0.0;
  for (std::size_t k = 0; k < dataset.size(); ++k) {
    const double e = lstm_predict(w, dataset.inputs[k]) - dataset.targets[k].front();
    total += e * e;
  }
  return total / static_cast<double>(dataset.size());
}

TrainResult train_lstm(const data::WindowedDataset& dataset, const LstmHyper& hyper) {
  require(!dataset.empty(), ErrorKind::size, "training dataset is empty");
  require(hyper.hidden_size > 0, ErrorKind::domain, "hidden_size must be positive");
  require(hyper.lr > 0.0 && std::isfinite(hyper.lr), ErrorKind::domain, "learning rate must be positive");
  require(hyper.dropout >= 0.0 && hyper.dropout < 1.0, ErrorKind::domain, "dropout must lie in [0, 1)");

  TrainResult result{LstmWeights(1, hyper.hidden_size, stream_seed(hyper.seed, 0)), {}};
  LstmWeights& w = result.weights;
  AdamState adam(w.parameter_count(), hyper.lr);
  adam.weight_decay = hyper.weight_decay;
  Rng shuffle_rng = make_stream(hyper.seed, 1);
  Rng dropout_rng = make_stream(hyper.seed, 2);
  std::bernoulli_distribution keep(1.0 - hyper.dropout);

  const std::size_t n = dataset.size();
  const std::size_t batch = hyper.batch_size == 0 ? n : std::min(hyper.batch_size, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grad_sum(w.parameter_count());
  std::vector<double> mask(hyper.hidden_size, 1.0);
  result.loss_trace.reserve(hyper.epochs);

  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    if (batch < n) std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(start + batch, n);
      std::fill(grad_sum.begin(), grad_sum.end(), 0.0);
      for (std::size_t j = start; j < stop; ++j) {
        const std::size_t k = order[j];
        std::span<const double> head_mask;
        if (hyper.dropout > 0.0) {
          const double scale = 1.0 / (1.0 - hyper.dropout);
          for (double& m : mask) m = keep(dropout_rng) ? scale : 0.0;
          head_mask = mask;
        }
        const LstmTrajectory traj = lstm_forward(w, dataset.inputs[k], head_mask);
        const double err = traj.prediction - dataset.targets[k].front();
        epoch_loss += err * err;
        const auto g = lstm_backward(w, traj, 2.0 * err / static_cast<double>(stop - start));
        for (std::size_t p = 0; p < g.size(); ++p) grad_sum[p] += g[p];
      }
      adam_step(adam, w.mutable_parameters(), grad_sum);
    }
    epoch_loss /= static_cast<double>(n);
    if (!std::isfinite(epoch_loss)) {
      throw Error(ErrorKind::training,
                  "loss became non-finite at epoch " + std::to_string(epoch + 1));
    }
    result.loss_trace.push_back(epoch_loss);
  }
  return result;
}

}  // namespace levyforge::neural
