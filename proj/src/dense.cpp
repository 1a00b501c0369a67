#include <atomic>
#include <cmath>
#include <random>
#include <string>

#include "levyforge/error.hpp"
#include "levyforge/neural.hpp"
#include "levyforge/rng.hpp"

namespace levyforge::neural {

namespace {

std::uint64_t next_revision() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

}  // namespace

DenseNet::DenseNet(std::vector<std::size_t> layer_dims) : dims_(std::move(layer_dims)) {
  require(dims_.size() >= 2, ErrorKind::shape, "dense net needs at least input and output sizes");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    require(dims_[l] > 0 && dims_[l + 1] > 0, ErrorKind::shape, "layer sizes must be positive");
    offsets_.push_back(total);
    total += dims_[l + 1] * dims_[l] + dims_[l + 1];
  }
  params_.assign(total, 0.0);
  revision_ = next_revision();
}

DenseNet::DenseNet(std::vector<std::size_t> layer_dims, std::uint64_t seed)
    : DenseNet(std::move(layer_dims)) {
  Rng rng(seed);
  for (std::size_t l = 0; l < n_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims_[l]));
    std::uniform_real_distribution<double> u(-bound, bound);
    const std::size_t count = dims_[l + 1] * dims_[l] + dims_[l + 1];
    for (std::size_t k = 0; k < count; ++k) params_[offsets_[l] + k] = u(rng);
  }
}

DenseNet DenseNet::zeros(std::vector<std::size_t> layer_dims) {
  return DenseNet(std::move(layer_dims));
}

void DenseNet::touch() { revision_ = next_revision(); }

ConstMatrixView DenseNet::weights(std::size_t l) const {
  require(l < n_layers(), ErrorKind::shape, "layer index out of range");
  return ConstMatrixView(params_.data() + offsets_[l], static_cast<Eigen::Index>(dims_[l + 1]),
                         static_cast<Eigen::Index>(dims_[l]));
}

ConstVectorView DenseNet::biases(std::size_t l) const {
  require(l < n_layers(), ErrorKind::shape, "layer index out of range");
  return ConstVectorView(params_.data() + offsets_[l] + dims_[l + 1] * dims_[l],
                         static_cast<Eigen::Index>(dims_[l + 1]));
}

MatrixView DenseNet::mutable_weights(std::size_t l) {
  require(l < n_layers(), ErrorKind::shape, "layer index out of range");
  touch();
  return MatrixView(params_.data() + offsets_[l], static_cast<Eigen::Index>(dims_[l + 1]),
                    static_cast<Eigen::Index>(dims_[l]));
}

VectorView DenseNet::mutable_biases(std::size_t l) {
  require(l < n_layers(), ErrorKind::shape, "layer index out of range");
  touch();
  return VectorView(params_.data() + offsets_[l] + dims_[l + 1] * dims_[l],
                    static_cast<Eigen::Index>(dims_[l + 1]));
}

std::span<double> DenseNet::mutable_parameters() {
  touch();
  return params_;
}

DenseForward dense_forward(const DenseNet& net, std::span<const double> x) {
  require(x.size() == net.input_size(), ErrorKind::shape,
          "input has " + std::to_string(x.size()) + " entries, net expects " +
              std::to_string(net.input_size()));
  DenseForward out;
  out.cache.revision = net.revision();
  out.cache.activations.reserve(net.n_layers() + 1);
  out.cache.preactivations.reserve(net.n_layers());
  out.cache.activations.emplace_back(
      ConstVectorView(x.data(), static_cast<Eigen::Index>(x.size())));
  for (std::size_t l = 0; l < net.n_layers(); ++l) {
    Eigen::VectorXd z = net.weights(l) * out.cache.activations.back() + net.biases(l);
    const bool hidden = l + 1 < net.n_layers();
    Eigen::VectorXd a = hidden ? Eigen::VectorXd(z.cwiseMax(0.0)) : z;
    out.cache.preactivations.push_back(std::move(z));
    out.cache.activations.push_back(std::move(a));
  }
  out.output = out.cache.activations.back();
  return out;
}

std::vector<double> dense_backward(const DenseNet& net, const DenseCache& cache,
                                   std::span<const double> loss_grad) {
  require(cache.revision == net.revision() && cache.preactivations.size() == net.n_layers(),
          ErrorKind::contract, "cache does not belong to the current network weights");
  require(loss_grad.size() == net.output_size(), ErrorKind::shape,
          "loss gradient size does not match the output layer");

  std::vector<double> grads(net.parameter_count(), 0.0);
  Eigen::VectorXd delta = ConstVectorView(loss_grad.data(), static_cast<Eigen::Index>(loss_grad.size()));
  std::size_t offset = net.parameter_count();
  for (std::size_t l = net.n_layers(); l-- > 0;) {
    const auto rows = static_cast<Eigen::Index>(net.layer_dims()[l + 1]);
    const auto cols = static_cast<Eigen::Index>(net.layer_dims()[l]);
    if (l + 1 < net.n_layers()) {
      const Eigen::VectorXd& z = cache.preactivations[l];
      for (Eigen::Index r = 0; r < rows; ++r) {
        if (z[r] <= 0.0) delta[r] = 0.0;
      }
    }
    offset -= static_cast<std::size_t>(rows * cols + rows);
    MatrixView dW(grads.data() + offset, rows, cols);
    VectorView db(grads.data() + offset + rows * cols, rows);
    dW.noalias() = delta * cache.activations[l].transpose();
    db = delta;
    if (l > 0) delta = net.weights(l).transpose() * delta;
  }
  return grads;
}

}  // namespace levyforge::neural
