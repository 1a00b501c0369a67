#include <cmath>

#include "levyforge/error.hpp"
#include "levyforge/neural.hpp"

namespace levyforge::neural {

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads) {
  require(params.size() == grads.size() && state.m.size() == params.size() &&
              state.v.size() == params.size(),
          ErrorKind::shape, "adam state, parameters and gradients must have equal sizes");
  ++state.t;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double g = grads[k];
    state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * g;
    state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * g * g;
    if (state.weight_decay != 0.0) params[k] -= state.lr * state.weight_decay * params[k];
    if (g == 0.0 && state.m[k] == 0.0) continue;
    const double m_hat = state.m[k] / c1;
    const double v_hat = state.v[k] / c2;
    params[k] -= state.lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

void sgd_step(std::span<double> params, std::span<const double> grads, double lr) {
  require(params.size() == grads.size(), ErrorKind::shape,
          "parameters and gradients must have equal sizes");
  for (std::size_t k = 0; k < params.size(); ++k) params[k] -= lr * grads[k];
}

}  // namespace levyforge::neural
