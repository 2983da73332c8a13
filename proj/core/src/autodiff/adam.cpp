#include "mixnet/autodiff/adam.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mixnet/error.hpp"

namespace mixnet::ad {

void adam_step(Tensor& param, AdamState& state) {
  if (!param.has_grad()) throw std::invalid_argument("adam_step: parameter has no gradient");
  auto values = param.mutable_values();
  auto grad = param.grad();
  if (state.first_moment.size() != values.size()) {
    throw ShapeError("adam_step: state sized " + std::to_string(state.first_moment.size()) + " for parameter " +
                     shape_string(param.shape()));
  }
  const auto& o = state.options;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(o.beta1, t);
  const double correction2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double g = grad[i];
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = o.beta1 * m + (1.0 - o.beta1) * g;
    v = o.beta2 * v + (1.0 - o.beta2) * g * g;
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    values[i] -= o.lr * m_hat / (std::sqrt(v_hat) + o.eps);
  }
}

void project_nonneg(Tensor& param) {
  for (double& x : param.mutable_values()) x = std::max(x, 0.0);
}

Adam::Adam(std::vector<Tensor> params, AdamOptions options) : params_(std::move(params)) {
  states_.reserve(params_.size());
  for (const auto& p : params_) {
    if (!p.requires_grad() || !p.is_leaf()) throw std::invalid_argument("Adam: parameters must be trainable leaves");
    states_.emplace_back(p.size(), options);
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

void Adam::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) adam_step(params_[i], states_[i]);
  ++steps_;
}

}  // namespace mixnet::ad
