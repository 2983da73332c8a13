#pragma once

#include <cstdint>
#include <vector>

#include "mixnet/autodiff/tensor.hpp"

namespace mixnet::ad {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moment buffers and step counter for one parameter.
struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step = 0;
  AdamOptions options;

  explicit AdamState(std::size_t size = 0, AdamOptions opts = {})
      : first_moment(size, 0.0), second_moment(size, 0.0), options(opts) {}
};

/// One bias-corrected Adam update of `param` in place using its current
/// gradient. Throws if the parameter holds no gradient.
void adam_step(Tensor& param, AdamState& state);

/// max(x, 0) on every entry, in place.
void project_nonneg(Tensor& param);

/// Adam over a fixed parameter list.
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamOptions options);

  void zero_grad();
  void step();

  std::uint64_t steps() const noexcept { return steps_; }
  const std::vector<Tensor>& params() const noexcept { return params_; }
  const AdamState& state(std::size_t i) const { return states_.at(i); }

 private:
  std::vector<Tensor> params_;
  std::vector<AdamState> states_;
  std::uint64_t steps_ = 0;
};

}  // namespace mixnet::ad
