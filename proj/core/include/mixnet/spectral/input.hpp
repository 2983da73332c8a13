#pragma once

#include <string_view>

#include "mixnet/autodiff/tensor.hpp"
#include "mixnet/forward/forward_model.hpp"
#include "mixnet/random.hpp"

namespace mixnet::spectral {

enum class FixedInputKind { constant, random, meshgrid, estimated };

std::string_view to_string(FixedInputKind kind);

/// Fixed (non-trainable) network input of shape H x W x L.
///  - constant: every entry 0.5
///  - random: standard normal
///  - meshgrid: band l holds channel (l mod 2), where channel 0 at row i is
///    i/(H-1) and channel 1 at column j is j/(W-1)
///  - estimated: the adjoint of the measurements, requires `model` and `y`
ad::Tensor fixed_input(FixedInputKind kind, const ad::Shape& shape, Rng& rng,
                       const forward::ForwardModel* model = nullptr, const ad::Tensor* y = nullptr);

/// z + beta * eta with fresh standard-normal eta; `z` is left untouched and
/// gradients flow back into it.
ad::Tensor perturb_input(const ad::Tensor& z, double beta, Rng& rng);

}  // namespace mixnet::spectral
