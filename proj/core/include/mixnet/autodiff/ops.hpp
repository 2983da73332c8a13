#pragma once

#include <functional>
#include <span>

#include "mixnet/autodiff/tensor.hpp"

namespace mixnet::ad {

// Elementwise arithmetic. Binary forms require equal shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor square(const Tensor& a);

Tensor sigmoid(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double slope = 0.2);

/// [M x K] * [K x N] -> [M x N].
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

/// Same values under a new shape of equal element count.
Tensor reshape(const Tensor& x, Shape shape);
/// Axis permutation: output axis i is input axis `axes[i]`.
Tensor permute(const Tensor& x, std::span<const std::size_t> axes);
Tensor permute(const Tensor& x, std::initializer_list<std::size_t> axes);

/// Same-padded stride-1 cross-correlation.
/// input [C_in x H x W], kernels [C_out x C_in x k x k] with k odd, bias [C_out].
Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias);

/// Per-channel normalization over the spatial axes of [C x H x W]:
/// scale_c * (x - mean_c) / sqrt(var_c + eps) + shift_c, with scale, shift [C].
Tensor channel_norm(const Tensor& input, const Tensor& scale, const Tensor& shift, double eps = 1e-5);

// Reductions to a single-element tensor.
Tensor reduce_sum(const Tensor& x);
Tensor reduce_mean(const Tensor& x);
Tensor sq_l2_norm(const Tensor& x);
Tensor dot(const Tensor& a, const Tensor& b);

/// Raw linear operator on flat buffers: `out` is pre-zeroed and sized for the
/// target shape.
using LinearKernel = std::function<void(std::span<const double> in, std::span<double> out)>;

/// Applies a linear operator whose adjoint is supplied explicitly; the
/// backward rule is the adjoint applied to the incoming gradient.
Tensor linear_map(const Tensor& x, Shape out_shape, const LinearKernel& apply, const LinearKernel& adjoint,
                  const char* op = "linear_map");

}  // namespace mixnet::ad
