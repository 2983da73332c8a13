#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mixnet/autodiff/ops.hpp"
#include "mixnet/error.hpp"

namespace mixnet::ad {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

struct ConvGeometry {
  std::size_t channels_in, channels_out, height, width, ksize, pad;

  std::size_t pixels() const { return height * width; }
  std::size_t patch() const { return channels_in * ksize * ksize; }
};

// Row (c, ky, kx) of `cols` holds the input plane c shifted by (ky-pad, kx-pad).
void im2col(const ConvGeometry& g, const double* input, double* cols) {
  const long h = static_cast<long>(g.height), w = static_cast<long>(g.width), pad = static_cast<long>(g.pad);
  for (std::size_t c = 0; c < g.channels_in; ++c) {
    const double* plane = input + c * g.pixels();
    for (std::size_t ky = 0; ky < g.ksize; ++ky) {
      for (std::size_t kx = 0; kx < g.ksize; ++kx) {
        double* row = cols + ((c * g.ksize + ky) * g.ksize + kx) * g.pixels();
        const long dy = static_cast<long>(ky) - pad, dx = static_cast<long>(kx) - pad;
        const long x_lo = std::max(0L, -dx), x_hi = std::min(w, w - dx);
        for (long y = 0; y < h; ++y) {
          double* dst = row + y * w;
          const long iy = y + dy;
          if (iy < 0 || iy >= h || x_lo >= x_hi) {
            std::fill(dst, dst + w, 0.0);
            continue;
          }
          std::fill(dst, dst + x_lo, 0.0);
          std::copy(plane + iy * w + x_lo + dx, plane + iy * w + x_hi + dx, dst + x_lo);
          std::fill(dst + x_hi, dst + w, 0.0);
        }
      }
    }
  }
}

void col2im_add(const ConvGeometry& g, const double* cols, double* input_grad) {
  const long h = static_cast<long>(g.height), w = static_cast<long>(g.width), pad = static_cast<long>(g.pad);
  for (std::size_t c = 0; c < g.channels_in; ++c) {
    double* plane = input_grad + c * g.pixels();
    for (std::size_t ky = 0; ky < g.ksize; ++ky) {
      for (std::size_t kx = 0; kx < g.ksize; ++kx) {
        const double* row = cols + ((c * g.ksize + ky) * g.ksize + kx) * g.pixels();
        const long dy = static_cast<long>(ky) - pad, dx = static_cast<long>(kx) - pad;
        const long x_lo = std::max(0L, -dx), x_hi = std::min(w, w - dx);
        for (long y = 0; y < h; ++y) {
          const long iy = y + dy;
          if (iy < 0 || iy >= h) continue;
          double* dst = plane + iy * w;
          const double* src = row + y * w;
          for (long x = x_lo; x < x_hi; ++x) dst[x + dx] += src[x];
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias) {
  if (input.rank() != 3 || kernels.rank() != 4 || bias.rank() != 1) {
    throw ShapeError("conv2d: expected input [C,H,W], kernels [Co,Ci,k,k], bias [Co]; got " +
                     shape_string(input.shape()) + ", " + shape_string(kernels.shape()) + ", " +
                     shape_string(bias.shape()));
  }
  const std::size_t k = kernels.dim(2);
  if (kernels.dim(3) != k) throw ShapeError("conv2d: kernels must be square, got " + shape_string(kernels.shape()));
  if (k % 2 == 0) throw ShapeError("conv2d: kernel size must be odd, got " + std::to_string(k));
  if (kernels.dim(1) != input.dim(0)) {
    throw ShapeError("conv2d: kernel input channels " + std::to_string(kernels.dim(1)) + " do not match input " +
                     shape_string(input.shape()));
  }
  if (bias.dim(0) != kernels.dim(0)) {
    throw ShapeError("conv2d: bias " + shape_string(bias.shape()) + " does not match kernels " +
                     shape_string(kernels.shape()));
  }
  const ConvGeometry g{input.dim(0), kernels.dim(0), input.dim(1), input.dim(2), k, k / 2};
  const auto co = static_cast<Eigen::Index>(g.channels_out);
  const auto pk = static_cast<Eigen::Index>(g.patch());
  const auto px = static_cast<Eigen::Index>(g.pixels());

  Buffer out(g.channels_out * g.pixels());
  MatMap out_m(out.data(), co, px);
  ConstMatMap w_m(kernels.values().data(), co, pk);
  if (k == 1) {
    out_m.noalias() = w_m * ConstMatMap(input.values().data(), pk, px);
  } else {
    Buffer cols(g.patch() * g.pixels());
    im2col(g, input.values().data(), cols.data());
    out_m.noalias() = w_m * ConstMatMap(cols.data(), pk, px);
  }
  auto b = bias.values();
  for (Eigen::Index o = 0; o < co; ++o) out_m.row(o).array() += b[static_cast<std::size_t>(o)];

  return make_result("conv2d", {g.channels_out, g.height, g.width}, std::move(out), {input, kernels, bias},
                     [g, co, pk, px](detail::Node& node) {
                       auto& in = *node.inputs[0];
                       auto& ker = *node.inputs[1];
                       auto& bia = *node.inputs[2];
                       ConstMatMap grad_out(node.grad.data(), co, px);
                       if (bia.requires_grad) {
                         double* gb = bia.grad_buffer();
                         for (Eigen::Index o = 0; o < co; ++o) gb[o] += grad_out.row(o).sum();
                       }
                       if (!in.requires_grad && !ker.requires_grad) return;
                       const bool pointwise = g.ksize == 1;
                       Buffer cols;
                       if (!pointwise) cols.resize(g.patch() * g.pixels());
                       if (ker.requires_grad) {
                         const double* cols_ptr = in.value.data();
                         if (!pointwise) {
                           im2col(g, in.value.data(), cols.data());
                           cols_ptr = cols.data();
                         }
                         MatMap(ker.grad_buffer(), co, pk).noalias() +=
                             grad_out * ConstMatMap(cols_ptr, pk, px).transpose();
                       }
                       if (in.requires_grad) {
                         ConstMatMap w(ker.value.data(), co, pk);
                         if (pointwise) {
                           MatMap(in.grad_buffer(), pk, px).noalias() += w.transpose() * grad_out;
                         } else {
                           MatMap cols_m(cols.data(), pk, px);
                           cols_m.noalias() = w.transpose() * grad_out;
                           col2im_add(g, cols.data(), in.grad_buffer());
                         }
                       }
                     });
}

Tensor channel_norm(const Tensor& input, const Tensor& scale, const Tensor& shift, double eps) {
  if (input.rank() != 3 || scale.rank() != 1 || shift.rank() != 1 || scale.dim(0) != input.dim(0) ||
      shift.dim(0) != input.dim(0)) {
    throw ShapeError("channel_norm: expected input [C,H,W], scale [C], shift [C]; got " + shape_string(input.shape()) +
                     ", " + shape_string(scale.shape()) + ", " + shape_string(shift.shape()));
  }
  if (!(eps > 0.0)) throw std::invalid_argument("channel_norm: eps must be positive");
  const std::size_t c = input.dim(0), n = input.dim(1) * input.dim(2);
  const auto x = input.values();
  const auto a = scale.values(), b = shift.values();
  Buffer out(c * n), normalized(c * n);
  std::vector<double> inv_std(c);
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double* xc = x.data() + ch * n;
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += xc[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (xc[i] - mean) * (xc[i] - mean);
    var /= static_cast<double>(n);
    inv_std[ch] = 1.0 / std::sqrt(var + eps);
    for (std::size_t i = 0; i < n; ++i) {
      normalized[ch * n + i] = (xc[i] - mean) * inv_std[ch];
      out[ch * n + i] = a[ch] * normalized[ch * n + i] + b[ch];
    }
  }
  return make_result("channel_norm", input.shape(), std::move(out), {input, scale, shift},
                     [c, n, inv_std = std::move(inv_std), normalized = std::move(normalized)](detail::Node& node) {
                       auto& in = *node.inputs[0];
                       auto& sc = *node.inputs[1];
                       auto& sh = *node.inputs[2];
                       const double inv_n = 1.0 / static_cast<double>(n);
                       for (std::size_t ch = 0; ch < c; ++ch) {
                         const double* g = node.grad.data() + ch * n;
                         const double* xh = normalized.data() + ch * n;
                         double sum_g = 0.0, sum_gx = 0.0;
                         for (std::size_t i = 0; i < n; ++i) {
                           sum_g += g[i];
                           sum_gx += g[i] * xh[i];
                         }
                         if (sc.requires_grad) sc.grad_buffer()[ch] += sum_gx;
                         if (sh.requires_grad) sh.grad_buffer()[ch] += sum_g;
                         if (in.requires_grad) {
                           const double k = sc.value[ch] * inv_std[ch];
                           double* gi = in.grad_buffer() + ch * n;
                           for (std::size_t i = 0; i < n; ++i) {
                             gi[i] += k * (g[i] - inv_n * sum_g - xh[i] * inv_n * sum_gx);
                           }
                         }
                       }
                     });
}

}  // namespace mixnet::ad
