#include "mixnet/autodiff/ops.hpp"

#include <Eigen/Core>
#include <cmath>

#include "mixnet/error.hpp"

namespace mixnet::ad {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

bool wants_grad(const detail::Node& out, std::size_t i) { return out.inputs[i]->requires_grad; }

template <typename Fn>
Buffer map_values(const Tensor& a, Fn fn) {
  Buffer out(a.size());
  auto in = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fn(in[i]);
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  Buffer v(a.size());
  auto x = a.values(), y = b.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = x[i] + y[i];
  return make_result("add", a.shape(), std::move(v), {a, b}, [](detail::Node& out) {
    for (std::size_t k = 0; k < 2; ++k) {
      if (!wants_grad(out, k)) continue;
      double* g = out.inputs[k]->grad_buffer();
      for (std::size_t i = 0; i < out.grad.size(); ++i) g[i] += out.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  Buffer v(a.size());
  auto x = a.values(), y = b.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = x[i] - y[i];
  return make_result("sub", a.shape(), std::move(v), {a, b}, [](detail::Node& out) {
    if (wants_grad(out, 0)) {
      double* g = out.inputs[0]->grad_buffer();
      for (std::size_t i = 0; i < out.grad.size(); ++i) g[i] += out.grad[i];
    }
    if (wants_grad(out, 1)) {
      double* g = out.inputs[1]->grad_buffer();
      for (std::size_t i = 0; i < out.grad.size(); ++i) g[i] -= out.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  Buffer v(a.size());
  auto x = a.values(), y = b.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = x[i] * y[i];
  return make_result("mul", a.shape(), std::move(v), {a, b}, [](detail::Node& out) {
    const auto& x = out.inputs[0]->value;
    const auto& y = out.inputs[1]->value;
    if (wants_grad(out, 0)) {
      double* g = out.inputs[0]->grad_buffer();
      for (std::size_t i = 0; i < out.grad.size(); ++i) g[i] += out.grad[i] * y[i];
    }
    if (wants_grad(out, 1)) {
      double* g = out.inputs[1]->grad_buffer();
      for (std::size_t i = 0; i < out.grad.size(); ++i) g[i] += out.grad[i] * x[i];
    }
  });
}

Tensor scale(const Tensor& a, double s) {
  return make_result("scale", a.shape(), map_values(a, [s](double x) { return s * x; }), {a},
                     [s](detail::Node& out) {
                       double* g = out.inputs[0]->grad_buffer();
                       for (std::size_t i = 0; i < out.grad.size(); ++i) g[i] += s * out.grad[i];
                     });
}

Tensor add_scalar(const Tensor& a, double s) {
  return make_result("add_scalar", a.shape(), map_values(a, [s](double x) { return x + s; }), {a},
                     [](detail::Node& out) {
                       double* g = out.inputs[0]->grad_buffer();
                       for (std::size_t i = 0; i < out.grad.size(); ++i) g[i] += out.grad[i];
                     });
}

Tensor square(const Tensor& a) {
  return make_result("square", a.shape(), map_values(a, [](double x) { return x * x; }), {a},
                     [](detail::Node& out) {
                       const auto& x = out.inputs[0]->value;
                       double* g = out.inputs[0]->grad_buffer();
                       for (std::size_t i = 0; i < out.grad.size(); ++i) g[i] += 2.0 * x[i] * out.grad[i];
                     });
}

Tensor sigmoid(const Tensor& x) {
  auto v = map_values(x, [](double t) {
    // Split by sign so exp never overflows.
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
  });
  return make_result("sigmoid", x.shape(), std::move(v), {x}, [](detail::Node& out) {
    double* g = out.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < out.grad.size(); ++i) {
      const double s = out.value[i];
      g[i] += out.grad[i] * s * (1.0 - s);
    }
  });
}

Tensor leaky_relu(const Tensor& x, double slope) {
  auto v = map_values(x, [slope](double t) { return t > 0.0 ? t : slope * t; });
  return make_result("leaky_relu", x.shape(), std::move(v), {x}, [slope](detail::Node& out) {
    const auto& in = out.inputs[0]->value;
    double* g = out.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < out.grad.size(); ++i) g[i] += out.grad[i] * (in[i] > 0.0 ? 1.0 : slope);
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: incompatible shapes " + shape_string(a.shape()) + " and " + shape_string(b.shape()));
  }
  const auto m = static_cast<Eigen::Index>(a.dim(0));
  const auto k = static_cast<Eigen::Index>(a.dim(1));
  const auto n = static_cast<Eigen::Index>(b.dim(1));
  Buffer v(static_cast<std::size_t>(m * n));
  MatMap(v.data(), m, n).noalias() = ConstMatMap(a.values().data(), m, k) * ConstMatMap(b.values().data(), k, n);
  return make_result("matmul", {a.dim(0), b.dim(1)}, std::move(v), {a, b}, [m, k, n](detail::Node& out) {
    ConstMatMap g(out.grad.data(), m, n);
    if (wants_grad(out, 0)) {
      ConstMatMap bm(out.inputs[1]->value.data(), k, n);
      MatMap(out.inputs[0]->grad_buffer(), m, k).noalias() += g * bm.transpose();
    }
    if (wants_grad(out, 1)) {
      ConstMatMap am(out.inputs[0]->value.data(), m, k);
      MatMap(out.inputs[1]->grad_buffer(), k, n).noalias() += am.transpose() * g;
    }
  });
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw ShapeError("transpose expects a matrix, got " + shape_string(a.shape()));
  return permute(a, {1, 0});
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (num_elements(shape) != x.size()) {
    throw ShapeError("reshape: cannot view " + shape_string(x.shape()) + " as " + shape_string(shape));
  }
  Buffer v(x.values().begin(), x.values().end());
  return make_result("reshape", std::move(shape), std::move(v), {x}, [](detail::Node& out) {
    double* g = out.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < out.grad.size(); ++i) g[i] += out.grad[i];
  });
}

Tensor permute(const Tensor& x, std::initializer_list<std::size_t> axes) {
  return permute(x, std::span<const std::size_t>(axes.begin(), axes.size()));
}

Tensor permute(const Tensor& x, std::span<const std::size_t> axes) {
  const std::size_t rank = x.rank();
  if (axes.size() != rank) {
    throw ShapeError("permute: " + std::to_string(axes.size()) + " axes given for shape " + shape_string(x.shape()));
  }
  std::vector<bool> used(rank, false);
  for (std::size_t a : axes) {
    if (a >= rank || used[a]) throw ShapeError("permute: invalid axis order for shape " + shape_string(x.shape()));
    used[a] = true;
  }
  const Shape& in_shape = x.shape();
  Shape out_shape(rank);
  std::vector<std::size_t> in_strides(rank, 1);
  for (std::size_t i = rank; i-- > 1;) in_strides[i - 1] = in_strides[i] * in_shape[i];
  // Input stride for each output axis.
  std::vector<std::size_t> src_stride(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    out_shape[i] = in_shape[axes[i]];
    src_stride[i] = in_strides[axes[i]];
  }
  // Gather index table shared by forward and backward.
  const std::size_t n = x.size();
  auto index = std::make_shared<std::vector<std::size_t>>(n);
  std::vector<std::size_t> counter(rank, 0);
  std::size_t src = 0;
  for (std::size_t i = 0; i < n; ++i) {
    (*index)[i] = src;
    for (std::size_t ax = rank; ax-- > 0;) {
      if (++counter[ax] < out_shape[ax]) {
        src += src_stride[ax];
        break;
      }
      src -= (out_shape[ax] - 1) * src_stride[ax];
      counter[ax] = 0;
    }
  }
  Buffer v(n);
  auto in = x.values();
  for (std::size_t i = 0; i < n; ++i) v[i] = in[(*index)[i]];
  return make_result("permute", std::move(out_shape), std::move(v), {x}, [index](detail::Node& out) {
    double* g = out.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < out.grad.size(); ++i) g[(*index)[i]] += out.grad[i];
  });
}

Tensor reduce_sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += v;
  return make_result("reduce_sum", {1}, {s}, {x}, [](detail::Node& out) {
    double* g = out.inputs[0]->grad_buffer();
    const double go = out.grad[0];
    for (std::size_t i = 0; i < out.inputs[0]->value.size(); ++i) g[i] += go;
  });
}

Tensor reduce_mean(const Tensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += v;
  const double inv = 1.0 / static_cast<double>(x.size());
  return make_result("reduce_mean", {1}, {s * inv}, {x}, [inv](detail::Node& out) {
    double* g = out.inputs[0]->grad_buffer();
    const double go = out.grad[0] * inv;
    for (std::size_t i = 0; i < out.inputs[0]->value.size(); ++i) g[i] += go;
  });
}

Tensor sq_l2_norm(const Tensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += v * v;
  return make_result("sq_l2_norm", {1}, {s}, {x}, [](detail::Node& out) {
    const auto& in = out.inputs[0]->value;
    double* g = out.inputs[0]->grad_buffer();
    const double go = 2.0 * out.grad[0];
    for (std::size_t i = 0; i < in.size(); ++i) g[i] += go * in[i];
  });
}

Tensor dot(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) {
    throw ShapeError("dot: size mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
  double s = 0.0;
  auto x = a.values(), y = b.values();
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return make_result("dot", {1}, {s}, {a, b}, [](detail::Node& out) {
    const double go = out.grad[0];
    const auto& x = out.inputs[0]->value;
    const auto& y = out.inputs[1]->value;
    if (wants_grad(out, 0)) {
      double* g = out.inputs[0]->grad_buffer();
      for (std::size_t i = 0; i < x.size(); ++i) g[i] += go * y[i];
    }
    if (wants_grad(out, 1)) {
      double* g = out.inputs[1]->grad_buffer();
      for (std::size_t i = 0; i < y.size(); ++i) g[i] += go * x[i];
    }
  });
}

Tensor linear_map(const Tensor& x, Shape out_shape, const LinearKernel& apply, const LinearKernel& adjoint,
                  const char* op) {
  Buffer v(num_elements(out_shape), 0.0);
  apply(x.values(), v);
  return make_result(op, std::move(out_shape), std::move(v), {x}, [adjoint](detail::Node& out) {
    auto& in = *out.inputs[0];
    Buffer back(in.value.size(), 0.0);
    adjoint(out.grad, back);
    double* g = in.grad_buffer();
    for (std::size_t i = 0; i < back.size(); ++i) g[i] += back[i];
  });
}

}  // namespace mixnet::ad
