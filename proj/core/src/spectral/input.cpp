#include "mixnet/spectral/input.hpp"

#include <stdexcept>

#include "mixnet/autodiff/ops.hpp"
#include "mixnet/error.hpp"

namespace mixnet::spectral {

std::string_view to_string(FixedInputKind kind) {
  switch (kind) {
    case FixedInputKind::constant: return "constant";
    case FixedInputKind::random: return "random";
    case FixedInputKind::meshgrid: return "meshgrid";
    case FixedInputKind::estimated: return "estimated";
  }
  return "unknown";
}

ad::Tensor fixed_input(FixedInputKind kind, const ad::Shape& shape, Rng& rng, const forward::ForwardModel* model,
                       const ad::Tensor* y) {
  if (shape.size() != 3) throw ShapeError("fixed_input expects an H x W x L shape, got " + shape_string(shape));
  const std::size_t h = shape[0], w = shape[1], l = shape[2];
  switch (kind) {
    case FixedInputKind::constant: return ad::Tensor::full(shape, 0.5);
    case FixedInputKind::random: {
      std::vector<double> v(h * w * l);
      for (double& x : v) x = rng.normal();
      return ad::Tensor::from(shape, std::move(v));
    }
    case FixedInputKind::meshgrid: {
      std::vector<double> v(h * w * l);
      const double hy = h > 1 ? static_cast<double>(h - 1) : 1.0;
      const double wx = w > 1 ? static_cast<double>(w - 1) : 1.0;
      for (std::size_t i = 0; i < h; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
          for (std::size_t b = 0; b < l; ++b) {
            v[(i * w + j) * l + b] = b % 2 == 0 ? static_cast<double>(i) / hy : static_cast<double>(j) / wx;
          }
        }
      }
      return ad::Tensor::from(shape, std::move(v));
    }
    case FixedInputKind::estimated: {
      if (!model || !y || !y->defined()) {
        throw std::invalid_argument("estimated input requires the forward model and the measurements");
      }
      if (model->input_shape() != shape) {
        throw ShapeError("forward model input " + shape_string(model->input_shape()) + " does not match " +
                         shape_string(shape));
      }
      return model->adjoint(y->detach());
    }
  }
  throw std::invalid_argument("unknown fixed input kind");
}

ad::Tensor perturb_input(const ad::Tensor& z, double beta, Rng& rng) {
  if (beta < 0.0) throw std::invalid_argument("perturbation level must be non-negative");
  if (beta == 0.0) return z;
  std::vector<double> noise(z.size());
  for (double& x : noise) x = beta * rng.normal();
  return ad::add(z, ad::Tensor::from(z.shape(), std::move(noise)));
}

}  // namespace mixnet::spectral
