#include "mixnet/spectral/tucker.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mixnet/autodiff/ops.hpp"
#include "mixnet/error.hpp"

namespace mixnet::spectral {

TuckerDims tucker_dims(std::size_t height, std::size_t width, std::size_t bands, double rho) {
  if (!(rho > 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in (0, 1], got " + std::to_string(rho));
  // The epsilon absorbs products such as 0.4 * 10 landing just above 4.
  auto scaled = [rho](std::size_t n) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(rho * static_cast<double>(n) - 1e-9)));
  };
  return {scaled(std::min(height, width)), scaled(bands)};
}

TuckerInput make_tucker_input(std::size_t height, std::size_t width, std::size_t bands, double rho, Rng& rng) {
  const auto dims = tucker_dims(height, width, bands, rho);
  auto gaussian = [&rng](ad::Shape shape, double stddev) {
    std::vector<double> v(ad::num_elements(shape));
    for (double& x : v) x = stddev * rng.normal();
    return ad::Tensor::from(std::move(shape), std::move(v), true);
  };
  const double n = static_cast<double>(dims.spatial_rank), l = static_cast<double>(dims.spectral_rank);
  TuckerInput t;
  t.rho = rho;
  t.core = gaussian({dims.spatial_rank, dims.spatial_rank, dims.spectral_rank}, 1.0);
  t.rows = gaussian({height, dims.spatial_rank}, 1.0 / std::sqrt(n));
  t.cols = gaussian({width, dims.spatial_rank}, 1.0 / std::sqrt(n));
  t.spectral = gaussian({bands, dims.spectral_rank}, 1.0 / std::sqrt(l));
  return t;
}

ad::Tensor tucker_compose(const TuckerInput& t) {
  using namespace mixnet::ad;
  if (t.core.rank() != 3 || t.rows.rank() != 2 || t.cols.rank() != 2 || t.spectral.rank() != 2) {
    throw ShapeError("tucker_compose: expected a rank-3 core and matrix factors");
  }
  const std::size_t a = t.core.dim(0), b = t.core.dim(1), c = t.core.dim(2);
  if (t.rows.dim(1) != a || t.cols.dim(1) != b || t.spectral.dim(1) != c) {
    throw ShapeError("tucker_compose: factors " + shape_string(t.rows.shape()) + ", " +
                     shape_string(t.cols.shape()) + ", " + shape_string(t.spectral.shape()) +
                     " do not match core " + shape_string(t.core.shape()));
  }
  const std::size_t h = t.rows.dim(0), w = t.cols.dim(0), l = t.spectral.dim(0);
  // mode 3: (a b) x c  ->  (a b) x L
  Tensor z = matmul(reshape(t.core, {a * b, c}), transpose(t.spectral));
  // mode 2: a x L x b  ->  a x L x W
  z = permute(reshape(z, {a, b, l}), {0, 2, 1});
  z = matmul(reshape(z, {a * l, b}), transpose(t.cols));
  // mode 1: a x (L W)  ->  H x L x W  ->  H x W x L
  z = matmul(t.rows, reshape(z, {a, l * w}));
  return permute(reshape(z, {h, l, w}), {0, 2, 1});
}

}  // namespace mixnet::spectral
