#pragma once

#include <cstddef>
#include <vector>

#include "mixnet/autodiff/tensor.hpp"
#include "mixnet/random.hpp"

namespace mixnet::spectral {

struct TuckerDims {
  std::size_t spatial_rank;   // N_rho = ceil(rho * min(H, W))
  std::size_t spectral_rank;  // L_rho = ceil(rho * L)
};

TuckerDims tucker_dims(std::size_t height, std::size_t width, std::size_t bands, double rho);

/// Trainable Tucker factorization of the network input:
/// Z = core x1 rows x2 cols x3 spectral.
struct TuckerInput {
  ad::Tensor core;      // N_rho x N_rho x L_rho
  ad::Tensor rows;      // H x N_rho
  ad::Tensor cols;      // W x N_rho
  ad::Tensor spectral;  // L x L_rho
  double rho = 0.4;

  std::vector<ad::Tensor> parameters() const { return {core, rows, cols, spectral}; }
};

/// Random init: core ~ N(0, 1) and each factor ~ N(0, 1/rank), so composed
/// entries have unit variance regardless of the ranks.
TuckerInput make_tucker_input(std::size_t height, std::size_t width, std::size_t bands, double rho, Rng& rng);

/// Mode products in order 3, 2, 1; differentiable in the core and all factors.
ad::Tensor tucker_compose(const TuckerInput& t);

}  // namespace mixnet::spectral
