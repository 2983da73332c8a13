#pragma once

#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "mixnet/autodiff/tensor.hpp"
#include "mixnet/forward/forward_model.hpp"
#include "mixnet/net/mixture_net.hpp"
#include "mixnet/random.hpp"
#include "mixnet/spectral/cube.hpp"

namespace mixnet::loss {

enum class Fidelity { l2, sure };

/// `normalized`: (1/m)|y - Phi f|^2 - sigma^2 + (2 sigma^2 / m) div.
/// `unnormalized`: |y - Phi f|^2 - sigma^2 + (2 sigma / n) div, with n the cube size.
enum class SureForm { normalized, unnormalized };

std::string_view to_string(Fidelity f);
std::string_view to_string(SureForm f);
Fidelity parse_fidelity(std::string_view text);
SureForm parse_sure_form(std::string_view text);

struct LossConfig {
  Fidelity fidelity = Fidelity::l2;
  std::vector<double> tau;    // per-block weight; zero drops the block's term
  std::vector<double> gamma;  // per-block sum-to-one weight
  double sure_eps = 1e-5;
  double sigma = 0.0;
  SureForm sure_form = SureForm::normalized;
  std::size_t probes = 1;

  void validate(std::size_t blocks) const;
};

/// |y - Phi f|^2, unnormalized.
ad::Tensor l2_fidelity(const ad::Tensor& y, const forward::ForwardModel& model, const ad::Tensor& f);

/// sum_i (a_i^T 1 - 1)^2 over all pixels of an H x W x r abundance tensor.
ad::Tensor sum_to_one_reg(const ad::Tensor& abundances);

ad::Tensor sure_fidelity(const ad::Tensor& y, const forward::ForwardModel& model, const ad::Tensor& f, double sigma,
                         const ad::Tensor& divergence, SureForm form = SureForm::normalized);

/// probe^T (phi_perturbed - phi_base) / eps.
ad::Tensor divergence_from_probe(const ad::Tensor& probe, const ad::Tensor& phi_perturbed, const ad::Tensor& phi_base,
                                 double eps);

/// Fills a tensor shaped like `like` with standard-normal probe entries.
ad::Tensor draw_probe(const ad::Tensor& like, Rng& rng);

using CubeMap = std::function<ad::Tensor(const ad::Tensor&)>;

/// Monte-Carlo estimate of the divergence of Phi o fn at f0, averaged over
/// `probes` Gaussian probes. Requires the measurement and the input to have
/// the same number of entries.
ad::Tensor mc_divergence(const CubeMap& fn, const ad::Tensor& f0, const forward::ForwardModel& model, double eps,
                         Rng& rng, std::size_t probes = 1);

/// sum_k tau_k (F(f_k) + gamma_k R(a_k)); under the normalized SURE form R is
/// divided by the measurement count like F. With SURE fidelity, `divergences`
/// holds one estimate per block (entries for zero-weight blocks may be empty).
ad::Tensor multi_block_loss(const LossConfig& config, const ad::Tensor& y, const forward::ForwardModel& model,
                            std::span<const net::BlockOutput> blocks, std::span<const ad::Tensor> divergences = {});

/// Noise level from the median absolute deviation of the diagonal detail
/// coefficients of a one-level orthonormal Haar transform, averaged over
/// bands. Odd spatial sizes are cropped by one row/column.
double estimate_sigma(const spectral::SpectralCube& cube);

/// Mean over pixels of |sum_j a_ij - 1|.
double sum_to_one_violation(const ad::Tensor& abundances);

}  // namespace mixnet::loss
