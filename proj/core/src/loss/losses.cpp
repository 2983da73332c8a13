#include "mixnet/loss/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "mixnet/autodiff/ops.hpp"
#include "mixnet/error.hpp"

namespace mixnet::loss {

using ad::Tensor;

std::string_view to_string(Fidelity f) { return f == Fidelity::l2 ? "l2" : "sure"; }
std::string_view to_string(SureForm f) { return f == SureForm::normalized ? "normalized" : "unnormalized"; }

Fidelity parse_fidelity(std::string_view text) {
  if (text == "l2") return Fidelity::l2;
  if (text == "sure") return Fidelity::sure;
  throw std::invalid_argument("unknown fidelity '" + std::string(text) + "' (expected l2 or sure)");
}

SureForm parse_sure_form(std::string_view text) {
  if (text == "normalized") return SureForm::normalized;
  if (text == "unnormalized") return SureForm::unnormalized;
  throw std::invalid_argument("unknown SURE form '" + std::string(text) + "' (expected normalized or unnormalized)");
}

void LossConfig::validate(std::size_t blocks) const {
  if (tau.size() != blocks || gamma.size() != blocks) {
    throw std::invalid_argument("loss weights need one entry per block: " + std::to_string(blocks) +
                                " blocks, " + std::to_string(tau.size()) + " tau, " + std::to_string(gamma.size()) +
                                " gamma");
  }
  for (double t : tau) {
    if (!(t >= 0.0)) throw std::invalid_argument("tau weights must be non-negative");
  }
  for (double g : gamma) {
    if (!(g >= 0.0)) throw std::invalid_argument("gamma weights must be non-negative");
  }
  if (!(sure_eps > 0.0)) throw std::invalid_argument("SURE epsilon must be positive");
  if (!(sigma >= 0.0)) throw std::invalid_argument("noise level must be non-negative");
  if (probes < 1) throw std::invalid_argument("at least one divergence probe is required");
}

Tensor l2_fidelity(const Tensor& y, const forward::ForwardModel& model, const Tensor& f) {
  const Tensor predicted = model.apply(f);
  if (predicted.shape() != y.shape()) {
    throw ShapeError("measurements " + shape_string(y.shape()) + " do not match the model output " +
                     shape_string(predicted.shape()));
  }
  return ad::sq_l2_norm(ad::sub(y, predicted));
}

Tensor sum_to_one_reg(const Tensor& abundances) {
  if (abundances.rank() != 3) throw ShapeError("abundances must be H x W x r, got " + shape_string(abundances.shape()));
  const std::size_t pixels = abundances.dim(0) * abundances.dim(1), r = abundances.dim(2);
  const Tensor sums = ad::matmul(ad::reshape(abundances, {pixels, r}), Tensor::full({r, 1}, 1.0));
  return ad::sq_l2_norm(ad::add_scalar(sums, -1.0));
}

Tensor sure_fidelity(const Tensor& y, const forward::ForwardModel& model, const Tensor& f, double sigma,
                     const Tensor& divergence, SureForm form) {
  if (sigma < 0.0) throw std::invalid_argument("noise level must be non-negative");
  const double m = static_cast<double>(y.size());
  const Tensor residual = l2_fidelity(y, model, f);
  if (form == SureForm::unnormalized) {
    const double n = static_cast<double>(f.size());
    return ad::add(ad::add_scalar(residual, -sigma * sigma), ad::scale(divergence, 2.0 * sigma / n));
  }
  return ad::add(ad::add_scalar(ad::scale(residual, 1.0 / m), -sigma * sigma),
                 ad::scale(divergence, 2.0 * sigma * sigma / m));
}

Tensor divergence_from_probe(const Tensor& probe, const Tensor& phi_perturbed, const Tensor& phi_base, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("divergence step must be positive");
  if (probe.size() != phi_perturbed.size()) {
    throw ShapeError("divergence probe " + shape_string(probe.shape()) + " does not match measurements " +
                     shape_string(phi_perturbed.shape()));
  }
  return ad::scale(ad::dot(probe, ad::sub(phi_perturbed, phi_base)), 1.0 / eps);
}

Tensor draw_probe(const Tensor& like, Rng& rng) {
  std::vector<double> b(like.size());
  for (double& v : b) v = rng.normal();
  return Tensor::from(like.shape(), std::move(b));
}

Tensor mc_divergence(const CubeMap& fn, const Tensor& f0, const forward::ForwardModel& model, double eps, Rng& rng,
                     std::size_t probes) {
  if (!(eps > 0.0)) throw std::invalid_argument("divergence step must be positive");
  if (probes < 1) throw std::invalid_argument("at least one divergence probe is required");
  if (model.output_size() != f0.size()) {
    throw ShapeError("Monte-Carlo divergence needs measurements the size of the input: " +
                     shape_string(model.output_shape()) + " vs " + shape_string(f0.shape()));
  }
  const Tensor base = model.apply(fn(f0));
  Tensor total;
  for (std::size_t p = 0; p < probes; ++p) {
    const Tensor b = draw_probe(f0, rng);
    const Tensor shifted = ad::add(f0, ad::scale(b, eps));
    const Tensor div = divergence_from_probe(b, model.apply(fn(shifted)), base, eps);
    total = total.defined() ? ad::add(total, div) : div;
  }
  return probes == 1 ? total : ad::scale(total, 1.0 / static_cast<double>(probes));
}

Tensor multi_block_loss(const LossConfig& config, const Tensor& y, const forward::ForwardModel& model,
                        std::span<const net::BlockOutput> blocks, std::span<const Tensor> divergences) {
  config.validate(blocks.size());
  if (config.fidelity == Fidelity::sure && divergences.size() != blocks.size()) {
    throw std::invalid_argument("SURE fidelity needs one divergence per block: " + std::to_string(blocks.size()) +
                                " blocks, " + std::to_string(divergences.size()) + " divergences");
  }
  Tensor total;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    if (config.tau[k] == 0.0) continue;
    Tensor term;
    if (config.fidelity == Fidelity::sure) {
      if (!divergences[k].defined()) throw std::invalid_argument("missing divergence for block " + std::to_string(k));
      term = sure_fidelity(y, model, blocks[k].f, config.sigma, divergences[k], config.sure_form);
    } else {
      term = l2_fidelity(y, model, blocks[k].f);
    }
    if (config.gamma[k] != 0.0) {
      // The normalized SURE term is the unnormalized one divided by m; the
      // penalty gets the same factor so their balance matches the l2 loss.
      const double weight = config.fidelity == Fidelity::sure && config.sure_form == SureForm::normalized
                                ? config.gamma[k] / static_cast<double>(y.size())
                                : config.gamma[k];
      term = ad::add(term, ad::scale(sum_to_one_reg(blocks[k].abundances), weight));
    }
    if (config.tau[k] != 1.0) term = ad::scale(term, config.tau[k]);
    total = total.defined() ? ad::add(total, term) : term;
  }
  if (!total.defined()) throw std::invalid_argument("every block weight is zero");
  return total;
}

double sum_to_one_violation(const Tensor& abundances) {
  if (abundances.rank() != 3) throw ShapeError("abundances must be H x W x r, got " + shape_string(abundances.shape()));
  const std::size_t pixels = abundances.dim(0) * abundances.dim(1), r = abundances.dim(2);
  auto v = abundances.values();
  double total = 0.0;
  for (std::size_t p = 0; p < pixels; ++p) {
    double s = 0.0;
    for (std::size_t j = 0; j < r; ++j) s += v[p * r + j];
    total += std::abs(s - 1.0);
  }
  return total / static_cast<double>(pixels);
}

}  // namespace mixnet::loss
