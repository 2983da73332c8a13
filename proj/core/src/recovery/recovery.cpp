#include "mixnet/recovery/recovery.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>

#include "mixnet/autodiff/adam.hpp"
#include "mixnet/autodiff/ops.hpp"
#include "mixnet/error.hpp"
#include "mixnet/loss/losses.hpp"
#include "mixnet/random.hpp"
#include "mixnet/spectral/input.hpp"
#include "mixnet/spectral/tucker.hpp"

namespace mixnet::recovery {

using spectral::SpectralCube;

namespace {

spectral::FixedInputKind fixed_kind(InputStrategy s) {
  switch (s) {
    case InputStrategy::constant: return spectral::FixedInputKind::constant;
    case InputStrategy::random: return spectral::FixedInputKind::random;
    case InputStrategy::meshgrid: return spectral::FixedInputKind::meshgrid;
    case InputStrategy::estimated: return spectral::FixedInputKind::estimated;
    case InputStrategy::learned: break;
  }
  throw std::logic_error("learned input has no fixed kind");
}

Eigen::MatrixXd to_matrix(const ad::Tensor& t) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(t.dim(0)), static_cast<Eigen::Index>(t.dim(1)));
  for (std::size_t i = 0; i < t.dim(0); ++i) {
    for (std::size_t j = 0; j < t.dim(1); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t[i * t.dim(1) + j];
    }
  }
  return m;
}

}  // namespace

RecoveryResult run_recovery(const RecoveryConfig& config, const ad::Tensor& y, const forward::ForwardModel& model,
                            const SpectralCube* reference, const Observer& observer) {
  const ad::Shape& cube_shape = model.input_shape();
  const std::size_t h = cube_shape[0], w = cube_shape[1], bands = cube_shape[2];
  config.validate(bands);
  if (y.shape() != model.output_shape()) {
    throw ShapeError("measurements " + shape_string(y.shape()) + " do not match the forward model output " +
                     shape_string(model.output_shape()));
  }
  if (reference && reference->shape() != cube_shape) {
    throw ShapeError("reference " + shape_string(reference->shape()) + " does not match the scene shape " +
                     shape_string(cube_shape));
  }

  RecoveryResult result;
  result.fidelity = config.resolved_fidelity();
  const bool sure = result.fidelity == loss::Fidelity::sure;
  if (sure && model.output_size() != model.input_size()) {
    throw std::invalid_argument("SURE fidelity needs a forward model whose output matches the scene size");
  }

  loss::LossConfig loss_config;
  loss_config.fidelity = result.fidelity;
  loss_config.tau = config.resolved_tau();
  loss_config.gamma = config.resolved_gamma();
  loss_config.sure_eps = config.sure_eps;
  loss_config.sure_form = config.sure_form;
  loss_config.probes = config.div_probes;
  if (sure) {
    if (config.sigma) {
      loss_config.sigma = *config.sigma;
    } else {
      loss_config.sigma = loss::estimate_sigma(SpectralCube::from_tensor(y));
      result.sigma_estimated = true;
    }
  } else if (config.sigma) {
    loss_config.sigma = *config.sigma;
  }
  result.sigma = loss_config.sigma;
  loss_config.validate(config.net.blocks);

  const Rng root(config.seed);
  Rng init_rng = root.split("network_init");
  net::MixtureNet net(config.net, h, w, bands, init_rng);

  std::optional<spectral::TuckerInput> tucker;
  ad::Tensor fixed;
  if (config.input_strategy == InputStrategy::learned) {
    Rng tucker_rng = root.split("tucker_input");
    tucker = spectral::make_tucker_input(h, w, bands, config.rho, tucker_rng);
  } else {
    Rng input_rng = root.split("fixed_input");
    const ad::Tensor y_const = y.detach();
    fixed = spectral::fixed_input(fixed_kind(config.input_strategy), cube_shape, input_rng, &model, &y_const);
  }
  auto network_input = [&] { return tucker ? spectral::tucker_compose(*tucker) : fixed; };

  std::vector<ad::Tensor> params = net.trainable_parameters();
  if (tucker) {
    for (const auto& p : tucker->parameters()) params.push_back(p);
  }
  ad::Adam optimizer(params, ad::AdamOptions{.lr = config.lr});

  Rng perturb_rng = root.split("input_perturbation");
  Rng probe_rng = root.split("divergence_probe");
  const ad::Tensor target = y.detach();
  result.log.reserve(config.iterations);
  // Under input perturbation single passes fluctuate from one iteration to
  // the next, so the recovered cube is a running average of training outputs.
  std::vector<double> avg_output;
  std::vector<std::vector<double>> avg_abundances(config.net.blocks);
  auto accumulate = [w = config.output_ema](std::vector<double>& avg, std::span<const double> v) {
    if (avg.empty()) {
      avg.assign(v.begin(), v.end());
      return;
    }
    for (std::size_t i = 0; i < avg.size(); ++i) avg[i] = w * avg[i] + (1.0 - w) * v[i];
  };

  for (std::size_t it = 1; it <= config.iterations; ++it) {
    optimizer.zero_grad();
    const ad::Tensor f0 = spectral::perturb_input(network_input(), config.beta, perturb_rng);
    const net::NetOutput out = net.forward(f0);

    std::vector<ad::Tensor> divergences;
    if (sure) {
      divergences.resize(out.blocks.size());
      for (std::size_t p = 0; p < config.div_probes; ++p) {
        const ad::Tensor probe = loss::draw_probe(f0, probe_rng);
        const net::NetOutput shifted = net.forward(ad::add(f0, ad::scale(probe, config.sure_eps)));
        for (std::size_t k = 0; k < out.blocks.size(); ++k) {
          if (loss_config.tau[k] == 0.0) continue;
          const ad::Tensor probe_m = ad::reshape(probe, model.output_shape());
          ad::Tensor div = loss::divergence_from_probe(probe_m, model.apply(shifted.blocks[k].f),
                                                       model.apply(out.blocks[k].f), config.sure_eps);
          divergences[k] = divergences[k].defined() ? ad::add(divergences[k], div) : div;
        }
      }
      if (config.div_probes > 1) {
        for (auto& d : divergences) {
          if (d.defined()) d = ad::scale(d, 1.0 / static_cast<double>(config.div_probes));
        }
      }
    }

    const ad::Tensor loss = loss::multi_block_loss(loss_config, target, model, out.blocks, divergences);
    const double value = loss.item();
    if (!std::isfinite(value)) {
      throw NumericError("loss became non-finite at iteration " + std::to_string(it), it);
    }
    ad::backward(loss);
    optimizer.step();
    net.project_endmembers();

    IterationRecord record{it, value, std::nullopt};
    if (reference) record.psnr = metrics::psnr(*reference, SpectralCube::from_tensor(out.output));
    result.log.push_back(record);
    accumulate(avg_output, out.output.values());
    for (std::size_t k = 0; k < out.blocks.size(); ++k) accumulate(avg_abundances[k], out.blocks[k].abundances.values());
    if (observer) observer(IterationState{it, value, net, out});
  }

  result.initial_input = SpectralCube::from_tensor(network_input());
  result.recovered = SpectralCube(h, w, bands, std::move(avg_output));
  if (!result.recovered.all_finite()) throw NumericError("recovered cube is not finite", config.iterations);
  for (std::size_t k = 0; k < net.blocks().size(); ++k) {
    result.abundances.emplace_back(h, w, config.net.rank, std::move(avg_abundances[k]));
    result.endmembers.push_back(to_matrix(net.blocks()[k].endmembers));
  }
  if (reference) {
    result.metrics = metrics::evaluate(*reference, result.recovered,
                                       config.task == Task::sr ? static_cast<double>(config.d) : 1.0);
  }
  return result;
}

forward::ForwardModel make_task_model(const RecoveryConfig& config, std::size_t height, std::size_t width,
                                      std::size_t bands) {
  switch (config.task) {
    case Task::denoise: return forward::ForwardModel::identity(height, width, bands);
    case Task::sr:
      return forward::ForwardModel::blur_downsample(height, width, bands, config.d,
                                                    forward::make_gaussian_kernel(static_cast<int>(config.d)));
    case Task::csi:
      return forward::ForwardModel::cassi(height, width, bands, config.cassi,
                                          forward::make_coded_aperture(height, width, config.seed));
  }
  throw std::invalid_argument("unknown task");
}

ad::Tensor simulate_measurements(const RecoveryConfig& config, const forward::ForwardModel& model,
                                 const SpectralCube& scene) {
  const ad::Tensor y = model.apply(scene.to_tensor());
  if (config.task != Task::denoise) return y;
  return forward::add_gaussian_noise(y, config.noise_sigma, config.seed);
}

SpectralCube adjoint_baseline(const forward::ForwardModel& model, const ad::Tensor& y) {
  std::vector<double> back(model.input_size(), 0.0), weight(model.input_size(), 0.0);
  model.adjoint(y.values(), back);
  const std::vector<double> ones(model.output_size(), 1.0);
  model.adjoint(ones, weight);
  for (std::size_t i = 0; i < back.size(); ++i) back[i] = weight[i] > 0.0 ? back[i] / weight[i] : 0.0;
  const auto& s = model.input_shape();
  return SpectralCube(s[0], s[1], s[2], std::move(back));
}

}  // namespace mixnet::recovery
