#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <vector>

#include "mixnet/autodiff/tensor.hpp"
#include "mixnet/forward/forward_model.hpp"
#include "mixnet/metrics/metrics.hpp"
#include "mixnet/net/mixture_net.hpp"
#include "mixnet/recovery/config.hpp"
#include "mixnet/spectral/cube.hpp"

namespace mixnet::recovery {

struct IterationRecord {
  std::size_t iteration = 0;  // 1-based
  double loss = 0.0;
  std::optional<double> psnr;  // of the training forward pass, when a reference is given
};

/// Passed to the observer after the optimizer step and the endmember
/// projection of each iteration. `output` is the forward pass the step used.
struct IterationState {
  std::size_t iteration;
  double loss;
  const net::MixtureNet& net;
  const net::NetOutput& output;
};

using Observer = std::function<void(const IterationState&)>;

struct RecoveryResult {
  spectral::SpectralCube recovered;                 // running average of training outputs (output_ema)
  std::vector<spectral::SpectralCube> abundances;  // per block, H x W x r, averaged the same way
  std::vector<Eigen::MatrixXd> endmembers;         // per block, L x r
  std::vector<IterationRecord> log;
  std::optional<metrics::MetricReport> metrics;
  spectral::SpectralCube initial_input;  // unperturbed network input after training
  loss::Fidelity fidelity = loss::Fidelity::l2;
  double sigma = 0.0;
  bool sigma_estimated = false;
};

/// Fits a freshly initialized Mixture-Net to the measurements `y` of `model`.
/// Throws NumericError with the iteration index if the loss becomes non-finite.
RecoveryResult run_recovery(const RecoveryConfig& config, const ad::Tensor& y, const forward::ForwardModel& model,
                            const spectral::SpectralCube* reference = nullptr, const Observer& observer = {});

/// Forward model for a task on an H x W x L scene: identity, Gaussian blur with
/// factor `d`, or a CASSI variant with a coded aperture drawn from `seed`.
forward::ForwardModel make_task_model(const RecoveryConfig& config, std::size_t height, std::size_t width,
                                      std::size_t bands);

/// Simulated measurements of `scene`; denoising adds Gaussian noise of level
/// `noise_sigma`, the other tasks are noiseless.
ad::Tensor simulate_measurements(const RecoveryConfig& config, const forward::ForwardModel& model,
                                 const spectral::SpectralCube& scene);

/// Normalized adjoint baseline: Phi^T y divided per pixel by Phi^T 1, zero
/// where no measurement reaches.
spectral::SpectralCube adjoint_baseline(const forward::ForwardModel& model, const ad::Tensor& y);

}  // namespace mixnet::recovery
