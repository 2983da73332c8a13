#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mixnet/recovery/recovery.hpp"

namespace mixnet::recovery {

enum class Harness { input_strategies, abundance_arch, rank, blocks, perturbation };

std::string_view to_string(Harness h);
Harness parse_harness(std::string_view text);

struct SweepCell {
  std::string label;
  RecoveryConfig config;
};

/// Grid of configurations derived from `base`:
///  - input_strategies: constant, random, meshgrid, estimated, learned
///  - abundance_arch: convolutional, autoencoder (7 layers), resnet
///  - rank: 3..10, 15, 20
///  - blocks: K = 1..5, each with the single and the multiple loss scheme
///  - perturbation: beta in 0, 0.01, 0.03, 0.05, 0.08, 0.1
/// A non-empty `values` list (comma separated) replaces the default grid.
std::vector<SweepCell> sweep_grid(Harness harness, const RecoveryConfig& base, std::string_view values = {});

struct SweepRow {
  std::string label;
  bool ok = false;
  std::string error;
  metrics::MetricReport metrics;
  double final_loss = 0.0;
};

/// One run per cell on the same measurements; a failing cell becomes a
/// failed row and the sweep continues.
std::vector<SweepRow> run_sweep(const std::vector<SweepCell>& cells, const ad::Tensor& y,
                                const forward::ForwardModel& model, const spectral::SpectralCube& reference);

/// Header `cell,status,psnr,ssim,sam,rmse,ergas,final_loss,error`.
std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace mixnet::recovery
