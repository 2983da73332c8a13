#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mixnet/spectral/cube.hpp"

namespace mixnet::recovery {

/// 1 where the entry is >= t, else 0. Requires t in (0, 1).
std::vector<std::uint8_t> threshold_abundance(std::span<const double> map, double t);

/// Pearson correlation; 0 when either input is constant.
double correlation(std::span<const double> a, std::span<const double> b);

struct ComponentMatch {
  std::vector<std::size_t> assignment;  // learned component matched to truth component c
  std::vector<double> correlations;     // per truth component
  double mean_correlation = 0.0;
};

/// Brute-force search over all assignments of learned to reference
/// components (H x W x r each, r <= 8) maximizing the summed correlation.
ComponentMatch best_permutation_match(const spectral::SpectralCube& learned, const spectral::SpectralCube& truth);

/// Fraction of pixels whose dominant component agrees after mapping learned
/// components through `assignment`.
double argmax_agreement(const spectral::SpectralCube& learned, const spectral::SpectralCube& truth,
                        std::span<const std::size_t> assignment);

}  // namespace mixnet::recovery
