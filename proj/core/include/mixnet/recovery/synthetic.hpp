#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "mixnet/spectral/cube.hpp"

namespace mixnet::recovery {

struct SyntheticScene {
  spectral::SpectralCube cube;        // H x W x L, max entry 1
  spectral::SpectralCube abundances;  // H x W x r, each pixel sums to 1
  Eigen::MatrixXd endmembers;         // L x r, scaled so cube = E a per pixel
};

/// Linear-mixture scene: smooth positive endmember curves (two or three
/// Gaussian bumps each) mixed by a softmax of smooth random spatial fields.
SyntheticScene make_synthetic(std::size_t height, std::size_t width, std::size_t bands, std::size_t rank,
                              std::uint64_t seed);

}  // namespace mixnet::recovery
