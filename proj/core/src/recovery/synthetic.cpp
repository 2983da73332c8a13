#include "mixnet/recovery/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "mixnet/random.hpp"

namespace mixnet::recovery {

namespace {

constexpr double kSharpness = 4.0;
constexpr int kWaves = 4;

Eigen::VectorXd endmember_curve(std::size_t bands, Rng& rng) {
  Eigen::VectorXd curve = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(bands));
  const int bumps = 2 + static_cast<int>(rng.uniform() < 0.5);
  const double span = bands > 1 ? static_cast<double>(bands - 1) : 1.0;
  for (int b = 0; b < bumps; ++b) {
    const double center = rng.uniform(-0.1, 1.1) * span;
    const double width = rng.uniform(0.1, 0.35) * span + 0.5;
    const double height = rng.uniform(0.3, 1.0);
    for (std::size_t l = 0; l < bands; ++l) {
      const double x = (static_cast<double>(l) - center) / width;
      curve[static_cast<Eigen::Index>(l)] += height * std::exp(-0.5 * x * x);
    }
  }
  return curve / curve.maxCoeff();
}

/// Sum of a few low-frequency plane waves, unit-normalized in amplitude.
std::vector<double> smooth_field(std::size_t h, std::size_t w, Rng& rng) {
  std::vector<double> field(h * w, 0.0);
  for (int k = 0; k < kWaves; ++k) {
    const double fu = rng.uniform(-1.5, 1.5), fv = rng.uniform(-1.5, 1.5);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double amp = rng.uniform(0.5, 1.0);
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        const double t = 2.0 * std::numbers::pi * (fu * static_cast<double>(i) / static_cast<double>(h) +
                                                   fv * static_cast<double>(j) / static_cast<double>(w));
        field[i * w + j] += amp * std::cos(t + phase);
      }
    }
  }
  return field;
}

}  // namespace

SyntheticScene make_synthetic(std::size_t height, std::size_t width, std::size_t bands, std::size_t rank,
                              std::uint64_t seed) {
  if (rank == 0 || rank > bands) {
    throw std::invalid_argument("synthetic rank must lie in [1, L], got r=" + std::to_string(rank) +
                                " L=" + std::to_string(bands));
  }
  if (height == 0 || width == 0) throw std::invalid_argument("synthetic scene needs positive spatial size");
  const Rng root(seed);
  Rng spectra = root.split("synthetic_endmembers");
  Rng spatial = root.split("synthetic_abundances");

  Eigen::MatrixXd e(static_cast<Eigen::Index>(bands), static_cast<Eigen::Index>(rank));
  for (std::size_t c = 0; c < rank; ++c) e.col(static_cast<Eigen::Index>(c)) = endmember_curve(bands, spectra);

  std::vector<std::vector<double>> fields;
  for (std::size_t c = 0; c < rank; ++c) fields.push_back(smooth_field(height, width, spatial));

  SyntheticScene scene;
  scene.abundances = spectral::SpectralCube(height, width, rank);
  for (std::size_t p = 0; p < height * width; ++p) {
    double top = -INFINITY;
    for (std::size_t c = 0; c < rank; ++c) top = std::max(top, kSharpness * fields[c][p]);
    double total = 0.0;
    for (std::size_t c = 0; c < rank; ++c) total += std::exp(kSharpness * fields[c][p] - top);
    for (std::size_t c = 0; c < rank; ++c) {
      scene.abundances.data()[p * rank + c] = std::exp(kSharpness * fields[c][p] - top) / total;
    }
  }

  scene.cube = spectral::SpectralCube(height, width, bands);
  double peak = 0.0;
  for (std::size_t p = 0; p < height * width; ++p) {
    for (std::size_t l = 0; l < bands; ++l) {
      double v = 0.0;
      for (std::size_t c = 0; c < rank; ++c) {
        v += e(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(c)) * scene.abundances.data()[p * rank + c];
      }
      peak = std::max(peak, v);
    }
  }
  scene.endmembers = e / peak;
  for (std::size_t p = 0; p < height * width; ++p) {
    for (std::size_t l = 0; l < bands; ++l) {
      double v = 0.0;
      for (std::size_t c = 0; c < rank; ++c) {
        v += scene.endmembers(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(c)) *
             scene.abundances.data()[p * rank + c];
      }
      scene.cube.data()[p * bands + l] = v;
    }
  }
  return scene;
}

}  // namespace mixnet::recovery
