#pragma once

#include <cstddef>
#include <string>

#include "mixnet/spectral/cube.hpp"

namespace mixnet::metrics {

/// 10 log10(peak^2 / MSE); +infinity when the cubes are identical.
double psnr(const spectral::SpectralCube& ref, const spectral::SpectralCube& est, double peak = 1.0);

/// Mean per-pixel spectral angle in degrees. Pixels whose spectrum has zero
/// norm in either cube are skipped; throws if every pixel is skipped.
double sam(const spectral::SpectralCube& ref, const spectral::SpectralCube& est);

double rmse(const spectral::SpectralCube& ref, const spectral::SpectralCube& est);

struct ErgasResult {
  double value = 0.0;
  std::size_t skipped_bands = 0;  // bands with zero reference mean
};

/// 100 / d * sqrt(mean_b (RMSE_b / mean_b(ref))^2).
ErgasResult ergas(const spectral::SpectralCube& ref, const spectral::SpectralCube& est, double d = 1.0);

/// Mean over bands of SSIM with an 11x11 Gaussian window (sigma 1.5),
/// K1 = 0.01, K2 = 0.03 and unit dynamic range, averaged over valid windows.
double ssim(const spectral::SpectralCube& ref, const spectral::SpectralCube& est);

inline constexpr std::size_t kSsimWindow = 11;

struct MetricReport {
  double psnr = 0.0;
  double ssim = 0.0;  // NaN when the cube is smaller than the SSIM window
  double sam = 0.0;
  double rmse = 0.0;
  double ergas = 0.0;
  std::size_t ergas_skipped_bands = 0;

  /// `name=value` lines; infinite PSNR is written as `inf`.
  std::string to_text() const;
  static std::string csv_header();
  std::string to_csv_row() const;
};

MetricReport evaluate(const spectral::SpectralCube& ref, const spectral::SpectralCube& est, double d = 1.0);

std::string format_value(double v);

}  // namespace mixnet::metrics
