#include "mixnet/metrics/metrics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "mixnet/error.hpp"

namespace mixnet::metrics {

using spectral::SpectralCube;

namespace {

void require_same_shape(const SpectralCube& a, const SpectralCube& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("metric operands differ in shape: " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
  if (a.empty()) throw ShapeError("metric operands are empty");
}

double mse(const SpectralCube& ref, const SpectralCube& est) {
  double acc = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double d = ref.data()[i] - est.data()[i];
    acc += d * d;
  }
  return acc / static_cast<double>(ref.size());
}

std::vector<double> gaussian_window() {
  constexpr double sigma = 1.5;
  constexpr int radius = static_cast<int>(kSsimWindow / 2);
  std::vector<double> w(kSsimWindow * kSsimWindow);
  double total = 0.0;
  for (int u = -radius; u <= radius; ++u) {
    for (int v = -radius; v <= radius; ++v) {
      const double g = std::exp(-(u * u + v * v) / (2.0 * sigma * sigma));
      w[static_cast<std::size_t>((u + radius) * static_cast<int>(kSsimWindow) + v + radius)] = g;
      total += g;
    }
  }
  for (double& g : w) g /= total;
  return w;
}

double band_ssim(const std::vector<double>& x, const std::vector<double>& y, std::size_t h, std::size_t w,
                 const std::vector<double>& window) {
  constexpr double c1 = (0.01 * 1.0) * (0.01 * 1.0);
  constexpr double c2 = (0.03 * 1.0) * (0.03 * 1.0);
  const std::size_t oh = h - kSsimWindow + 1, ow = w - kSsimWindow + 1;
  double total = 0.0;
  for (std::size_t i = 0; i < oh; ++i) {
    for (std::size_t j = 0; j < ow; ++j) {
      double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
      for (std::size_t u = 0; u < kSsimWindow; ++u) {
        for (std::size_t v = 0; v < kSsimWindow; ++v) {
          const double g = window[u * kSsimWindow + v];
          const double a = x[(i + u) * w + j + v], b = y[(i + u) * w + j + v];
          mx += g * a;
          my += g * b;
          sxx += g * a * a;
          syy += g * b * b;
          sxy += g * a * b;
        }
      }
      const double vx = sxx - mx * mx, vy = syy - my * my, cov = sxy - mx * my;
      total += ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
  }
  return total / static_cast<double>(oh * ow);
}

}  // namespace

double psnr(const SpectralCube& ref, const SpectralCube& est, double peak) {
  require_same_shape(ref, est);
  const double e = mse(ref, est);
  if (e == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / e);
}

double sam(const SpectralCube& ref, const SpectralCube& est) {
  require_same_shape(ref, est);
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < ref.height(); ++i) {
    for (std::size_t j = 0; j < ref.width(); ++j) {
      const auto r = ref.pixel(i, j), e = est.pixel(i, j);
      double nr = 0, ne = 0;
      for (std::size_t l = 0; l < r.size(); ++l) {
        nr += r[l] * r[l];
        ne += e[l] * e[l];
      }
      if (nr == 0.0 || ne == 0.0) continue;
      // 2 atan2(|u - v|, |u + v|) on unit vectors; acos loses precision near 0.
      const double sr = 1.0 / std::sqrt(nr), se = 1.0 / std::sqrt(ne);
      double diff = 0, sum = 0;
      for (std::size_t l = 0; l < r.size(); ++l) {
        const double u = r[l] * sr, v = e[l] * se;
        diff += (u - v) * (u - v);
        sum += (u + v) * (u + v);
      }
      total += 2.0 * std::atan2(std::sqrt(diff), std::sqrt(sum));
      ++counted;
    }
  }
  if (counted == 0) throw std::invalid_argument("SAM undefined: every pixel has a zero spectrum");
  return total / static_cast<double>(counted) * 180.0 / std::numbers::pi;
}

double rmse(const SpectralCube& ref, const SpectralCube& est) {
  require_same_shape(ref, est);
  return std::sqrt(mse(ref, est));
}

ErgasResult ergas(const SpectralCube& ref, const SpectralCube& est, double d) {
  require_same_shape(ref, est);
  if (!(d >= 1.0)) throw std::invalid_argument("ERGAS resolution ratio must be >= 1");
  const std::size_t bands = ref.bands(), pixels = ref.pixels();
  ErgasResult out;
  double acc = 0.0;
  std::size_t used = 0;
  for (std::size_t l = 0; l < bands; ++l) {
    double mean = 0.0, sq = 0.0;
    for (std::size_t p = 0; p < pixels; ++p) {
      const double r = ref.data()[p * bands + l], e = est.data()[p * bands + l];
      mean += r;
      sq += (r - e) * (r - e);
    }
    mean /= static_cast<double>(pixels);
    if (mean == 0.0) {
      ++out.skipped_bands;
      continue;
    }
    const double band_rmse = std::sqrt(sq / static_cast<double>(pixels));
    acc += (band_rmse / mean) * (band_rmse / mean);
    ++used;
  }
  out.value = used == 0 ? 0.0 : 100.0 / d * std::sqrt(acc / static_cast<double>(used));
  return out;
}

double ssim(const SpectralCube& ref, const SpectralCube& est) {
  require_same_shape(ref, est);
  if (ref.height() < kSsimWindow || ref.width() < kSsimWindow) {
    throw ShapeError("SSIM needs at least " + std::to_string(kSsimWindow) + "x" + std::to_string(kSsimWindow) +
                     " pixels, got " + shape_string(ref.shape()));
  }
  const auto window = gaussian_window();
  double total = 0.0;
  for (std::size_t l = 0; l < ref.bands(); ++l) {
    total += band_ssim(ref.band(l), est.band(l), ref.height(), ref.width(), window);
  }
  return total / static_cast<double>(ref.bands());
}

std::string format_value(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return fmt::format("{:.10g}", v);
}

std::string MetricReport::to_text() const {
  return fmt::format("psnr={}\nssim={}\nsam={}\nrmse={}\nergas={}\n", format_value(psnr), format_value(ssim),
                     format_value(sam), format_value(rmse), format_value(ergas));
}

std::string MetricReport::csv_header() { return "psnr,ssim,sam,rmse,ergas"; }

std::string MetricReport::to_csv_row() const {
  return fmt::format("{},{},{},{},{}", format_value(psnr), format_value(ssim), format_value(sam),
                     format_value(rmse), format_value(ergas));
}

MetricReport evaluate(const SpectralCube& ref, const SpectralCube& est, double d) {
  MetricReport r;
  r.psnr = psnr(ref, est);
  r.ssim = (ref.height() >= kSsimWindow && ref.width() >= kSsimWindow) ? ssim(ref, est)
                                                                       : std::numeric_limits<double>::quiet_NaN();
  r.sam = sam(ref, est);
  r.rmse = rmse(ref, est);
  const auto e = ergas(ref, est, d);
  r.ergas = e.value;
  r.ergas_skipped_bands = e.skipped_bands;
  return r;
}

}  // namespace mixnet::metrics
