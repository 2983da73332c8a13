#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "mixnet/error.hpp"
#include "mixnet/metrics/metrics.hpp"

namespace metrics = mixnet::metrics;
using mixnet::spectral::SpectralCube;

namespace {

// Two smooth bands and a small signed perturbation. Expected values below were
// computed independently with scikit-image, numpy and 50-digit mpmath (SAM).
void fixture(SpectralCube& ref, SpectralCube& est) {
  ref = SpectralCube(16, 16, 2);
  est = SpectralCube(16, 16, 2);
  for (std::size_t i = 0; i < 16; ++i) {
    for (std::size_t j = 0; j < 16; ++j) {
      const double di = static_cast<double>(i), dj = static_cast<double>(j);
      ref(i, j, 0) = 0.5 + 0.4 * std::sin(di / 3.0) * std::cos(dj / 4.0);
      ref(i, j, 1) = 0.3 + 0.2 * std::cos((di + dj) / 5.0);
      const double p = 0.05 * std::sin(di + 2.0 * dj);
      est(i, j, 0) = ref(i, j, 0) + p;
      est(i, j, 1) = ref(i, j, 1) - p;
    }
  }
}

}  // namespace

TEST(Metrics, ReferenceValues) {
  SpectralCube ref, est;
  fixture(ref, est);
  EXPECT_NEAR(metrics::psnr(ref, est), 29.029051168290593, 1e-9);
  EXPECT_NEAR(metrics::ssim(ref, est), 0.83793072778795896, 1e-9);
  EXPECT_NEAR(metrics::sam(ref, est), 5.6631869442189059, 1e-12);
  EXPECT_NEAR(metrics::ergas(ref, est, 2.0).value, 6.1628764801605733, 1e-9);
}

TEST(Metrics, IdenticalCubes) {
  SpectralCube ref, est;
  fixture(ref, est);
  EXPECT_EQ(metrics::psnr(ref, ref), std::numeric_limits<double>::infinity());
  EXPECT_NEAR(metrics::ssim(ref, ref), 1.0, 1e-12);
  EXPECT_NEAR(metrics::sam(ref, ref), 0.0, 1e-6);
  EXPECT_EQ(metrics::rmse(ref, ref), 0.0);
  EXPECT_EQ(metrics::ergas(ref, ref).value, 0.0);
}

TEST(Metrics, PsnrAndRmseClosedForm) {
  const SpectralCube a(4, 4, 3, 0.5), b(4, 4, 3, 0.6);
  EXPECT_NEAR(metrics::rmse(a, b), 0.1, 1e-12);
  EXPECT_NEAR(metrics::psnr(a, b), 20.0, 1e-10);
  EXPECT_NEAR(metrics::psnr(a, b, 2.0), 20.0 + 20.0 * std::log10(2.0), 1e-10);
}

TEST(Metrics, SamIsScaleInvariantAndSkipsZeroPixels) {
  SpectralCube a(2, 1, 2), b(2, 1, 2);
  a(0, 0, 0) = 1.0;
  b(0, 0, 1) = 3.0;
  EXPECT_NEAR(metrics::sam(a, b), 90.0, 1e-12);
  SpectralCube c(1, 1, 2, 1.0), d(1, 1, 2, 5.0);
  EXPECT_NEAR(metrics::sam(c, d), 0.0, 1e-6);
  EXPECT_THROW(metrics::sam(SpectralCube(2, 2, 2), SpectralCube(2, 2, 2, 1.0)), std::invalid_argument);
}

TEST(Metrics, ErgasSkipsZeroMeanBands) {
  SpectralCube ref(2, 2, 2), est(2, 2, 2);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      ref(i, j, 0) = 0.5;
      est(i, j, 0) = 0.6;
      est(i, j, 1) = 0.3;
    }
  }
  const auto r = metrics::ergas(ref, est, 4.0);
  EXPECT_EQ(r.skipped_bands, 1u);
  EXPECT_NEAR(r.value, 100.0 / 4.0 * 0.2, 1e-12);
  EXPECT_THROW(metrics::ergas(ref, est, 0.5), std::invalid_argument);
}

TEST(Metrics, ShapeMismatchAndSmallSsim) {
  EXPECT_THROW(metrics::psnr(SpectralCube(2, 2, 2), SpectralCube(2, 2, 3)), mixnet::ShapeError);
  EXPECT_THROW(metrics::ssim(SpectralCube(10, 20, 1), SpectralCube(10, 20, 1)), mixnet::ShapeError);
  const auto report = metrics::evaluate(SpectralCube(8, 8, 2, 0.5), SpectralCube(8, 8, 2, 0.4));
  EXPECT_TRUE(std::isnan(report.ssim));
  EXPECT_NEAR(report.rmse, 0.1, 1e-12);
}

TEST(MetricReport, TextAndCsv) {
  SpectralCube ref, est;
  fixture(ref, est);
  const auto r = metrics::evaluate(ref, est, 2.0);
  EXPECT_EQ(metrics::MetricReport::csv_header(), "psnr,ssim,sam,rmse,ergas");
  const std::string row = r.to_csv_row();
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 4);
  EXPECT_NEAR(std::stod(row.substr(0, row.find(','))), r.psnr, 1e-8);
  const auto same = metrics::evaluate(ref, ref);
  EXPECT_NE(same.to_text().find("psnr=inf"), std::string::npos);
  EXPECT_EQ(metrics::format_value(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_EQ(metrics::format_value(0.25), "0.25");
}
