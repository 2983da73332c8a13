#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mixnet/loss/losses.hpp"

namespace mixnet::loss {

namespace {

// Normal consistency constant of the median absolute deviation.
constexpr double kMadScale = 0.6745;

double median_in_place(std::vector<double>& v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace

double estimate_sigma(const spectral::SpectralCube& cube) {
  const std::size_t h = cube.height() - cube.height() % 2;
  const std::size_t w = cube.width() - cube.width() % 2;
  if (h < 2 || w < 2) {
    throw std::invalid_argument("noise estimation needs at least a 2x2 band, got " + std::to_string(cube.height()) +
                                "x" + std::to_string(cube.width()));
  }
  std::vector<double> detail((h / 2) * (w / 2));
  double total = 0.0;
  for (std::size_t l = 0; l < cube.bands(); ++l) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < h; i += 2) {
      for (std::size_t j = 0; j < w; j += 2) {
        const double hh = 0.5 * (cube(i, j, l) - cube(i, j + 1, l) - cube(i + 1, j, l) + cube(i + 1, j + 1, l));
        detail[n++] = std::abs(hh);
      }
    }
    total += median_in_place(detail) / kMadScale;
  }
  return total / static_cast<double>(cube.bands());
}

}  // namespace mixnet::loss
