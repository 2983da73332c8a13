#include "mixnet/recovery/unmixing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mixnet/error.hpp"

namespace mixnet::recovery {

std::vector<std::uint8_t> threshold_abundance(std::span<const double> map, double t) {
  if (!(t > 0.0 && t < 1.0)) throw std::invalid_argument("threshold must lie in (0, 1)");
  std::vector<std::uint8_t> out(map.size());
  std::transform(map.begin(), map.end(), out.begin(), [t](double v) { return static_cast<std::uint8_t>(v >= t); });
  return out;
}

double correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("correlation needs equal, non-empty inputs");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

ComponentMatch best_permutation_match(const spectral::SpectralCube& learned, const spectral::SpectralCube& truth) {
  if (learned.height() != truth.height() || learned.width() != truth.width()) {
    throw ShapeError("abundance maps differ spatially: " + shape_string(learned.shape()) + " vs " +
                     shape_string(truth.shape()));
  }
  const std::size_t r = truth.bands();
  if (learned.bands() < r) throw ShapeError("fewer learned components than reference components");
  if (learned.bands() > 8) throw std::invalid_argument("brute-force matching limited to 8 components");

  std::vector<std::vector<double>> corr(learned.bands(), std::vector<double>(r));
  for (std::size_t a = 0; a < learned.bands(); ++a) {
    const auto la = learned.band(a);
    for (std::size_t c = 0; c < r; ++c) corr[a][c] = correlation(la, truth.band(c));
  }

  std::vector<std::size_t> perm(learned.bands());
  std::iota(perm.begin(), perm.end(), 0);
  ComponentMatch best;
  double best_sum = -INFINITY;
  do {
    double s = 0.0;
    for (std::size_t c = 0; c < r; ++c) s += corr[perm[c]][c];
    if (s > best_sum) {
      best_sum = s;
      best.assignment.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(r));
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  best.correlations.resize(r);
  for (std::size_t c = 0; c < r; ++c) best.correlations[c] = corr[best.assignment[c]][c];
  best.mean_correlation = best_sum / static_cast<double>(r);
  return best;
}

double argmax_agreement(const spectral::SpectralCube& learned, const spectral::SpectralCube& truth,
                        std::span<const std::size_t> assignment) {
  if (assignment.size() != truth.bands()) throw std::invalid_argument("assignment size differs from component count");
  std::size_t agree = 0;
  for (std::size_t i = 0; i < truth.height(); ++i) {
    for (std::size_t j = 0; j < truth.width(); ++j) {
      const auto t = truth.pixel(i, j);
      const auto l = learned.pixel(i, j);
      const auto ct = static_cast<std::size_t>(std::max_element(t.begin(), t.end()) - t.begin());
      std::size_t cl = 0;
      for (std::size_t c = 1; c < assignment.size(); ++c) {
        if (l[assignment[c]] > l[assignment[cl]]) cl = c;
      }
      agree += ct == cl;
    }
  }
  return static_cast<double>(agree) / static_cast<double>(truth.pixels());
}

}  // namespace mixnet::recovery
