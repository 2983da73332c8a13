#include "mixnet/spectral/cube.hpp"

#include <algorithm>
#include <cmath>

#include "mixnet/error.hpp"

namespace mixnet::spectral {

SpectralCube::SpectralCube(std::size_t height, std::size_t width, std::size_t bands, double fill)
    : height_(height), width_(width), bands_(bands), data_(height * width * bands, fill) {}

SpectralCube::SpectralCube(std::size_t height, std::size_t width, std::size_t bands, std::vector<double> data)
    : height_(height), width_(width), bands_(bands), data_(std::move(data)) {
  if (data_.size() != height * width * bands) {
    throw ShapeError("cube data length " + std::to_string(data_.size()) + " does not match " +
                     shape_string({height, width, bands}));
  }
}

SpectralCube SpectralCube::from_tensor(const ad::Tensor& t) {
  if (t.rank() != 3) throw ShapeError("expected an H x W x L tensor, got " + shape_string(t.shape()));
  return SpectralCube(t.dim(0), t.dim(1), t.dim(2), std::vector<double>(t.values().begin(), t.values().end()));
}

ad::Tensor SpectralCube::to_tensor(bool requires_grad) const {
  return ad::Tensor::from(shape(), data_, requires_grad);
}

std::vector<double> SpectralCube::band(std::size_t l) const {
  if (l >= bands_) throw std::out_of_range("band " + std::to_string(l) + " out of range for " + std::to_string(bands_) + " bands");
  std::vector<double> out(pixels());
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = data_[p * bands_ + l];
  return out;
}

SpectralCube SpectralCube::clipped() const {
  SpectralCube out = *this;
  for (double& v : out.data_) v = std::clamp(v, 0.0, 1.0);
  return out;
}

bool SpectralCube::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace mixnet::spectral
