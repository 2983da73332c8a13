#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mixnet/autodiff/tensor.hpp"

namespace mixnet::spectral {

/// H x W x L image cube, row-major with the band axis fastest so every
/// pixel's spectrum is contiguous.
class SpectralCube {
 public:
  SpectralCube() = default;
  SpectralCube(std::size_t height, std::size_t width, std::size_t bands, double fill = 0.0);
  SpectralCube(std::size_t height, std::size_t width, std::size_t bands, std::vector<double> data);

  static SpectralCube from_tensor(const ad::Tensor& t);
  ad::Tensor to_tensor(bool requires_grad = false) const;

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t bands() const noexcept { return bands_; }
  std::size_t pixels() const noexcept { return height_ * width_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  ad::Shape shape() const { return {height_, width_, bands_}; }

  double& operator()(std::size_t i, std::size_t j, std::size_t l) { return data_[(i * width_ + j) * bands_ + l]; }
  double operator()(std::size_t i, std::size_t j, std::size_t l) const {
    return data_[(i * width_ + j) * bands_ + l];
  }
  std::span<const double> pixel(std::size_t i, std::size_t j) const {
    return {data_.data() + (i * width_ + j) * bands_, bands_};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::vector<double>& storage() noexcept { return data_; }

  /// One band as an H x W row-major plane.
  std::vector<double> band(std::size_t l) const;
  /// Entries clipped to [0, 1]; used at export time only.
  SpectralCube clipped() const;
  bool all_finite() const;

  friend bool operator==(const SpectralCube&, const SpectralCube&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t bands_ = 0;
  std::vector<double> data_;
};

}  // namespace mixnet::spectral
