#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "mixnet/autodiff/tensor.hpp"

namespace mixnet::forward {

enum class ModelKind { identity, blur_downsample, cassi };
enum class CassiVariant { single_disperser, dual_disperser };

std::string_view to_string(ModelKind kind);
std::string_view to_string(CassiVariant variant);
CassiVariant parse_cassi_variant(std::string_view text);

/// Square, non-negative blur kernel normalized to unit sum.
struct BlurKernel {
  std::size_t size = 1;
  std::vector<double> weights{1.0};

  double at(std::size_t row, std::size_t col) const { return weights[row * size + col]; }
};

/// Binary H x W mask.
struct CodedAperture {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> mask;

  std::uint8_t at(std::size_t i, std::size_t j) const { return mask[i * width + j]; }
  double fill_fraction() const;
};

/// Linear sensing operator on H x W x L cubes with its exact adjoint.
///
/// Measurements are always rank-3: the blur/downsample output is a smaller
/// cube and both CASSI variants produce a single-band frame
/// (H x W x 1 for the dual disperser, H x (W+L-1) x 1 for the single one).
class ForwardModel {
 public:
  static ForwardModel identity(std::size_t height, std::size_t width, std::size_t bands);
  /// Per-band zero-padded blur followed by keeping rows/columns 0, d, 2d, ...
  static ForwardModel blur_downsample(std::size_t height, std::size_t width, std::size_t bands, std::size_t factor,
                                      BlurKernel kernel);
  static ForwardModel cassi(std::size_t height, std::size_t width, std::size_t bands, CassiVariant variant,
                            CodedAperture aperture);

  ModelKind kind() const noexcept { return kind_; }
  const ad::Shape& input_shape() const noexcept { return input_shape_; }
  const ad::Shape& output_shape() const noexcept { return output_shape_; }
  std::size_t input_size() const;
  std::size_t output_size() const;

  std::size_t factor() const noexcept { return factor_; }
  const BlurKernel& kernel() const noexcept { return kernel_; }
  CassiVariant variant() const noexcept { return variant_; }
  const CodedAperture& aperture() const noexcept { return aperture_; }

  /// Raw operator application; `out` must be zeroed and correctly sized.
  void apply(std::span<const double> cube, std::span<double> out) const;
  void adjoint(std::span<const double> measurement, std::span<double> out) const;

  /// Differentiable forms.
  ad::Tensor apply(const ad::Tensor& cube) const;
  ad::Tensor adjoint(const ad::Tensor& measurement) const;

 private:
  ForwardModel() = default;
  void apply_blur(std::span<const double> f, std::span<double> y) const;
  void adjoint_blur(std::span<const double> y, std::span<double> f) const;
  void apply_cassi(std::span<const double> f, std::span<double> y) const;
  void adjoint_cassi(std::span<const double> y, std::span<double> f) const;

  ModelKind kind_ = ModelKind::identity;
  ad::Shape input_shape_;
  ad::Shape output_shape_;
  std::size_t factor_ = 1;
  BlurKernel kernel_;
  CassiVariant variant_ = CassiVariant::dual_disperser;
  CodedAperture aperture_;
};

/// (2d+1) x (2d+1) Gaussian with sigma = d/2, normalized to unit sum.
BlurKernel make_gaussian_kernel(int factor);

/// i.i.d. Bernoulli(1/2) mask from a seeded generator.
CodedAperture make_coded_aperture(std::size_t height, std::size_t width, std::uint64_t seed);

/// y + sigma * eta with eta standard normal drawn from `seed`.
ad::Tensor add_gaussian_noise(const ad::Tensor& y, double sigma, std::uint64_t seed);

// Aperture interchange: 8-bit PNG with 0/255 pixels, or a single-band SPC1 cube.
void write_aperture_png(const CodedAperture& aperture, const std::filesystem::path& path);
CodedAperture read_aperture_png(const std::filesystem::path& path);
void write_aperture_cube(const CodedAperture& aperture, const std::filesystem::path& path);
CodedAperture read_aperture_cube(const std::filesystem::path& path);
CodedAperture read_aperture(const std::filesystem::path& path);

}  // namespace mixnet::forward
