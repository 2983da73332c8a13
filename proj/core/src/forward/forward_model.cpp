#include "mixnet/forward/forward_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "mixnet/autodiff/ops.hpp"
#include "mixnet/error.hpp"
#include "mixnet/random.hpp"
#include "mixnet/spectral/cube_io.hpp"
#include "mixnet/spectral/export.hpp"

namespace mixnet::forward {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::identity: return "identity";
    case ModelKind::blur_downsample: return "blur_downsample";
    case ModelKind::cassi: return "cassi";
  }
  return "unknown";
}

std::string_view to_string(CassiVariant variant) {
  return variant == CassiVariant::single_disperser ? "sd" : "dd";
}

CassiVariant parse_cassi_variant(std::string_view text) {
  if (text == "sd") return CassiVariant::single_disperser;
  if (text == "dd") return CassiVariant::dual_disperser;
  throw std::invalid_argument("unknown CASSI variant '" + std::string(text) + "' (expected sd or dd)");
}

double CodedAperture::fill_fraction() const {
  if (mask.empty()) return 0.0;
  return static_cast<double>(std::count(mask.begin(), mask.end(), std::uint8_t{1})) / static_cast<double>(mask.size());
}

ForwardModel ForwardModel::identity(std::size_t height, std::size_t width, std::size_t bands) {
  ForwardModel m;
  m.kind_ = ModelKind::identity;
  m.input_shape_ = {height, width, bands};
  m.output_shape_ = m.input_shape_;
  return m;
}

ForwardModel ForwardModel::blur_downsample(std::size_t height, std::size_t width, std::size_t bands,
                                           std::size_t factor, BlurKernel kernel) {
  if (factor < 1) throw std::invalid_argument("downsampling factor must be >= 1");
  if (kernel.size % 2 == 0 || kernel.weights.size() != kernel.size * kernel.size) {
    throw std::invalid_argument("blur kernel must be square with odd size");
  }
  double total = 0.0;
  for (double w : kernel.weights) {
    if (w < 0.0) throw std::invalid_argument("blur kernel entries must be non-negative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("blur kernel must sum to 1, sums to " + std::to_string(total));
  }
  ForwardModel m;
  m.kind_ = ModelKind::blur_downsample;
  m.factor_ = factor;
  m.kernel_ = std::move(kernel);
  m.input_shape_ = {height, width, bands};
  m.output_shape_ = {(height + factor - 1) / factor, (width + factor - 1) / factor, bands};
  return m;
}

ForwardModel ForwardModel::cassi(std::size_t height, std::size_t width, std::size_t bands, CassiVariant variant,
                                 CodedAperture aperture) {
  if (aperture.height != height || aperture.width != width || aperture.mask.size() != height * width) {
    throw ShapeError("coded aperture " + shape_string({aperture.height, aperture.width}) +
                     " does not match scene " + shape_string({height, width}));
  }
  if (std::any_of(aperture.mask.begin(), aperture.mask.end(), [](std::uint8_t v) { return v > 1; })) {
    throw std::invalid_argument("coded aperture entries must be 0 or 1");
  }
  ForwardModel m;
  m.kind_ = ModelKind::cassi;
  m.variant_ = variant;
  m.aperture_ = std::move(aperture);
  m.input_shape_ = {height, width, bands};
  m.output_shape_ = variant == CassiVariant::dual_disperser ? ad::Shape{height, width, 1}
                                                            : ad::Shape{height, width + bands - 1, 1};
  return m;
}

std::size_t ForwardModel::input_size() const { return ad::num_elements(input_shape_); }
std::size_t ForwardModel::output_size() const { return ad::num_elements(output_shape_); }

void ForwardModel::apply(std::span<const double> cube, std::span<double> out) const {
  if (cube.size() != input_size() || out.size() != output_size()) {
    throw ShapeError("forward model expects input " + shape_string(input_shape_) + " and output " +
                     shape_string(output_shape_));
  }
  switch (kind_) {
    case ModelKind::identity: std::copy(cube.begin(), cube.end(), out.begin()); break;
    case ModelKind::blur_downsample: apply_blur(cube, out); break;
    case ModelKind::cassi: apply_cassi(cube, out); break;
  }
}

void ForwardModel::adjoint(std::span<const double> measurement, std::span<double> out) const {
  if (measurement.size() != output_size() || out.size() != input_size()) {
    throw ShapeError("forward model adjoint expects measurement " + shape_string(output_shape_) + " and output " +
                     shape_string(input_shape_));
  }
  switch (kind_) {
    case ModelKind::identity: std::copy(measurement.begin(), measurement.end(), out.begin()); break;
    case ModelKind::blur_downsample: adjoint_blur(measurement, out); break;
    case ModelKind::cassi: adjoint_cassi(measurement, out); break;
  }
}

ad::Tensor ForwardModel::apply(const ad::Tensor& cube) const {
  if (cube.shape() != input_shape_) {
    throw ShapeError("forward model expects a cube of shape " + shape_string(input_shape_) + ", got " +
                     shape_string(cube.shape()));
  }
  // The recorded backward rule may outlive this object.
  auto self = std::make_shared<const ForwardModel>(*this);
  return ad::linear_map(
      cube, output_shape_, [self](auto in, auto out) { self->apply(in, out); },
      [self](auto in, auto out) { self->adjoint(in, out); }, "forward_apply");
}

ad::Tensor ForwardModel::adjoint(const ad::Tensor& measurement) const {
  if (measurement.shape() != output_shape_) {
    throw ShapeError("forward model adjoint expects a measurement of shape " + shape_string(output_shape_) +
                     ", got " + shape_string(measurement.shape()));
  }
  auto self = std::make_shared<const ForwardModel>(*this);
  return ad::linear_map(
      measurement, input_shape_, [self](auto in, auto out) { self->adjoint(in, out); },
      [self](auto in, auto out) { self->apply(in, out); }, "forward_adjoint");
}

void ForwardModel::apply_blur(std::span<const double> f, std::span<double> y) const {
  const long h = static_cast<long>(input_shape_[0]), w = static_cast<long>(input_shape_[1]);
  const std::size_t bands = input_shape_[2];
  const long oh = static_cast<long>(output_shape_[0]), ow = static_cast<long>(output_shape_[1]);
  const long ks = static_cast<long>(kernel_.size), pad = ks / 2, d = static_cast<long>(factor_);
  for (long a = 0; a < oh; ++a) {
    for (long b = 0; b < ow; ++b) {
      double* dst = y.data() + (a * ow + b) * static_cast<long>(bands);
      for (long u = 0; u < ks; ++u) {
        const long i = a * d + u - pad;
        if (i < 0 || i >= h) continue;
        for (long v = 0; v < ks; ++v) {
          const long j = b * d + v - pad;
          if (j < 0 || j >= w) continue;
          const double k = kernel_.weights[static_cast<std::size_t>(u * ks + v)];
          const double* src = f.data() + (i * w + j) * static_cast<long>(bands);
          for (std::size_t l = 0; l < bands; ++l) dst[l] += k * src[l];
        }
      }
    }
  }
}

void ForwardModel::adjoint_blur(std::span<const double> y, std::span<double> f) const {
  const long h = static_cast<long>(input_shape_[0]), w = static_cast<long>(input_shape_[1]);
  const std::size_t bands = input_shape_[2];
  const long oh = static_cast<long>(output_shape_[0]), ow = static_cast<long>(output_shape_[1]);
  const long ks = static_cast<long>(kernel_.size), pad = ks / 2, d = static_cast<long>(factor_);
  for (long a = 0; a < oh; ++a) {
    for (long b = 0; b < ow; ++b) {
      const double* src = y.data() + (a * ow + b) * static_cast<long>(bands);
      for (long u = 0; u < ks; ++u) {
        const long i = a * d + u - pad;
        if (i < 0 || i >= h) continue;
        for (long v = 0; v < ks; ++v) {
          const long j = b * d + v - pad;
          if (j < 0 || j >= w) continue;
          const double k = kernel_.weights[static_cast<std::size_t>(u * ks + v)];
          double* dst = f.data() + (i * w + j) * static_cast<long>(bands);
          for (std::size_t l = 0; l < bands; ++l) dst[l] += k * src[l];
        }
      }
    }
  }
}

void ForwardModel::apply_cassi(std::span<const double> f, std::span<double> y) const {
  const std::size_t h = input_shape_[0], w = input_shape_[1], bands = input_shape_[2];
  const std::size_t ow = output_shape_[1];
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      const double* px = f.data() + (i * w + j) * bands;
      if (variant_ == CassiVariant::dual_disperser) {
        double acc = 0.0;
        for (std::size_t l = 0; l < bands; ++l) acc += aperture_.at(i, (j + l) % w) * px[l];
        y[i * ow + j] = acc;
      } else {
        const double code = aperture_.at(i, j);
        if (code == 0.0) continue;
        for (std::size_t l = 0; l < bands; ++l) y[i * ow + j + l] += code * px[l];
      }
    }
  }
}

void ForwardModel::adjoint_cassi(std::span<const double> y, std::span<double> f) const {
  const std::size_t h = input_shape_[0], w = input_shape_[1], bands = input_shape_[2];
  const std::size_t ow = output_shape_[1];
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      double* px = f.data() + (i * w + j) * bands;
      if (variant_ == CassiVariant::dual_disperser) {
        const double meas = y[i * ow + j];
        for (std::size_t l = 0; l < bands; ++l) px[l] += aperture_.at(i, (j + l) % w) * meas;
      } else {
        const double code = aperture_.at(i, j);
        if (code == 0.0) continue;
        for (std::size_t l = 0; l < bands; ++l) px[l] += code * y[i * ow + j + l];
      }
    }
  }
}

BlurKernel make_gaussian_kernel(int factor) {
  if (factor < 1) throw std::invalid_argument("gaussian kernel factor must be >= 1, got " + std::to_string(factor));
  const double sigma = factor / 2.0;
  const int radius = factor;
  BlurKernel k;
  k.size = static_cast<std::size_t>(2 * radius + 1);
  k.weights.resize(k.size * k.size);
  for (int u = -radius; u <= radius; ++u) {
    for (int v = -radius; v <= radius; ++v) {
      k.weights[static_cast<std::size_t>((u + radius) * (2 * radius + 1) + (v + radius))] =
          std::exp(-(u * u + v * v) / (2.0 * sigma * sigma));
    }
  }
  const double total = std::accumulate(k.weights.begin(), k.weights.end(), 0.0);
  for (double& w : k.weights) w /= total;
  return k;
}

CodedAperture make_coded_aperture(std::size_t height, std::size_t width, std::uint64_t seed) {
  Rng rng = Rng(seed).split("coded_aperture");
  CodedAperture a{height, width, std::vector<std::uint8_t>(height * width)};
  for (auto& v : a.mask) v = rng.bernoulli(0.5) ? 1 : 0;
  return a;
}

ad::Tensor add_gaussian_noise(const ad::Tensor& y, double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw std::invalid_argument("noise level must be non-negative");
  Rng rng = Rng(seed).split("measurement_noise");
  std::vector<double> v(y.values().begin(), y.values().end());
  if (sigma > 0.0) {
    for (double& x : v) x += sigma * rng.normal();
  }
  return ad::Tensor::from(y.shape(), std::move(v));
}

void write_aperture_png(const CodedAperture& aperture, const std::filesystem::path& path) {
  std::vector<std::uint8_t> pixels(aperture.mask.size());
  std::transform(aperture.mask.begin(), aperture.mask.end(), pixels.begin(),
                 [](std::uint8_t v) { return static_cast<std::uint8_t>(v ? 255 : 0); });
  spectral::write_gray_png(pixels, aperture.height, aperture.width, path);
}

CodedAperture read_aperture_png(const std::filesystem::path& path) {
  auto image = spectral::read_gray_png(path);
  CodedAperture a{image.height, image.width, std::vector<std::uint8_t>(image.pixels.size())};
  std::transform(image.pixels.begin(), image.pixels.end(), a.mask.begin(),
                 [](std::uint8_t v) { return static_cast<std::uint8_t>(v >= 128 ? 1 : 0); });
  return a;
}

void write_aperture_cube(const CodedAperture& aperture, const std::filesystem::path& path) {
  spectral::SpectralCube cube(aperture.height, aperture.width, 1);
  for (std::size_t i = 0; i < aperture.mask.size(); ++i) cube.data()[i] = aperture.mask[i];
  spectral::write_cube(cube, path);
}

CodedAperture read_aperture_cube(const std::filesystem::path& path) {
  auto cube = spectral::read_cube(path);
  if (cube.bands() != 1) throw std::invalid_argument("aperture cube must have a single band");
  CodedAperture a{cube.height(), cube.width(), std::vector<std::uint8_t>(cube.size())};
  for (std::size_t i = 0; i < cube.size(); ++i) {
    const double v = cube.data()[i];
    if (v != 0.0 && v != 1.0) throw std::invalid_argument("aperture cube entries must be 0 or 1");
    a.mask[i] = static_cast<std::uint8_t>(v);
  }
  return a;
}

CodedAperture read_aperture(const std::filesystem::path& path) {
  return path.extension() == ".png" ? read_aperture_png(path) : read_aperture_cube(path);
}

}  // namespace mixnet::forward
