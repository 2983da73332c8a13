#include "mixnet/net/mixture_net.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "mixnet/autodiff/adam.hpp"
#include "mixnet/autodiff/ops.hpp"
#include "mixnet/error.hpp"

namespace mixnet::net {

using ad::Tensor;

std::string_view to_string(AbundanceKind kind) {
  switch (kind) {
    case AbundanceKind::convolutional: return "convolutional";
    case AbundanceKind::autoencoder: return "autoencoder";
    case AbundanceKind::resnet: return "resnet";
  }
  return "unknown";
}

std::string_view to_string(OutputRule rule) { return rule == OutputRule::last ? "last" : "average_last_two"; }

AbundanceKind parse_abundance_kind(std::string_view text) {
  if (text == "convolutional") return AbundanceKind::convolutional;
  if (text == "autoencoder") return AbundanceKind::autoencoder;
  if (text == "resnet") return AbundanceKind::resnet;
  throw std::invalid_argument("unknown abundance architecture '" + std::string(text) + "'");
}

OutputRule parse_output_rule(std::string_view text) {
  if (text == "last") return OutputRule::last;
  if (text == "average_last_two") return OutputRule::average_last_two;
  throw std::invalid_argument("unknown output rule '" + std::string(text) + "'");
}

std::vector<std::size_t> AbundanceArch::hidden_widths() const {
  validate();
  std::vector<std::size_t> widths(num_layers, features);
  if (kind == AbundanceKind::autoencoder) {
    const std::size_t half = num_layers / 2;
    for (std::size_t i = 0; i <= half; ++i) {
      widths[i] = features << i;
      widths[num_layers - 1 - i] = features << i;
    }
  }
  return widths;
}

void AbundanceArch::validate() const {
  if (num_layers < 1) throw std::invalid_argument("abundance architecture needs at least one hidden layer");
  if (features < 1) throw std::invalid_argument("abundance architecture needs at least one feature");
  if (kind == AbundanceKind::autoencoder && num_layers % 2 == 0) {
    throw std::invalid_argument("autoencoder abundance architecture needs an odd layer count, got " +
                                std::to_string(num_layers));
  }
}

void MixtureNetConfig::validate(std::size_t bands) const {
  if (blocks < 1) throw std::invalid_argument("at least one deep-block is required");
  if (rank < 1 || rank > bands) {
    throw std::invalid_argument("rank must satisfy 1 <= r <= L (r=" + std::to_string(rank) +
                                ", L=" + std::to_string(bands) + ")");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must lie in [0, 1]");
  if (output_rule == OutputRule::average_last_two && blocks < 2) {
    throw std::invalid_argument("average_last_two output needs at least two deep-blocks");
  }
  arch.validate();
}

ConvLayer ConvLayer::random(std::size_t in, std::size_t out, std::size_t ksize, Rng& rng, double gain) {
  const double s = gain / std::sqrt(static_cast<double>(in * ksize * ksize));
  std::vector<double> k(out * in * ksize * ksize);
  for (double& v : k) v = rng.uniform(-s, s);
  return {Tensor::from({out, in, ksize, ksize}, std::move(k), true), Tensor::zeros({out}, true)};
}

ConvLayer ConvLayer::zeros(std::size_t in, std::size_t out, std::size_t ksize) {
  return {Tensor::zeros({out, in, ksize, ksize}, true), Tensor::zeros({out}, true)};
}

Tensor ConvLayer::operator()(const Tensor& chw) const { return ad::conv2d(chw, kernels, bias); }

namespace {

constexpr double kLeakySlope = 0.2;

// Variance-preserving scale for leaky-relu layers. With the plain
// 1/sqrt(fan_in) bound the hidden activations shrink about sixfold per layer
// and a six-layer stack without normalization barely trains.
const double kHiddenGain = std::sqrt(6.0 / (1.0 + kLeakySlope * kLeakySlope));

}  // namespace

DeepBlock DeepBlock::random(std::size_t bands, std::size_t rank, const AbundanceArch& arch, Rng& rng) {
  DeepBlock b;
  b.arch = arch;
  std::size_t in = bands;
  for (std::size_t width : arch.hidden_widths()) {
    b.abundance.push_back(ConvLayer::random(in, width, 3, rng, kHiddenGain));
    if (arch.normalize) b.norms.push_back({Tensor::full({width}, 1.0, true), Tensor::zeros({width}, true)});
    in = width;
  }
  b.abundance.push_back(ConvLayer::random(in, rank, 3, rng));

  const double bound = 1.0 / std::sqrt(static_cast<double>(rank));
  std::vector<double> e(bands * rank);
  for (double& v : e) v = rng.uniform(0.0, bound);
  b.endmembers = Tensor::from({bands, rank}, std::move(e), true);

  for (auto& unit : b.nonlinearity) {
    unit.spatial = ConvLayer::random(bands, bands, 3, rng);
    unit.spectral = ConvLayer::random(bands, bands, 1, rng);
  }
  return b;
}

std::vector<Tensor> DeepBlock::parameters() const {
  std::vector<Tensor> p;
  for (const auto& layer : abundance) {
    p.push_back(layer.kernels);
    p.push_back(layer.bias);
  }
  for (const auto& n : norms) p.insert(p.end(), {n.scale, n.shift});
  p.push_back(endmembers);
  for (const auto& unit : nonlinearity) {
    p.insert(p.end(), {unit.spatial.kernels, unit.spatial.bias, unit.spectral.kernels, unit.spectral.bias});
  }
  return p;
}

namespace {

Tensor to_chw(const Tensor& hwc) { return ad::permute(hwc, {2, 0, 1}); }
Tensor to_hwc(const Tensor& chw) { return ad::permute(chw, {1, 2, 0}); }

void require_cube(const char* op, const Tensor& t, std::size_t channels) {
  if (t.rank() != 3 || t.dim(2) != channels) {
    throw ShapeError(std::string(op) + ": expected an H x W x " + std::to_string(channels) + " tensor, got " +
                     shape_string(t.shape()));
  }
}

}  // namespace

Tensor abundance_forward(const DeepBlock& block, const Tensor& f_in) {
  require_cube("abundance_forward", f_in, block.bands());
  const std::size_t hidden = block.abundance.size() - 1;
  Tensor x = to_chw(f_in);
  Tensor first;
  for (std::size_t i = 0; i < hidden; ++i) {
    x = block.abundance[i](x);
    if (!block.norms.empty()) x = ad::channel_norm(x, block.norms[i].scale, block.norms[i].shift);
    x = ad::leaky_relu(x, kLeakySlope);
    if (i == 0) first = x;
  }
  if (block.arch.kind == AbundanceKind::resnet && hidden > 1) x = ad::add(x, first);
  return to_hwc(ad::sigmoid(block.abundance.back()(x)));
}

Tensor endmember_forward(const Tensor& endmembers, const Tensor& abundances) {
  if (endmembers.rank() != 2 || abundances.rank() != 3 || abundances.dim(2) != endmembers.dim(1)) {
    throw ShapeError("endmember_forward: endmembers " + shape_string(endmembers.shape()) +
                     " incompatible with abundances " + shape_string(abundances.shape()));
  }
  const std::size_t h = abundances.dim(0), w = abundances.dim(1), r = abundances.dim(2), l = endmembers.dim(0);
  Tensor pixels = ad::reshape(abundances, {h * w, r});
  return ad::reshape(ad::matmul(pixels, ad::transpose(endmembers)), {h, w, l});
}

Tensor nonlinearity_forward(const DeepBlock& block, const Tensor& linear) {
  require_cube("nonlinearity_forward", linear, block.bands());
  Tensor x = to_chw(linear);
  for (const auto& unit : block.nonlinearity) {
    x = ad::add(x, unit.spectral(ad::leaky_relu(unit.spatial(x), kLeakySlope)));
  }
  return to_hwc(x);
}

BlockOutput block_forward(const DeepBlock& block, const Tensor& f_prev, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must lie in [0, 1]");
  BlockOutput out;
  out.abundances = abundance_forward(block, f_prev);
  out.linear = endmember_forward(block.endmembers, out.abundances);
  out.nonlinear = nonlinearity_forward(block, out.linear);
  if (lambda == 0.0) {
    out.f = out.linear;
  } else if (lambda == 1.0) {
    out.f = out.nonlinear;
  } else {
    out.f = ad::add(ad::scale(out.linear, 1.0 - lambda), ad::scale(out.nonlinear, lambda));
  }
  return out;
}

MixtureNet::MixtureNet(const MixtureNetConfig& config, std::size_t height, std::size_t width, std::size_t bands,
                       Rng& rng)
    : config_(config), height_(height), width_(width), bands_(bands) {
  config_.validate(bands);
  for (std::size_t k = 0; k < config_.blocks; ++k) {
    Rng block_rng = rng.split("deep_block", k);
    blocks_.push_back(DeepBlock::random(bands, config_.rank, config_.arch, block_rng));
  }
}

NetOutput MixtureNet::forward(const Tensor& f0) const {
  if (f0.shape() != cube_shape()) {
    throw ShapeError("network input must be " + shape_string(cube_shape()) + ", got " + shape_string(f0.shape()));
  }
  NetOutput out;
  Tensor f = f0;
  for (const auto& block : blocks_) {
    out.blocks.push_back(block_forward(block, f, config_.lambda));
    f = out.blocks.back().f;
  }
  if (config_.output_rule == OutputRule::average_last_two) {
    const auto n = out.blocks.size();
    out.output = ad::scale(ad::add(out.blocks[n - 1].f, out.blocks[n - 2].f), 0.5);
  } else {
    out.output = f;
  }
  return out;
}

std::vector<Tensor> MixtureNet::parameters() const {
  std::vector<Tensor> p;
  for (const auto& b : blocks_) {
    auto bp = b.parameters();
    p.insert(p.end(), bp.begin(), bp.end());
  }
  return p;
}

std::vector<Tensor> MixtureNet::trainable_parameters() const {
  if (config_.lambda != 0.0) return parameters();
  std::vector<Tensor> p;
  for (const auto& b : blocks_) {
    for (const auto& layer : b.abundance) p.insert(p.end(), {layer.kernels, layer.bias});
    for (const auto& n : b.norms) p.insert(p.end(), {n.scale, n.shift});
    p.push_back(b.endmembers);
  }
  return p;
}

void MixtureNet::project_endmembers() {
  for (auto& b : blocks_) ad::project_nonneg(b.endmembers);
}

NetOutput net_forward(const MixtureNet& net, const Tensor& f0) { return net.forward(f0); }

}  // namespace mixnet::net
