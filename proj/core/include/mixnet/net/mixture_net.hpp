#pragma once

#include <array>
#include <cstddef>
#include <string_view>
#include <vector>

#include "mixnet/autodiff/tensor.hpp"
#include "mixnet/random.hpp"

namespace mixnet::net {

enum class AbundanceKind { convolutional, autoencoder, resnet };
enum class OutputRule { last, average_last_two };

std::string_view to_string(AbundanceKind kind);
std::string_view to_string(OutputRule rule);
AbundanceKind parse_abundance_kind(std::string_view text);
OutputRule parse_output_rule(std::string_view text);

/// Spatial feature extractor producing the abundance maps.
///  - convolutional: `num_layers` 3x3 conv + leaky-relu, then 3x3 conv to r + sigmoid
///  - autoencoder: same, feature widths doubling then halving (odd `num_layers`)
///  - resnet: convolutional with the first hidden activation added to the last
/// With `normalize`, every hidden conv is followed by a per-channel
/// normalization with learned scale and shift, before the leaky-relu.
struct AbundanceArch {
  AbundanceKind kind = AbundanceKind::convolutional;
  std::size_t num_layers = 6;
  std::size_t features = 32;
  bool normalize = true;

  /// Width of each hidden layer.
  std::vector<std::size_t> hidden_widths() const;
  void validate() const;
};

struct MixtureNetConfig {
  std::size_t blocks = 2;
  std::size_t rank = 3;
  double lambda = 0.7;
  AbundanceArch arch;
  OutputRule output_rule = OutputRule::last;

  void validate(std::size_t bands) const;
};

/// Same-padded convolution parameters: kernels [out x in x k x k], bias [out].
struct ConvLayer {
  ad::Tensor kernels;
  ad::Tensor bias;

  /// Kernels ~ U(-s, s) with s = gain / sqrt(fan_in), zero bias.
  static ConvLayer random(std::size_t in, std::size_t out, std::size_t ksize, Rng& rng, double gain = 1.0);
  static ConvLayer zeros(std::size_t in, std::size_t out, std::size_t ksize);

  ad::Tensor operator()(const ad::Tensor& chw) const;
};

/// 3x3 spatial conv -> leaky-relu -> 1x1 spectral conv, plus the unit input.
struct SpatialSpectralUnit {
  ConvLayer spatial;
  ConvLayer spectral;
};

/// Learned per-channel affine map applied after normalization.
struct ChannelNorm {
  ad::Tensor scale;  // [C], starts at 1
  ad::Tensor shift;  // [C], starts at 0
};

struct DeepBlock {
  AbundanceArch arch;
  std::vector<ConvLayer> abundance;  // hidden layers followed by the r-channel output layer
  std::vector<ChannelNorm> norms;    // one per hidden layer when arch.normalize
  ad::Tensor endmembers;             // L x r, kept entrywise non-negative
  std::array<SpatialSpectralUnit, 2> nonlinearity;

  static DeepBlock random(std::size_t bands, std::size_t rank, const AbundanceArch& arch, Rng& rng);
  std::size_t rank() const { return endmembers.dim(1); }
  std::size_t bands() const { return endmembers.dim(0); }
  std::vector<ad::Tensor> parameters() const;
};

// Block layers on H x W x C tensors.
ad::Tensor abundance_forward(const DeepBlock& block, const ad::Tensor& f_in);
/// Per-pixel E * a_i: [L x r] and [H x W x r] -> [H x W x L].
ad::Tensor endmember_forward(const ad::Tensor& endmembers, const ad::Tensor& abundances);
ad::Tensor nonlinearity_forward(const DeepBlock& block, const ad::Tensor& linear);

struct BlockOutput {
  ad::Tensor f;           // (1 - lambda) * linear + lambda * nonlinear
  ad::Tensor abundances;  // H x W x r
  ad::Tensor linear;
  ad::Tensor nonlinear;
};

BlockOutput block_forward(const DeepBlock& block, const ad::Tensor& f_prev, double lambda);

struct NetOutput {
  std::vector<BlockOutput> blocks;
  ad::Tensor output;
};

/// K chained deep-blocks; block k consumes the full cube produced by block k-1.
class MixtureNet {
 public:
  MixtureNet(const MixtureNetConfig& config, std::size_t height, std::size_t width, std::size_t bands, Rng& rng);

  NetOutput forward(const ad::Tensor& f0) const;

  std::vector<ad::Tensor> parameters() const;
  /// Parameters that reach the output: the non-linearity units are dropped
  /// when lambda is 0.
  std::vector<ad::Tensor> trainable_parameters() const;
  /// Clamp every endmember matrix at zero (after each optimizer step).
  void project_endmembers();

  const MixtureNetConfig& config() const noexcept { return config_; }
  const std::vector<DeepBlock>& blocks() const noexcept { return blocks_; }
  std::vector<DeepBlock>& blocks() noexcept { return blocks_; }
  ad::Shape cube_shape() const { return {height_, width_, bands_}; }

 private:
  MixtureNetConfig config_;
  std::size_t height_, width_, bands_;
  std::vector<DeepBlock> blocks_;
};

NetOutput net_forward(const MixtureNet& net, const ad::Tensor& f0);

}  // namespace mixnet::net
