#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mixnet/forward/forward_model.hpp"
#include "mixnet/loss/losses.hpp"
#include "mixnet/net/mixture_net.hpp"

namespace mixnet::recovery {

enum class Task { denoise, sr, csi };
enum class InputStrategy { constant, random, meshgrid, estimated, learned };
enum class LossScheme { single, multiple };

std::string_view to_string(Task t);
std::string_view to_string(InputStrategy s);
std::string_view to_string(LossScheme s);
Task parse_task(std::string_view text);
InputStrategy parse_input_strategy(std::string_view text);
LossScheme parse_loss_scheme(std::string_view text);

/// Unknown key or malformed value; carries the offending token.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& what, std::string token) : std::invalid_argument(what), token_(std::move(token)) {}
  const std::string& token() const noexcept { return token_; }

 private:
  std::string token_;
};

struct RecoveryConfig {
  Task task = Task::denoise;
  InputStrategy input_strategy = InputStrategy::learned;
  double rho = 0.4;
  double beta = 0.7;
  net::MixtureNetConfig net;
  std::vector<double> tau;    // empty: derived from loss_scheme
  std::vector<double> gamma;  // empty: 0.5 for every block
  LossScheme loss_scheme = LossScheme::multiple;
  double lr = 1e-3;
  std::size_t iterations = 3000;
  std::optional<loss::Fidelity> fidelity;  // empty: SURE for denoising, l2 otherwise
  loss::SureForm sure_form = loss::SureForm::normalized;
  double sure_eps = 1e-5;
  std::size_t div_probes = 1;
  std::uint64_t seed = 0;
  forward::CassiVariant cassi = forward::CassiVariant::dual_disperser;
  std::size_t d = 4;
  std::optional<double> sigma;  // empty: estimated from the measurements
  double noise_sigma = 25.0 / 255.0;
  double threshold = 0.5;
  /// Weight of the running average of training outputs that forms the
  /// recovered cube; 0 keeps the last training pass.
  double output_ema = 0.99;

  /// Sets one key from its text form; throws ConfigError.
  void set(std::string_view key, std::string_view value);
  /// Applies `key=value` lines; blank lines and `#` comments are ignored.
  void merge_text(std::string_view text);
  void merge_file(const std::filesystem::path& path);

  static const std::vector<std::string_view>& keys();

  std::vector<double> resolved_tau() const;
  std::vector<double> resolved_gamma() const;
  loss::Fidelity resolved_fidelity() const;

  /// Range checks; `bands` additionally bounds the rank when non-zero.
  void validate(std::size_t bands = 0) const;

  /// Every key as `key=value`, in `keys()` order; parses back to an equal config.
  std::string to_text() const;
};

}  // namespace mixnet::recovery
