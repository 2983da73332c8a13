#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mixnet {

/// Seeded 64-bit generator. Child streams are derived by name so that
/// independent consumers (init, perturbation, probes) never share state.
///
/// Uniform and normal variates are produced by explicit transforms over the
/// raw engine output, so sequences are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  Rng split(std::string_view stream) const;
  Rng split(std::string_view stream, std::uint64_t index) const;

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal (Box-Muller, cached pair).
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace mixnet
