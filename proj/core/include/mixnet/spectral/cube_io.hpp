#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "mixnet/spectral/cube.hpp"

namespace mixnet::spectral {

/// SPC1 layout: "SPC1", then H, W, L as little-endian uint32, then H*W*L
/// little-endian IEEE-754 doubles, row-major with the band axis fastest.
class CubeFormatError : public std::runtime_error {
 public:
  enum class Kind { io, bad_magic, truncated_header, dimension_overflow, truncated_payload, trailing_data };

  CubeFormatError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Element count above which a header is treated as corrupt.
inline constexpr std::uint64_t kMaxCubeElements = std::uint64_t{1} << 32;

SpectralCube read_cube(const std::filesystem::path& path);
void write_cube(const SpectralCube& cube, const std::filesystem::path& path);

}  // namespace mixnet::spectral
