#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mixnet/spectral/cube.hpp"

namespace mixnet::spectral {

struct GrayImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;
};

/// Min-max normalization to 0..255. A constant plane maps to all zeros.
std::vector<std::uint8_t> normalize_to_bytes(std::span<const double> plane);

/// Bands shown as R, G, B: round((L-1) * {5/6, 1/2, 1/6}).
std::array<std::size_t, 3> rgb_band_indices(std::size_t bands);

void write_gray_png(std::span<const std::uint8_t> pixels, std::size_t height, std::size_t width,
                    const std::filesystem::path& path);
void write_rgb_png(std::span<const std::uint8_t> interleaved, std::size_t height, std::size_t width,
                   const std::filesystem::path& path);
/// Reads an 8-bit PNG, converting color to gray and dropping alpha.
GrayImage read_gray_png(const std::filesystem::path& path);

void export_band_png(const SpectralCube& cube, std::size_t band, const std::filesystem::path& path);
void export_rgb_png(const SpectralCube& cube, const std::filesystem::path& path);
/// One CSV row per matrix row, '.' decimal separator, round-trip precision.
void export_csv(const Eigen::MatrixXd& matrix, const std::filesystem::path& path);
Eigen::MatrixXd read_csv(const std::filesystem::path& path);

}  // namespace mixnet::spectral
