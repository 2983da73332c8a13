#include "mixnet/spectral/export.hpp"

#include <fmt/format.h>
#include <png.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>

namespace mixnet::spectral {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void write_png(std::span<const std::uint8_t> pixels, std::size_t height, std::size_t width, int color_type,
               std::size_t channels, const std::filesystem::path& path) {
  if (pixels.size() != height * width * channels) {
    throw std::invalid_argument("PNG pixel buffer does not match " + std::to_string(height) + "x" +
                                std::to_string(width));
  }
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw std::runtime_error("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng failed writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t row = 0; row < height; ++row) {
    png_write_row(png, const_cast<png_bytep>(pixels.data() + row * width * channels));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

std::vector<std::uint8_t> normalize_to_bytes(std::span<const double> plane) {
  std::vector<std::uint8_t> out(plane.size(), 0);
  if (plane.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(plane.begin(), plane.end());
  const double lo = *lo_it, range = *hi_it - *lo_it;
  if (!(range > 0.0)) return out;
  for (std::size_t i = 0; i < plane.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(std::lround(255.0 * (plane[i] - lo) / range));
  }
  return out;
}

std::array<std::size_t, 3> rgb_band_indices(std::size_t bands) {
  if (bands == 0) throw std::invalid_argument("cube has no bands");
  const double last = static_cast<double>(bands - 1);
  auto pick = [&](double frac) { return std::min(bands - 1, static_cast<std::size_t>(std::lround(last * frac))); };
  return {pick(5.0 / 6.0), pick(0.5), pick(1.0 / 6.0)};
}

void write_gray_png(std::span<const std::uint8_t> pixels, std::size_t height, std::size_t width,
                    const std::filesystem::path& path) {
  write_png(pixels, height, width, PNG_COLOR_TYPE_GRAY, 1, path);
}

void write_rgb_png(std::span<const std::uint8_t> interleaved, std::size_t height, std::size_t width,
                   const std::filesystem::path& path) {
  write_png(interleaved, height, width, PNG_COLOR_TYPE_RGB, 3, path);
}

GrayImage read_gray_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw std::runtime_error("cannot read PNG " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_GRAY;
  GrayImage out{image.height, image.width, std::vector<std::uint8_t>(PNG_IMAGE_SIZE(image))};
  if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw std::runtime_error("cannot decode PNG " + path.string() + ": " + msg);
  }
  return out;
}

void export_band_png(const SpectralCube& cube, std::size_t band, const std::filesystem::path& path) {
  if (band >= cube.bands()) {
    throw std::out_of_range("band " + std::to_string(band) + " out of range for a cube with " +
                            std::to_string(cube.bands()) + " bands");
  }
  const auto plane = cube.band(band);
  write_gray_png(normalize_to_bytes(plane), cube.height(), cube.width(), path);
}

void export_rgb_png(const SpectralCube& cube, const std::filesystem::path& path) {
  const auto idx = rgb_band_indices(cube.bands());
  // Joint normalization keeps the relative channel balance.
  std::vector<double> rgb(cube.pixels() * 3);
  for (std::size_t p = 0; p < cube.pixels(); ++p) {
    for (std::size_t c = 0; c < 3; ++c) rgb[3 * p + c] = cube.data()[p * cube.bands() + idx[c]];
  }
  write_rgb_png(normalize_to_bytes(rgb), cube.height(), cube.width(), path);
}

void export_csv(const Eigen::MatrixXd& matrix, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
    std::string line;
    for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
      if (c) line += ',';
      line += fmt::format("{:.17g}", matrix(r, c));
    }
    out << line << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Eigen::MatrixXd read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (start <= line.size()) {
      const std::size_t end = std::min(line.find(',', start), line.size());
      double v = 0.0;
      const auto res = std::from_chars(line.data() + start, line.data() + end, v);
      if (res.ec != std::errc() || res.ptr != line.data() + end) {
        throw std::runtime_error("malformed CSV field in " + path.string() + ": '" + line.substr(start, end - start) + "'");
      }
      row.push_back(v);
      start = end + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::runtime_error("ragged CSV rows in " + path.string());
    }
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  return m;
}

}  // namespace mixnet::spectral
