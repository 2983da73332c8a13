#include "mixnet/spectral/cube_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace mixnet::spectral {

namespace {

constexpr std::array<char, 4> kMagic{'S', 'P', 'C', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                              static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(b.data(), 4);
}

std::uint32_t get_u32(const unsigned char* b) {
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void encode_f64(double v, unsigned char* out) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
}

double decode_f64(const unsigned char* in) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(in[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

SpectralCube read_cube(const std::filesystem::path& path) {
  using Kind = CubeFormatError::Kind;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CubeFormatError(Kind::io, "cannot open cube file " + path.string());

  std::array<unsigned char, 16> header{};
  in.read(reinterpret_cast<char*>(header.data()), 4);
  if (in.gcount() < 4 || std::memcmp(header.data(), kMagic.data(), 4) != 0) {
    throw CubeFormatError(Kind::bad_magic, "bad magic in " + path.string() + " (expected SPC1)");
  }
  in.read(reinterpret_cast<char*>(header.data() + 4), 12);
  if (in.gcount() < 12) throw CubeFormatError(Kind::truncated_header, "truncated header in " + path.string());

  const std::uint64_t h = get_u32(header.data() + 4);
  const std::uint64_t w = get_u32(header.data() + 8);
  const std::uint64_t l = get_u32(header.data() + 12);
  if (h == 0 || w == 0 || l == 0 || h * w > kMaxCubeElements || h * w * l > kMaxCubeElements) {
    throw CubeFormatError(Kind::dimension_overflow, "dimension overflow in " + path.string() + ": " +
                                                        std::to_string(h) + "x" + std::to_string(w) + "x" +
                                                        std::to_string(l));
  }
  const std::size_t count = static_cast<std::size_t>(h * w * l);
  std::vector<unsigned char> payload(count * 8);
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (static_cast<std::size_t>(in.gcount()) != payload.size()) {
    throw CubeFormatError(Kind::truncated_payload, "truncated payload in " + path.string() + ": expected " +
                                                       std::to_string(count) + " values, found " +
                                                       std::to_string(in.gcount() / 8));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw CubeFormatError(Kind::trailing_data, "trailing bytes after payload in " + path.string());
  }
  std::vector<double> data(count);
  for (std::size_t i = 0; i < count; ++i) data[i] = decode_f64(payload.data() + 8 * i);
  return SpectralCube(h, w, l, std::move(data));
}

void write_cube(const SpectralCube& cube, const std::filesystem::path& path) {
  using Kind = CubeFormatError::Kind;
  if (cube.height() > UINT32_MAX || cube.width() > UINT32_MAX || cube.bands() > UINT32_MAX) {
    throw CubeFormatError(Kind::dimension_overflow, "cube dimensions exceed the SPC1 header range");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CubeFormatError(Kind::io, "cannot write cube file " + path.string());
  out.write(kMagic.data(), 4);
  put_u32(out, static_cast<std::uint32_t>(cube.height()));
  put_u32(out, static_cast<std::uint32_t>(cube.width()));
  put_u32(out, static_cast<std::uint32_t>(cube.bands()));
  std::vector<unsigned char> payload(cube.size() * 8);
  for (std::size_t i = 0; i < cube.size(); ++i) encode_f64(cube.data()[i], payload.data() + 8 * i);
  out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (!out) throw CubeFormatError(Kind::io, "failed writing cube file " + path.string());
}

}  // namespace mixnet::spectral
