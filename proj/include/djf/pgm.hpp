#pragma once

// File plumbing: binary PGM (P5, 8-bit) images, and the "DJFV" little-endian
// float container used for both feature files (count x dim vectors) and
// probability-map sidecars (height x width).

#include <cstdint>
#include <string>
#include <vector>

namespace djf::io {

struct Gray8 {
  int width = 0, height = 0;
  std::vector<std::uint8_t> pixels;  // row-major

  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

Gray8 read_pgm(const std::string& path);
void write_pgm(const std::string& path, const Gray8& img);

// 16-byte header: magic "DJFV", u32 version (1), u32 count, u32 dim,
// then count*dim little-endian f32.
void write_f32_file(const std::string& path, const float* data, std::uint32_t count,
                    std::uint32_t dim);
std::vector<float> read_f32_file(const std::string& path, std::uint32_t& count, std::uint32_t& dim);

}  // namespace djf::io
