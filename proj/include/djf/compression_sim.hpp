#pragma once

// The tampering model: single/double JPEG compression of raw luminance
// images, region splicing, and the scalar double-quantization oracle the
// DQ-effect tests are built on.

#include <array>
#include <cstdint>
#include <vector>

#include "djf/jpeg_codec.hpp"
#include "djf/pgm.hpp"

namespace djf::sim {

using RawImage = io::Gray8;

struct TamperSpec {
  int qf1 = 50, qf2 = 90;
  int rx = 0, ry = 0, rw = 0, rh = 0;  // singly-compressed (pasted) region
  int dx = 0, dy = 0;                  // block-alignment shift of pasted content, [0,7]
};

// Orthonormal 8x8 DCT-II of level-shifted samples; DC of a constant block v
// is 8*(v-128).
std::array<double, 64> fdct8x8(const std::array<std::uint8_t, 64>& samples);
// Inverse: IDCT, +128 level shift, round half away from zero, clamp to [0,255].
std::array<std::uint8_t, 64> idct8x8(const std::array<double, 64>& coeffs);

// Divide by the quantization step and round half away from zero.
int quantize(double coeff, int step);

struct CompressResult {
  jpeg::CoeffImage coeffs;
  RawImage decompressed;
};

// One JPEG compression cycle (dims must be multiples of 8).
CompressResult compress_once(const RawImage& img, int qf);

// round(round(x/q1) * q1 / q2), the scalar model behind the DQ effect.
long double_quantize_scalar(long x, int q1, int q2);

struct TamperResult {
  std::vector<std::uint8_t> jpeg;
  RawImage mask;  // 255 inside the pasted (singly-compressed) region
};

// Fig. 2 pipeline: compress at qf1, decompress, paste original pixels over
// the region (shifted by (dx,dy)), recompress at qf2.
TamperResult tamper_and_recompress(const RawImage& img, const TamperSpec& spec);

}  // namespace djf::sim
