#include "djf/compression_sim.hpp"

#include <cmath>
#include <stdexcept>

namespace djf::sim {

namespace {

// 1D orthonormal DCT-II basis, c[u][x] = a(u) cos((2x+1)u pi / 16).
struct DctBasis {
  double c[8][8];
  DctBasis() {
    for (int u = 0; u < 8; ++u) {
      double a = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      for (int x = 0; x < 8; ++x) {
        c[u][x] = a * std::cos((2 * x + 1) * u * M_PI / 16.0);
      }
    }
  }
};
const DctBasis kBasis;

double round_half_away(double v) { return v < 0 ? std::ceil(v - 0.5) : std::floor(v + 0.5); }

}  // namespace

std::array<double, 64> fdct8x8(const std::array<std::uint8_t, 64>& samples) {
  double shifted[8][8];
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) shifted[y][x] = samples[y * 8 + x] - 128.0;
  }
  double rows[8][8];  // DCT along x
  for (int y = 0; y < 8; ++y) {
    for (int u = 0; u < 8; ++u) {
      double s = 0;
      for (int x = 0; x < 8; ++x) s += kBasis.c[u][x] * shifted[y][x];
      rows[y][u] = s;
    }
  }
  std::array<double, 64> out;
  for (int v = 0; v < 8; ++v) {
    for (int u = 0; u < 8; ++u) {
      double s = 0;
      for (int y = 0; y < 8; ++y) s += kBasis.c[v][y] * rows[y][u];
      out[v * 8 + u] = s;
    }
  }
  return out;
}

std::array<std::uint8_t, 64> idct8x8(const std::array<double, 64>& coeffs) {
  double rows[8][8];  // inverse along y first
  for (int u = 0; u < 8; ++u) {
    for (int y = 0; y < 8; ++y) {
      double s = 0;
      for (int v = 0; v < 8; ++v) s += kBasis.c[v][y] * coeffs[v * 8 + u];
      rows[y][u] = s;
    }
  }
  std::array<std::uint8_t, 64> out;
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      double s = 0;
      for (int u = 0; u < 8; ++u) s += kBasis.c[u][x] * rows[y][u];
      double px = round_half_away(s + 128.0);
      if (px < 0) px = 0;
      if (px > 255) px = 255;
      out[y * 8 + x] = static_cast<std::uint8_t>(px);
    }
  }
  return out;
}

int quantize(double coeff, int step) {
  return static_cast<int>(round_half_away(coeff / step));
}

CompressResult compress_once(const RawImage& img, int qf) {
  if (img.width < 8 || img.height < 8 || img.width % 8 != 0 || img.height % 8 != 0) {
    throw std::invalid_argument("compress_once requires dimensions that are multiples of 8");
  }
  jpeg::QuantTable q = jpeg::quality_to_table(qf);
  CompressResult res;
  res.coeffs = jpeg::make_coeff_image(img.width, img.height, q);
  res.decompressed.width = img.width;
  res.decompressed.height = img.height;
  res.decompressed.pixels.resize(img.pixels.size());

  std::array<std::uint8_t, 64> tile;
  std::array<double, 64> deq;
  for (int br = 0; br < res.coeffs.blocks_h; ++br) {
    for (int bc = 0; bc < res.coeffs.blocks_w; ++bc) {
      for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) tile[y * 8 + x] = img.at(bc * 8 + x, br * 8 + y);
      }
      std::array<double, 64> dct = fdct8x8(tile);
      jpeg::DctBlock& blk = res.coeffs.block(br, bc);
      for (int i = 0; i < 64; ++i) {
        int v = quantize(dct[i], q.steps[i]);
        blk.coeffs[i] = static_cast<std::int16_t>(v);
        deq[i] = static_cast<double>(v) * q.steps[i];
      }
      std::array<std::uint8_t, 64> rec = idct8x8(deq);
      for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) res.decompressed.at(bc * 8 + x, br * 8 + y) = rec[y * 8 + x];
      }
    }
  }
  return res;
}

long double_quantize_scalar(long x, int q1, int q2) {
  if (q1 < 1 || q2 < 1) throw std::invalid_argument("quantization steps must be >= 1");
  long first = std::llround(static_cast<double>(x) / q1);
  return std::llround(static_cast<double>(first) * q1 / q2);
}

TamperResult tamper_and_recompress(const RawImage& img, const TamperSpec& spec) {
  if (spec.rx < 0 || spec.ry < 0 || spec.rw < 0 || spec.rh < 0 ||
      spec.rx + spec.rw > img.width || spec.ry + spec.rh > img.height) {
    throw std::invalid_argument("tamper region out of image bounds");
  }
  if (spec.dx < 0 || spec.dx > 7 || spec.dy < 0 || spec.dy > 7) {
    throw std::invalid_argument("grid offset must lie in [0,7]^2");
  }
  if (spec.dx == 0 && spec.dy == 0 &&
      (spec.rx % 8 || spec.ry % 8 || spec.rw % 8 || spec.rh % 8)) {
    throw std::invalid_argument("tamper region must be 8-aligned when grid offset is (0,0)");
  }
  if (spec.rx + spec.rw - spec.dx > img.width || spec.ry + spec.rh - spec.dy > img.height ||
      spec.rx - spec.dx < 0 || spec.ry - spec.dy < 0) {
    throw std::invalid_argument("shifted paste source out of image bounds");
  }

  CompressResult first = compress_once(img, spec.qf1);
  RawImage spliced = first.decompressed;
  for (int y = spec.ry; y < spec.ry + spec.rh; ++y) {
    for (int x = spec.rx; x < spec.rx + spec.rw; ++x) {
      spliced.at(x, y) = img.at(x - spec.dx, y - spec.dy);
    }
  }
  CompressResult second = compress_once(spliced, spec.qf2);

  TamperResult res;
  res.jpeg = jpeg::encode_jpeg(second.coeffs);
  res.mask.width = img.width;
  res.mask.height = img.height;
  res.mask.pixels.assign(static_cast<std::size_t>(img.width) * img.height, 0);
  for (int y = spec.ry; y < spec.ry + spec.rh; ++y) {
    for (int x = spec.rx; x < spec.rx + spec.rw; ++x) res.mask.at(x, y) = 255;
  }
  return res;
}

}  // namespace djf::sim
