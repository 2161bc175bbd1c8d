#include "djf/jpeg_codec.hpp"

#include "jpeg_internal.hpp"

namespace djf::jpeg {

// Annex K base tables, natural order.
static constexpr std::array<int, 64> kBaseLuminance = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

static constexpr std::array<int, 64> kBaseChrominance = {
    17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99,
    24, 26, 56, 99, 99, 99, 99, 99, 47, 66, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99};

QuantTable quality_to_table(int qf, Component component) {
  if (qf < 1 || qf > 100) {
    throw std::invalid_argument("quality factor must be in [1, 100], got " + std::to_string(qf));
  }
  const auto& base = component == Component::Luminance ? kBaseLuminance : kBaseChrominance;
  int scale = qf < 50 ? 5000 / qf : 200 - 2 * qf;
  QuantTable t;
  t.id = component == Component::Luminance ? 0 : 1;
  for (int i = 0; i < 64; ++i) {
    int s = (base[i] * scale + 50) / 100;
    if (s < 1) s = 1;
    if (s > 255) s = 255;
    t.steps[i] = static_cast<std::uint16_t>(s);
  }
  return t;
}

// zigzag position k (0-based) -> natural index.
const std::array<std::uint8_t, 64> kZigzagToNatural = {
    0,  1,  8,  16, 9,  2,  3,  10, 17, 24, 32, 25, 18, 11, 4,  5,
    12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6,  7,  14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63};

std::pair<int, int> zigzag_order(int k) {
  if (k < 1 || k > 64) {
    throw std::invalid_argument("zigzag index must be in [1, 64], got " + std::to_string(k));
  }
  int nat = kZigzagToNatural[k - 1];
  return {nat / 8, nat % 8};
}

int zigzag_index(int row, int col) {
  if (row < 0 || row > 7 || col < 0 || col > 7) {
    throw std::invalid_argument("zigzag position out of the 8x8 grid");
  }
  int nat = row * 8 + col;
  for (int k = 0; k < 64; ++k) {
    if (kZigzagToNatural[k] == nat) return k + 1;
  }
  return 0;  // unreachable
}

CoeffImage make_coeff_image(int width, int height, const QuantTable& quant) {
  if (width < 1 || height < 1) {
    throw std::invalid_argument("coefficient image dimensions must be positive");
  }
  CoeffImage c;
  c.width = width;
  c.height = height;
  c.blocks_w = (width + 7) / 8;
  c.blocks_h = (height + 7) / 8;
  c.quant = quant;
  c.blocks.resize(static_cast<std::size_t>(c.blocks_w) * c.blocks_h);
  for (int r = 0; r < c.blocks_h; ++r) {
    for (int col = 0; col < c.blocks_w; ++col) {
      c.block(r, col).row = r;
      c.block(r, col).col = col;
    }
  }
  return c;
}

// Annex K default Huffman specs (luminance slots).
const std::array<std::uint8_t, 16> kStdDcCounts = {0, 1, 5, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0};
const std::array<std::uint8_t, 12> kStdDcSymbols = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
const std::array<std::uint8_t, 16> kStdAcCounts = {0, 2, 1, 3, 3, 2, 4, 3, 5, 5, 4, 4, 0, 0, 1, 125};
const std::array<std::uint8_t, 162> kStdAcSymbols = {
    0x01, 0x02, 0x03, 0x00, 0x04, 0x11, 0x05, 0x12, 0x21, 0x31, 0x41, 0x06, 0x13, 0x51, 0x61, 0x07,
    0x22, 0x71, 0x14, 0x32, 0x81, 0x91, 0xA1, 0x08, 0x23, 0x42, 0xB1, 0xC1, 0x15, 0x52, 0xD1, 0xF0,
    0x24, 0x33, 0x62, 0x72, 0x82, 0x09, 0x0A, 0x16, 0x17, 0x18, 0x19, 0x1A, 0x25, 0x26, 0x27, 0x28,
    0x29, 0x2A, 0x34, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3A, 0x43, 0x44, 0x45, 0x46, 0x47, 0x48, 0x49,
    0x4A, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59, 0x5A, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68, 0x69,
    0x6A, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78, 0x79, 0x7A, 0x83, 0x84, 0x85, 0x86, 0x87, 0x88, 0x89,
    0x8A, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99, 0x9A, 0xA2, 0xA3, 0xA4, 0xA5, 0xA6, 0xA7,
    0xA8, 0xA9, 0xAA, 0xB2, 0xB3, 0xB4, 0xB5, 0xB6, 0xB7, 0xB8, 0xB9, 0xBA, 0xC2, 0xC3, 0xC4, 0xC5,
    0xC6, 0xC7, 0xC8, 0xC9, 0xCA, 0xD2, 0xD3, 0xD4, 0xD5, 0xD6, 0xD7, 0xD8, 0xD9, 0xDA, 0xE1, 0xE2,
    0xE3, 0xE4, 0xE5, 0xE6, 0xE7, 0xE8, 0xE9, 0xEA, 0xF1, 0xF2, 0xF3, 0xF4, 0xF5, 0xF6, 0xF7, 0xF8,
    0xF9, 0xFA};

HuffmanTable std_dc_luminance() {
  HuffmanTable t;
  t.cls = HuffmanTable::Class::Dc;
  t.counts = kStdDcCounts;
  t.symbols.assign(kStdDcSymbols.begin(), kStdDcSymbols.end());
  return t;
}

HuffmanTable std_ac_luminance() {
  HuffmanTable t;
  t.cls = HuffmanTable::Class::Ac;
  t.counts = kStdAcCounts;
  t.symbols.assign(kStdAcSymbols.begin(), kStdAcSymbols.end());
  return t;
}

// Canonical code assignment per T.81 C.2.
std::vector<HuffCode> build_codes(const HuffmanTable& t) {
  std::vector<HuffCode> codes(256);
  std::uint32_t code = 0;
  std::size_t idx = 0;
  for (int len = 1; len <= 16; ++len) {
    for (int i = 0; i < t.counts[len - 1]; ++i) {
      if (idx >= t.symbols.size()) {
        throw std::invalid_argument("huffman table counts exceed symbol list");
      }
      codes[t.symbols[idx]] = {static_cast<std::uint16_t>(code), static_cast<std::uint8_t>(len)};
      ++code;
      ++idx;
    }
    if (code > (1u << len)) {
      throw std::invalid_argument("huffman table overflows canonical code space");
    }
    code <<= 1;
  }
  if (idx != t.symbols.size()) {
    throw std::invalid_argument("huffman table symbol count mismatch");
  }
  return codes;
}

}  // namespace djf::jpeg
