#pragma once

// Baseline JPEG coefficient codec: parses JFIF/JPEG byte streams down to the
// quantized DCT coefficients of the luminance component (no dequantization,
// no IDCT), and encodes a coefficient grid back to a valid single-component
// baseline JPEG. Progressive, arithmetic-coded and 12-bit streams are
// rejected with explicit errors.

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace djf::jpeg {

struct QuantTable {
  std::array<std::uint16_t, 64> steps{};  // natural (row-major) order, 1..255
  int id = 0;                             // table slot 0-3
};

struct DctBlock {
  std::array<std::int16_t, 64> coeffs{};  // natural order, quantized values
  int row = 0, col = 0;                   // position in the block grid
};

struct CoeffImage {
  int width = 0, height = 0;  // pixels
  int blocks_w = 0, blocks_h = 0;
  std::vector<DctBlock> blocks;  // row-major, blocks_h x blocks_w
  QuantTable quant;

  DctBlock& block(int row, int col) { return blocks[static_cast<std::size_t>(row) * blocks_w + col]; }
  const DctBlock& block(int row, int col) const {
    return blocks[static_cast<std::size_t>(row) * blocks_w + col];
  }
};

// Allocates an all-zero coefficient grid for the given pixel dimensions.
CoeffImage make_coeff_image(int width, int height, const QuantTable& quant);

struct HuffmanTable {
  enum class Class { Dc, Ac };
  Class cls = Class::Dc;
  std::array<std::uint8_t, 16> counts{};  // codes per code length 1..16
  std::vector<std::uint8_t> symbols;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t offset)
      : std::runtime_error(msg + " (offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

enum class Component { Luminance, Chrominance };

// IJG-style quality scaling: scale = 5000/qf (qf < 50) else 200 - 2*qf;
// step = clamp((base*scale + 50)/100, 1, 255). qf=50 yields the base table,
// qf=100 yields all ones.
QuantTable quality_to_table(int qf, Component component = Component::Luminance);

// k in 1..64 -> (row, col) of the k-th position in zigzag scan order.
std::pair<int, int> zigzag_order(int k);
// Inverse: (row, col) -> k in 1..64.
int zigzag_index(int row, int col);

CoeffImage parse_jpeg(std::span<const std::uint8_t> bytes);

// Single-component baseline JPEG with the Annex K default Huffman tables.
// restart_interval > 0 inserts RSTn markers every that many blocks.
std::vector<std::uint8_t> encode_jpeg(const CoeffImage& img, int restart_interval = 0);

inline constexpr int kMinCoeff = -1024;  // 12-bit signed bound on parsed values
inline constexpr int kMaxCoeff = 1023;

}  // namespace djf::jpeg
