#pragma once

// Shared pieces of the parse/encode paths: zigzag map, Annex K default
// Huffman specs, canonical code construction.

#include <array>
#include <cstdint>
#include <vector>

#include "djf/jpeg_codec.hpp"

namespace djf::jpeg {

extern const std::array<std::uint8_t, 64> kZigzagToNatural;

struct HuffCode {
  std::uint16_t code = 0;
  std::uint8_t length = 0;  // 0 = symbol absent
};

HuffmanTable std_dc_luminance();
HuffmanTable std_ac_luminance();
std::vector<HuffCode> build_codes(const HuffmanTable& table);

// Marker codes (second byte after 0xFF).
namespace marker {
inline constexpr std::uint8_t SOI = 0xD8;
inline constexpr std::uint8_t EOI = 0xD9;
inline constexpr std::uint8_t SOS = 0xDA;
inline constexpr std::uint8_t DQT = 0xDB;
inline constexpr std::uint8_t DNL = 0xDC;
inline constexpr std::uint8_t DRI = 0xDD;
inline constexpr std::uint8_t DHT = 0xC4;
inline constexpr std::uint8_t DAC = 0xCC;
inline constexpr std::uint8_t SOF0 = 0xC0;
inline constexpr std::uint8_t RST0 = 0xD0;
inline constexpr std::uint8_t APP0 = 0xE0;
inline constexpr std::uint8_t COM = 0xFE;
}  // namespace marker

}  // namespace djf::jpeg
