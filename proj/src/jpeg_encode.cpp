#include <cstring>

#include "djf/jpeg_codec.hpp"
#include "jpeg_internal.hpp"

namespace djf::jpeg {

namespace {

struct BitWriter {
  std::vector<std::uint8_t>& out;
  std::uint32_t buf = 0;
  int count = 0;

  void put(std::uint32_t code, int nbits) {
    for (int i = nbits - 1; i >= 0; --i) {
      buf = (buf << 1) | ((code >> i) & 1);
      if (++count == 8) flush_byte();
    }
  }
  void flush_byte() {
    std::uint8_t b = static_cast<std::uint8_t>(buf & 0xFF);
    out.push_back(b);
    if (b == 0xFF) out.push_back(0x00);
    buf = 0;
    count = 0;
  }
  void pad_to_byte() {
    while (count != 0) {
      buf = (buf << 1) | 1;
      if (++count == 8) flush_byte();
    }
  }
};

int bit_category(int v) {
  int a = v < 0 ? -v : v;
  int n = 0;
  while (a) {
    ++n;
    a >>= 1;
  }
  return n;
}

void emit_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

void emit_marker(std::vector<std::uint8_t>& out, std::uint8_t m) {
  out.push_back(0xFF);
  out.push_back(m);
}

void emit_dht(std::vector<std::uint8_t>& out, const HuffmanTable& t, int cls, int slot) {
  emit_marker(out, marker::DHT);
  emit_u16(out, static_cast<std::uint16_t>(2 + 1 + 16 + t.symbols.size()));
  out.push_back(static_cast<std::uint8_t>((cls << 4) | slot));
  for (auto c : t.counts) out.push_back(c);
  for (auto s : t.symbols) out.push_back(s);
}

}  // namespace

std::vector<std::uint8_t> encode_jpeg(const CoeffImage& img, int restart_interval) {
  if (img.width < 1 || img.height < 1 || img.width > 65535 || img.height > 65535) {
    throw std::invalid_argument("image dimensions out of range for baseline JPEG");
  }
  if (img.blocks_w != (img.width + 7) / 8 || img.blocks_h != (img.height + 7) / 8 ||
      img.blocks.size() != static_cast<std::size_t>(img.blocks_w) * img.blocks_h) {
    throw std::invalid_argument("coefficient grid inconsistent with image dimensions");
  }
  for (auto s : img.quant.steps) {
    if (s < 1 || s > 255) throw std::invalid_argument("quantization step out of [1, 255]");
  }
  if (restart_interval < 0 || restart_interval > 65535) {
    throw std::invalid_argument("restart interval out of range");
  }

  std::vector<std::uint8_t> out;
  out.reserve(1024 + img.blocks.size() * 24);
  emit_marker(out, marker::SOI);

  emit_marker(out, marker::DQT);
  emit_u16(out, 2 + 1 + 64);
  out.push_back(0x00);  // Pq=0 (8-bit), Tq=0
  for (int k = 0; k < 64; ++k) {
    out.push_back(static_cast<std::uint8_t>(img.quant.steps[kZigzagToNatural[k]]));
  }

  emit_marker(out, marker::SOF0);
  emit_u16(out, 2 + 6 + 3);
  out.push_back(8);  // precision
  emit_u16(out, static_cast<std::uint16_t>(img.height));
  emit_u16(out, static_cast<std::uint16_t>(img.width));
  out.push_back(1);     // one component
  out.push_back(1);     // component id
  out.push_back(0x11);  // 1x1 sampling
  out.push_back(0);     // quant table 0

  HuffmanTable dc = std_dc_luminance();
  HuffmanTable ac = std_ac_luminance();
  emit_dht(out, dc, 0, 0);
  emit_dht(out, ac, 1, 0);

  if (restart_interval > 0) {
    emit_marker(out, marker::DRI);
    emit_u16(out, 4);
    emit_u16(out, static_cast<std::uint16_t>(restart_interval));
  }

  emit_marker(out, marker::SOS);
  emit_u16(out, 2 + 1 + 2 + 3);
  out.push_back(1);     // one component in scan
  out.push_back(1);     // component id
  out.push_back(0x00);  // DC table 0, AC table 0
  out.push_back(0);     // Ss
  out.push_back(63);    // Se
  out.push_back(0);     // Ah/Al

  std::vector<HuffCode> dc_codes = build_codes(dc);
  std::vector<HuffCode> ac_codes = build_codes(ac);
  BitWriter bits{out};
  int pred = 0;
  int rst_index = 0;
  long done = 0;
  const long total = static_cast<long>(img.blocks.size());

  for (const DctBlock& b : img.blocks) {
    int dc_val = b.coeffs[0];
    if (dc_val < kMinCoeff || dc_val > kMaxCoeff) {
      throw std::invalid_argument("DC coefficient out of 12-bit range");
    }
    int diff = dc_val - pred;
    pred = dc_val;
    int cat = bit_category(diff);
    bits.put(dc_codes[cat].code, dc_codes[cat].length);
    if (cat > 0) {
      int v = diff < 0 ? diff + (1 << cat) - 1 : diff;
      bits.put(static_cast<std::uint32_t>(v), cat);
    }

    int run = 0;
    for (int k = 1; k < 64; ++k) {
      int v = b.coeffs[kZigzagToNatural[k]];
      if (v == 0) {
        ++run;
        continue;
      }
      while (run >= 16) {
        bits.put(ac_codes[0xF0].code, ac_codes[0xF0].length);  // ZRL
        run -= 16;
      }
      int acat = bit_category(v);
      if (acat > 10) throw std::invalid_argument("AC coefficient out of baseline range");
      int rs = (run << 4) | acat;
      bits.put(ac_codes[rs].code, ac_codes[rs].length);
      int bv = v < 0 ? v + (1 << acat) - 1 : v;
      bits.put(static_cast<std::uint32_t>(bv), acat);
      run = 0;
    }
    if (run > 0) {
      bits.put(ac_codes[0x00].code, ac_codes[0x00].length);  // EOB
    }

    ++done;
    if (restart_interval > 0 && done < total && done % restart_interval == 0) {
      bits.pad_to_byte();
      emit_marker(out, static_cast<std::uint8_t>(marker::RST0 + rst_index));
      rst_index = (rst_index + 1) & 7;
      pred = 0;
    }
  }
  bits.pad_to_byte();
  emit_marker(out, marker::EOI);
  return out;
}

}  // namespace djf::jpeg
