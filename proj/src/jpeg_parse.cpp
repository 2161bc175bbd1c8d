#include <cstring>
#include <optional>

#include "djf/jpeg_codec.hpp"
#include "jpeg_internal.hpp"

namespace djf::jpeg {

namespace {

struct Reader {
  std::span<const std::uint8_t> data;
  std::size_t pos = 0;

  std::uint8_t u8() {
    if (pos >= data.size()) throw ParseError("truncated stream", pos);
    return data[pos++];
  }
  std::uint16_t u16() {
    std::uint16_t hi = u8();
    return static_cast<std::uint16_t>((hi << 8) | u8());
  }
  void skip(std::size_t n) {
    if (pos + n > data.size()) throw ParseError("truncated segment", pos);
    pos += n;
  }
};

// T.81 F.2.2.3 decoder tables.
struct HuffDecoder {
  std::array<std::int32_t, 17> mincode{};
  std::array<std::int32_t, 17> maxcode{};  // -1 where no codes of that length
  std::array<int, 17> valptr{};
  std::vector<std::uint8_t> symbols;
  bool present = false;

  void build(const HuffmanTable& t, std::size_t at) {
    int total = 0;
    std::int32_t code = 0;
    for (int len = 1; len <= 16; ++len) {
      valptr[len] = total;
      mincode[len] = code;
      int n = t.counts[len - 1];
      total += n;
      code += n;
      maxcode[len] = n > 0 ? code - 1 : -1;
      if (code > (1 << len)) throw ParseError("huffman table overflows code space", at);
      code <<= 1;
    }
    if (total != static_cast<int>(t.symbols.size()) || total > 256) {
      throw ParseError("huffman table counts/symbols mismatch", at);
    }
    symbols = t.symbols;
    present = true;
  }
};

// Bit source over the entropy-coded segment; handles 0xFF00 stuffing and
// stops (with an error) at any unexpected marker.
struct BitReader {
  Reader& r;
  std::uint32_t buf = 0;
  int count = 0;

  explicit BitReader(Reader& rd) : r(rd) {}

  int next_bit() {
    if (count == 0) {
      if (r.pos >= r.data.size()) throw ParseError("truncated entropy stream", r.pos);
      std::uint8_t b = r.data[r.pos++];
      if (b == 0xFF) {
        if (r.pos >= r.data.size()) throw ParseError("truncated entropy stream", r.pos);
        std::uint8_t m = r.data[r.pos++];
        if (m != 0x00) {
          throw ParseError("unexpected marker 0xFF" + to_hex(m) + " in entropy stream", r.pos - 2);
        }
      }
      buf = b;
      count = 8;
    }
    --count;
    return (buf >> count) & 1;
  }

  int receive(int nbits) {
    int v = 0;
    for (int i = 0; i < nbits; ++i) v = (v << 1) | next_bit();
    return v;
  }

  int decode(const HuffDecoder& h) {
    std::size_t at = r.pos;
    std::int32_t code = next_bit();
    for (int len = 1; len <= 16; ++len) {
      if (h.maxcode[len] >= 0 && code <= h.maxcode[len]) {
        return h.symbols[h.valptr[len] + (code - h.mincode[len])];
      }
      code = (code << 1) | next_bit();
    }
    throw ParseError("invalid huffman code", at);
  }

  void align() { count = 0; }

  static std::string to_hex(std::uint8_t v) {
    static const char* digits = "0123456789ABCDEF";
    return {digits[v >> 4], digits[v & 15]};
  }
};

int extend(int v, int nbits) {
  if (nbits == 0) return 0;
  return v < (1 << (nbits - 1)) ? v - (1 << nbits) + 1 : v;
}

struct FrameComponent {
  int id = 0;
  int h = 1, v = 1;
  int tq = 0;
  int dc_table = 0, ac_table = 0;
  int pred = 0;
  // block grid of the component proper (padding blocks excluded)
  int blocks_w = 0, blocks_h = 0;
};

}  // namespace

CoeffImage parse_jpeg(std::span<const std::uint8_t> bytes) {
  Reader r{bytes};
  if (bytes.size() < 2 || bytes[0] != 0xFF || bytes[1] != marker::SOI) {
    throw ParseError("missing SOI", 0);
  }
  r.pos = 2;

  std::array<std::optional<QuantTable>, 4> qtables;
  std::array<HuffDecoder, 4> dc_dec, ac_dec;
  std::vector<FrameComponent> comps;
  int width = 0, height = 0;
  bool seen_sof = false, seen_scan = false;
  int restart_interval = 0;
  CoeffImage out;

  auto read_marker = [&]() -> std::uint8_t {
    std::size_t at = r.pos;
    std::uint8_t b = r.u8();
    if (b != 0xFF) throw ParseError("expected marker, got stray byte", at);
    std::uint8_t m = r.u8();
    while (m == 0xFF) m = r.u8();  // fill bytes
    return m;
  };

  auto decode_scan = [&](const std::vector<int>& scan_comp_idx) {
    int hmax = 1, vmax = 1;
    for (const auto& c : comps) {
      hmax = std::max(hmax, c.h);
      vmax = std::max(vmax, c.v);
    }
    for (auto& c : comps) {
      int cw = (width * c.h + 8 * hmax - 1) / (8 * hmax);   // ceil(width*h/hmax / 8)
      int ch = (height * c.v + 8 * vmax - 1) / (8 * vmax);
      c.blocks_w = cw;
      c.blocks_h = ch;
      c.pred = 0;
    }
    FrameComponent& luma = comps[0];
    if (!qtables[luma.tq]) throw ParseError("luminance references undefined quantization table", r.pos);
    out = make_coeff_image(width, height, *qtables[luma.tq]);

    BitReader bits(r);
    int rst_index = 0;

    auto decode_block = [&](FrameComponent& c, DctBlock* dst) {
      const HuffDecoder& dct = dc_dec[c.dc_table];
      const HuffDecoder& act = ac_dec[c.ac_table];
      if (!dct.present || !act.present) {
        throw ParseError("scan references undefined huffman table", r.pos);
      }
      std::size_t at = r.pos;
      int s = bits.decode(dct);
      if (s > 15) throw ParseError("invalid DC category", at);
      int diff = extend(bits.receive(s), s);
      c.pred += diff;
      if (c.pred < kMinCoeff || c.pred > kMaxCoeff) {
        throw ParseError("DC coefficient overflow", at);
      }
      if (dst) dst->coeffs[0] = static_cast<std::int16_t>(c.pred);
      int k = 1;
      while (k < 64) {
        at = r.pos;
        int rs = bits.decode(act);
        int run = rs >> 4;
        int size = rs & 15;
        if (size == 0) {
          if (run == 15) {
            k += 16;
            continue;
          }
          break;  // EOB
        }
        k += run;
        if (k > 63) throw ParseError("AC run past end of block", at);
        if (size > 10) throw ParseError("AC coefficient overflow", at);
        int v = extend(bits.receive(size), size);
        if (dst) dst->coeffs[kZigzagToNatural[k]] = static_cast<std::int16_t>(v);
        ++k;
      }
    };

    auto maybe_restart = [&](long mcu_done, long mcu_total) {
      if (restart_interval == 0 || mcu_done == mcu_total) return;
      if (mcu_done % restart_interval != 0) return;
      bits.align();
      std::size_t at = r.pos;
      std::uint8_t b = r.u8();
      std::uint8_t m = r.u8();
      if (b != 0xFF || m != marker::RST0 + rst_index) {
        throw ParseError("expected restart marker RST" + std::to_string(rst_index), at);
      }
      rst_index = (rst_index + 1) & 7;
      for (auto& c : comps) c.pred = 0;
    };

    if (scan_comp_idx.size() == 1 && comps.size() == 1) {
      // Non-interleaved single-component scan: one block per MCU.
      FrameComponent& c = comps[0];
      long total = static_cast<long>(c.blocks_w) * c.blocks_h;
      for (long i = 0; i < total; ++i) {
        int row = static_cast<int>(i) / c.blocks_w;
        int col = static_cast<int>(i) % c.blocks_w;
        decode_block(c, &out.block(row, col));
        maybe_restart(i + 1, total);
      }
    } else {
      int mcus_x = (width + 8 * hmax - 1) / (8 * hmax);
      int mcus_y = (height + 8 * vmax - 1) / (8 * vmax);
      long total = static_cast<long>(mcus_x) * mcus_y;
      for (int my = 0; my < mcus_y; ++my) {
        for (int mx = 0; mx < mcus_x; ++mx) {
          for (int ci : scan_comp_idx) {
            FrameComponent& c = comps[ci];
            for (int by = 0; by < c.v; ++by) {
              for (int bx = 0; bx < c.h; ++bx) {
                int row = my * c.v + by;
                int col = mx * c.h + bx;
                bool keep = ci == 0 && row < c.blocks_h && col < c.blocks_w;
                decode_block(c, keep ? &out.block(row, col) : nullptr);
              }
            }
          }
          maybe_restart(static_cast<long>(my) * mcus_x + mx + 1, total);
        }
      }
    }
    bits.align();
  };

  for (;;) {
    std::size_t seg_at = r.pos;
    std::uint8_t m = read_marker();
    if (m == marker::EOI) {
      if (!seen_scan) throw ParseError("EOI before any scan data", seg_at);
      break;
    }
    if (m >= marker::APP0 && m <= marker::APP0 + 15) {
      r.skip(static_cast<std::size_t>(r.u16()) - 2);
      continue;
    }
    switch (m) {
      case marker::COM:
        r.skip(static_cast<std::size_t>(r.u16()) - 2);
        break;
      case marker::DQT: {
        std::size_t end = seg_at + 2 + r.u16();
        while (r.pos < end) {
          std::size_t at = r.pos;
          std::uint8_t pq_tq = r.u8();
          int pq = pq_tq >> 4, tq = pq_tq & 15;
          if (pq != 0) throw ParseError("16-bit quantization table (12-bit JPEG) not supported", at);
          if (tq > 3) throw ParseError("quantization table slot out of range", at);
          QuantTable t;
          t.id = tq;
          for (int k = 0; k < 64; ++k) {
            std::uint8_t step = r.u8();
            if (step == 0) throw ParseError("zero quantization step", at);
            t.steps[kZigzagToNatural[k]] = step;
          }
          qtables[tq] = t;
        }
        if (r.pos != end) throw ParseError("malformed DQT segment length", seg_at);
        break;
      }
      case marker::DHT: {
        std::size_t end = seg_at + 2 + r.u16();
        while (r.pos < end) {
          std::size_t at = r.pos;
          std::uint8_t tc_th = r.u8();
          int tc = tc_th >> 4, th = tc_th & 15;
          if (tc > 1) throw ParseError("huffman table class must be DC or AC", at);
          if (th > 3) throw ParseError("huffman table slot out of range", at);
          HuffmanTable t;
          t.cls = tc == 0 ? HuffmanTable::Class::Dc : HuffmanTable::Class::Ac;
          int total = 0;
          for (int i = 0; i < 16; ++i) {
            t.counts[i] = r.u8();
            total += t.counts[i];
          }
          if (total > 256) throw ParseError("huffman table with more than 256 symbols", at);
          t.symbols.resize(total);
          for (int i = 0; i < total; ++i) t.symbols[i] = r.u8();
          (tc == 0 ? dc_dec[th] : ac_dec[th]).build(t, at);
        }
        if (r.pos != end) throw ParseError("malformed DHT segment length", seg_at);
        break;
      }
      case marker::DRI: {
        if (r.u16() != 4) throw ParseError("malformed DRI segment", seg_at);
        restart_interval = r.u16();
        break;
      }
      case marker::SOF0: {
        if (seen_sof) throw ParseError("duplicate SOF marker", seg_at);
        seen_sof = true;
        r.u16();  // length, cross-checked by component count below
        int precision = r.u8();
        if (precision != 8) {
          throw ParseError("only 8-bit sample precision supported, got " + std::to_string(precision),
                           seg_at);
        }
        height = r.u16();
        width = r.u16();
        if (width < 1 || height < 1) throw ParseError("frame with zero dimension (DNL not supported)", seg_at);
        int nc = r.u8();
        if (nc != 1 && nc != 3) {
          throw ParseError("unsupported component count " + std::to_string(nc), seg_at);
        }
        for (int i = 0; i < nc; ++i) {
          FrameComponent c;
          c.id = r.u8();
          std::uint8_t hv = r.u8();
          c.h = hv >> 4;
          c.v = hv & 15;
          c.tq = r.u8();
          if (c.h < 1 || c.h > 4 || c.v < 1 || c.v > 4 || c.tq > 3) {
            throw ParseError("invalid component parameters", seg_at);
          }
          comps.push_back(c);
        }
        break;
      }
      case 0xC2:
        throw ParseError("progressive JPEG (SOF2) not supported", seg_at);
      case 0xC9:
      case 0xCA:
      case 0xCB:
      case marker::DAC:
        throw ParseError("arithmetic-coded JPEG not supported", seg_at);
      case 0xC1:
      case 0xC3:
      case 0xC5:
      case 0xC6:
      case 0xC7:
      case 0xCD:
      case 0xCE:
      case 0xCF:
        throw ParseError("non-baseline SOF marker 0xFF" + BitReader::to_hex(m) + " not supported",
                         seg_at);
      case marker::SOS: {
        if (!seen_sof) throw ParseError("SOS before SOF", seg_at);
        if (seen_scan) throw ParseError("multiple scans not supported", seg_at);
        r.u16();
        int ns = r.u8();
        if (ns != static_cast<int>(comps.size())) {
          throw ParseError("scan must cover all frame components", seg_at);
        }
        std::vector<int> scan_idx;
        for (int i = 0; i < ns; ++i) {
          int cid = r.u8();
          std::uint8_t td_ta = r.u8();
          auto it = std::find_if(comps.begin(), comps.end(),
                                 [cid](const FrameComponent& c) { return c.id == cid; });
          if (it == comps.end()) throw ParseError("scan references unknown component", seg_at);
          it->dc_table = td_ta >> 4;
          it->ac_table = td_ta & 15;
          if (it->dc_table > 3 || it->ac_table > 3) {
            throw ParseError("scan references invalid huffman slot", seg_at);
          }
          scan_idx.push_back(static_cast<int>(it - comps.begin()));
        }
        int ss = r.u8(), se = r.u8(), a = r.u8();
        if (ss != 0 || se != 63 || a != 0) {
          throw ParseError("non-baseline spectral selection in SOS", seg_at);
        }
        decode_scan(scan_idx);
        seen_scan = true;
        break;
      }
      case marker::DNL:
        throw ParseError("DNL marker not supported", seg_at);
      default:
        throw ParseError("unexpected marker 0xFF" + BitReader::to_hex(m), seg_at);
    }
  }
  return out;
}

}  // namespace djf::jpeg
