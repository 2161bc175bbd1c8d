#include "djf/pgm.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace djf::io {

namespace {

int read_pnm_token(std::istream& in, const std::string& path) {
  // skips whitespace and '#' comment lines
  for (;;) {
    int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  int v = -1;
  in >> v;
  if (!in || v < 0) throw std::runtime_error("malformed PGM header: " + path);
  return v;
}

}  // namespace

Gray8 read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open PGM file: " + path);
  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  if (m0 != 'P' || m1 != '5') throw std::runtime_error("not a binary PGM (P5) file: " + path);
  Gray8 img;
  img.width = read_pnm_token(in, path);
  img.height = read_pnm_token(in, path);
  int maxval = read_pnm_token(in, path);
  if (maxval != 255) throw std::runtime_error("only 8-bit PGM supported: " + path);
  in.get();  // single whitespace after maxval
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
    throw std::runtime_error("truncated PGM pixel data: " + path);
  }
  return img;
}

void write_pgm(const std::string& path, const Gray8& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write PGM file: " + path);
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
  if (!out) throw std::runtime_error("failed writing PGM pixel data: " + path);
}

namespace {

constexpr char kMagic[4] = {'D', 'J', 'F', 'V'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
               static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(b, 4);
}

std::uint32_t get_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("truncated DJFV file: " + path);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_f32_file(const std::string& path, const float* data, std::uint32_t count,
                    std::uint32_t dim) {
  static_assert(sizeof(float) == 4);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, count);
  put_u32(out, dim);
  // little-endian host assumed for the payload (checked at configure time on
  // every platform this toolkit targets)
  out.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(sizeof(float) * count * dim));
  if (!out) throw std::runtime_error("failed writing file: " + path);
}

std::vector<float> read_f32_file(const std::string& path, std::uint32_t& count,
                                 std::uint32_t& dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("bad magic in DJFV file: " + path);
  }
  std::uint32_t version = get_u32(in, path);
  if (version != kVersion) {
    throw std::runtime_error("unsupported DJFV version " + std::to_string(version) + ": " + path);
  }
  count = get_u32(in, path);
  dim = get_u32(in, path);
  std::vector<float> data(static_cast<std::size_t>(count) * dim);
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(sizeof(float) * data.size()));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(float) * data.size())) {
    throw std::runtime_error("truncated DJFV payload: " + path);
  }
  return data;
}

}  // namespace djf::io
