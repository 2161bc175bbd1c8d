#pragma once

// Shared helpers for the test suites: temp dirs, python invocation (the
// reference codec used to pin derived fixtures), random coefficient images.

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "djf/jpeg_codec.hpp"
#include "djf/rng.hpp"

namespace testutil {

inline std::filesystem::path fresh_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("djf_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline bool have_python() {
  static int cached = -1;
  if (cached < 0) {
    cached = std::system("python3 -c 'import PIL.Image' >/dev/null 2>&1") == 0 ? 1 : 0;
  }
  return cached == 1;
}

// Runs a python snippet; returns its exit status == 0.
inline bool run_python(const std::string& code, const std::filesystem::path& workdir) {
  auto script = workdir / "snippet.py";
  {
    std::ofstream out(script);
    out << code;
  }
  std::string cmd = "python3 " + script.string() + " >/dev/null 2>&1";
  return std::system(cmd.c_str()) == 0;
}

inline std::vector<std::uint8_t> read_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_binary(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

// Random CoeffImage within the encodable coefficient ranges. Sparse by
// default: most coefficients zero, like real quantized blocks.
inline djf::jpeg::CoeffImage random_coeff_image(djf::rng::Rng& rng, int max_dim = 96) {
  int w = rng.range(8, max_dim);
  int h = rng.range(8, max_dim);
  int qf = rng.range(1, 100);
  djf::jpeg::CoeffImage c =
      djf::jpeg::make_coeff_image(w, h, djf::jpeg::quality_to_table(qf));
  for (auto& blk : c.blocks) {
    blk.coeffs[0] = static_cast<std::int16_t>(rng.range(-1024, 1023));
    int nonzero = rng.range(0, 20);
    for (int i = 0; i < nonzero; ++i) {
      int k = rng.range(1, 63);
      blk.coeffs[k] = static_cast<std::int16_t>(rng.range(-1023, 1023));
    }
  }
  return c;
}

inline bool same_coeffs(const djf::jpeg::CoeffImage& a, const djf::jpeg::CoeffImage& b) {
  if (a.width != b.width || a.height != b.height || a.blocks.size() != b.blocks.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.blocks.size(); ++i) {
    if (a.blocks[i].coeffs != b.blocks[i].coeffs) return false;
  }
  return true;
}

}  // namespace testutil
