#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <array>
#include <numeric>

#include "djf/compression_sim.hpp"
#include "djf/jpeg_codec.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace djf;

// Reference luminance table at qf=50, frozen from libjpeg (via Pillow)
// output; equals the Annex K base table.
static constexpr std::array<int, 64> kReferenceQ50 = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

TEST_CASE("quality_to_table: qf=50 equals the reference table") {
  jpeg::QuantTable t = jpeg::quality_to_table(50);
  for (int i = 0; i < 64; ++i) CHECK(t.steps[i] == kReferenceQ50[i]);
}

TEST_CASE("quality_to_table: qf=100 is all ones") {
  jpeg::QuantTable t = jpeg::quality_to_table(100);
  for (int i = 0; i < 64; ++i) CHECK(t.steps[i] == 1);
}

TEST_CASE("quality_to_table: cell-wise monotone non-increasing in qf") {
  for (int qf = 1; qf < 100; ++qf) {
    jpeg::QuantTable lo = jpeg::quality_to_table(qf);
    jpeg::QuantTable hi = jpeg::quality_to_table(qf + 1);
    for (int i = 0; i < 64; ++i) CHECK(lo.steps[i] >= hi.steps[i]);
  }
}

TEST_CASE("quality_to_table: qf out of range") {
  CHECK_THROWS_AS(jpeg::quality_to_table(0), std::invalid_argument);
  CHECK_THROWS_AS(jpeg::quality_to_table(101), std::invalid_argument);
}

TEST_CASE("quality_to_table: chrominance variant scales its own base") {
  jpeg::QuantTable t = jpeg::quality_to_table(50, jpeg::Component::Chrominance);
  CHECK(t.steps[0] == 17);
  CHECK(t.steps[63] == 99);
}

TEST_CASE("zigzag_order: fixtures and bijection") {
  CHECK(jpeg::zigzag_order(1) == std::pair<int, int>{0, 0});
  CHECK(jpeg::zigzag_order(2) == std::pair<int, int>{0, 1});
  CHECK(jpeg::zigzag_order(3) == std::pair<int, int>{1, 0});
  CHECK(jpeg::zigzag_order(64) == std::pair<int, int>{7, 7});
  CHECK_THROWS_AS(jpeg::zigzag_order(0), std::invalid_argument);
  CHECK_THROWS_AS(jpeg::zigzag_order(65), std::invalid_argument);

  std::array<bool, 64> hit{};
  for (int k = 1; k <= 64; ++k) {
    auto [r, c] = jpeg::zigzag_order(k);
    CHECK(!hit[r * 8 + c]);
    hit[r * 8 + c] = true;
    CHECK(jpeg::zigzag_index(r, c) == k);
  }
}

TEST_CASE("parse: missing SOI names offset 0") {
  std::vector<std::uint8_t> junk = {0x00, 0x01, 0x02};
  try {
    jpeg::parse_jpeg(junk);
    FAIL("expected ParseError");
  } catch (const jpeg::ParseError& e) {
    CHECK(e.offset() == 0);
    CHECK(std::string(e.what()).find("missing SOI") != std::string::npos);
  }
}

TEST_CASE("encode/parse: all-zero single block is the smallest stream") {
  jpeg::CoeffImage c = jpeg::make_coeff_image(8, 8, jpeg::quality_to_table(50));
  std::vector<std::uint8_t> bytes = jpeg::encode_jpeg(c);
  // entropy data: one DC category-0 code (2 bits) + EOB (4 bits) -> 1 byte
  jpeg::CoeffImage back = jpeg::parse_jpeg(bytes);
  CHECK(testutil::same_coeffs(c, back));
  CHECK(back.width == 8);
  CHECK(back.quant.steps == c.quant.steps);
}

TEST_CASE("round trip: random coefficient images, with and without restarts") {
  rng::Rng rng(2024);
  for (int i = 0; i < 40; ++i) {
    jpeg::CoeffImage c = testutil::random_coeff_image(rng);
    int restart = i % 4 == 0 ? rng.range(1, 5) : 0;
    std::vector<std::uint8_t> bytes = jpeg::encode_jpeg(c, restart);
    jpeg::CoeffImage back = jpeg::parse_jpeg(bytes);
    CHECK(testutil::same_coeffs(c, back));
  }
}

TEST_CASE("encode: coefficient range enforcement") {
  jpeg::CoeffImage c = jpeg::make_coeff_image(8, 8, jpeg::quality_to_table(50));
  c.blocks[0].coeffs[0] = 2000;
  CHECK_THROWS_AS(jpeg::encode_jpeg(c), std::invalid_argument);
  c.blocks[0].coeffs[0] = 0;
  c.blocks[0].coeffs[5] = -1024;  // AC beyond the baseline category range
  CHECK_THROWS_AS(jpeg::encode_jpeg(c), std::invalid_argument);
}

TEST_CASE("parse: progressive and 12-bit streams are rejected") {
  jpeg::CoeffImage c = jpeg::make_coeff_image(16, 16, jpeg::quality_to_table(75));
  std::vector<std::uint8_t> bytes = jpeg::encode_jpeg(c);

  // locate the SOF0 marker and flip it to SOF2
  for (std::size_t i = 0; i + 1 < bytes.size(); ++i) {
    if (bytes[i] == 0xFF && bytes[i + 1] == 0xC0) {
      auto prog = bytes;
      prog[i + 1] = 0xC2;
      CHECK_THROWS_WITH_AS(jpeg::parse_jpeg(prog), doctest::Contains("progressive"),
                           jpeg::ParseError);
      auto deep = bytes;
      deep[i + 4] = 12;  // precision byte
      CHECK_THROWS_WITH_AS(jpeg::parse_jpeg(deep), doctest::Contains("8-bit"), jpeg::ParseError);
      return;
    }
  }
  FAIL("SOF0 not found in encoded stream");
}

TEST_CASE("parse: duplicate SOF rejected") {
  jpeg::CoeffImage c = jpeg::make_coeff_image(8, 8, jpeg::quality_to_table(75));
  std::vector<std::uint8_t> bytes = jpeg::encode_jpeg(c);
  // duplicate the SOF segment right after itself
  for (std::size_t i = 0; i + 1 < bytes.size(); ++i) {
    if (bytes[i] == 0xFF && bytes[i + 1] == 0xC0) {
      std::size_t len = (bytes[i + 2] << 8) | bytes[i + 3];
      std::vector<std::uint8_t> dup = bytes;
      dup.insert(dup.begin() + static_cast<std::ptrdiff_t>(i),
                 bytes.begin() + static_cast<std::ptrdiff_t>(i),
                 bytes.begin() + static_cast<std::ptrdiff_t>(i + 2 + len));
      CHECK_THROWS_WITH_AS(jpeg::parse_jpeg(dup), doctest::Contains("duplicate"),
                           jpeg::ParseError);
      return;
    }
  }
  FAIL("SOF0 not found");
}

TEST_CASE("parse: truncation always raises a structured error") {
  jpeg::CoeffImage c = jpeg::make_coeff_image(24, 16, jpeg::quality_to_table(60));
  rng::Rng rng(7);
  for (auto& blk : c.blocks) {
    blk.coeffs[0] = static_cast<std::int16_t>(rng.range(-64, 64));
    blk.coeffs[1] = static_cast<std::int16_t>(rng.range(-8, 8));
  }
  std::vector<std::uint8_t> bytes = jpeg::encode_jpeg(c);
  for (std::size_t cut = 2; cut < bytes.size(); cut += 7) {
    std::vector<std::uint8_t> prefix(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
    CHECK_THROWS_AS(jpeg::parse_jpeg(prefix), jpeg::ParseError);
  }
}

TEST_CASE("parse: reference-encoded mid-gray 8x8 image has all-zero coefficients") {
  REQUIRE(testutil::have_python());
  auto dir = testutil::fresh_dir("midgray");
  std::string jpg = (dir / "gray.jpg").string();
  REQUIRE(testutil::run_python("from PIL import Image\n"
                               "Image.new('L', (8, 8), 128).save(r'" + jpg + "', quality=50)\n",
                               dir));
  jpeg::CoeffImage c = jpeg::parse_jpeg(testutil::read_binary(jpg));
  CHECK(c.width == 8);
  CHECK(c.height == 8);
  REQUIRE(c.blocks.size() == 1);
  for (int i = 0; i < 64; ++i) CHECK(c.blocks[0].coeffs[i] == 0);
  // the reference encoder at quality 50 carries the base table
  for (int i = 0; i < 64; ++i) CHECK(c.quant.steps[i] == kReferenceQ50[i]);
}

TEST_CASE("parse: grayscale reference JPEG reconstructs to the reference decode") {
  REQUIRE(testutil::have_python());
  auto dir = testutil::fresh_dir("grayref");
  std::string jpg = (dir / "tex.jpg").string();
  std::string raw = (dir / "tex_decoded.bin").string();
  REQUIRE(testutil::run_python(
      "from PIL import Image\n"
      "import math\n"
      "w, h = 48, 40\n"
      "im = Image.new('L', (w, h))\n"
      "px = im.load()\n"
      "for y in range(h):\n"
      "    for x in range(w):\n"
      "        px[x, y] = int(128 + 60*math.sin(x*0.3) * math.cos(y*0.21)) & 0xFF\n"
      "im.save(r'" + jpg + "', quality=80)\n"
      "dec = Image.open(r'" + jpg + "')\n"
      "open(r'" + raw + "', 'wb').write(dec.tobytes())\n",
      dir));
  jpeg::CoeffImage c = jpeg::parse_jpeg(testutil::read_binary(jpg));
  CHECK(c.width == 48);
  CHECK(c.height == 40);

  // dequantize + IDCT our parsed coefficients and compare with the
  // reference decoder (its integer IDCT may differ by a couple of levels)
  std::vector<std::uint8_t> ref = testutil::read_binary(raw);
  REQUIRE(ref.size() == 48u * 40u);
  long close = 0, total = 0;
  for (int br = 0; br < c.blocks_h; ++br) {
    for (int bc = 0; bc < c.blocks_w; ++bc) {
      std::array<double, 64> deq;
      for (int i = 0; i < 64; ++i) deq[i] = double(c.block(br, bc).coeffs[i]) * c.quant.steps[i];
      std::array<std::uint8_t, 64> rec = sim::idct8x8(deq);
      for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) {
          int py = br * 8 + y, px = bc * 8 + x;
          if (py >= 40 || px >= 48) continue;
          int d = std::abs(int(rec[y * 8 + x]) - int(ref[py * 48 + px]));
          ++total;
          if (d <= 2) ++close;
        }
      }
    }
  }
  CHECK(total == 48 * 40);
  CHECK(close >= total * 99 / 100);
}

TEST_CASE("parse: 4:2:0 color reference JPEG keeps the luminance grid") {
  REQUIRE(testutil::have_python());
  auto dir = testutil::fresh_dir("color420");
  std::string jpg = (dir / "color.jpg").string();
  REQUIRE(testutil::run_python(
      "from PIL import Image\n"
      "im = Image.new('RGB', (100, 60))\n"
      "px = im.load()\n"
      "for y in range(60):\n"
      "    for x in range(100):\n"
      "        px[x, y] = (2*x, y, (x+y) % 256) if x < 50 else (200, 180, 160)\n"
      "im.save(r'" + jpg + "', quality=85, subsampling=2)\n",
      dir));
  jpeg::CoeffImage c = jpeg::parse_jpeg(testutil::read_binary(jpg));
  CHECK(c.width == 100);
  CHECK(c.height == 60);
  CHECK(c.blocks_w == 13);
  CHECK(c.blocks_h == 8);
  // left half is darker: DC means must reflect it
  double left = 0, right = 0;
  for (int br = 0; br < c.blocks_h; ++br) {
    left += c.block(br, 2).coeffs[0];
    right += c.block(br, 9).coeffs[0];
  }
  CHECK(left < right);
}

TEST_CASE("parse: 4:4:4 color reference JPEG parses") {
  REQUIRE(testutil::have_python());
  auto dir = testutil::fresh_dir("color444");
  std::string jpg = (dir / "color.jpg").string();
  REQUIRE(testutil::run_python("from PIL import Image\n"
                               "im = Image.new('RGB', (40, 24), (90, 120, 33))\n"
                               "im.save(r'" + jpg + "', quality=92, subsampling=0)\n",
                               dir));
  jpeg::CoeffImage c = jpeg::parse_jpeg(testutil::read_binary(jpg));
  CHECK(c.width == 40);
  CHECK(c.height == 24);
}

TEST_CASE("encode: reference decoder accepts our files") {
  REQUIRE(testutil::have_python());
  auto dir = testutil::fresh_dir("extdec");
  rng::Rng rng(99);
  for (int i = 0; i < 5; ++i) {
    jpeg::CoeffImage c = testutil::random_coeff_image(rng, 64);
    std::string jpg = (dir / ("r" + std::to_string(i) + ".jpg")).string();
    testutil::write_binary(jpg, jpeg::encode_jpeg(c));
    CHECK(testutil::run_python("from PIL import Image\n"
                               "im = Image.open(r'" + jpg + "')\n"
                               "im.load()\n"
                               "assert im.size == (" + std::to_string(c.width) + ", " +
                                   std::to_string(c.height) + ")\n",
                               dir));
  }
}
