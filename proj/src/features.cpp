#include "djf/features.hpp"

#include <stdexcept>
#include <string>

namespace djf::features {

FeatureVector extract_features(const jpeg::CoeffImage& c, const Region& region, int radius) {
  if (radius < 1) throw std::invalid_argument("bin radius must be >= 1");
  if (region.x % 8 || region.y % 8 || region.w % 8 || region.h % 8) {
    throw std::invalid_argument("feature region must be 8-aligned");
  }
  if (region.w < 8 || region.h < 8 || region.x < 0 || region.y < 0 ||
      region.x + region.w > c.blocks_w * 8 || region.y + region.h > c.blocks_h * 8) {
    throw std::invalid_argument("feature region out of coefficient-grid bounds");
  }

  // natural-order positions of zigzag indices 2..10
  int nat[kNumFrequencies];
  for (int i = 0; i < kNumFrequencies; ++i) {
    auto [r, col] = jpeg::zigzag_order(i + 2);
    nat[i] = r * 8 + col;
  }

  const int bins = 2 * radius + 1;
  FeatureVector f;
  f.radius = radius;
  f.values.assign(static_cast<std::size_t>(kNumFrequencies) * bins, 0.0f);

  const int br0 = region.y / 8, bc0 = region.x / 8;
  const int brn = region.h / 8, bcn = region.w / 8;
  for (int br = br0; br < br0 + brn; ++br) {
    for (int bc = bc0; bc < bc0 + bcn; ++bc) {
      const jpeg::DctBlock& blk = c.block(br, bc);
      for (int i = 0; i < kNumFrequencies; ++i) {
        int v = blk.coeffs[nat[i]];
        if (v >= -radius && v <= radius) {
          f.values[static_cast<std::size_t>(i) * bins + (v + radius)] += 1.0f;
        }
      }
    }
  }
  return f;
}

FeatureVector features_normalized(const FeatureVector& v, int n_blocks) {
  if (n_blocks < 1) throw std::invalid_argument("block count must be >= 1");
  FeatureVector out = v;
  for (float& x : out.values) x /= static_cast<float>(n_blocks);
  return out;
}

}  // namespace djf::features
