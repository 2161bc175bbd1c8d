#pragma once

// Histogram features: per-block counts of the zigzag-2..10 quantized DCT
// coefficients over the value range [-radius, radius], flattened frequency-
// major. The default radius 15 gives the 9 x 31 = 279 dimensional vector.

#include <vector>

#include "djf/jpeg_codec.hpp"

namespace djf::features {

inline constexpr int kNumFrequencies = 9;   // zigzag positions 2..10
inline constexpr int kDefaultRadius = 15;   // value bins -15..15
inline constexpr int kFeatureDim = kNumFrequencies * (2 * kDefaultRadius + 1);

struct Region {
  int x = 0, y = 0, w = 0, h = 0;  // pixels, 8-aligned
};

struct FeatureVector {
  std::vector<float> values;  // kNumFrequencies * (2*radius+1) entries
  int radius = kDefaultRadius;

  int dim() const { return static_cast<int>(values.size()); }
};

// Counts coefficients over all DCT blocks of the region; values outside
// [-radius, radius] contribute to no bin. DC (zigzag position 1) is unused.
FeatureVector extract_features(const jpeg::CoeffImage& c, const Region& region,
                               int radius = kDefaultRadius);

// Per-entry division by the block count (off by default everywhere; the
// networks consume raw counts).
FeatureVector features_normalized(const FeatureVector& v, int n_blocks);

}  // namespace djf::features
