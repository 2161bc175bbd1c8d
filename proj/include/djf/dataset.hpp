#pragma once

// Dataset construction: left-half splicing over a (QF1, QF2) grid, balanced
// block sampling at each scale, feature pre-extraction, manifests and the
// built-in procedural corpus generator.

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "djf/compression_sim.hpp"
#include "djf/features.hpp"

namespace djf::sim {

struct BlockSample {
  features::FeatureVector feats;
  int label = 0;  // 1 = tampered (singly compressed), 0 = authentic
  int qf1 = 0, qf2 = 0;
  int scale = 64;
  int x = 0, y = 0;  // block origin in pixels
};

struct ManifestRecord {
  std::string path;  // tampered JPEG
  int label = 0;
  int qf1 = 0, qf2 = 0;
  int scale = 64;
  int x = 0, y = 0;
  std::string split;  // "train" | "val"
};

// CSV columns: path,label,qf1,qf2,scale,x,y,split
void write_manifest(const std::string& path, const std::vector<ManifestRecord>& records);
std::vector<ManifestRecord> read_manifest(const std::string& path);

struct DatasetPaths {
  std::string images_csv;                      // jpeg_path,mask_path,qf1,qf2
  std::map<int, std::string> block_manifests;  // per scale
  std::map<int, std::string> feature_files;    // per scale, row i <-> manifest row i
  std::string special_manifest;
  std::string special_features;
  long images = 0;
  std::map<int, long> samples_per_scale;
  long special_samples = 0;
};

// Seeded procedural luminance images: smooth gradient base, a few
// low-frequency cosines, random soft shapes, band-limited noise.
std::vector<RawImage> synthesize_corpus(int count, int width, int height, std::uint64_t seed);

std::vector<RawImage> load_corpus_dir(const std::string& dir);

// Left-half splice per image x (qf1,qf2) pair; non-overlapping scale x scale
// blocks, balanced tampered/authentic per image and pair, 80/20
// train/validation split.
DatasetPaths make_synthetic_dataset(const std::vector<RawImage>& corpus,
                                    const std::vector<std::pair<int, int>>& qf_pairs,
                                    const std::vector<int>& scales, const std::string& out_dir,
                                    std::uint64_t seed);

// 64x64 blocks only: positives restricted to qf1 > qf2 pairs, negatives
// (doubly compressed) drawn from the full grid, balanced.
DatasetPaths make_special_dataset(const std::vector<RawImage>& corpus,
                                  const std::vector<std::pair<int, int>>& qf_pairs,
                                  const std::string& out_dir, std::uint64_t seed);

// "50,55,60" -> cross product incl. equal pairs; helpers for the CLI.
std::vector<int> parse_qf_list(const std::string& csv);
std::vector<std::pair<int, int>> cross_pairs(const std::vector<int>& qfs);
std::vector<std::pair<int, int>> parse_qf_pairs(const std::string& csv);  // "50:90,90:50"

}  // namespace djf::sim
