#pragma once

// Multi-scale discriminative composition: three scale networks fused with
// fixed simplex weights plus the threshold-routed special network for the
// QF1 > QF2 regime.

#include <array>
#include <cstdint>
#include <ostream>
#include <string>

#include "djf/dataset.hpp"
#include "djf/features.hpp"
#include "djf/jpeg_codec.hpp"
#include "djf/nn.hpp"

namespace djf::msd {

// index 0 = tampered (singly compressed), index 1 = authentic
using ProbPair = std::array<double, 2>;

struct MsdModel {
  nn::Network<float> net64, net128, net256, special;
  float w1 = 0.8f, w2 = 0.1f, w3 = 0.1f;
  float threshold = 0.2f;
};

// Eq.-style weighted fusion over the probability simplex.
ProbPair fuse(const ProbPair& s1, const ProbPair& s2, const ProbPair& s3, double w1, double w2,
              double w3);

enum class Route { Fused, Special };

struct BlockVerdict {
  bool tampered = false;
  ProbPair probs{};  // the pair the verdict was read from (fused or special)
  Route route = Route::Fused;
};

struct WindowFeatures {
  std::vector<float> h64, h128, h256;
};

// Histograms for a 64x64 window plus co-centered 128/256 windows clamped to
// the coefficient grid.
WindowFeatures classify_window_features(const jpeg::CoeffImage& c, int wx, int wy);

// Path selection: fused verdict unless |F(1,1) - F(2,1)| < threshold, in
// which case the special network decides from the 64-scale histogram. Ties
// resolve to authentic on both paths.
BlockVerdict classify_block(const MsdModel& m, std::span<const float> h64,
                            std::span<const float> h128, std::span<const float> h256,
                            bool use_routing = true);

struct TrainInputs {
  std::string manifest64, manifest128, manifest256, manifest_special;
};

struct NetReport {
  std::string name;
  std::vector<nn::EpochStats> history;
  long train_n = 0, val_n = 0;
};

struct TrainOutcome {
  MsdModel model;
  std::vector<NetReport> reports;  // net64, net128, net256, special
};

// Trains the four networks independently (concurrently up to `jobs`);
// per-epoch metrics go to `log` as CSV rows "net,epoch,...".
TrainOutcome train_msd(const TrainInputs& inputs, const nn::TrainConfig& cfg, float w1, float w2,
                       float w3, float threshold, std::ostream* log = nullptr, int jobs = 4);

// Composite container: "MSDC" v1, fusion weights + threshold, four embedded
// network payloads (net64, net128, net256, special).
void save_msd(const MsdModel& m, const std::string& path);
MsdModel load_msd(const std::string& path);

struct BlockEval {
  double accuracy = 0;
  double routed_fraction = 0;
  long n = 0;
};

// Classifies the manifest's 64-scale blocks (re-extracting co-centered
// multi-scale context from the source JPEGs). split: "train", "val" or ""
// for all records.
BlockEval evaluate_blocks(const MsdModel& m, const std::string& manifest64,
                          const std::string& split, bool use_routing);

// Loads manifest + feature bank rows into training samples. Label 1
// (tampered) maps to class index 0, matching the network output order.
void load_samples(const std::string& manifest_csv, std::vector<nn::Sample>& train,
                  std::vector<nn::Sample>& val);

}  // namespace djf::msd
