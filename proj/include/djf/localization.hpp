#pragma once

// Sliding-window localization: the stride-8 window sweep, probability-map
// assembly with the 28-pixel zero border, binarization and the confusion
// metrics of the evaluation tables.

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "djf/msd.hpp"
#include "djf/pgm.hpp"

namespace djf::loc {

inline constexpr int kWindow = 64;
inline constexpr int kStride = 8;
inline constexpr int kCellOffset = 28;  // central 8x8 cell origin within the window

struct ProbabilityMap {
  int width = 0, height = 0;
  std::vector<float> p;  // row-major, in [0,1]; uncovered border stays 0

  float at(int x, int y) const { return p[static_cast<std::size_t>(y) * width + x]; }
};

// (floor((M-L)/8)+1) * (floor((N-L)/8)+1)
long count_windows(long m, long n, int l = kWindow);

struct DetectResult {
  ProbabilityMap map;
  std::vector<std::uint8_t> route;  // row-major, 255 where the special path decided
  long windows = 0;
  long special_windows = 0;
};

// threads <= 0 picks DJF_THREADS or the hardware count; results are
// identical for any thread count.
DetectResult detect(const msd::MsdModel& m, std::span<const std::uint8_t> jpeg_bytes,
                    int threads = 0);

// pixel >= threshold -> 1 (tampered)
std::vector<std::uint8_t> binarize(const ProbabilityMap& map, double threshold = 0.5);

struct ScoreRow {
  double acc = 0;
  std::optional<double> precision, recall, f1;  // empty when the denominator is 0
  long tp = 0, tn = 0, fp = 0, fn = 0;
  long p = 0, n = 0;
};

// Confusion counts with positive = double-compressed (authentic), per the
// evaluation convention; prediction/truth use nonzero = tampered. Pixels
// within `border` of any edge are excluded.
ScoreRow score(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth, int width,
               int height, int border = kCellOffset);

struct EvalCell {
  int qf1 = 0, qf2 = 0;
  int images = 0;
  double acc = 0;  // means of per-image scores
  std::optional<double> precision, recall, f1;
  long tp = 0, tn = 0, fp = 0, fn = 0;  // summed counts
};

struct EvalReport {
  std::vector<EvalCell> cells;
  std::vector<std::pair<int, double>> qf2_acc;  // per-QF2 averages over cells
  std::vector<std::pair<int, double>> qf2_f1;
};

// Runs detect + binarize(0.5) + score over every row of an images.csv
// (jpeg,mask,qf1,qf2) and aggregates per (qf1, qf2) cell.
EvalReport evaluate_grid(const msd::MsdModel& m, const std::string& images_csv, int threads = 0,
                         std::ostream* progress = nullptr);

// header: qf1,qf2,acc,precision,recall,f1,tp,tn,fp,fn
void write_eval_csv(const EvalReport& report, const std::string& path);
void write_qf2_csv(const EvalReport& report, const std::string& path);

// 8-bit view (round(255*p)) and the float sidecar.
io::Gray8 map_to_pgm(const ProbabilityMap& map);
void write_map_f32(const ProbabilityMap& map, const std::string& path);

int worker_threads(int requested);  // resolves DJF_THREADS / hardware default

}  // namespace djf::loc
