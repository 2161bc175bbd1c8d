#include "djf/localization.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

namespace djf::loc {

long count_windows(long m, long n, int l) {
  if (l < 1) throw std::invalid_argument("window size must be positive");
  if (m < l || n < l) {
    throw std::invalid_argument("image smaller than the window: " + std::to_string(m) + "x" +
                                std::to_string(n));
  }
  return ((m - l) / kStride + 1) * ((n - l) / kStride + 1);
}

int worker_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("DJF_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

DetectResult detect(const msd::MsdModel& m, std::span<const std::uint8_t> jpeg_bytes,
                    int threads) {
  jpeg::CoeffImage c = jpeg::parse_jpeg(jpeg_bytes);
  if (c.width < kWindow || c.height < kWindow) {
    throw std::invalid_argument("image smaller than 64x64");
  }
  const int nx = (c.width - kWindow) / kStride + 1;
  const int ny = (c.height - kWindow) / kStride + 1;

  DetectResult res;
  res.map.width = c.width;
  res.map.height = c.height;
  res.map.p.assign(static_cast<std::size_t>(c.width) * c.height, 0.0f);
  res.route.assign(res.map.p.size(), 0);
  res.windows = static_cast<long>(nx) * ny;

  std::vector<long> special_per_row(ny, 0);
  auto run_rows = [&](int row_begin, int row_end) {
    for (int wy = row_begin; wy < row_end; ++wy) {
      for (int wx = 0; wx < nx; ++wx) {
        int px = wx * kStride, py = wy * kStride;
        msd::WindowFeatures f = msd::classify_window_features(c, px, py);
        msd::BlockVerdict v = msd::classify_block(m, f.h64, f.h128, f.h256);
        if (v.route == msd::Route::Special) ++special_per_row[wy];
        float prob = static_cast<float>(v.probs[0]);  // P(1,1): singly compressed = tampered
        std::uint8_t rt = v.route == msd::Route::Special ? 255 : 0;
        for (int y = 0; y < 8; ++y) {
          std::size_t base =
              static_cast<std::size_t>(py + kCellOffset + y) * c.width + px + kCellOffset;
          for (int x = 0; x < 8; ++x) {
            res.map.p[base + x] = prob;
            res.route[base + x] = rt;
          }
        }
      }
    }
  };

  int nthreads = std::min(worker_threads(threads), ny);
  if (nthreads <= 1) {
    run_rows(0, ny);
  } else {
    std::vector<std::thread> pool;
    int chunk = (ny + nthreads - 1) / nthreads;
    for (int t = 0; t < nthreads; ++t) {
      int b = t * chunk, e = std::min(ny, b + chunk);
      if (b < e) pool.emplace_back(run_rows, b, e);
    }
    for (auto& th : pool) th.join();
  }
  for (long s : special_per_row) res.special_windows += s;
  return res;
}

std::vector<std::uint8_t> binarize(const ProbabilityMap& map, double threshold) {
  if (threshold < 0 || threshold > 1) {
    throw std::invalid_argument("binarization threshold must lie in [0,1]");
  }
  std::vector<std::uint8_t> out(map.p.size());
  for (std::size_t i = 0; i < map.p.size(); ++i) out[i] = map.p[i] >= threshold ? 1 : 0;
  return out;
}

ScoreRow score(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth, int width,
               int height, int border) {
  if (pred.size() != truth.size() ||
      pred.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw std::invalid_argument("prediction/truth mask size mismatch");
  }
  if (border < 0) throw std::invalid_argument("exclusion border must be non-negative");
  ScoreRow r;
  for (int y = border; y < height - border; ++y) {
    for (int x = border; x < width - border; ++x) {
      std::size_t i = static_cast<std::size_t>(y) * width + x;
      bool pred_tampered = pred[i] != 0;
      bool true_tampered = truth[i] != 0;
      // positive class = double-compressed (authentic)
      if (!true_tampered) {
        ++r.p;
        !pred_tampered ? ++r.tp : ++r.fn;
      } else {
        ++r.n;
        !pred_tampered ? ++r.fp : ++r.tn;
      }
    }
  }
  long total = r.p + r.n;
  r.acc = total > 0 ? static_cast<double>(r.tp + r.tn) / static_cast<double>(total) : 0.0;
  if (r.tp + r.fp > 0) r.precision = static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp);
  if (r.tp + r.fn > 0) r.recall = static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn);
  if (r.precision && r.recall && *r.precision + *r.recall > 0) {
    r.f1 = 2 * *r.precision * *r.recall / (*r.precision + *r.recall);
  }
  return r;
}

namespace {

struct ImageRow {
  std::string jpeg, mask;
  int qf1, qf2;
};

std::vector<ImageRow> read_images_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty images csv: " + path);
  std::vector<ImageRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    ImageRow r;
    std::string tok;
    std::getline(ss, r.jpeg, ',');
    std::getline(ss, r.mask, ',');
    if (!std::getline(ss, tok, ',')) throw std::runtime_error("malformed row in " + path);
    r.qf1 = std::stoi(tok);
    if (!std::getline(ss, tok, ',')) throw std::runtime_error("malformed row in " + path);
    r.qf2 = std::stoi(tok);
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw std::runtime_error("no records in " + path);
  return rows;
}

}  // namespace

EvalReport evaluate_grid(const msd::MsdModel& m, const std::string& images_csv, int threads,
                         std::ostream* progress) {
  std::vector<ImageRow> rows = read_images_csv(images_csv);

  struct CellAccum {
    int images = 0;
    double acc_sum = 0;
    double prec_sum = 0, rec_sum = 0, f1_sum = 0;
    int prec_n = 0, rec_n = 0, f1_n = 0;
    long tp = 0, tn = 0, fp = 0, fn = 0;
  };
  std::map<std::pair<int, int>, CellAccum> cells;

  for (const auto& row : rows) {
    try {
      std::ifstream jf(row.jpeg, std::ios::binary);
      if (!jf) throw std::runtime_error("cannot open " + row.jpeg);
      std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(jf)),
                                      std::istreambuf_iterator<char>());
      DetectResult det = detect(m, bytes, threads);
      io::Gray8 truth = io::read_pgm(row.mask);
      if (truth.width != det.map.width || truth.height != det.map.height) {
        throw std::runtime_error("mask size mismatch for " + row.mask);
      }
      std::vector<std::uint8_t> pred = binarize(det.map, 0.5);
      ScoreRow s = score(pred, truth.pixels, det.map.width, det.map.height);

      CellAccum& a = cells[{row.qf1, row.qf2}];
      ++a.images;
      a.acc_sum += s.acc;
      if (s.precision) {
        a.prec_sum += *s.precision;
        ++a.prec_n;
      }
      if (s.recall) {
        a.rec_sum += *s.recall;
        ++a.rec_n;
      }
      if (s.f1) {
        a.f1_sum += *s.f1;
        ++a.f1_n;
      }
      a.tp += s.tp;
      a.tn += s.tn;
      a.fp += s.fp;
      a.fn += s.fn;
      if (progress) {
        *progress << row.jpeg << " acc=" << s.acc << " windows=" << det.windows
                  << " special=" << det.special_windows << "\n";
      }
    } catch (const std::exception& e) {
      // per-record failures are reported and evaluation continues
      if (progress) *progress << "record failed: " << row.jpeg << ": " << e.what() << "\n";
    }
  }
  if (cells.empty()) throw std::runtime_error("no evaluable records in " + images_csv);

  EvalReport rep;
  std::map<int, std::pair<double, int>> qf2_acc, qf2_f1;
  for (const auto& [key, a] : cells) {
    EvalCell c;
    c.qf1 = key.first;
    c.qf2 = key.second;
    c.images = a.images;
    c.acc = a.acc_sum / a.images;
    if (a.prec_n) c.precision = a.prec_sum / a.prec_n;
    if (a.rec_n) c.recall = a.rec_sum / a.rec_n;
    if (a.f1_n) c.f1 = a.f1_sum / a.f1_n;
    c.tp = a.tp;
    c.tn = a.tn;
    c.fp = a.fp;
    c.fn = a.fn;
    rep.cells.push_back(c);
    auto& qa = qf2_acc[c.qf2];
    qa.first += c.acc;
    ++qa.second;
    if (c.f1) {
      auto& qf = qf2_f1[c.qf2];
      qf.first += *c.f1;
      ++qf.second;
    }
  }
  for (const auto& [qf2, sum_n] : qf2_acc) rep.qf2_acc.emplace_back(qf2, sum_n.first / sum_n.second);
  for (const auto& [qf2, sum_n] : qf2_f1) rep.qf2_f1.emplace_back(qf2, sum_n.first / sum_n.second);
  return rep;
}

namespace {

void put_opt(std::ostream& out, const std::optional<double>& v) {
  if (v) {
    out << *v;
  } else {
    out << "nan";
  }
}

}  // namespace

void write_eval_csv(const EvalReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "qf1,qf2,acc,precision,recall,f1,tp,tn,fp,fn\n";
  for (const auto& c : report.cells) {
    out << c.qf1 << ',' << c.qf2 << ',' << c.acc << ',';
    put_opt(out, c.precision);
    out << ',';
    put_opt(out, c.recall);
    out << ',';
    put_opt(out, c.f1);
    out << ',' << c.tp << ',' << c.tn << ',' << c.fp << ',' << c.fn << '\n';
  }
}

void write_qf2_csv(const EvalReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "qf2,acc,f1\n";
  for (std::size_t i = 0; i < report.qf2_acc.size(); ++i) {
    out << report.qf2_acc[i].first << ',' << report.qf2_acc[i].second << ',';
    if (i < report.qf2_f1.size() && report.qf2_f1[i].first == report.qf2_acc[i].first) {
      out << report.qf2_f1[i].second;
    } else {
      out << "nan";
    }
    out << '\n';
  }
}

io::Gray8 map_to_pgm(const ProbabilityMap& map) {
  io::Gray8 img;
  img.width = map.width;
  img.height = map.height;
  img.pixels.resize(map.p.size());
  for (std::size_t i = 0; i < map.p.size(); ++i) {
    img.pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * map.p[i]));
  }
  return img;
}

void write_map_f32(const ProbabilityMap& map, const std::string& path) {
  io::write_f32_file(path, map.p.data(), static_cast<std::uint32_t>(map.height),
                     static_cast<std::uint32_t>(map.width));
}

}  // namespace djf::loc
