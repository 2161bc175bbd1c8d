#include "djf/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "djf/rng.hpp"

namespace fs = std::filesystem;

namespace djf::sim {

std::vector<RawImage> synthesize_corpus(int count, int width, int height, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("corpus size must be >= 1");
  if (width < 64 || height < 64 || width % 8 || height % 8) {
    throw std::invalid_argument("corpus dimensions must be >= 64 and multiples of 8");
  }
  std::vector<RawImage> corpus;
  corpus.reserve(count);
  for (int n = 0; n < count; ++n) {
    rng::Rng rng(rng::derive_seed(seed, static_cast<std::uint64_t>(n)));
    std::vector<double> acc(static_cast<std::size_t>(width) * height, 0.0);

    // oriented gradient base
    double ang = rng.uniform(0, 2 * M_PI);
    double amp = rng.uniform(20, 60);
    double cx = std::cos(ang), sy = std::sin(ang);
    double norm = std::max(width, height);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        acc[static_cast<std::size_t>(y) * width + x] =
            128.0 + amp * ((cx * x + sy * y) / norm - 0.5);
      }
    }
    // low-frequency cosines
    int waves = rng.range(2, 4);
    for (int i = 0; i < waves; ++i) {
      double fx = rng.uniform(0.5, 3.0), fy = rng.uniform(0.5, 3.0);
      double p0 = rng.uniform(0, 2 * M_PI), p1 = rng.uniform(0, 2 * M_PI);
      double a = rng.uniform(5, 20);
      for (int y = 0; y < height; ++y) {
        double wy = std::cos(2 * M_PI * fy * y / height + p1);
        for (int x = 0; x < width; ++x) {
          acc[static_cast<std::size_t>(y) * width + x] +=
              a * std::cos(2 * M_PI * fx * x / width + p0) * wy;
        }
      }
    }
    // soft random shapes (ellipses)
    int shapes = rng.range(3, 8);
    for (int i = 0; i < shapes; ++i) {
      double ex = rng.uniform(0, width), ey = rng.uniform(0, height);
      double rx = rng.uniform(20, 120), ry = rng.uniform(20, 120);
      double a = rng.uniform(-40, 40);
      int x0 = std::max(0, static_cast<int>(ex - rx)), x1 = std::min(width, static_cast<int>(ex + rx) + 1);
      int y0 = std::max(0, static_cast<int>(ey - ry)), y1 = std::min(height, static_cast<int>(ey + ry) + 1);
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          double d = ((x - ex) / rx) * ((x - ex) / rx) + ((y - ey) / ry) * ((y - ey) / ry);
          if (d < 1.0) acc[static_cast<std::size_t>(y) * width + x] += a;
        }
      }
    }
    // band-limited noise: coarse 4x4 cells plus box-blurred fine grain
    int cw = width / 4 + 1, chh = height / 4 + 1;
    std::vector<double> coarse(static_cast<std::size_t>(cw) * chh);
    for (double& v : coarse) v = rng.normal(0, 6.0);
    std::vector<double> fine(static_cast<std::size_t>(width) * height);
    for (double& v : fine) v = rng.normal(0, 5.0);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        double s = 0;
        int cnt = 0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            int yy = y + dy, xx = x + dx;
            if (yy < 0 || yy >= height || xx < 0 || xx >= width) continue;
            s += fine[static_cast<std::size_t>(yy) * width + xx];
            ++cnt;
          }
        }
        acc[static_cast<std::size_t>(y) * width + x] +=
            coarse[static_cast<std::size_t>(y / 4) * cw + x / 4] + s / cnt;
      }
    }

    RawImage img;
    img.width = width;
    img.height = height;
    img.pixels.resize(acc.size());
    for (std::size_t i = 0; i < acc.size(); ++i) {
      double v = std::floor(acc[i] + 0.5);
      img.pixels[i] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
    }
    corpus.push_back(std::move(img));
  }
  return corpus;
}

std::vector<RawImage> load_corpus_dir(const std::string& dir) {
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".pgm") {
      names.push_back(e.path().string());
    }
  }
  std::sort(names.begin(), names.end());
  if (names.empty()) throw std::runtime_error("no PGM files found in corpus dir: " + dir);
  std::vector<RawImage> corpus;
  corpus.reserve(names.size());
  for (const auto& n : names) corpus.push_back(io::read_pgm(n));
  return corpus;
}

void write_manifest(const std::string& path, const std::vector<ManifestRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  out << "path,label,qf1,qf2,scale,x,y,split\n";
  for (const auto& r : records) {
    out << r.path << ',' << r.label << ',' << r.qf1 << ',' << r.qf2 << ',' << r.scale << ','
        << r.x << ',' << r.y << ',' << r.split << '\n';
  }
  if (!out) throw std::runtime_error("failed writing manifest: " + path);
}

std::vector<ManifestRecord> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty manifest: " + path);
  std::vector<ManifestRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    ManifestRecord r;
    std::string tok;
    auto next = [&](const char* field) {
      if (!std::getline(ss, tok, ',')) {
        throw std::runtime_error("manifest " + path + ": missing field " + field);
      }
      return tok;
    };
    r.path = next("path");
    r.label = std::stoi(next("label"));
    r.qf1 = std::stoi(next("qf1"));
    r.qf2 = std::stoi(next("qf2"));
    r.scale = std::stoi(next("scale"));
    r.x = std::stoi(next("x"));
    r.y = std::stoi(next("y"));
    r.split = next("split");
    records.push_back(std::move(r));
  }
  return records;
}

namespace {

struct TamperedInstance {
  std::string jpeg_path, mask_path;
  int image_index, qf1, qf2;
  jpeg::CoeffImage coeffs;
  int half_x;  // left-half boundary in pixels
};

std::string two_digit(int v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%02d", v);
  return buf;
}

std::vector<TamperedInstance> generate_tampered(const std::vector<RawImage>& corpus,
                                                const std::vector<std::pair<int, int>>& qf_pairs,
                                                const std::string& out_dir) {
  if (corpus.empty()) throw std::invalid_argument("empty corpus");
  if (qf_pairs.empty()) throw std::invalid_argument("empty quality-factor grid");
  fs::create_directories(fs::path(out_dir) / "images");
  std::vector<TamperedInstance> out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const RawImage& img = corpus[i];
    if (img.width % 8 || img.height % 8 || img.width < 128 || img.height < 64) {
      throw std::invalid_argument("corpus images must be multiple-of-8 sized, at least 128x64");
    }
    int half = (img.width / 2) / 8 * 8;
    for (auto [qf1, qf2] : qf_pairs) {
      TamperSpec spec;
      spec.qf1 = qf1;
      spec.qf2 = qf2;
      spec.rx = 0;
      spec.ry = 0;
      spec.rw = half;
      spec.rh = img.height;
      TamperResult res = tamper_and_recompress(img, spec);

      char name[64];
      std::snprintf(name, sizeof(name), "im%04zu_q%s_%s", i, two_digit(qf1).c_str(),
                    two_digit(qf2).c_str());
      TamperedInstance inst;
      inst.jpeg_path = (fs::path(out_dir) / "images" / (std::string(name) + ".jpg")).string();
      inst.mask_path = (fs::path(out_dir) / "images" / (std::string(name) + "_mask.pgm")).string();
      inst.image_index = static_cast<int>(i);
      inst.qf1 = qf1;
      inst.qf2 = qf2;
      inst.half_x = half;
      {
        std::ofstream jf(inst.jpeg_path, std::ios::binary);
        if (!jf) throw std::runtime_error("cannot write " + inst.jpeg_path);
        jf.write(reinterpret_cast<const char*>(res.jpeg.data()),
                 static_cast<std::streamsize>(res.jpeg.size()));
        if (!jf) throw std::runtime_error("failed writing " + inst.jpeg_path);
      }
      io::write_pgm(inst.mask_path, res.mask);
      inst.coeffs = jpeg::parse_jpeg(res.jpeg);
      out.push_back(std::move(inst));
    }
  }
  return out;
}

void write_images_csv(const std::string& path, const std::vector<TamperedInstance>& set) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "jpeg,mask,qf1,qf2\n";
  for (const auto& t : set) {
    out << t.jpeg_path << ',' << t.mask_path << ',' << t.qf1 << ',' << t.qf2 << '\n';
  }
}

struct LabeledBlock {
  int x, y, label;
};

// Non-overlapping scale x scale blocks; label 1 iff wholly inside the
// left-half mask, 0 iff wholly outside; straddling blocks dropped. Balanced
// by trimming the larger side in scan order.
std::vector<LabeledBlock> balanced_blocks(const TamperedInstance& t, int scale, int img_w,
                                          int img_h) {
  std::vector<LabeledBlock> pos, neg;
  for (int y = 0; y + scale <= img_h; y += scale) {
    for (int x = 0; x + scale <= img_w; x += scale) {
      if (x + scale <= t.half_x) {
        pos.push_back({x, y, 1});
      } else if (x >= t.half_x) {
        neg.push_back({x, y, 0});
      }
    }
  }
  std::size_t k = std::min(pos.size(), neg.size());
  pos.resize(k);
  neg.resize(k);
  std::vector<LabeledBlock> out = std::move(pos);
  out.insert(out.end(), neg.begin(), neg.end());
  return out;
}

// Stratified 80/20 assignment, deterministic in (seed, scale).
void assign_splits(std::vector<ManifestRecord>& records, std::uint64_t seed, int scale) {
  std::vector<std::size_t> pos_idx, neg_idx;
  for (std::size_t i = 0; i < records.size(); ++i) {
    (records[i].label == 1 ? pos_idx : neg_idx).push_back(i);
  }
  rng::Rng rng(rng::derive_seed(seed, 1000 + static_cast<std::uint64_t>(scale)));
  for (auto* idx : {&pos_idx, &neg_idx}) {
    rng.shuffle(*idx);
    std::size_t n_val = idx->size() / 5;
    for (std::size_t i = 0; i < idx->size(); ++i) {
      records[(*idx)[i]].split = i < n_val ? "val" : "train";
    }
  }
}

void write_feature_bank(const std::string& path, const std::vector<features::FeatureVector>& vecs) {
  std::vector<float> flat;
  flat.reserve(vecs.size() * features::kFeatureDim);
  for (const auto& v : vecs) {
    if (v.dim() != features::kFeatureDim) throw std::runtime_error("unexpected feature dimension");
    flat.insert(flat.end(), v.values.begin(), v.values.end());
  }
  io::write_f32_file(path, flat.data(), static_cast<std::uint32_t>(vecs.size()),
                     features::kFeatureDim);
}

}  // namespace

DatasetPaths make_synthetic_dataset(const std::vector<RawImage>& corpus,
                                    const std::vector<std::pair<int, int>>& qf_pairs,
                                    const std::vector<int>& scales, const std::string& out_dir,
                                    std::uint64_t seed) {
  if (scales.empty()) throw std::invalid_argument("no block scales requested");
  for (int s : scales) {
    if (s % 8 || s < 8) throw std::invalid_argument("block scales must be positive multiples of 8");
  }
  fs::create_directories(out_dir);
  std::vector<TamperedInstance> set = generate_tampered(corpus, qf_pairs, out_dir);

  DatasetPaths paths;
  paths.images = static_cast<long>(set.size());
  paths.images_csv = (fs::path(out_dir) / "images.csv").string();
  write_images_csv(paths.images_csv, set);

  for (int scale : scales) {
    std::vector<ManifestRecord> records;
    std::vector<features::FeatureVector> vecs;
    for (const auto& t : set) {
      const jpeg::CoeffImage& c = t.coeffs;
      for (const LabeledBlock& b : balanced_blocks(t, scale, c.width, c.height)) {
        records.push_back({t.jpeg_path, b.label, t.qf1, t.qf2, scale, b.x, b.y, "train"});
        vecs.push_back(features::extract_features(c, {b.x, b.y, scale, scale}));
      }
    }
    assign_splits(records, seed, scale);
    std::string mpath = (fs::path(out_dir) / ("blocks_" + std::to_string(scale) + ".csv")).string();
    std::string fpath =
        (fs::path(out_dir) / ("features_" + std::to_string(scale) + ".bin")).string();
    write_manifest(mpath, records);
    write_feature_bank(fpath, vecs);
    paths.block_manifests[scale] = mpath;
    paths.feature_files[scale] = fpath;
    paths.samples_per_scale[scale] = static_cast<long>(records.size());
  }
  return paths;
}

DatasetPaths make_special_dataset(const std::vector<RawImage>& corpus,
                                  const std::vector<std::pair<int, int>>& qf_pairs,
                                  const std::string& out_dir, std::uint64_t seed) {
  bool any_down = std::any_of(qf_pairs.begin(), qf_pairs.end(),
                              [](const auto& p) { return p.first > p.second; });
  if (!any_down) {
    throw std::invalid_argument("special dataset needs at least one pair with qf1 > qf2");
  }
  fs::create_directories(out_dir);
  std::vector<TamperedInstance> set = generate_tampered(corpus, qf_pairs, out_dir);

  constexpr int kScale = 64;
  std::vector<ManifestRecord> pos, neg;
  std::vector<features::FeatureVector> pos_f, neg_f;
  for (const auto& t : set) {
    const jpeg::CoeffImage& c = t.coeffs;
    for (const LabeledBlock& b : balanced_blocks(t, kScale, c.width, c.height)) {
      if (b.label == 1 && t.qf1 <= t.qf2) continue;  // positives only from down-recompression
      auto& recs = b.label == 1 ? pos : neg;
      auto& feats = b.label == 1 ? pos_f : neg_f;
      recs.push_back({t.jpeg_path, b.label, t.qf1, t.qf2, kScale, b.x, b.y, "train"});
      feats.push_back(features::extract_features(c, {b.x, b.y, kScale, kScale}));
    }
  }
  // negatives come from the full grid; subsample both sides to equal counts
  rng::Rng rng(rng::derive_seed(seed, 2000));
  std::size_t k = std::min(pos.size(), neg.size());
  std::vector<std::size_t> order(neg.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  order.resize(k);
  std::sort(order.begin(), order.end());

  std::vector<ManifestRecord> records(pos.begin(), pos.begin() + k);
  std::vector<features::FeatureVector> vecs(pos_f.begin(), pos_f.begin() + k);
  for (std::size_t i : order) {
    records.push_back(neg[i]);
    vecs.push_back(neg_f[i]);
  }
  assign_splits(records, seed, 0);

  DatasetPaths paths;
  paths.images = static_cast<long>(set.size());
  paths.images_csv = (fs::path(out_dir) / "images.csv").string();
  write_images_csv(paths.images_csv, set);
  paths.special_manifest = (fs::path(out_dir) / "special_64.csv").string();
  paths.special_features = (fs::path(out_dir) / "special_64.bin").string();
  write_manifest(paths.special_manifest, records);
  write_feature_bank(paths.special_features, vecs);
  paths.special_samples = static_cast<long>(records.size());
  return paths;
}

std::vector<int> parse_qf_list(const std::string& csv) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stoi(tok));
  }
  for (int q : out) {
    if (q < 1 || q > 100) throw std::invalid_argument("quality factor out of [1,100]: " + csv);
  }
  return out;
}

std::vector<std::pair<int, int>> cross_pairs(const std::vector<int>& qfs) {
  std::vector<std::pair<int, int>> pairs;
  for (int a : qfs) {
    for (int b : qfs) pairs.emplace_back(a, b);
  }
  return pairs;
}

std::vector<std::pair<int, int>> parse_qf_pairs(const std::string& csv) {
  std::vector<std::pair<int, int>> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    auto colon = tok.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("expected qf1:qf2 pair, got " + tok);
    int a = std::stoi(tok.substr(0, colon));
    int b = std::stoi(tok.substr(colon + 1));
    if (a < 1 || a > 100 || b < 1 || b > 100) {
      throw std::invalid_argument("quality factor out of [1,100]: " + tok);
    }
    out.emplace_back(a, b);
  }
  return out;
}

}  // namespace djf::sim
