#include "djf/msd.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <sstream>

namespace fs = std::filesystem;

namespace djf::msd {

ProbPair fuse(const ProbPair& s1, const ProbPair& s2, const ProbPair& s3, double w1, double w2,
              double w3) {
  for (double w : {w1, w2, w3}) {
    if (w < 0 || w > 1) throw std::invalid_argument("fusion weights must lie in [0,1]");
  }
  if (std::abs(w1 + w2 + w3 - 1.0) > 1e-6) {
    throw std::invalid_argument("fusion weights must sum to 1");
  }
  for (const ProbPair* s : {&s1, &s2, &s3}) {
    if (std::abs((*s)[0] + (*s)[1] - 1.0) > 1e-6) {
      throw std::invalid_argument("fusion inputs must be probability pairs");
    }
  }
  return {w1 * s1[0] + w2 * s2[0] + w3 * s3[0], w1 * s1[1] + w2 * s2[1] + w3 * s3[1]};
}

WindowFeatures classify_window_features(const jpeg::CoeffImage& c, int wx, int wy) {
  if (c.width < 64 || c.height < 64) {
    throw std::invalid_argument("image smaller than the 64x64 window");
  }
  if (wx % 8 || wy % 8 || wx < 0 || wy < 0 || wx + 64 > c.width || wy + 64 > c.height) {
    throw std::invalid_argument("window must be 8-aligned and inside the image");
  }
  // co-centered larger windows, shifted inward (8-aligned) at borders;
  // images smaller than the window clamp to the full grid extent
  auto clamp_window = [](int origin, int want, int extent) {
    int size = std::min(want, extent / 8 * 8);
    int o = std::min(std::max(origin, 0), extent / 8 * 8 - size);
    return std::pair<int, int>(o, size);
  };
  int gw = c.blocks_w * 8, gh = c.blocks_h * 8;
  auto [x128, w128] = clamp_window(wx - 32, 128, gw);
  auto [y128, h128] = clamp_window(wy - 32, 128, gh);
  auto [x256, w256] = clamp_window(wx - 96, 256, gw);
  auto [y256, h256] = clamp_window(wy - 96, 256, gh);

  WindowFeatures f;
  f.h64 = features::extract_features(c, {wx, wy, 64, 64}).values;
  f.h128 = features::extract_features(c, {x128, y128, w128, h128}).values;
  f.h256 = features::extract_features(c, {x256, y256, w256, h256}).values;
  return f;
}

BlockVerdict classify_block(const MsdModel& m, std::span<const float> h64,
                            std::span<const float> h128, std::span<const float> h256,
                            bool use_routing) {
  if (m.net64.layers.empty() || m.net128.layers.empty() || m.net256.layers.empty() ||
      m.special.layers.empty()) {
    throw std::logic_error("classify_block called on an unloaded model");
  }
  ProbPair s1 = nn::predict_probs(m.net64, h64);
  ProbPair s2 = nn::predict_probs(m.net128, h128);
  ProbPair s3 = nn::predict_probs(m.net256, h256);
  ProbPair fused = fuse(s1, s2, s3, m.w1, m.w2, m.w3);

  BlockVerdict v;
  if (use_routing && std::abs(fused[0] - fused[1]) < m.threshold) {
    ProbPair c = nn::predict_probs(m.special, h64);
    v.route = Route::Special;
    v.probs = c;
    v.tampered = c[0] > c[1];
  } else {
    v.route = Route::Fused;
    v.probs = fused;
    v.tampered = fused[0] > fused[1];
  }
  return v;
}

void load_samples(const std::string& manifest_csv, std::vector<nn::Sample>& train,
                  std::vector<nn::Sample>& val) {
  std::vector<sim::ManifestRecord> records = sim::read_manifest(manifest_csv);
  fs::path fpath = manifest_csv;
  fpath.replace_extension(".bin");
  // blocks_<scale>.csv pairs with features_<scale>.bin
  std::string stem = fpath.stem().string();
  if (stem.rfind("blocks_", 0) == 0) {
    fpath = fpath.parent_path() / ("features_" + stem.substr(7) + ".bin");
  }
  std::uint32_t count = 0, dim = 0;
  std::vector<float> bank = io::read_f32_file(fpath.string(), count, dim);
  if (count != records.size() || dim != features::kFeatureDim) {
    throw std::runtime_error("feature bank " + fpath.string() + " does not match manifest " +
                             manifest_csv);
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    nn::Sample s;
    s.x.assign(bank.begin() + static_cast<std::ptrdiff_t>(i) * dim,
               bank.begin() + static_cast<std::ptrdiff_t>(i + 1) * dim);
    s.cls = records[i].label == 1 ? 0 : 1;
    for (float x : s.x) {
      if (!std::isfinite(x)) throw std::runtime_error("non-finite feature in " + fpath.string());
    }
    (records[i].split == "val" ? val : train).push_back(std::move(s));
  }
}

TrainOutcome train_msd(const TrainInputs& inputs, const nn::TrainConfig& cfg, float w1, float w2,
                       float w3, float threshold, std::ostream* log, int jobs) {
  if (std::abs(w1 + w2 + w3 - 1.0f) > 1e-6f || w1 < 0 || w2 < 0 || w3 < 0) {
    throw std::invalid_argument("fusion weights must be a simplex point");
  }
  if (threshold <= 0) throw std::invalid_argument("routing threshold must be positive");

  struct Job {
    const char* name;
    std::uint64_t stream;
    std::string manifest;
    nn::Network<float>* slot;
  };
  TrainOutcome out;
  out.model.w1 = w1;
  out.model.w2 = w2;
  out.model.w3 = w3;
  out.model.threshold = threshold;
  std::array<Job, 4> jobs_spec = {Job{"net64", 0, inputs.manifest64, &out.model.net64},
                                  Job{"net128", 1, inputs.manifest128, &out.model.net128},
                                  Job{"net256", 2, inputs.manifest256, &out.model.net256},
                                  Job{"special", 3, inputs.manifest_special, &out.model.special}};
  out.reports.resize(4);

  auto run_one = [&cfg](const Job& j, NetReport* rep) {
    std::vector<nn::Sample> train, val;
    load_samples(j.manifest, train, val);
    if (train.empty()) throw std::invalid_argument("empty training manifest: " + j.manifest);
    nn::TrainConfig c = cfg;
    c.seed = rng::derive_seed(cfg.seed, j.stream);
    *j.slot = nn::Network<float>::table2();
    rep->name = j.name;
    rep->train_n = static_cast<long>(train.size());
    rep->val_n = static_cast<long>(val.size());
    rep->history = nn::train_network(*j.slot, train, val, c);
  };

  int concurrency = std::max(1, std::min(jobs, 4));
  std::size_t next = 0;
  while (next < jobs_spec.size()) {
    std::vector<std::future<void>> batch;
    for (int k = 0; k < concurrency && next < jobs_spec.size(); ++k, ++next) {
      batch.push_back(std::async(std::launch::async, run_one, std::cref(jobs_spec[next]),
                                 &out.reports[next]));
    }
    for (auto& f : batch) f.get();
  }

  if (log) {
    *log << "net,epoch,train_loss,train_acc,val_loss,val_acc\n";
    for (const auto& rep : out.reports) {
      for (std::size_t e = 0; e < rep.history.size(); ++e) {
        const auto& st = rep.history[e];
        *log << rep.name << ',' << e + 1 << ',' << st.train_loss << ',' << st.train_acc << ','
             << st.val_loss << ',' << st.val_acc << '\n';
      }
    }
  }
  return out;
}

namespace {

constexpr char kMagic[4] = {'M', 'S', 'D', 'C'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
               static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(b, 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("truncated composite model file");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32(std::ostream& out, float v) {
  std::uint32_t u;
  std::memcpy(&u, &v, 4);
  put_u32(out, u);
}

float get_f32(std::istream& in) {
  std::uint32_t u = get_u32(in);
  float v;
  std::memcpy(&v, &u, 4);
  return v;
}

}  // namespace

void save_msd(const MsdModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write composite model: " + path);
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_f32(out, m.w1);
  put_f32(out, m.w2);
  put_f32(out, m.w3);
  put_f32(out, m.threshold);
  for (const nn::Network<float>* n : {&m.net64, &m.net128, &m.net256, &m.special}) {
    std::ostringstream payload(std::ios::binary);
    nn::save_model(*n, payload);
    std::string bytes = payload.str();
    put_u32(out, static_cast<std::uint32_t>(bytes.size()));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  if (!out) throw std::runtime_error("failed writing composite model: " + path);
}

MsdModel load_msd(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open composite model: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("bad composite model magic: " + path);
  }
  std::uint32_t version = get_u32(in);
  if (version != kVersion) {
    throw std::runtime_error("unsupported composite model version " + std::to_string(version));
  }
  MsdModel m;
  m.w1 = get_f32(in);
  m.w2 = get_f32(in);
  m.w3 = get_f32(in);
  m.threshold = get_f32(in);
  for (nn::Network<float>* n : {&m.net64, &m.net128, &m.net256, &m.special}) {
    std::uint32_t len = get_u32(in);
    std::string bytes(len, '\0');
    in.read(bytes.data(), static_cast<std::streamsize>(len));
    if (in.gcount() != static_cast<std::streamsize>(len)) {
      throw std::runtime_error("truncated embedded network payload: " + path);
    }
    std::istringstream payload(bytes, std::ios::binary);
    *n = nn::load_model(payload);
  }
  return m;
}

BlockEval evaluate_blocks(const MsdModel& m, const std::string& manifest64,
                          const std::string& split, bool use_routing) {
  std::vector<sim::ManifestRecord> records = sim::read_manifest(manifest64);
  std::map<std::string, jpeg::CoeffImage> cache;
  BlockEval ev;
  long correct = 0, routed = 0;
  for (const auto& r : records) {
    if (!split.empty() && r.split != split) continue;
    if (r.scale != 64) throw std::invalid_argument("block evaluation expects a 64-scale manifest");
    auto it = cache.find(r.path);
    if (it == cache.end()) {
      std::ifstream jf(r.path, std::ios::binary);
      if (!jf) throw std::runtime_error("cannot open " + r.path);
      std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(jf)),
                                      std::istreambuf_iterator<char>());
      it = cache.emplace(r.path, jpeg::parse_jpeg(bytes)).first;
    }
    WindowFeatures f = classify_window_features(it->second, r.x, r.y);
    BlockVerdict v = classify_block(m, f.h64, f.h128, f.h256, use_routing);
    if (v.route == Route::Special) ++routed;
    if (v.tampered == (r.label == 1)) ++correct;
    ++ev.n;
  }
  if (ev.n == 0) throw std::invalid_argument("no records selected from " + manifest64);
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(ev.n);
  ev.routed_fraction = static_cast<double>(routed) / static_cast<double>(ev.n);
  return ev;
}

}  // namespace djf::msd
