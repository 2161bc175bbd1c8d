// djf: double-JPEG tamper forensics pipeline.
//   gen    - build a spliced dataset (corpus dir or procedural corpus)
//   train  - train the four networks and write a composite model
//   detect - probability map + masks for one JPEG
//   eval   - per-(QF1,QF2) accuracy/F1 table over a dataset

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "djf/dataset.hpp"
#include "djf/localization.hpp"
#include "djf/msd.hpp"

namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> read_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct GenArgs {
  std::string corpus_dir, out_dir;
  std::string qf_grid = "50,55,60,65,70,75,80,85,90,95";
  std::string qf_pairs;
  std::vector<int> scales{64, 128, 256};
  bool special = false;
  int synthesize = 0;
  int width = 512, height = 384;
  std::uint64_t seed = 1;
};

int cmd_gen(const GenArgs& a) {
  std::vector<std::pair<int, int>> pairs;
  if (!a.qf_pairs.empty()) {
    pairs = djf::sim::parse_qf_pairs(a.qf_pairs);
  } else {
    pairs = djf::sim::cross_pairs(djf::sim::parse_qf_list(a.qf_grid));
  }
  std::cout << "gen: out=" << a.out_dir << " pairs=" << pairs.size()
            << " scales=";
  for (std::size_t i = 0; i < a.scales.size(); ++i) {
    std::cout << (i ? "," : "") << a.scales[i];
  }
  std::cout << " special=" << (a.special ? "yes" : "no") << " seed=" << a.seed << "\n";

  std::vector<djf::sim::RawImage> corpus;
  if (a.synthesize > 0) {
    std::cout << "gen: synthesizing " << a.synthesize << " images " << a.width << "x" << a.height
              << "\n";
    corpus = djf::sim::synthesize_corpus(a.synthesize, a.width, a.height, a.seed);
    fs::create_directories(fs::path(a.out_dir) / "corpus");
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof(name), "im%04zu.pgm", i);
      djf::io::write_pgm((fs::path(a.out_dir) / "corpus" / name).string(), corpus[i]);
    }
  } else if (!a.corpus_dir.empty()) {
    corpus = djf::sim::load_corpus_dir(a.corpus_dir);
    std::cout << "gen: loaded " << corpus.size() << " images from " << a.corpus_dir << "\n";
  } else {
    throw std::invalid_argument("gen needs --corpus DIR or --synthesize N");
  }

  djf::sim::DatasetPaths paths =
      djf::sim::make_synthetic_dataset(corpus, pairs, a.scales, a.out_dir, a.seed);
  std::cout << "gen: wrote " << paths.images << " tampered images\n";
  for (const auto& [scale, n] : paths.samples_per_scale) {
    std::cout << "gen: scale " << scale << ": " << n << " block samples -> "
              << paths.block_manifests.at(scale) << "\n";
  }
  if (a.special) {
    djf::sim::DatasetPaths sp = djf::sim::make_special_dataset(corpus, pairs, a.out_dir, a.seed);
    std::cout << "gen: special: " << sp.special_samples << " block samples -> "
              << sp.special_manifest << "\n";
  }
  return 0;
}

struct TrainArgs {
  std::string m64, m128, m256, special, out_model, log_path;
  float lr = 0.0005f;
  int batch = 200;
  float momentum = 0.9f;
  int epochs = 20;
  std::uint64_t seed = 1;
  float t = 0.2f;
  std::string weights = "0.8,0.1,0.1";
};

int cmd_train(const TrainArgs& a) {
  for (const auto& m : {a.m64, a.m128, a.m256, a.special}) {
    if (!fs::exists(m)) throw std::runtime_error("missing manifest: " + m);
  }
  std::vector<float> wf;
  {
    std::stringstream ss(a.weights);
    std::string tok;
    while (std::getline(ss, tok, ',')) wf.push_back(std::stof(tok));
  }
  if (wf.size() != 3) throw std::invalid_argument("--weights expects w1,w2,w3");
  std::cout << "train: lr=" << a.lr << " batch=" << a.batch << " momentum=" << a.momentum
            << " epochs=" << a.epochs << " seed=" << a.seed << " t=" << a.t << " weights=" << wf[0]
            << "," << wf[1] << "," << wf[2] << "\n";

  djf::nn::TrainConfig cfg;
  cfg.learning_rate = a.lr;
  cfg.batch_size = a.batch;
  cfg.momentum = a.momentum;
  cfg.epochs = a.epochs;
  cfg.seed = a.seed;

  std::string log_path = a.log_path.empty() ? a.out_model + ".train.csv" : a.log_path;
  std::ofstream log(log_path);
  if (!log) throw std::runtime_error("cannot write training log: " + log_path);

  int jobs = std::min(4, djf::loc::worker_threads(0));
  djf::msd::TrainInputs inputs{a.m64, a.m128, a.m256, a.special};
  djf::msd::TrainOutcome outcome =
      djf::msd::train_msd(inputs, cfg, wf[0], wf[1], wf[2], a.t, &log, jobs);
  for (const auto& rep : outcome.reports) {
    const auto& last = rep.history.back();
    std::cout << "train: " << rep.name << " train_n=" << rep.train_n << " val_n=" << rep.val_n
              << " final val_acc=" << last.val_acc << "\n";
  }
  djf::msd::save_msd(outcome.model, a.out_model);
  std::cout << "train: model -> " << a.out_model << "\n";
  std::cout << "train: log -> " << log_path << "\n";
  return 0;
}

struct DetectArgs {
  std::string model, image, out_prefix;
  double threshold = 0.5;
};

int cmd_detect(const DetectArgs& a) {
  std::cout << "detect: model=" << a.model << " image=" << a.image
            << " threshold=" << a.threshold << "\n";
  djf::msd::MsdModel model = djf::msd::load_msd(a.model);
  djf::loc::DetectResult det = djf::loc::detect(model, read_binary(a.image));

  djf::io::write_pgm(a.out_prefix + "_map.pgm", djf::loc::map_to_pgm(det.map));
  djf::loc::write_map_f32(det.map, a.out_prefix + "_map.f32");
  std::vector<std::uint8_t> mask = djf::loc::binarize(det.map, a.threshold);
  djf::io::Gray8 mask_img{det.map.width, det.map.height, {}};
  mask_img.pixels.resize(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask_img.pixels[i] = mask[i] ? 255 : 0;
  djf::io::write_pgm(a.out_prefix + "_mask.pgm", mask_img);
  djf::io::Gray8 route_img{det.map.width, det.map.height, det.route};
  djf::io::write_pgm(a.out_prefix + "_route.pgm", route_img);

  double mean = 0;
  for (float v : det.map.p) mean += v;
  mean /= static_cast<double>(det.map.p.size());
  std::cout << "detect: windows=" << det.windows << " special_fraction="
            << static_cast<double>(det.special_windows) / static_cast<double>(det.windows)
            << " map_mean=" << mean << "\n";
  std::cout << "detect: artifacts -> " << a.out_prefix << "_{map.pgm,map.f32,mask.pgm,route.pgm}\n";
  return 0;
}

struct EvalArgs {
  std::string model, manifest, out_csv;
};

int cmd_eval(const EvalArgs& a) {
  std::cout << "eval: model=" << a.model << " manifest=" << a.manifest << "\n";
  djf::msd::MsdModel model = djf::msd::load_msd(a.model);
  djf::loc::EvalReport rep = djf::loc::evaluate_grid(model, a.manifest, 0, &std::cout);
  djf::loc::write_eval_csv(rep, a.out_csv);
  std::string qf2_csv = fs::path(a.out_csv).replace_extension().string() + "_qf2.csv";
  djf::loc::write_qf2_csv(rep, qf2_csv);
  std::cout << "eval: cells=" << rep.cells.size() << " -> " << a.out_csv << ", " << qf2_csv
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Double-JPEG compression tamper forensics"};
  app.require_subcommand(1);

  GenArgs ga;
  CLI::App* gen = app.add_subcommand("gen", "generate a spliced block dataset");
  gen->add_option("--corpus", ga.corpus_dir, "directory of raw PGM (P5) images");
  gen->add_option("--synthesize", ga.synthesize, "procedurally generate N corpus images");
  gen->add_option("--out", ga.out_dir, "output directory")->required();
  gen->add_option("--qf-grid", ga.qf_grid, "QF values; pairs = full cross product");
  gen->add_option("--qf-pairs", ga.qf_pairs, "explicit qf1:qf2 pairs (overrides --qf-grid)");
  gen->add_option("--scales", ga.scales, "block scales");
  gen->add_flag("--special", ga.special, "also write the QF1>QF2 special dataset");
  gen->add_option("--seed", ga.seed, "random seed");
  gen->add_option("--width", ga.width, "synthesized image width");
  gen->add_option("--height", ga.height, "synthesized image height");

  TrainArgs ta;
  CLI::App* train = app.add_subcommand("train", "train the four networks");
  train->add_option("--m64", ta.m64, "64-scale block manifest")->required();
  train->add_option("--m128", ta.m128, "128-scale block manifest")->required();
  train->add_option("--m256", ta.m256, "256-scale block manifest")->required();
  train->add_option("--special", ta.special, "special (QF1>QF2) manifest")->required();
  train->add_option("--out", ta.out_model, "output composite model path")->required();
  train->add_option("--log", ta.log_path, "per-epoch CSV log (default <model>.train.csv)");
  train->add_option("--lr", ta.lr, "learning rate");
  train->add_option("--batch", ta.batch, "batch size");
  train->add_option("--momentum", ta.momentum, "SGD momentum");
  train->add_option("--epochs", ta.epochs, "training epochs");
  train->add_option("--seed", ta.seed, "random seed");
  train->add_option("--t", ta.t, "discriminative routing threshold");
  train->add_option("--weights", ta.weights, "fusion weights w1,w2,w3");

  DetectArgs da;
  CLI::App* detect = app.add_subcommand("detect", "localize tampering in one JPEG");
  detect->add_option("--model", da.model, "composite model file")->required();
  detect->add_option("--image", da.image, "input JPEG")->required();
  detect->add_option("--out", da.out_prefix, "output path prefix")->required();
  detect->add_option("--threshold", da.threshold, "binarization threshold");

  EvalArgs ea;
  CLI::App* eval = app.add_subcommand("eval", "score a dataset per (QF1,QF2) cell");
  eval->add_option("--model", ea.model, "composite model file")->required();
  eval->add_option("--manifest", ea.manifest, "images.csv from gen")->required();
  eval->add_option("--out", ea.out_csv, "output CSV path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen(ga);
    if (train->parsed()) return cmd_train(ta);
    if (detect->parsed()) return cmd_detect(da);
    if (eval->parsed()) return cmd_eval(ea);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
