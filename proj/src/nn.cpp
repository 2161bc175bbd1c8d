#include "djf/nn.hpp"

#include <cstring>
#include <fstream>
#include <numeric>

namespace djf::nn {

std::array<double, 2> predict_probs(const Network<float>& net, std::span<const float> x) {
  Tensor<float> in(static_cast<int>(x.size()), 1);
  std::copy(x.begin(), x.end(), in.v.begin());
  Tensor<float> logits = net_forward(net, in);
  auto sm = softmax_xent(std::span<const float>(logits.v), 0);
  return {static_cast<double>(sm.probs[0]), static_cast<double>(sm.probs[1])};
}

namespace {

struct EvalAccum {
  double loss_sum = 0;
  long correct = 0, n = 0;
};

EvalAccum evaluate(const Network<float>& net, std::span<const Sample> data) {
  EvalAccum a;
  for (const Sample& s : data) {
    Tensor<float> in(static_cast<int>(s.x.size()), 1);
    std::copy(s.x.begin(), s.x.end(), in.v.begin());
    Tensor<float> logits = net_forward(net, in);
    auto sm = softmax_xent(std::span<const float>(logits.v), s.cls);
    a.loss_sum += sm.loss;
    int pred = sm.probs[0] > sm.probs[1] ? 0 : 1;
    if (pred == s.cls) ++a.correct;
    ++a.n;
  }
  return a;
}

}  // namespace

std::vector<EpochStats> train_network(Network<float>& net, std::span<const Sample> train,
                                      std::span<const Sample> val, const TrainConfig& cfg) {
  if (train.empty()) throw std::invalid_argument("empty training set");
  if (cfg.learning_rate <= 0 || cfg.batch_size < 1 || cfg.epochs < 1 || cfg.momentum < 0) {
    throw std::invalid_argument("invalid training configuration");
  }
  rng::Rng rng(cfg.seed);
  net.init_xavier(rng);

  Gradients<float> grads = Gradients<float>::zeros_like(net);
  Gradients<float> velocity = Gradients<float>::zeros_like(net);
  std::vector<int> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<EpochStats> history;
  ForwardCache<float> cache;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0;
    long correct = 0;
    std::size_t i = 0;
    while (i < order.size()) {
      std::size_t batch_n = std::min<std::size_t>(cfg.batch_size, order.size() - i);
      grads.zero();
      for (std::size_t j = 0; j < batch_n; ++j) {
        const Sample& s = train[order[i + j]];
        Tensor<float> in(static_cast<int>(s.x.size()), 1);
        std::copy(s.x.begin(), s.x.end(), in.v.begin());
        Tensor<float> logits = net_forward(net, in, &cache);
        auto sm = softmax_xent(std::span<const float>(logits.v), s.cls);
        loss_sum += sm.loss;
        if ((sm.probs[0] > sm.probs[1] ? 0 : 1) == s.cls) ++correct;
        Tensor<float> gl(2, 1);
        gl.v[0] = sm.grad[0];
        gl.v[1] = sm.grad[1];
        net_backward(net, cache, gl, grads);
      }
      grads.scale(1.0f / static_cast<float>(batch_n));
      sgd_step(net, grads, velocity, cfg.learning_rate, cfg.momentum);
      i += batch_n;
    }
    EpochStats st;
    st.train_loss = loss_sum / static_cast<double>(train.size());
    st.train_acc = static_cast<double>(correct) / static_cast<double>(train.size());
    if (!val.empty()) {
      EvalAccum a = evaluate(net, val);
      st.val_loss = a.loss_sum / static_cast<double>(a.n);
      st.val_acc = static_cast<double>(a.correct) / static_cast<double>(a.n);
    }
    history.push_back(st);
  }
  return history;
}

// --------------------------------------------------------------- checks

namespace {

double loss_of(const Network<double>& net, const Tensor<double>& x, int label) {
  Tensor<double> logits = net_forward(net, x);
  return softmax_xent(std::span<const double>(logits.v), label).loss;
}

template <typename Fn>
void for_each_param(Network<double>& net, Fn&& fn) {
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    if (auto* c = std::get_if<Conv1d<double>>(&net.layers[i])) {
      for (std::size_t k = 0; k < c->w.size(); ++k) fn(i, true, k, c->w[k]);
      for (std::size_t k = 0; k < c->b.size(); ++k) fn(i, false, k, c->b[k]);
    } else if (auto* d = std::get_if<Dense<double>>(&net.layers[i])) {
      for (std::size_t k = 0; k < d->w.size(); ++k) fn(i, true, k, d->w[k]);
      for (std::size_t k = 0; k < d->b.size(); ++k) fn(i, false, k, d->b[k]);
    }
  }
}

}  // namespace

double grad_check(const Network<float>& fnet, std::span<const float> x, int label, double eps,
                  bool corrupt_conv_backward) {
  Network<double> net = fnet.cast<double>();
  Tensor<double> in(static_cast<int>(x.size()), 1);
  for (std::size_t i = 0; i < x.size(); ++i) in.v[i] = x[i];

  ForwardCache<double> cache;
  Tensor<double> logits = net_forward(net, in, &cache);
  auto sm = softmax_xent(std::span<const double>(logits.v), label);
  Gradients<double> analytic = Gradients<double>::zeros_like(net);
  Tensor<double> gl(2, 1);
  gl.v[0] = sm.grad[0];
  gl.v[1] = sm.grad[1];
  net_backward(net, cache, gl, analytic);

  if (corrupt_conv_backward) {
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
      if (std::holds_alternative<Conv1d<double>>(net.layers[i])) {
        for (double& g : analytic.w[i]) g = -g;
        for (double& g : analytic.b[i]) g = -g;
      }
    }
  }

  double max_rel = 0;
  for_each_param(net, [&](std::size_t layer, bool is_w, std::size_t k, double& p) {
    double orig = p;
    p = orig + eps;
    double lp = loss_of(net, in, label);
    p = orig - eps;
    double lm = loss_of(net, in, label);
    p = orig;
    double numeric = (lp - lm) / (2 * eps);
    double a = is_w ? analytic.w[layer][k] : analytic.b[layer][k];
    double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
    max_rel = std::max(max_rel, std::abs(a - numeric) / denom);
  });
  return max_rel;
}

bool near_tie_points(const Network<float>& fnet, std::span<const float> x, double delta) {
  Network<double> net = fnet.cast<double>();
  Tensor<double> in(static_cast<int>(x.size()), 1);
  for (std::size_t i = 0; i < x.size(); ++i) in.v[i] = x[i];
  ForwardCache<double> cache;
  net_forward(net, in, &cache);
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    if (std::holds_alternative<Relu>(net.layers[i])) {
      for (double v : cache.acts[i].v) {
        if (std::abs(v) < delta) return true;
      }
    } else if (const auto* p = std::get_if<MaxPool1d>(&net.layers[i])) {
      const Tensor<double>& xin = cache.acts[i];
      const Tensor<double>& y = cache.acts[i + 1];
      for (int pos = 0; pos < y.len; ++pos) {
        for (int c = 0; c < xin.ch; ++c) {
          double best = y.v[static_cast<std::size_t>(pos) * xin.ch + c];
          int hits = 0;
          for (int j = 0; j < p->window; ++j) {
            double v = xin.v[static_cast<std::size_t>(pos * p->stride + j) * xin.ch + c];
            if (std::abs(v - best) < delta) ++hits;
          }
          if (hits > 1) return true;
        }
      }
    }
  }
  return false;
}

// ------------------------------------------------------------- model io

namespace {

constexpr char kMagic[4] = {'M', 'S', 'D', 'N'};
constexpr std::uint32_t kVersion = 1;
enum LayerTag : std::uint8_t { kTagConv = 1, kTagPool = 2, kTagRelu = 3, kTagDense = 4 };

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
               static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(b, 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("truncated model file");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32s(std::ostream& out, const std::vector<float>& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(sizeof(float) * v.size()));
}

void get_f32s(std::istream& in, std::vector<float>& v) {
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(sizeof(float) * v.size()));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(float) * v.size())) {
    throw std::runtime_error("truncated model parameter payload");
  }
}

}  // namespace

void save_model(const Network<float>& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write model file: " + path);
  save_model(net, out);
  if (!out) throw std::runtime_error("failed writing model file: " + path);
}

void save_model(const Network<float>& net, std::ostream& out) {
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(net.layers.size()));
  for (const auto& l : net.layers) {
    if (const auto* c = std::get_if<Conv1d<float>>(&l)) {
      out.put(kTagConv);
      put_u32(out, static_cast<std::uint32_t>(c->in_ch));
      put_u32(out, static_cast<std::uint32_t>(c->out_ch));
      put_u32(out, static_cast<std::uint32_t>(c->kernel));
      put_u32(out, static_cast<std::uint32_t>(c->stride));
    } else if (const auto* p = std::get_if<MaxPool1d>(&l)) {
      out.put(kTagPool);
      put_u32(out, static_cast<std::uint32_t>(p->window));
      put_u32(out, static_cast<std::uint32_t>(p->stride));
    } else if (std::holds_alternative<Relu>(l)) {
      out.put(kTagRelu);
    } else {
      const auto& d = std::get<Dense<float>>(l);
      out.put(kTagDense);
      put_u32(out, static_cast<std::uint32_t>(d.in_dim));
      put_u32(out, static_cast<std::uint32_t>(d.out_dim));
    }
  }
  for (const auto& l : net.layers) {
    if (const auto* c = std::get_if<Conv1d<float>>(&l)) {
      put_f32s(out, c->w);
      put_f32s(out, c->b);
    } else if (const auto* d = std::get_if<Dense<float>>(&l)) {
      put_f32s(out, d->w);
      put_f32s(out, d->b);
    }
  }
}

Network<float> load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  return load_model(in);
}

Network<float> load_model(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("bad model magic");
  std::uint32_t version = get_u32(in);
  if (version != kVersion) {
    throw std::runtime_error("unsupported model version " + std::to_string(version));
  }
  std::uint32_t nlayers = get_u32(in);
  if (nlayers > 1024) throw std::runtime_error("implausible model layer count");
  Network<float> net;
  for (std::uint32_t i = 0; i < nlayers; ++i) {
    int tag = in.get();
    if (tag == EOF) throw std::runtime_error("truncated model file");
    switch (tag) {
      case kTagConv: {
        std::uint32_t in_ch = get_u32(in), out_ch = get_u32(in), kernel = get_u32(in),
                      stride = get_u32(in);
        if (in_ch < 1 || out_ch < 1 || kernel < 1 || stride < 1 || in_ch > 1u << 16 ||
            out_ch > 1u << 16 || kernel > 1u << 10) {
          throw std::runtime_error("invalid conv layer header");
        }
        net.layers.emplace_back(Conv1d<float>(static_cast<int>(in_ch), static_cast<int>(out_ch),
                                              static_cast<int>(kernel), static_cast<int>(stride)));
        break;
      }
      case kTagPool: {
        MaxPool1d p;
        p.window = static_cast<int>(get_u32(in));
        p.stride = static_cast<int>(get_u32(in));
        if (p.window < 1 || p.stride < 1) throw std::runtime_error("invalid pool layer header");
        net.layers.emplace_back(p);
        break;
      }
      case kTagRelu:
        net.layers.emplace_back(Relu{});
        break;
      case kTagDense: {
        std::uint32_t in_d = get_u32(in), out_d = get_u32(in);
        if (in_d < 1 || out_d < 1 || in_d > 1u << 24 || out_d > 1u << 24) {
          throw std::runtime_error("invalid dense layer header");
        }
        net.layers.emplace_back(Dense<float>(static_cast<int>(in_d), static_cast<int>(out_d)));
        break;
      }
      default:
        throw std::runtime_error("unknown layer tag " + std::to_string(tag));
    }
  }
  for (auto& l : net.layers) {
    if (auto* c = std::get_if<Conv1d<float>>(&l)) {
      get_f32s(in, c->w);
      get_f32s(in, c->b);
    } else if (auto* d = std::get_if<Dense<float>>(&l)) {
      get_f32s(in, d->w);
      get_f32s(in, d->b);
    }
  }
  return net;
}

}  // namespace djf::nn
