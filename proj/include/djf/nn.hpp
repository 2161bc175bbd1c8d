#pragma once

// Minimal 1D CNN engine: valid convolutions, max pooling, dense layers, ReLU
// and a 2-class softmax head, with hand-rolled backprop and SGD+momentum.
// Layer math is templated on the scalar so the gradient checker can run the
// same code in double precision; production networks use float.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "djf/rng.hpp"

namespace djf::nn {

template <typename T>
struct Tensor {
  int len = 0, ch = 1;
  std::vector<T> v;  // index (pos, c) -> pos * ch + c

  Tensor() = default;
  Tensor(int len_, int ch_) : len(len_), ch(ch_), v(static_cast<std::size_t>(len_) * ch_, T(0)) {}

  T* row(int pos) { return v.data() + static_cast<std::size_t>(pos) * ch; }
  const T* row(int pos) const { return v.data() + static_cast<std::size_t>(pos) * ch; }
};

template <typename T>
void require_finite(const Tensor<T>& t, const char* where) {
  for (T x : t.v) {
    if (!std::isfinite(static_cast<double>(x))) {
      throw std::runtime_error(std::string("non-finite value in tensor at ") + where);
    }
  }
}

// ---------------------------------------------------------------- kernels

// Dot product with eight independent accumulators; the lane structure is
// fixed in source so results do not depend on compiler reassociation.
template <typename T>
inline T dot_n(const T* a, const T* b, int n) {
  T s[8] = {T(0), T(0), T(0), T(0), T(0), T(0), T(0), T(0)};
  int i = 0;
  for (; i + 8 <= n; i += 8) {
    s[0] += a[i] * b[i];
    s[1] += a[i + 1] * b[i + 1];
    s[2] += a[i + 2] * b[i + 2];
    s[3] += a[i + 3] * b[i + 3];
    s[4] += a[i + 4] * b[i + 4];
    s[5] += a[i + 5] * b[i + 5];
    s[6] += a[i + 6] * b[i + 6];
    s[7] += a[i + 7] * b[i + 7];
  }
  T r = ((s[0] + s[1]) + (s[2] + s[3])) + ((s[4] + s[5]) + (s[6] + s[7]));
  for (; i < n; ++i) r += a[i] * b[i];
  return r;
}

template <typename T>
inline void axpy_n(T* y, T alpha, const T* x, int n) {
  for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

// ----------------------------------------------------------------- layers

template <typename T>
struct Conv1d {
  int in_ch = 1, out_ch = 1, kernel = 3, stride = 1;
  std::vector<T> w;  // [out_ch][kernel][in_ch]
  std::vector<T> b;  // [out_ch]

  Conv1d() = default;
  Conv1d(int in_c, int out_c, int k, int s = 1)
      : in_ch(in_c), out_ch(out_c), kernel(k), stride(s),
        w(static_cast<std::size_t>(out_c) * k * in_c, T(0)), b(out_c, T(0)) {}

  int out_len(int in_len) const { return (in_len - kernel) / stride + 1; }
};

template <typename T>
struct Dense {
  int in_dim = 0, out_dim = 0;
  std::vector<T> w;  // [out_dim][in_dim]
  std::vector<T> b;  // [out_dim]

  Dense() = default;
  Dense(int in_d, int out_d)
      : in_dim(in_d), out_dim(out_d), w(static_cast<std::size_t>(out_d) * in_d, T(0)),
        b(out_d, T(0)) {}
};

struct MaxPool1d {
  int window = 3, stride = 2;
  int out_len(int in_len) const { return (in_len - window) / stride + 1; }  // floor
};

struct Relu {};

template <typename T>
using Layer = std::variant<Conv1d<T>, MaxPool1d, Relu, Dense<T>>;

// ---------------------------------------------------------------- network

template <typename T>
struct Network {
  std::vector<Layer<T>> layers;

  // Table II: 279 -> 277x100 -> 138x100 -> 136x100 -> 67x100 -> 1000 -> 1000 -> 2
  static Network table2() { return with_dims(100, 1000); }

  // Reduced instance with the same topology, for gradient checking.
  static Network with_dims(int maps, int dense_units, int in_len = 279) {
    Network n;
    Conv1d<T> c1(1, maps, 3, 1);
    MaxPool1d p1;
    Conv1d<T> c2(maps, maps, 3, 1);
    MaxPool1d p2;
    int l = p2.out_len(c2.out_len(p1.out_len(c1.out_len(in_len))));
    n.layers = {c1, p1, c2, p2, Dense<T>(l * maps, dense_units), Relu{},
                Dense<T>(dense_units, dense_units), Relu{}, Dense<T>(dense_units, 2)};
    return n;
  }

  void init_xavier(rng::Rng& rng) {
    for (auto& l : layers) {
      if (auto* c = std::get_if<Conv1d<T>>(&l)) {
        int fan_in = c->in_ch * c->kernel, fan_out = c->out_ch * c->kernel;
        double a = std::sqrt(6.0 / (fan_in + fan_out));
        for (auto& x : c->w) x = static_cast<T>(rng.uniform(-a, a));
        for (auto& x : c->b) x = T(0);
      } else if (auto* d = std::get_if<Dense<T>>(&l)) {
        double a = std::sqrt(6.0 / (d->in_dim + d->out_dim));
        for (auto& x : d->w) x = static_cast<T>(rng.uniform(-a, a));
        for (auto& x : d->b) x = T(0);
      }
    }
  }

  // (len, ch) after the input and after every layer.
  std::vector<std::pair<int, int>> shape_chain(int in_len, int in_ch = 1) const {
    std::vector<std::pair<int, int>> shapes{{in_len, in_ch}};
    int len = in_len, ch = in_ch;
    for (const auto& l : layers) {
      if (const auto* c = std::get_if<Conv1d<T>>(&l)) {
        if (ch != c->in_ch) throw std::invalid_argument("conv input channel mismatch");
        if (len < c->kernel) throw std::invalid_argument("conv input shorter than kernel");
        len = c->out_len(len);
        ch = c->out_ch;
      } else if (const auto* p = std::get_if<MaxPool1d>(&l)) {
        if (len < p->window) throw std::invalid_argument("pool input shorter than window");
        len = p->out_len(len);
      } else if (std::holds_alternative<Dense<T>>(l)) {
        const auto& d = std::get<Dense<T>>(l);
        if (len * ch != d.in_dim) throw std::invalid_argument("dense input size mismatch");
        len = d.out_dim;
        ch = 1;
      }
      shapes.emplace_back(len, ch);
    }
    return shapes;
  }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) {
      if (const auto* c = std::get_if<Conv1d<T>>(&l)) n += c->w.size() + c->b.size();
      if (const auto* d = std::get_if<Dense<T>>(&l)) n += d->w.size() + d->b.size();
    }
    return n;
  }

  template <typename U>
  Network<U> cast() const {
    Network<U> out;
    for (const auto& l : layers) {
      if (const auto* c = std::get_if<Conv1d<T>>(&l)) {
        Conv1d<U> cc(c->in_ch, c->out_ch, c->kernel, c->stride);
        for (std::size_t i = 0; i < c->w.size(); ++i) cc.w[i] = static_cast<U>(c->w[i]);
        for (std::size_t i = 0; i < c->b.size(); ++i) cc.b[i] = static_cast<U>(c->b[i]);
        out.layers.emplace_back(std::move(cc));
      } else if (const auto* p = std::get_if<MaxPool1d>(&l)) {
        out.layers.emplace_back(*p);
      } else if (std::holds_alternative<Relu>(l)) {
        out.layers.emplace_back(Relu{});
      } else {
        const auto& d = std::get<Dense<T>>(l);
        Dense<U> dd(d.in_dim, d.out_dim);
        for (std::size_t i = 0; i < d.w.size(); ++i) dd.w[i] = static_cast<U>(d.w[i]);
        for (std::size_t i = 0; i < d.b.size(); ++i) dd.b[i] = static_cast<U>(d.b[i]);
        out.layers.emplace_back(std::move(dd));
      }
    }
    return out;
  }
};

// ------------------------------------------------------- forward/backward

template <typename T>
Tensor<T> conv1d_forward(const Tensor<T>& x, const Conv1d<T>& l) {
  if (x.ch != l.in_ch) throw std::invalid_argument("conv input channel mismatch");
  if (x.len < l.kernel) throw std::invalid_argument("conv input shorter than kernel");
  Tensor<T> y(l.out_len(x.len), l.out_ch);
  const int kspan = l.kernel * l.in_ch;  // kernel taps over contiguous input rows
  for (int p = 0; p < y.len; ++p) {
    const T* xin = x.row(p * l.stride);
    T* yo = y.row(p);
    for (int oc = 0; oc < l.out_ch; ++oc) {
      yo[oc] = l.b[oc] + dot_n(xin, l.w.data() + static_cast<std::size_t>(oc) * kspan, kspan);
    }
  }
  return y;
}

template <typename T>
void conv1d_backward(const Tensor<T>& x, const Conv1d<T>& l, const Tensor<T>& gout,
                     Tensor<T>* gx, std::span<T> gw, std::span<T> gb) {
  const int kspan = l.kernel * l.in_ch;
  if (gx) *gx = Tensor<T>(x.len, x.ch);
  for (int p = 0; p < gout.len; ++p) {
    const T* xin = x.row(p * l.stride);
    const T* go = gout.row(p);
    for (int oc = 0; oc < l.out_ch; ++oc) {
      T g = go[oc];
      gb[oc] += g;
      axpy_n(gw.data() + static_cast<std::size_t>(oc) * kspan, g, xin, kspan);
      if (gx) {
        axpy_n(gx->row(p * l.stride), g, l.w.data() + static_cast<std::size_t>(oc) * kspan, kspan);
      }
    }
  }
}

// argmax-per-output stored for the backward pass; ties go to the earliest
// input position.
template <typename T>
Tensor<T> maxpool1d_forward(const Tensor<T>& x, const MaxPool1d& l, std::vector<int>* argmax) {
  if (x.len < l.window) throw std::invalid_argument("pool input shorter than window");
  Tensor<T> y(l.out_len(x.len), x.ch);
  if (argmax) argmax->assign(y.v.size(), 0);
  for (int p = 0; p < y.len; ++p) {
    int base = p * l.stride;
    for (int c = 0; c < x.ch; ++c) {
      T best = x.v[static_cast<std::size_t>(base) * x.ch + c];
      int best_at = base;
      for (int j = 1; j < l.window; ++j) {
        T v = x.v[static_cast<std::size_t>(base + j) * x.ch + c];
        if (v > best) {
          best = v;
          best_at = base + j;
        }
      }
      y.v[static_cast<std::size_t>(p) * x.ch + c] = best;
      if (argmax) (*argmax)[static_cast<std::size_t>(p) * x.ch + c] = best_at;
    }
  }
  return y;
}

template <typename T>
Tensor<T> maxpool1d_backward(const Tensor<T>& x, const Tensor<T>& gout,
                             const std::vector<int>& argmax) {
  Tensor<T> gx(x.len, x.ch);
  for (int p = 0; p < gout.len; ++p) {
    for (int c = 0; c < x.ch; ++c) {
      std::size_t oi = static_cast<std::size_t>(p) * x.ch + c;
      gx.v[static_cast<std::size_t>(argmax[oi]) * x.ch + c] += gout.v[oi];
    }
  }
  return gx;
}

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x) {
  Tensor<T> y = x;
  for (T& v : y.v) v = v > T(0) ? v : T(0);
  return y;
}

// gradient convention at 0: zero
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& gout) {
  Tensor<T> gx(x.len, x.ch);
  for (std::size_t i = 0; i < x.v.size(); ++i) gx.v[i] = x.v[i] > T(0) ? gout.v[i] : T(0);
  return gx;
}

template <typename T>
Tensor<T> dense_forward(const Tensor<T>& x, const Dense<T>& l) {
  if (x.len * x.ch != l.in_dim) throw std::invalid_argument("dense input size mismatch");
  Tensor<T> y(l.out_dim, 1);
  for (int o = 0; o < l.out_dim; ++o) {
    y.v[o] = l.b[o] + dot_n(x.v.data(), l.w.data() + static_cast<std::size_t>(o) * l.in_dim, l.in_dim);
  }
  return y;
}

template <typename T>
void dense_backward(const Tensor<T>& x, const Dense<T>& l, const Tensor<T>& gout, Tensor<T>* gx,
                    std::span<T> gw, std::span<T> gb) {
  if (gx) {
    *gx = Tensor<T>(x.len, x.ch);
  }
  for (int o = 0; o < l.out_dim; ++o) {
    T g = gout.v[o];
    gb[o] += g;
    axpy_n(gw.data() + static_cast<std::size_t>(o) * l.in_dim, g, x.v.data(), l.in_dim);
    if (gx) axpy_n(gx->v.data(), g, l.w.data() + static_cast<std::size_t>(o) * l.in_dim, l.in_dim);
  }
}

// ------------------------------------------------------------ whole-net

template <typename T>
struct ForwardCache {
  std::vector<Tensor<T>> acts;               // acts[0] = input, acts[i+1] = after layer i
  std::vector<std::vector<int>> pool_argmax;  // parallel to layers (empty for non-pools)
};

template <typename T>
Tensor<T> net_forward(const Network<T>& net, const Tensor<T>& x, ForwardCache<T>* cache = nullptr) {
  Tensor<T> cur = x;
  if (cache) {
    cache->acts.clear();
    cache->pool_argmax.assign(net.layers.size(), {});
    cache->acts.push_back(cur);
  }
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& l = net.layers[i];
    if (const auto* c = std::get_if<Conv1d<T>>(&l)) {
      cur = conv1d_forward(cur, *c);
    } else if (const auto* p = std::get_if<MaxPool1d>(&l)) {
      cur = maxpool1d_forward(cur, *p, cache ? &cache->pool_argmax[i] : nullptr);
    } else if (std::holds_alternative<Relu>(l)) {
      cur = relu_forward(cur);
    } else {
      cur = dense_forward(cur, std::get<Dense<T>>(l));
    }
    if (cache) cache->acts.push_back(cur);
  }
  return cur;
}

template <typename T>
struct Gradients {
  std::vector<std::vector<T>> w, b;  // parallel to layers (empty for pool/relu)

  static Gradients zeros_like(const Network<T>& net) {
    Gradients g;
    g.w.resize(net.layers.size());
    g.b.resize(net.layers.size());
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
      if (const auto* c = std::get_if<Conv1d<T>>(&net.layers[i])) {
        g.w[i].assign(c->w.size(), T(0));
        g.b[i].assign(c->b.size(), T(0));
      } else if (const auto* d = std::get_if<Dense<T>>(&net.layers[i])) {
        g.w[i].assign(d->w.size(), T(0));
        g.b[i].assign(d->b.size(), T(0));
      }
    }
    return g;
  }

  void zero() {
    for (auto& v : w) std::fill(v.begin(), v.end(), T(0));
    for (auto& v : b) std::fill(v.begin(), v.end(), T(0));
  }

  void scale(T s) {
    for (auto& v : w)
      for (T& x : v) x *= s;
    for (auto& v : b)
      for (T& x : v) x *= s;
  }
};

// Accumulates parameter gradients into `grads`.
template <typename T>
void net_backward(const Network<T>& net, const ForwardCache<T>& cache, const Tensor<T>& grad_out,
                  Gradients<T>& grads, Tensor<T>* grad_input = nullptr) {
  Tensor<T> g = grad_out;
  for (int i = static_cast<int>(net.layers.size()) - 1; i >= 0; --i) {
    const Tensor<T>& x = cache.acts[i];
    Tensor<T> gx;
    bool need_gx = i > 0 || grad_input != nullptr;
    if (const auto* c = std::get_if<Conv1d<T>>(&net.layers[i])) {
      conv1d_backward(x, *c, g, need_gx ? &gx : nullptr, std::span<T>(grads.w[i]),
                      std::span<T>(grads.b[i]));
    } else if (std::holds_alternative<MaxPool1d>(net.layers[i])) {
      // dense layers flatten (len,ch) -> len*ch without moving data, so the
      // incoming gradient may carry the flattened shape; restore it
      Tensor<T> gshaped = g;
      const Tensor<T>& y = cache.acts[i + 1];
      gshaped.len = y.len;
      gshaped.ch = y.ch;
      gx = maxpool1d_backward(x, gshaped, cache.pool_argmax[i]);
    } else if (std::holds_alternative<Relu>(net.layers[i])) {
      gx = relu_backward(x, g);
    } else {
      const auto& d = std::get<Dense<T>>(net.layers[i]);
      dense_backward(x, d, g, need_gx ? &gx : nullptr, std::span<T>(grads.w[i]),
                     std::span<T>(grads.b[i]));
      if (need_gx) {
        gx.len = x.len;  // restore pre-flatten shape
        gx.ch = x.ch;
      }
    }
    g = std::move(gx);
  }
  if (grad_input) *grad_input = std::move(g);
}

// --------------------------------------------------------------- softmax

template <typename T>
struct SoftmaxResult {
  std::array<T, 2> probs;
  double loss;
  std::array<T, 2> grad;  // d loss / d logits
};

template <typename T>
SoftmaxResult<T> softmax_xent(std::span<const T> logits, int label) {
  if (logits.size() != 2) throw std::invalid_argument("softmax head expects 2 logits");
  if (label != 0 && label != 1) throw std::invalid_argument("label must be 0 or 1");
  if (!std::isfinite(static_cast<double>(logits[0])) ||
      !std::isfinite(static_cast<double>(logits[1]))) {
    throw std::runtime_error("non-finite logits in softmax");
  }
  T m = logits[0] > logits[1] ? logits[0] : logits[1];
  T e0 = std::exp(logits[0] - m);
  T e1 = std::exp(logits[1] - m);
  T z = e0 + e1;
  SoftmaxResult<T> r;
  r.probs = {e0 / z, e1 / z};
  r.loss = -std::log(std::max(static_cast<double>(r.probs[label]), 1e-300));
  r.grad = {r.probs[0], r.probs[1]};
  r.grad[label] -= T(1);
  return r;
}

// ------------------------------------------------------------------ SGD

struct TrainConfig {
  float learning_rate = 0.0005f;
  int batch_size = 200;
  float momentum = 0.9f;
  int epochs = 20;
  std::uint64_t seed = 1;
};

// classical momentum: v <- momentum*v - lr*g ; p <- p + v
template <typename T>
void sgd_step(std::span<T> params, std::span<const T> grads, std::span<T> velocity, T lr,
              T momentum) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    velocity[i] = momentum * velocity[i] - lr * grads[i];
    params[i] += velocity[i];
  }
}

template <typename T>
void sgd_step(Network<T>& net, const Gradients<T>& grads, Gradients<T>& velocity, T lr,
              T momentum) {
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    if (auto* c = std::get_if<Conv1d<T>>(&net.layers[i])) {
      sgd_step(std::span<T>(c->w), std::span<const T>(grads.w[i]), std::span<T>(velocity.w[i]), lr,
               momentum);
      sgd_step(std::span<T>(c->b), std::span<const T>(grads.b[i]), std::span<T>(velocity.b[i]), lr,
               momentum);
    } else if (auto* d = std::get_if<Dense<T>>(&net.layers[i])) {
      sgd_step(std::span<T>(d->w), std::span<const T>(grads.w[i]), std::span<T>(velocity.w[i]), lr,
               momentum);
      sgd_step(std::span<T>(d->b), std::span<const T>(grads.b[i]), std::span<T>(velocity.b[i]), lr,
               momentum);
    }
  }
}

// ------------------------------------------------------------- training

struct Sample {
  std::vector<float> x;
  int cls = 0;  // 0 = tampered (singly compressed), 1 = authentic
};

struct EpochStats {
  double train_loss = 0, train_acc = 0, val_loss = 0, val_acc = 0;
};

std::vector<EpochStats> train_network(Network<float>& net, std::span<const Sample> train,
                                      std::span<const Sample> val, const TrainConfig& cfg);

std::array<double, 2> predict_probs(const Network<float>& net, std::span<const float> x);

// ---------------------------------------------------------- grad check

// Max relative error between analytic gradients and central finite
// differences over every parameter. corrupt_conv_backward flips the sign of
// the analytic conv-layer gradients (negative control for the checker
// itself).
double grad_check(const Network<float>& net, std::span<const float> x, int label,
                  double eps = 1e-4, bool corrupt_conv_backward = false);

// True if any ReLU input or pool-window margin is within `delta` of a tie
// (where the analytic derivative is not comparable to finite differences).
bool near_tie_points(const Network<float>& net, std::span<const float> x, double delta);

// ------------------------------------------------------------ model io

// "MSDN" container, version 1, f32 payloads.
void save_model(const Network<float>& net, const std::string& path);
void save_model(const Network<float>& net, std::ostream& out);
Network<float> load_model(const std::string& path);
Network<float> load_model(std::istream& in);

}  // namespace djf::nn
