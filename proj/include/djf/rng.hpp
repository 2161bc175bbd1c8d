#pragma once

// Deterministic random source. All randomness in the toolkit flows through
// this wrapper so that a fixed seed reproduces identical bits everywhere;
// the raw mt19937_64 stream is standard-specified, and every derived draw
// below is spelled out explicitly instead of relying on the
// implementation-defined std::*_distribution adapters.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace djf::rng {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1), 53-bit mantissa.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  float uniform_f(float lo, float hi) {
    return static_cast<float>(uniform(lo, hi));
  }

  // Uniform integer in [0, n). Modulo bias is < n / 2^64, irrelevant here;
  // what matters is that the mapping is fixed.
  std::uint64_t below(std::uint64_t n) { return gen_() % n; }

  int range(int lo, int hi) {  // inclusive both ends
    return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  // Box-Muller, one value per call (the second is discarded to keep the
  // consumption pattern trivial to reason about).
  double normal(double mean = 0.0, double stddev = 1.0) {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    return mean + stddev * z;
  }

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

// Stable seed derivation for independent sub-streams (splitmix64 mix).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace djf::rng
