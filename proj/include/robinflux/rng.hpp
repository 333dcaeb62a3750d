#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace robinflux {

// Deterministic RNG used for all sampling in checks and reports.
// splitmix64 core with hand-rolled scalers; std::uniform_*_distribution is
// implementation-defined, which would break bit-for-bit manifest replay.
struct Rng {
  uint64_t state;

  explicit Rng(uint64_t seed) : state(seed) {}

  uint64_t next() {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0,1), 53-bit resolution
  double uniform() { return (next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // log-uniform in [lo,hi], lo>0
  double log_uniform(double lo, double hi) {
    double u = uniform();
    return lo * std::exp(u * std::log(hi / lo));
  }

  // unbiased integer in [0,n) by rejection
  uint64_t below(uint64_t n) {
    if (n == 0) return 0;
    uint64_t lim = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = next();
    } while (x >= lim);
    return x % n;
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // derive an independent stream (for per-sample or per-thread use)
  Rng fork() { return Rng(next() ^ 0xd1b54a32d192ed03ull); }
};

}  // namespace robinflux
