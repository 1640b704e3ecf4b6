#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace mmia {

// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

// Deterministic RNG. The distributions are hand-rolled on top of mt19937_64
// because the standard library's are implementation-defined, and every result
// in this project must be reproducible from a seed alone.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 bits of mantissa.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), n >= 1. Rejection sampling, no modulo bias.
  int uniform_int(int n);

  // Standard normal via Box-Muller (first branch only, stateless).
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  bool bernoulli(double p) { return uniform() < p; }

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
      std::swap(v[static_cast<std::size_t>(i)],
                v[static_cast<std::size_t>(uniform_int(i + 1))]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace mmia
