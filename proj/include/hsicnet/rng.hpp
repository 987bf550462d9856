#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace hsicnet {

// mt19937_64 with explicit floating-point conversions so streams are
// bit-identical across standard libraries (std distributions are not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t raw() { return gen_(); }

  // [0, 1), 53-bit resolution
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller without the cached spare: two raw draws per variate keeps the
  // stream position independent of call history.
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // [0, n); modulo bias is irrelevant at our draw counts
  std::uint64_t integer(std::uint64_t n) { return n ? gen_() % n : 0; }

  bool bernoulli(double p) { return uniform() < p; }

  // splitmix64-style mixing for independent per-record sub-streams
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace hsicnet
