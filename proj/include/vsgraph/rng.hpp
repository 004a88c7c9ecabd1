#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace vsgraph {

// Seeded generator with explicit distributions. std::normal_distribution and
// friends are implementation-defined, so the draws here are hand-rolled to
// keep generated fixtures bit-stable across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; consumes exactly two draws per call.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    // shift u1 into (0, 1] so the log is finite
    double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    return r * std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
  }

  // Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n) {
    std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    std::uint64_t v = gen_();
    while (v < threshold) v = gen_();
    return v % n;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace vsgraph
