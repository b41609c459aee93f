#pragma once

#include <cstdint>
#include <random>

namespace evofuzz {

// Seeded random source shared by the seed scheduler, the mutators and the
// operator bandit. Distributions are implemented here rather than taken from
// <random> so that a given seed produces the same stream with any standard
// library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform();

  // Uniform integer in [lo, hi] (inclusive). Requires lo <= hi.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  double normal();
  // Gamma(shape, 1), shape > 0. Marsaglia-Tsang squeeze method.
  double gamma(double shape);
  // Beta(a, b) via the ratio X / (X + Y) of two gamma draws.
  double beta(double a, double b);

  // Independent stream derived from this seed and a label.
  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t label);

 private:
  std::mt19937_64 engine_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace evofuzz
