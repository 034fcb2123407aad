#ifndef EPIFLOW_RNG_HPP
#define EPIFLOW_RNG_HPP

#include <cstdint>
#include <random>

namespace epiflow {

/// Deterministic random source. All randomness in the library flows from
/// explicit 64-bit seeds; independent streams are derived with mix().
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(eng_);
  }

  double normal(double mean, double sigma) {
    if (sigma <= 0.0) return mean;
    std::normal_distribution<double> d(mean, sigma);
    return d(eng_);
  }

  /// Uniform integer on [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    std::uniform_int_distribution<std::int64_t> d(lo, hi);
    return d(eng_);
  }

  bool bernoulli(double p) {
    std::bernoulli_distribution d(p);
    return d(eng_);
  }

  std::mt19937_64& engine() { return eng_; }

  /// splitmix64 step; used to derive per-stream seeds from a base seed.
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace epiflow

#endif
