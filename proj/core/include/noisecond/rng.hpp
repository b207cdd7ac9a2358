#ifndef NOISECOND_RNG_HPP
#define NOISECOND_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace nc {

// Deterministic RNG with hand-rolled distributions. std::mt19937_64 output is
// standardized, so sequences are identical across platforms; the standard
// distributions are not, which is why uniform/normal are implemented here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform index in [0, n).
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

  // Standard normal via Box-Muller.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Derive an independent stream; used to give each consumer (sampler,
  // init, eval set) its own deterministic sequence from one master seed.
  Rng fork(std::uint64_t tag) {
    std::uint64_t x = gen_() ^ (tag * 0x9e3779b97f4a7c15ULL);
    x ^= x >> 30; x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27; x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return Rng(x);
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace nc

#endif
