#ifndef G4D_RNG_HPP_
#define G4D_RNG_HPP_

#include <cstdint>
#include <random>

namespace g4d {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Independent stream id for (seed, indices...). Streams derived this way are
// what the per-sequence / per-episode concurrency contracts rely on.
inline uint64_t derive_seed(uint64_t seed, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
  uint64_t s = splitmix64(seed ^ splitmix64(a));
  s = splitmix64(s ^ splitmix64(b + 0x517cc1b727220a95ull));
  return splitmix64(s ^ splitmix64(c + 0x2545f4914f6cdd1dull));
}

class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : gen_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(gen_);
  }
  // Box-Muller; kept hand-rolled so streams are identical across stdlibs.
  double normal(double mean = 0.0, double stddev = 1.0) {
    if (have_spare_) {
      have_spare_ = false;
      return mean + stddev * spare_;
    }
    double u1, u2;
    do {
      u1 = std::uniform_real_distribution<double>(0.0, 1.0)(gen_);
    } while (u1 <= 1e-300);
    u2 = std::uniform_real_distribution<double>(0.0, 1.0)(gen_);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return mean + stddev * r * std::cos(theta);
  }
  int uniform_int(int lo, int hi) {  // inclusive
    return std::uniform_int_distribution<int>(lo, hi)(gen_);
  }
  bool bernoulli(double p) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(gen_) < p;
  }
  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace g4d

#endif
