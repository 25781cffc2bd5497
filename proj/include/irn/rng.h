#ifndef IRN_RNG_H_
#define IRN_RNG_H_

#include <cmath>
#include <cstdint>
#include <random>

namespace irn {

constexpr uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

constexpr uint64_t HashCombine(uint64_t a, uint64_t b) {
  return SplitMix64(a ^ SplitMix64(b));
}

// Named per-run random streams. Each consumer (workload, ECMP, loss
// injection, ...) derives its own stream from the run seed so adding a
// consumer never perturbs the draws of another.
enum class RngStream : uint64_t {
  kWorkload = 1,
  kEcmp = 2,
  kLossInjection = 3,
  kIncast = 4,
  kTest = 99,
};

// Uniform and exponential draws are derived by hand from the raw 64-bit
// engine output so that results are bit-identical across standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(SplitMix64(seed)) {}
  Rng(uint64_t seed, RngStream stream, uint64_t index = 0)
      : engine_(HashCombine(HashCombine(seed, static_cast<uint64_t>(stream)),
                            index)) {}

  uint64_t Next() { return engine_(); }

  // Uniform in [0, 1).
  double Uniform() { return (Next() >> 11) * 0x1.0p-53; }
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Uniform integer in [0, n). Lemire's multiply-shift; bias is < n / 2^64.
  uint64_t Below(uint64_t n) {
    return static_cast<uint64_t>(
        (static_cast<unsigned __int128>(Next()) * n) >> 64);
  }

  bool Bernoulli(double p) { return Uniform() < p; }

  double Exponential(double rate) { return -std::log1p(-Uniform()) / rate; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace irn

#endif  // IRN_RNG_H_
