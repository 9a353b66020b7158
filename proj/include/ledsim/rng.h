#ifndef LEDSIM_RNG_H_
#define LEDSIM_RNG_H_

#include <cstdint>
#include <random>

namespace ledsim {

// SplitMix64 finalizer, used to derive independent stream seeds.
constexpr std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seeded stream on std::mt19937_64, whose output sequence is fixed by the
// C++ standard. Uniform variates are built from the raw 64-bit output rather
// than std::uniform_real_distribution, which is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Stream `index` of a base seed: run i of a batch gets Split(base, i).
  static Rng Split(std::uint64_t base_seed, std::uint64_t index) {
    return Rng(SplitMix64(SplitMix64(base_seed) ^ SplitMix64(index + 1)));
  }

  std::uint64_t Next() { return engine_(); }
  // [0, 1) with 53 random bits.
  double Uniform01() { return static_cast<double>(Next() >> 11) * 0x1.0p-53; }
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform01(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ledsim

#endif  // LEDSIM_RNG_H_
