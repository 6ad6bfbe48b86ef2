#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace fsurv {

// Deterministic generator used everywhere randomness is needed.  The standard
// <random> distributions are implementation-defined, so sequences would not be
// reproducible across toolchains; this engine plus the draw helpers below give
// bit-identical streams on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& word : state_) word = splitmix64(x);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  bool bernoulli(double p) { return uniform01() < p; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    double u2 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t bound = n == 0 ? 0 : (0 - n) % n;
    std::uint64_t x = next_u64();
    while (x < bound) x = next_u64();
    return x % n;
  }

  static std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

  std::uint64_t state_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stable child-seed derivation: hashes the parts into the parent seed so that
// per-tree, per-subject, and per-repeat streams are independent of scheduling.
inline std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> parts) {
  std::uint64_t x = root;
  std::uint64_t h = Rng::splitmix64(x);
  for (std::uint64_t p : parts) {
    x ^= p + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= Rng::splitmix64(x);
  }
  return h;
}

}  // namespace fsurv
