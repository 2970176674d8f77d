#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace sesa {

// SplitMix64: the project-wide deterministic generator. Every stochastic
// component derives its own stream from (seed, component index) so results
// do not depend on scheduling or call order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static Rng derive(std::uint64_t seed, std::uint64_t index) {
    // mix the index in through one splitmix step of a shifted seed
    Rng r(seed + 0x9e3779b97f4a7c15ULL * (index + 1));
    r.next_u64();
    return r;
  }

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform integer in [0, n), n > 0; rejection keeps it unbiased
  std::size_t below(std::size_t n) {
    std::uint64_t bound = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= bound);
    return static_cast<std::size_t>(v % n);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Box-Muller; consumes two uniforms per draw
  double normal() {
    double u1 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace sesa
