#pragma once

// Deterministic random streams for the experiment harness. splitmix64 keeps
// the draws reproducible across compilers, which the report determinism
// contract requires; std::normal_distribution would not.

#include <cmath>
#include <cstdint>

namespace empp {

// splitmix64 finalizer; also used to derive per-trial seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed of trial `index` under a master seed. Trials drawn from these streams
// are independent of scheduling order.
inline std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t index) {
  return mix64(master_seed ^ mix64(index + 1));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53 random bits.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; caches the paired deviate.
  double next_gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] so the log is finite.
    const double u1 = 1.0 - next_unit();
    const double u2 = next_unit();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  // Student-t with 3 degrees of freedom; the heavy-tailed alternative for
  // stressing large-ratio regimes.
  double next_student_t3() {
    const double z = next_gaussian();
    const double c1 = next_gaussian();
    const double c2 = next_gaussian();
    const double c3 = next_gaussian();
    const double chi2 = c1 * c1 + c2 * c2 + c3 * c3;
    return z / std::sqrt(chi2 / 3.0);
  }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace empp
