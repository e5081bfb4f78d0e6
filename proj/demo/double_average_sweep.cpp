// Profiles the double ergodic averages B_N(f,g) for the two commuting
// shifts of a product torus and prints the L2 Cauchy increments.
// Build target: demo_double_average.

#include <cstdio>

#include "empp/empp.hpp"

int main() {
  using namespace empp;

  const ProductTorusSystem torus = product_torus_system(/*m1=*/4, /*m2=*/4);
  Rng rng(2024);
  const Observable f = standard_normal_observable(torus.system.atom_count(), rng);
  const Observable g = standard_normal_observable(torus.system.atom_count(), rng);

  std::vector<std::uint64_t> times;
  for (unsigned k = 0; k <= 10; ++k) times.push_back(std::uint64_t{1} << k);

  const ConvergenceReport profile = double_average_profile(
      f, g, torus.first_shift, torus.second_shift, torus.system.space(), times);

  std::printf("%8s %14s %16s\n", "N", "|B_N|_2", "|B_N - B_prev|_2");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (i == 0) {
      std::printf("%8llu %14.6e %16s\n", static_cast<unsigned long long>(times[i]),
                  profile.level_norms[i], "-");
    } else {
      std::printf("%8llu %14.6e %16.6e\n", static_cast<unsigned long long>(times[i]),
                  profile.level_norms[i], profile.increments[i - 1]);
    }
  }
  std::printf("max pointwise oscillation across the profile: %.6e\n",
              profile.oscillation->max_oscillation);
  return 0;
}
