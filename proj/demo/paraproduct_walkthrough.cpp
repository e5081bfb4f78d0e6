// Walks through the library on the 4-atom rotation: builds the system,
// evaluates both paraproducts, and checks the summation-by-parts identity.
// Build target: demo_paraproduct.

#include <cstdio>

#include "empp/empp.hpp"

int main() {
  using namespace empp;

  // Z_4 with the +1 rotation and the residue filtration
  //   {atoms} > {evens, odds} > {everything}.
  const DynamicalSystem system = cyclic_rotation_system(/*m=*/2, /*depth=*/2);

  const Observable f(std::vector<double>{1, 0, 0, 0});
  const Observable g(std::vector<double>{1, 2, 3, 4});

  const Observable em = ergodic_martingale_paraproduct(f, g, system, /*a=*/2.0, /*n=*/2);
  const Observable me = martingale_ergodic_paraproduct(f, g, system, 2.0, 2);

  std::printf("Pi_2^em(f,g) = (%g, %g, %g, %g)\n", em.values[0], em.values[1], em.values[2],
              em.values[3]);
  std::printf("Pi_2^me(f,g) = (%g, %g, %g, %g)\n", me.values[0], me.values[1], me.values[2],
              me.values[3]);

  // The two paraproducts sum to (A_4 f)(E_2 g) - fg exactly.
  std::printf("summation-by-parts residual = %.3e\n",
              summation_by_parts_residual(f, g, system, 2.0, 2));

  // The backward martingale of g and its square function.
  const MartingaleSequence mart = backward_martingale(g, system.filtration(), system.space());
  const Observable sq = square_function(mart);
  std::printf("square function of g = %g everywhere\n", sq.values[0]);

  // Norm ratio of the worked example, the quantity the constants experiment
  // maximizes over random inputs.
  std::printf("|Pi|_1 / (|f|_2 |g|_2) = %.6f\n",
              paraproduct_norm_ratio(f, g, system, 2.0, 2, 2.0, 2.0, 1.0));
  return 0;
}
