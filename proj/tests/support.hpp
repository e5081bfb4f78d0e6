#pragma once

// Brute-force reference implementations and randomized input builders for
// the test suites. The oracle functions evaluate the defining formulas term
// by term and deliberately avoid the library's fast paths (orbit prefix
// sums, iterative level chains), so agreement is a genuine cross-check.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "empp/empp.hpp"

namespace oracle {

inline empp::Observable apply_map(const empp::Observable& f, const empp::Transformation& map) {
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = f.values[map.image_of[i]];
  return empp::Observable(std::move(out));
}

// A_N f by plain term-by-term accumulation.
inline empp::Observable ergodic_average(const empp::Observable& f, const empp::Transformation& map,
                                        std::uint64_t N) {
  std::vector<double> acc(f.size(), 0.0);
  empp::Observable current = f;
  for (std::uint64_t k = 0; k < N; ++k) {
    if (k > 0) current = apply_map(current, map);
    for (std::size_t i = 0; i < f.size(); ++i) acc[i] += current.values[i];
  }
  for (double& v : acc) v /= static_cast<double>(N);
  return empp::Observable(std::move(acc));
}

// Direct weighted block means, plain accumulation.
inline empp::Observable conditional_expectation(const empp::Observable& g,
                                                const empp::Partition& part,
                                                const empp::AtomSpace& space) {
  std::vector<double> sum(part.block_count(), 0.0), weight(part.block_count(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    sum[part.block_of(i)] += space.weight(i) * g.values[i];
    weight[part.block_of(i)] += space.weight(i);
  }
  std::vector<double> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    out[i] = sum[part.block_of(i)] / weight[part.block_of(i)];
  return empp::Observable(std::move(out));
}

// E_n g conditioned directly from g, not level-from-level.
inline empp::Observable martingale_level(const empp::Observable& g,
                                         const empp::BackwardFiltration& filt,
                                         const empp::AtomSpace& space, std::size_t n) {
  return oracle::conditional_expectation(g, filt.level(n), space);
}

inline empp::Observable pi_em(const empp::Observable& f, const empp::Observable& g,
                              const empp::DynamicalSystem& system, double a, std::size_t n) {
  std::vector<double> acc(f.size(), 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const empp::Observable avg =
        oracle::ergodic_average(f, system.map(), empp::floor_power(a, static_cast<unsigned>(k)));
    const empp::Observable hi = martingale_level(g, system.filtration(), system.space(), k + 1);
    const empp::Observable lo = martingale_level(g, system.filtration(), system.space(), k);
    for (std::size_t i = 0; i < acc.size(); ++i)
      acc[i] += avg.values[i] * (hi.values[i] - lo.values[i]);
  }
  return empp::Observable(std::move(acc));
}

inline empp::Observable pi_me(const empp::Observable& f, const empp::Observable& g,
                              const empp::DynamicalSystem& system, double a, std::size_t n) {
  std::vector<double> acc(f.size(), 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const empp::Observable hi =
        oracle::ergodic_average(f, system.map(), empp::floor_power(a, static_cast<unsigned>(k + 1)));
    const empp::Observable lo =
        oracle::ergodic_average(f, system.map(), empp::floor_power(a, static_cast<unsigned>(k)));
    const empp::Observable level = martingale_level(g, system.filtration(), system.space(), k + 1);
    for (std::size_t i = 0; i < acc.size(); ++i)
      acc[i] += (hi.values[i] - lo.values[i]) * level.values[i];
  }
  return empp::Observable(std::move(acc));
}

inline empp::Observable sampled_pi(const empp::Observable& f, const empp::Observable& g,
                                   const empp::DynamicalSystem& system, double a, std::size_t n) {
  const unsigned l_max =
      static_cast<unsigned>(std::floor(static_cast<double>(n - 1) * std::log2(a)));
  std::vector<double> acc(f.size(), 0.0);
  for (unsigned l = 0; l <= l_max; ++l) {
    const empp::Observable avg = oracle::ergodic_average(f, system.map(), std::uint64_t{1} << l);
    const empp::Observable hi = martingale_level(g, system.filtration(), system.space(),
                                                 empp::dyadic_sampling_index(a, l + 1));
    const empp::Observable lo = martingale_level(g, system.filtration(), system.space(),
                                                 empp::dyadic_sampling_index(a, l));
    for (std::size_t i = 0; i < acc.size(); ++i)
      acc[i] += avg.values[i] * (hi.values[i] - lo.values[i]);
  }
  return empp::Observable(std::move(acc));
}

inline empp::ProductObservable mm_paraproduct(const empp::ProductObservable& F,
                                              const empp::ProductObservable& G,
                                              const empp::ProductSpace& ps, std::size_t n) {
  empp::ProductObservable acc = empp::ProductObservable::zero(ps.rows(), ps.cols());
  for (std::size_t k = 0; k < n; ++k) {
    const auto f_level = empp::conditional_expectation_first(F, ps.first_filtration().level(k), ps);
    const auto g_hi =
        empp::conditional_expectation_second(G, ps.second_filtration().level(k + 1), ps);
    const auto g_lo = empp::conditional_expectation_second(G, ps.second_filtration().level(k), ps);
    for (std::size_t i = 0; i < acc.values.size(); ++i)
      acc.values[i] += f_level.values[i] * (g_hi.values[i] - g_lo.values[i]);
  }
  return acc;
}

// B_N via explicit k-th iterates.
inline empp::Observable double_average(const empp::Observable& f, const empp::Observable& g,
                                       const empp::Transformation& s, const empp::Transformation& t,
                                       std::uint64_t N) {
  std::vector<double> acc(f.size(), 0.0);
  for (std::uint64_t k = 0; k < N; ++k) {
    const empp::Observable fs = apply_map(f, empp::iterate(s, k));
    const empp::Observable gt = apply_map(g, empp::iterate(t, k));
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += fs.values[i] * gt.values[i];
  }
  for (double& v : acc) v /= static_cast<double>(N);
  return empp::Observable(std::move(acc));
}

inline double lp_norm(const empp::Observable& obs, double p, const empp::AtomSpace& space) {
  double acc = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i)
    acc += space.weight(i) * std::pow(std::abs(obs.values[i]), p);
  return std::pow(acc, 1.0 / p);
}

inline double max_abs_diff(const empp::Observable& x, const empp::Observable& y) {
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    m = std::max(m, std::abs(x.values[i] - y.values[i]));
  return m;
}

inline double max_abs_diff(const std::vector<double>& x, const std::vector<double>& y) {
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
  return m;
}

}  // namespace oracle

namespace testing_inputs {

inline empp::Observable random_observable(std::size_t atoms, empp::Rng& rng) {
  return empp::standard_normal_observable(atoms, rng);
}

inline empp::AtomSpace random_space(std::size_t atoms, empp::Rng& rng) {
  std::vector<double> w(atoms);
  double total = 0.0;
  for (double& x : w) {
    x = 0.05 + rng.next_unit();
    total += x;
  }
  for (double& x : w) x /= total;
  return empp::AtomSpace(std::move(w));
}

// Coarsening chain: each level merges random pairs of the previous level's
// blocks; once a single block remains the tail levels repeat it.
inline empp::BackwardFiltration random_backward_filtration(std::size_t atoms, std::size_t depth,
                                                           empp::Rng& rng) {
  std::vector<empp::Partition> levels;
  levels.push_back(empp::Partition::discrete(atoms));
  for (std::size_t n = 1; n <= depth; ++n) {
    const empp::Partition& prev = levels.back();
    const std::size_t blocks = prev.block_count();
    if (blocks == 1) {
      levels.push_back(prev);
      continue;
    }
    std::vector<std::uint32_t> shuffled(blocks);
    for (std::size_t b = 0; b < blocks; ++b) shuffled[b] = static_cast<std::uint32_t>(b);
    for (std::size_t b = blocks; b > 1; --b) {
      const std::size_t j = static_cast<std::size_t>(rng.next_u64() % b);
      std::swap(shuffled[b - 1], shuffled[j]);
    }
    std::vector<std::uint32_t> merged(blocks);
    std::size_t next_id = 0;
    for (std::size_t t = 0; t + 1 < blocks; t += 2) {
      merged[shuffled[t]] = static_cast<std::uint32_t>(next_id);
      merged[shuffled[t + 1]] = static_cast<std::uint32_t>(next_id);
      ++next_id;
    }
    if (blocks % 2 == 1) merged[shuffled[blocks - 1]] = static_cast<std::uint32_t>(next_id++);
    std::vector<std::uint32_t> block_of(atoms);
    for (std::size_t i = 0; i < atoms; ++i) block_of[i] = merged[prev.block_of(i)];
    levels.emplace_back(std::move(block_of), next_id);
  }
  return empp::BackwardFiltration(std::move(levels));
}

// Refining chain from the trivial partition; splits blocks into up to
// `max_arity` pieces per step.
inline empp::ForwardFiltration random_forward_filtration(std::size_t atoms, std::size_t depth,
                                                         std::size_t max_arity, empp::Rng& rng) {
  std::vector<empp::Partition> levels;
  levels.push_back(empp::Partition::trivial(atoms));
  for (std::size_t n = 1; n <= depth; ++n) {
    const empp::Partition& prev = levels.back();
    const auto grouped = prev.atoms_by_block();
    std::vector<std::uint32_t> block_of(atoms);
    std::size_t next_id = 0;
    for (const auto& block : grouped) {
      const std::size_t pieces =
          1 + static_cast<std::size_t>(rng.next_u64() % std::min(max_arity, block.size()));
      for (std::size_t t = 0; t < block.size(); ++t)
        block_of[block[t]] = static_cast<std::uint32_t>(next_id + t % pieces);
      next_id += pieces;
    }
    levels.emplace_back(std::move(block_of), next_id);
  }
  return empp::ForwardFiltration(std::move(levels), false);
}

// Random catalog system: cyclic rotations, small group translations, and
// product tori, all commutativity-verified by construction.
inline empp::DynamicalSystem random_catalog_system(empp::Rng& rng, unsigned max_m = 8) {
  switch (rng.next_u64() % 3) {
    case 0: {
      const unsigned m = 1 + static_cast<unsigned>(rng.next_u64() % max_m);
      const unsigned depth = static_cast<unsigned>(rng.next_u64() % (m + 1));
      return empp::cyclic_rotation_system(m, depth);
    }
    case 1: {
      // Z_4 x Z_2 with the chain <(2,0)> <= <(1,0)> <= G, shifted by (1,1).
      std::vector<std::vector<empp::GroupElement>> chain;
      chain.push_back({{0, 0}, {2, 0}});
      chain.push_back({{0, 0}, {1, 0}, {2, 0}, {3, 0}});
      chain.push_back({{0, 0}, {1, 0}, {2, 0}, {3, 0}, {0, 1}, {1, 1}, {2, 1}, {3, 1}});
      return empp::group_translation_system({4, 2}, {1, 1}, chain);
    }
    default: {
      const unsigned m1 = 1 + static_cast<unsigned>(rng.next_u64() % 3);
      const unsigned m2 = 1 + static_cast<unsigned>(rng.next_u64() % 3);
      return std::move(empp::product_torus_system(m1, m2).system);
    }
  }
}

}  // namespace testing_inputs
