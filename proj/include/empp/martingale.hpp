#pragma once

// Backward martingales E_n g along a backward filtration, their differences
// and square function, the ergodic square function over a list of average
// lengths, and the binary-splitting surgery on forward filtrations.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "empp/dynamics.hpp"
#include "empp/numeric.hpp"
#include "empp/space.hpp"

namespace empp {

// levels[n] = E(g | G_n); level 0 is g itself because G_0 is discrete.
// Levels are produced one from the previous (tower property), which keeps
// the sequence exactly consistent with conditional_expectation.
struct MartingaleSequence {
  std::vector<Observable> levels;

  std::size_t depth() const { return levels.size() - 1; }
  const Observable& level(std::size_t n) const { return levels[n]; }
};

inline MartingaleSequence backward_martingale(const Observable& g, const BackwardFiltration& filt,
                                              const AtomSpace& space) {
  detail::require_compatible(g, space, "backward_martingale");
  detail::require(filt.atom_count() == space.atom_count(),
                  "backward_martingale: filtration and space differ in atom count");
  MartingaleSequence mart;
  mart.levels.reserve(filt.depth() + 1);
  mart.levels.push_back(g);
  for (std::size_t n = 1; n <= filt.depth(); ++n)
    mart.levels.push_back(conditional_expectation(mart.levels[n - 1], filt.level(n), space));
  return mart;
}

// d_k = E_{k+1} g - E_k g for k = 0 .. depth-1; empty at depth 0.
inline std::vector<Observable> martingale_differences(const MartingaleSequence& mart) {
  std::vector<Observable> diffs;
  diffs.reserve(mart.depth());
  for (std::size_t k = 0; k + 1 < mart.levels.size(); ++k) {
    const Observable& lo = mart.levels[k];
    const Observable& hi = mart.levels[k + 1];
    std::vector<double> d(lo.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = hi.values[i] - lo.values[i];
    diffs.emplace_back(std::move(d));
  }
  return diffs;
}

// Pointwise (sum_k d_k^2)^(1/2).
inline Observable square_function(const MartingaleSequence& mart) {
  const std::size_t atoms = mart.levels[0].size();
  std::vector<double> acc(atoms, 0.0);
  for (std::size_t k = 0; k + 1 < mart.levels.size(); ++k) {
    const Observable& lo = mart.levels[k];
    const Observable& hi = mart.levels[k + 1];
    for (std::size_t i = 0; i < atoms; ++i) {
      const double d = hi.values[i] - lo.values[i];
      acc[i] += d * d;
    }
  }
  for (double& v : acc) v = std::sqrt(v);
  return Observable(std::move(acc));
}

// Pointwise (sum_i |A_{N_{i+1}} f - A_{N_i} f|^2)^(1/2) over consecutive
// entries of a strictly increasing list of average lengths.
inline Observable ergodic_square_function(const Observable& f, const Transformation& map,
                                          const std::vector<std::uint64_t>& times) {
  detail::require(times.size() >= 2, "ergodic_square_function: needs at least two times");
  detail::require(times.front() >= 1, "ergodic_square_function: times must be positive");
  for (std::size_t i = 0; i + 1 < times.size(); ++i)
    detail::require(times[i] < times[i + 1],
                    "ergodic_square_function: times must be strictly increasing");

  const ErgodicAverager averager(f, map);
  Observable previous = averager.average(times[0]);
  Observable current;
  std::vector<double> acc(f.size(), 0.0);
  for (std::size_t i = 1; i < times.size(); ++i) {
    averager.average_into(times[i], current);
    for (std::size_t a = 0; a < acc.size(); ++a) {
      const double d = current.values[a] - previous.values[a];
      acc[a] += d * d;
    }
    std::swap(previous, current);
  }
  for (double& v : acc) v = std::sqrt(v);
  return Observable(std::move(acc));
}

namespace detail {

// Balanced recursive halving of `len` children into segments after `rounds`
// split rounds; each round splits a segment into ceil/floor halves.
inline void balanced_segments(std::size_t start, std::size_t len, unsigned rounds,
                              std::vector<std::pair<std::size_t, std::size_t>>& out) {
  if (rounds == 0 || len <= 1) {
    out.emplace_back(start, len);
    return;
  }
  const std::size_t left = (len + 1) / 2;
  balanced_segments(start, left, rounds - 1, out);
  balanced_segments(start + left, len - left, rounds - 1, out);
}

inline unsigned ceil_log2(std::size_t x) {
  return x <= 1 ? 0 : static_cast<unsigned>(std::bit_width(x - 1));
}

}  // namespace detail

// Inserts intermediate levels so that every step of the forward filtration
// splits each block into at most two. The input levels survive as a
// subsequence, so conditional expectations along them are unchanged. A
// block with t children is resolved over ceil(log2 t) steps, halving the
// child list as evenly as possible each round. Already-binary filtrations
// come back with the same levels.
inline ForwardFiltration binarize_filtration(const ForwardFiltration& filt) {
  std::vector<Partition> out_levels;
  out_levels.push_back(filt.level(0));

  for (std::size_t step = 0; step + 1 <= filt.depth(); ++step) {
    const Partition& coarse = filt.level(step);
    const Partition& fine = filt.level(step + 1);

    // Children of each coarse block, in fine-id order.
    std::vector<std::vector<std::uint32_t>> children(coarse.block_count());
    std::vector<std::uint32_t> parent_of(fine.block_count());
    std::vector<std::uint32_t> rank_of(fine.block_count());
    {
      constexpr std::uint32_t unset = 0xffffffffu;
      std::vector<std::uint32_t> first_parent(fine.block_count(), unset);
      for (std::size_t i = 0; i < fine.atom_count(); ++i) {
        const std::uint32_t fb = fine.block_of(i);
        if (first_parent[fb] == unset) first_parent[fb] = coarse.block_of(i);
      }
      for (std::uint32_t fb = 0; fb < fine.block_count(); ++fb) {
        parent_of[fb] = first_parent[fb];
        rank_of[fb] = static_cast<std::uint32_t>(children[first_parent[fb]].size());
        children[first_parent[fb]].push_back(fb);
      }
    }

    std::size_t arity = 0;
    for (const auto& c : children) arity = std::max(arity, c.size());
    const unsigned rounds = detail::ceil_log2(arity);

    for (unsigned s = 1; s < rounds; ++s) {
      std::vector<std::uint32_t> group_of_fine(fine.block_count());
      std::size_t group_count = 0;
      std::vector<std::pair<std::size_t, std::size_t>> segments;
      for (std::size_t b = 0; b < children.size(); ++b) {
        segments.clear();
        detail::balanced_segments(0, children[b].size(), s, segments);
        for (const auto& [seg_start, seg_len] : segments) {
          for (std::size_t r = seg_start; r < seg_start + seg_len; ++r)
            group_of_fine[children[b][r]] = static_cast<std::uint32_t>(group_count);
          ++group_count;
        }
      }
      std::vector<std::uint32_t> block_of(fine.atom_count());
      for (std::size_t i = 0; i < fine.atom_count(); ++i)
        block_of[i] = group_of_fine[fine.block_of(i)];
      out_levels.emplace_back(std::move(block_of), group_count);
    }

    out_levels.push_back(fine);
  }

  return ForwardFiltration(std::move(out_levels), /*binary_splitting=*/true);
}

}  // namespace empp
