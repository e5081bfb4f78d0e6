#pragma once

// Finite probability spaces and their sigma-algebras.
//
// A space is a list of strictly positive atom weights summing to one. A
// sigma-algebra over it is a partition of the atoms into blocks; backward
// filtrations are coarsening chains of partitions starting from the discrete
// one, forward filtrations are refining chains. Observables are real-valued
// functions on atoms. Everything is an immutable value after construction
// and every operation is a pure function, so all of it is safe to share
// across threads.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "empp/numeric.hpp"

namespace empp {

class AtomSpace {
 public:
  explicit AtomSpace(std::vector<double> weights) : weights_(std::move(weights)) {
    detail::require(!weights_.empty(), "AtomSpace: atom count must be positive");
    CompensatedSum total;
    for (double w : weights_) {
      detail::require(w > 0.0 && std::isfinite(w), "AtomSpace: weights must be strictly positive");
      total.add(w);
    }
    detail::require(std::abs(total.value() - 1.0) <= kIdentityTol,
                    "AtomSpace: weights must sum to 1 within 1e-12");
  }

  static AtomSpace uniform(std::size_t atom_count) {
    detail::require(atom_count > 0, "AtomSpace: atom count must be positive");
    return AtomSpace(std::vector<double>(atom_count, 1.0 / static_cast<double>(atom_count)));
  }

  std::size_t atom_count() const { return weights_.size(); }
  const std::vector<double>& weights() const { return weights_; }
  double weight(std::size_t atom) const { return weights_[atom]; }

 private:
  std::vector<double> weights_;
};

// Partition of atoms into contiguous-numbered, non-empty blocks. block_of
// maps atom index -> block index.
class Partition {
 public:
  Partition(std::vector<std::uint32_t> block_of, std::size_t block_count)
      : block_of_(std::move(block_of)), block_count_(block_count) {
    detail::require(!block_of_.empty(), "Partition: atom count must be positive");
    detail::require(block_count_ > 0, "Partition: block count must be positive");
    std::vector<char> seen(block_count_, 0);
    for (std::uint32_t b : block_of_) {
      detail::require(b < block_count_, "Partition: block index out of range");
      seen[b] = 1;
    }
    for (char s : seen) detail::require(s != 0, "Partition: every block must contain an atom");
  }

  static Partition discrete(std::size_t atom_count) {
    std::vector<std::uint32_t> ids(atom_count);
    for (std::size_t i = 0; i < atom_count; ++i) ids[i] = static_cast<std::uint32_t>(i);
    return Partition(std::move(ids), atom_count);
  }

  static Partition trivial(std::size_t atom_count) {
    return Partition(std::vector<std::uint32_t>(atom_count, 0), 1);
  }

  static Partition from_blocks(const std::vector<std::vector<std::size_t>>& blocks,
                               std::size_t atom_count) {
    std::vector<std::uint32_t> ids(atom_count, static_cast<std::uint32_t>(blocks.size()));
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      detail::require(!blocks[b].empty(), "Partition: every block must contain an atom");
      for (std::size_t atom : blocks[b]) {
        detail::require(atom < atom_count, "Partition: atom index out of range");
        detail::require(ids[atom] == blocks.size(), "Partition: atom assigned twice");
        ids[atom] = static_cast<std::uint32_t>(b);
      }
    }
    for (std::uint32_t id : ids)
      detail::require(id < blocks.size(), "Partition: every atom must belong to a block");
    return Partition(std::move(ids), blocks.size());
  }

  std::size_t atom_count() const { return block_of_.size(); }
  std::size_t block_count() const { return block_count_; }
  std::uint32_t block_of(std::size_t atom) const { return block_of_[atom]; }
  const std::vector<std::uint32_t>& block_map() const { return block_of_; }

  // Structural equality: same grouping of atoms, labels ignored.
  bool same_blocks(const Partition& other) const {
    if (block_of_.size() != other.block_of_.size()) return false;
    if (block_count_ != other.block_count_) return false;
    constexpr std::uint32_t unset = 0xffffffffu;
    std::vector<std::uint32_t> fwd(block_count_, unset), bwd(other.block_count_, unset);
    for (std::size_t i = 0; i < block_of_.size(); ++i) {
      const std::uint32_t a = block_of_[i];
      const std::uint32_t b = other.block_of_[i];
      if (fwd[a] == unset) fwd[a] = b;
      if (bwd[b] == unset) bwd[b] = a;
      if (fwd[a] != b || bwd[b] != a) return false;
    }
    return true;
  }

  // Atom lists grouped by block, in block order. Counting sort, O(atoms).
  std::vector<std::vector<std::uint32_t>> atoms_by_block() const {
    std::vector<std::vector<std::uint32_t>> grouped(block_count_);
    std::vector<std::size_t> sizes(block_count_, 0);
    for (std::uint32_t b : block_of_) ++sizes[b];
    for (std::size_t b = 0; b < block_count_; ++b) grouped[b].reserve(sizes[b]);
    for (std::size_t i = 0; i < block_of_.size(); ++i)
      grouped[block_of_[i]].push_back(static_cast<std::uint32_t>(i));
    return grouped;
  }

 private:
  std::vector<std::uint32_t> block_of_;
  std::size_t block_count_;
};

// True iff every block of `fine` lies inside a single block of `coarse`.
inline bool is_coarsening(const Partition& coarse, const Partition& fine) {
  detail::require(coarse.atom_count() == fine.atom_count(),
                  "is_coarsening: partitions live on different atom counts");
  constexpr std::uint32_t unset = 0xffffffffu;
  std::vector<std::uint32_t> parent(fine.block_count(), unset);
  for (std::size_t i = 0; i < fine.atom_count(); ++i) {
    const std::uint32_t fb = fine.block_of(i);
    const std::uint32_t cb = coarse.block_of(i);
    if (parent[fb] == unset) {
      parent[fb] = cb;
    } else if (parent[fb] != cb) {
      return false;
    }
  }
  return true;
}

// Decreasing chain of sigma-algebras G_0 >= G_1 >= ... with G_0 discrete.
class BackwardFiltration {
 public:
  explicit BackwardFiltration(std::vector<Partition> levels) : levels_(std::move(levels)) {
    detail::require(!levels_.empty(), "BackwardFiltration: needs at least level 0");
    const std::size_t atoms = levels_[0].atom_count();
    detail::require(levels_[0].block_count() == atoms,
                    "BackwardFiltration: level 0 must be the discrete partition");
    for (std::size_t n = 0; n + 1 < levels_.size(); ++n) {
      detail::require(levels_[n + 1].atom_count() == atoms,
                      "BackwardFiltration: level atom counts differ");
      detail::require(is_coarsening(levels_[n + 1], levels_[n]),
                      "BackwardFiltration: each level must coarsen the previous one");
    }
  }

  std::size_t depth() const { return levels_.size() - 1; }
  std::size_t atom_count() const { return levels_[0].atom_count(); }
  const Partition& level(std::size_t n) const { return levels_[n]; }
  const std::vector<Partition>& levels() const { return levels_; }

 private:
  std::vector<Partition> levels_;
};

// Increasing chain of sigma-algebras; when binary_splitting is set, each
// block splits into at most two blocks from one level to the next.
class ForwardFiltration {
 public:
  ForwardFiltration(std::vector<Partition> levels, bool binary_splitting)
      : levels_(std::move(levels)), binary_splitting_(binary_splitting) {
    detail::require(!levels_.empty(), "ForwardFiltration: needs at least level 0");
    const std::size_t atoms = levels_[0].atom_count();
    for (std::size_t n = 0; n + 1 < levels_.size(); ++n) {
      detail::require(levels_[n + 1].atom_count() == atoms,
                      "ForwardFiltration: level atom counts differ");
      detail::require(is_coarsening(levels_[n], levels_[n + 1]),
                      "ForwardFiltration: each level must refine the previous one");
      if (binary_splitting_) {
        detail::require(max_split_arity(levels_[n], levels_[n + 1]) <= 2,
                        "ForwardFiltration: binary_splitting violated");
      }
    }
  }

  std::size_t depth() const { return levels_.size() - 1; }
  std::size_t atom_count() const { return levels_[0].atom_count(); }
  bool binary_splitting() const { return binary_splitting_; }
  const Partition& level(std::size_t n) const { return levels_[n]; }
  const std::vector<Partition>& levels() const { return levels_; }

  // Largest number of children any block of `coarse` has in `fine`.
  static std::size_t max_split_arity(const Partition& coarse, const Partition& fine) {
    std::vector<std::size_t> child_count(coarse.block_count(), 0);
    constexpr std::uint32_t unset = 0xffffffffu;
    std::vector<std::uint32_t> first_parent(fine.block_count(), unset);
    for (std::size_t i = 0; i < fine.atom_count(); ++i) {
      const std::uint32_t fb = fine.block_of(i);
      if (first_parent[fb] == unset) {
        first_parent[fb] = coarse.block_of(i);
        ++child_count[coarse.block_of(i)];
      }
    }
    std::size_t arity = 0;
    for (std::size_t c : child_count) arity = std::max(arity, c);
    return arity;
  }

 private:
  std::vector<Partition> levels_;
  bool binary_splitting_;
};

// Real-valued function on atoms.
struct Observable {
  std::vector<double> values;

  Observable() = default;
  explicit Observable(std::vector<double> v) : values(std::move(v)) {}

  static Observable zero(std::size_t atom_count) {
    return Observable(std::vector<double>(atom_count, 0.0));
  }
  static Observable constant(std::size_t atom_count, double c) {
    return Observable(std::vector<double>(atom_count, c));
  }

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
};

namespace detail {

inline void require_compatible(const Observable& obs, const AtomSpace& space, const char* who) {
  require(obs.size() == space.atom_count(),
          std::string(who) + ": observable and space have different atom counts");
}

inline void require_compatible(const Partition& part, const AtomSpace& space, const char* who) {
  require(part.atom_count() == space.atom_count(),
          std::string(who) + ": partition and space have different atom counts");
}

}  // namespace detail

// Weighted integral  sum_i w_i v_i, compensated.
inline double integral(const Observable& obs, const AtomSpace& space) {
  detail::require_compatible(obs, space, "integral");
  CompensatedSum acc;
  for (std::size_t i = 0; i < obs.size(); ++i) acc.add(space.weight(i) * obs.values[i]);
  return acc.value();
}

// (sum_i w_i |v_i|^p)^(1/p); max |v_i| for the infinite exponent. Exponents
// in (0, 1) are accepted as quasi-norms.
inline double lp_norm(const Observable& obs, Exponent p, const AtomSpace& space) {
  detail::require_compatible(obs, space, "lp_norm");
  if (p.is_infinite) {
    double m = 0.0;
    for (double v : obs.values) m = std::max(m, std::abs(v));
    return m;
  }
  detail::require(p.value > 0.0 && std::isfinite(p.value), "lp_norm: exponent must be positive");
  CompensatedSum acc;
  if (p.value == 1.0) {
    for (std::size_t i = 0; i < obs.size(); ++i) acc.add(space.weight(i) * std::abs(obs.values[i]));
    return acc.value();
  }
  if (p.value == 2.0) {
    for (std::size_t i = 0; i < obs.size(); ++i)
      acc.add(space.weight(i) * obs.values[i] * obs.values[i]);
    return std::sqrt(acc.value());
  }
  for (std::size_t i = 0; i < obs.size(); ++i)
    acc.add(space.weight(i) * std::pow(std::abs(obs.values[i]), p.value));
  return std::pow(acc.value(), 1.0 / p.value);
}

// Conditional expectation onto a partition: on each block the weighted mean
// of the input. Blocks on which the input is constant return that constant
// bitwise, so conditioning is an exact projection on already-measurable
// data; repeated filtration levels then produce exactly zero martingale
// differences.
inline void conditional_expectation_into(const Observable& obs, const Partition& part,
                                         const AtomSpace& space, Observable& out) {
  detail::require_compatible(obs, space, "conditional_expectation");
  detail::require_compatible(part, space, "conditional_expectation");

  const std::size_t blocks = part.block_count();
  std::vector<CompensatedSum> value_sum(blocks);
  std::vector<CompensatedSum> weight_sum(blocks);
  std::vector<double> first_value(blocks, 0.0);
  std::vector<char> is_constant(blocks, 0);
  std::vector<char> seen(blocks, 0);

  for (std::size_t i = 0; i < obs.size(); ++i) {
    const std::uint32_t b = part.block_of(i);
    const double v = obs.values[i];
    if (!seen[b]) {
      seen[b] = 1;
      is_constant[b] = 1;
      first_value[b] = v;
    } else if (is_constant[b] && v != first_value[b]) {
      is_constant[b] = 0;
    }
    value_sum[b].add(space.weight(i) * v);
    weight_sum[b].add(space.weight(i));
  }

  std::vector<double> block_value(blocks);
  for (std::size_t b = 0; b < blocks; ++b) {
    block_value[b] = is_constant[b] ? first_value[b] : value_sum[b].value() / weight_sum[b].value();
  }

  out.values.resize(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) out.values[i] = block_value[part.block_of(i)];
}

inline Observable conditional_expectation(const Observable& obs, const Partition& part,
                                          const AtomSpace& space) {
  Observable out;
  conditional_expectation_into(obs, part, space, out);
  return out;
}

// First level D such that every later level of the filtration equals level D
// structurally; depth() when the last two levels already differ.
inline std::size_t stabilization_depth(const BackwardFiltration& filt) {
  std::size_t d = filt.depth();
  while (d > 0 && filt.level(d - 1).same_blocks(filt.level(d))) --d;
  return d;
}

}  // namespace empp
