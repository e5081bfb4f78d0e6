#pragma once

// Measure-preserving dynamics on atom spaces: transformations and their
// iterates, Cesaro ergodic averages, lacunary time indices, the
// commutativity condition between a transformation and a backward
// filtration, and a catalog of group-translation systems that satisfy it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "empp/numeric.hpp"
#include "empp/space.hpp"

namespace empp {

// Atom map; iterates are written T^k. Measure preservation is a property
// relative to a space and is validated where a space is in scope.
struct Transformation {
  std::vector<std::uint32_t> image_of;

  explicit Transformation(std::vector<std::uint32_t> image) : image_of(std::move(image)) {
    detail::require(!image_of.empty(), "Transformation: atom count must be positive");
    for (std::uint32_t j : image_of)
      detail::require(j < image_of.size(), "Transformation: image out of range");
  }

  static Transformation identity(std::size_t atom_count) {
    std::vector<std::uint32_t> image(atom_count);
    for (std::size_t i = 0; i < atom_count; ++i) image[i] = static_cast<std::uint32_t>(i);
    return Transformation(std::move(image));
  }

  std::size_t atom_count() const { return image_of.size(); }
  std::uint32_t operator()(std::size_t atom) const { return image_of[atom]; }

  bool is_bijective() const {
    std::vector<char> seen(image_of.size(), 0);
    for (std::uint32_t j : image_of) {
      if (seen[j]) return false;
      seen[j] = 1;
    }
    return true;
  }
};

// (S then T), i.e. atom i -> T(S(i)).
inline Transformation compose_maps(const Transformation& outer, const Transformation& inner) {
  detail::require(outer.atom_count() == inner.atom_count(),
                  "compose_maps: transformations have different atom counts");
  std::vector<std::uint32_t> image(inner.atom_count());
  for (std::size_t i = 0; i < image.size(); ++i) image[i] = outer.image_of[inner.image_of[i]];
  return Transformation(std::move(image));
}

// k-th iterate; k = 0 is the identity. Binary exponentiation, so large k is
// cheap for the lacunary times.
inline Transformation iterate(const Transformation& map, std::uint64_t k) {
  Transformation result = Transformation::identity(map.atom_count());
  Transformation base = map;
  while (k > 0) {
    if (k & 1ULL) result = compose_maps(base, result);
    k >>= 1;
    if (k > 0) base = compose_maps(base, base);
  }
  return result;
}

// f composed with T: value at atom i is f(T(i)).
inline Observable compose(const Observable& f, const Transformation& map) {
  detail::require(f.size() == map.atom_count(),
                  "compose: observable and transformation have different atom counts");
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = f.values[map.image_of[i]];
  return Observable(std::move(out));
}

// Preimage weights must reproduce the weights: sum_{i: T(i)=j} w_i = w_j.
// On a space with strictly positive weights this forces a bijection.
inline bool is_measure_preserving(const Transformation& map, const AtomSpace& space,
                                  double tol = kIdentityTol) {
  detail::require(map.atom_count() == space.atom_count(),
                  "is_measure_preserving: transformation and space differ in atom count");
  std::vector<double> preimage_weight(space.atom_count(), 0.0);
  for (std::size_t i = 0; i < space.atom_count(); ++i)
    preimage_weight[map.image_of[i]] += space.weight(i);
  for (std::size_t j = 0; j < space.atom_count(); ++j)
    if (std::abs(preimage_weight[j] - space.weight(j)) > tol) return false;
  return true;
}

// floor(a^k) for a > 1, exact while a^k stays below 2^53. Integer bases go
// through 64-bit arithmetic; other bases use long double repeated
// multiplication with a snap-to-integer guard so exact powers (a = 1.5,
// a = 2, ...) never land one below an integer boundary.
inline std::uint64_t floor_power(double a, unsigned k) {
  detail::require(a > 1.0 && std::isfinite(a), "floor_power: base must be a finite real > 1");
  constexpr double kLimit = 9007199254740992.0;  // 2^53

  if (a == std::rint(a) && a < kLimit) {
    const unsigned __int128 base = static_cast<unsigned __int128>(static_cast<std::uint64_t>(a));
    unsigned __int128 pow = 1;
    for (unsigned i = 0; i < k; ++i) {
      pow *= base;
      if (pow >= (static_cast<unsigned __int128>(1) << 53))
        throw std::range_error("floor_power: result reaches 2^53");
    }
    return static_cast<std::uint64_t>(pow);
  }

  long double pow = 1.0L;
  for (unsigned i = 0; i < k; ++i) {
    pow *= static_cast<long double>(a);
    if (pow >= static_cast<long double>(kLimit))
      throw std::range_error("floor_power: result reaches 2^53");
  }
  const long double nearest = std::rint(pow);
  const long double guard = pow * static_cast<long double>(k) * 1e-18L;
  if (std::abs(pow - nearest) <= guard) {
    if (nearest >= static_cast<long double>(kLimit))
      throw std::range_error("floor_power: result reaches 2^53");
    return static_cast<std::uint64_t>(nearest);
  }
  return static_cast<std::uint64_t>(std::floor(pow));
}

// Smallest k with floor(a^k) >= 2^l. Nondecreasing in l.
inline unsigned dyadic_sampling_index(double a, unsigned l) {
  detail::require(a > 1.0 && std::isfinite(a),
                  "dyadic_sampling_index: base must be a finite real > 1");
  if (l >= 53) throw std::range_error("dyadic_sampling_index: 2^l exceeds the floor_power range");
  const std::uint64_t threshold = 1ULL << l;
  for (unsigned k = 0;; ++k) {
    if (floor_power(a, k) >= threshold) return k;
  }
}

// Strictly increasing list of the lacunary times floor(a^k), k = 0..max_k,
// with duplicates removed (floor(a^k) repeats while a^k < k+1 for small a).
inline std::vector<std::uint64_t> lacunary_times(double a, unsigned max_k) {
  std::vector<std::uint64_t> times;
  for (unsigned k = 0; k <= max_k; ++k) {
    const std::uint64_t t = floor_power(a, k);
    if (times.empty() || t > times.back()) times.push_back(t);
  }
  return times;
}

// The dyadically sampled lacunary times floor(a^{K(l)}), l = 0..l_max,
// deduplicated. Companion list to lacunary_times for square-function
// experiments; neither is claimed extremal.
inline std::vector<std::uint64_t> dyadic_sampled_times(double a, unsigned l_max) {
  std::vector<std::uint64_t> times;
  for (unsigned l = 0; l <= l_max; ++l) {
    const std::uint64_t t = floor_power(a, dyadic_sampling_index(a, l));
    if (times.empty() || t > times.back()) times.push_back(t);
  }
  return times;
}

// Serves A_N f = (1/N) sum_{k<N} f(T^k .) for many N over one orbit
// decomposition: O(atom_count) per requested N. Prefix sums along each cycle
// carry a compensation track so that window sums (and hence A_1 f = f) come
// out accurate to ulps even on million-atom cycles. Non-bijective maps fall
// back to direct iteration.
class ErgodicAverager {
 public:
  ErgodicAverager(Observable f, const Transformation& map)
      : f_(std::move(f)), image_(map.image_of) {
    detail::require(f_.size() == map.atom_count(),
                    "ErgodicAverager: observable and transformation differ in atom count");
    bijective_ = map.is_bijective();
    if (!bijective_) return;

    const std::size_t n = f_.size();
    cycle_of_.resize(n);
    pos_.resize(n);
    std::vector<char> visited(n, 0);
    for (std::size_t start = 0; start < n; ++start) {
      if (visited[start]) continue;
      const std::uint32_t cycle = static_cast<std::uint32_t>(cycle_len_.size());
      const std::size_t base = prefix_hi_.size();
      cycle_start_.push_back(base);
      CompensatedSum run;
      prefix_hi_.push_back(run.primary());
      prefix_comp_.push_back(run.compensation());
      std::uint32_t len = 0;
      std::size_t atom = start;
      do {
        visited[atom] = 1;
        cycle_of_[atom] = cycle;
        pos_[atom] = len;
        run.add(f_.values[atom]);
        prefix_hi_.push_back(run.primary());
        prefix_comp_.push_back(run.compensation());
        ++len;
        atom = image_[atom];
      } while (atom != start);
      cycle_len_.push_back(len);
      cycle_total_.push_back(run.value());
    }
  }

  bool fast_path() const { return bijective_; }

  void average_into(std::uint64_t N, Observable& out) const {
    detail::require(N >= 1, "ergodic_average: N must be a positive integer");
    const std::size_t n = f_.size();
    out.values.resize(n);
    if (!bijective_) {
      fallback_average(N, out);
      return;
    }
    const double inv_n = 1.0 / static_cast<double>(N);
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t c = cycle_of_[i];
      const std::uint64_t len = cycle_len_[c];
      const std::size_t base = cycle_start_[c];
      const std::uint64_t q = N / len;
      const std::uint64_t s = N % len;
      const std::uint64_t p = pos_[i];
      double window = 0.0;
      if (s != 0) {
        if (p + s <= len) {
          window = segment(base, p, p + s);
        } else {
          window = segment(base, p, len) + segment(base, 0, p + s - len);
        }
      }
      out.values[i] = (static_cast<double>(q) * cycle_total_[c] + window) * inv_n;
    }
  }

  Observable average(std::uint64_t N) const {
    Observable out;
    average_into(N, out);
    return out;
  }

  // Mean of f along each atom's cycle; the limit of A_N f as N grows.
  Observable orbit_mean() const {
    detail::require(bijective_, "orbit_mean: requires a bijective transformation");
    Observable out = Observable::zero(f_.size());
    for (std::size_t i = 0; i < f_.size(); ++i) {
      const std::uint32_t c = cycle_of_[i];
      out.values[i] = cycle_total_[c] / static_cast<double>(cycle_len_[c]);
    }
    return out;
  }

 private:
  double segment(std::size_t base, std::uint64_t from, std::uint64_t to) const {
    const double hi = prefix_hi_[base + to] - prefix_hi_[base + from];
    const double lo = prefix_comp_[base + to] - prefix_comp_[base + from];
    return hi + lo;
  }

  void fallback_average(std::uint64_t N, Observable& out) const {
    const std::size_t n = f_.size();
    std::vector<double> current = f_.values;
    std::vector<double> next(n);
    std::vector<CompensatedSum> acc(n);
    for (std::size_t i = 0; i < n; ++i) acc[i].add(current[i]);
    for (std::uint64_t k = 1; k < N; ++k) {
      for (std::size_t i = 0; i < n; ++i) next[i] = current[image_[i]];
      current.swap(next);
      for (std::size_t i = 0; i < n; ++i) acc[i].add(current[i]);
    }
    for (std::size_t i = 0; i < n; ++i) out.values[i] = acc[i].value() / static_cast<double>(N);
  }

  Observable f_;
  std::vector<std::uint32_t> image_;
  bool bijective_ = false;
  std::vector<std::uint32_t> cycle_of_, pos_, cycle_len_;
  std::vector<std::size_t> cycle_start_;
  std::vector<double> prefix_hi_, prefix_comp_, cycle_total_;
};

inline Observable ergodic_average(const Observable& f, const Transformation& map, std::uint64_t N) {
  return ErgodicAverager(f, map).average(N);
}

// -------------------------------------------------------------------------
// Commutativity between conditioning and composition:
//   E(f o T | G_n) = E(f | G_n) o T  for all f and all levels n.
// Checked on the indicator basis of single atoms; linearity extends a pass
// to every observable.

struct CommutativityWitness {
  std::size_t level;
  std::size_t atom;  // index of the failing indicator function
};

struct CommutativityReport {
  bool passed = false;
  std::optional<CommutativityWitness> witness;
};

namespace detail {

// Entrywise comparison of the two operator compositions at one level,
// grouped by block: O(atoms) for block-respecting maps. Equivalent to
// checking every single-atom indicator at this level.
inline bool level_commutes(const AtomSpace& space, const Transformation& map,
                           const Partition& part, double tol) {
  const std::size_t atoms = space.atom_count();
  const std::size_t blocks = part.block_count();

  // flat counting-sort grouping: atoms of block b are
  // ordered[offset[b] .. offset[b+1])
  std::vector<std::size_t> offset(blocks + 1, 0);
  for (std::size_t i = 0; i < atoms; ++i) ++offset[part.block_of(i) + 1];
  for (std::size_t b = 0; b < blocks; ++b) offset[b + 1] += offset[b];
  std::vector<std::uint32_t> ordered(atoms);
  {
    std::vector<std::size_t> cursor(offset.begin(), offset.end() - 1);
    for (std::size_t i = 0; i < atoms; ++i)
      ordered[cursor[part.block_of(i)]++] = static_cast<std::uint32_t>(i);
  }

  std::vector<double> block_weight(blocks, 0.0);
  for (std::size_t b = 0; b < blocks; ++b) {
    CompensatedSum w;
    for (std::size_t t = offset[b]; t < offset[b + 1]; ++t) w.add(space.weight(ordered[t]));
    block_weight[b] = w.value();
  }

  std::vector<double> pushed(atoms, 0.0);  // sum of w_j over j in block with T(j) = x
  std::vector<std::uint32_t> touched;
  std::vector<std::uint32_t> image_blocks;
  for (std::size_t b = 0; b < blocks; ++b) {
    touched.clear();
    image_blocks.clear();
    for (std::size_t t = offset[b]; t < offset[b + 1]; ++t) {
      const std::uint32_t j = ordered[t];
      const std::uint32_t x = map.image_of[j];
      if (pushed[x] == 0.0) touched.push_back(x);
      pushed[x] += space.weight(j);
      const std::uint32_t bx = part.block_of(x);
      bool known = false;
      for (std::uint32_t ib : image_blocks) {
        if (ib == bx) {
          known = true;
          break;
        }
      }
      if (!known) image_blocks.push_back(bx);
    }

    bool ok = true;
    for (std::uint32_t c : image_blocks) {
      // Row of E_n(. o T) restricted to block b versus the row of
      // (E_n .) o T seen from an atom whose image lies in block c.
      for (std::uint32_t x : touched) {
        const double lhs = pushed[x] / block_weight[b];
        const double rhs = part.block_of(x) == c ? space.weight(x) / block_weight[c] : 0.0;
        if (std::abs(lhs - rhs) > tol) {
          ok = false;
          break;
        }
      }
      if (!ok) break;
      for (std::size_t t = offset[c]; t < offset[c + 1]; ++t) {
        const std::uint32_t y = ordered[t];
        if (pushed[y] == 0.0 && space.weight(y) / block_weight[c] > tol) {
          ok = false;
          break;
        }
      }
      if (!ok) break;
    }
    for (std::uint32_t x : touched) pushed[x] = 0.0;
    if (!ok) return false;
  }
  return true;
}

// First indicator atom failing at a known-bad level; O(atoms^2), only ever
// run on failures.
inline std::size_t first_failing_indicator(const AtomSpace& space, const Transformation& map,
                                           const Partition& part, double tol) {
  const std::size_t atoms = space.atom_count();
  for (std::size_t x = 0; x < atoms; ++x) {
    Observable indicator = Observable::zero(atoms);
    indicator.values[x] = 1.0;
    const Observable lhs = conditional_expectation(compose(indicator, map), part, space);
    const Observable rhs = compose(conditional_expectation(indicator, part, space), map);
    for (std::size_t i = 0; i < atoms; ++i) {
      if (std::abs(lhs.values[i] - rhs.values[i]) > tol) return x;
    }
  }
  return atoms;  // not reached when the fast check failed honestly
}

}  // namespace detail

inline CommutativityReport commutativity_check(const AtomSpace& space, const Transformation& map,
                                               const BackwardFiltration& filtration,
                                               double tol = kIdentityTol) {
  detail::require(map.atom_count() == space.atom_count() &&
                      filtration.atom_count() == space.atom_count(),
                  "commutativity_check: atom counts differ");
  for (std::size_t n = 0; n <= filtration.depth(); ++n) {
    if (!detail::level_commutes(space, map, filtration.level(n), tol)) {
      CommutativityReport report;
      report.passed = false;
      report.witness = CommutativityWitness{
          n, detail::first_failing_indicator(space, map, filtration.level(n), tol)};
      return report;
    }
  }
  return CommutativityReport{true, std::nullopt};
}

// Measure-preserving map bundled with its space and a backward filtration.
// commutativity_checked() is only ever true when commutativity_check passed.
class DynamicalSystem {
 public:
  DynamicalSystem(AtomSpace space, Transformation map, BackwardFiltration filtration)
      : space_(std::move(space)), map_(std::move(map)), filtration_(std::move(filtration)) {
    detail::require(map_.atom_count() == space_.atom_count(),
                    "DynamicalSystem: transformation and space differ in atom count");
    detail::require(filtration_.atom_count() == space_.atom_count(),
                    "DynamicalSystem: filtration and space differ in atom count");
    detail::require(is_measure_preserving(map_, space_),
                    "DynamicalSystem: transformation is not measure-preserving");
  }

  static DynamicalSystem with_verified_commutativity(AtomSpace space, Transformation map,
                                                     BackwardFiltration filtration) {
    DynamicalSystem system(std::move(space), std::move(map), std::move(filtration));
    const CommutativityReport report = commutativity_check(system.space_, system.map_,
                                                           system.filtration_);
    detail::require(report.passed, "DynamicalSystem: commutativity check failed");
    system.commutativity_checked_ = true;
    return system;
  }

  const AtomSpace& space() const { return space_; }
  const Transformation& map() const { return map_; }
  const BackwardFiltration& filtration() const { return filtration_; }
  std::size_t atom_count() const { return space_.atom_count(); }
  std::size_t depth() const { return filtration_.depth(); }
  bool commutativity_checked() const { return commutativity_checked_; }

 private:
  AtomSpace space_;
  Transformation map_;
  BackwardFiltration filtration_;
  bool commutativity_checked_ = false;
};

inline CommutativityReport commutativity_check(const DynamicalSystem& system,
                                               double tol = kIdentityTol) {
  return commutativity_check(system.space(), system.map(), system.filtration(), tol);
}

// -------------------------------------------------------------------------
// Catalog of systems satisfying the commutativity condition. All are group
// translations with coset filtrations; the check still runs at construction.

inline constexpr unsigned kMaxCyclicLog2 = 24;

// Z_{2^m} uniform, T = +1, level n = residue classes mod 2^{m-n}.
inline DynamicalSystem cyclic_rotation_system(unsigned m, unsigned depth) {
  detail::require(m <= kMaxCyclicLog2, "cyclic_rotation: m too large");
  detail::require(depth <= m, "cyclic_rotation: depth must not exceed m");
  const std::size_t atoms = std::size_t{1} << m;

  std::vector<std::uint32_t> image(atoms);
  for (std::size_t i = 0; i < atoms; ++i)
    image[i] = static_cast<std::uint32_t>((i + 1) & (atoms - 1));

  std::vector<Partition> levels;
  levels.reserve(depth + 1);
  for (unsigned n = 0; n <= depth; ++n) {
    const std::size_t block_count = std::size_t{1} << (m - n);
    const std::uint32_t mask = static_cast<std::uint32_t>(block_count - 1);
    std::vector<std::uint32_t> block_of(atoms);
    for (std::size_t i = 0; i < atoms; ++i) block_of[i] = static_cast<std::uint32_t>(i) & mask;
    levels.emplace_back(std::move(block_of), block_count);
  }

  return DynamicalSystem::with_verified_commutativity(
      AtomSpace::uniform(atoms), Transformation(std::move(image)),
      BackwardFiltration(std::move(levels)));
}

using GroupElement = std::vector<std::uint32_t>;

namespace detail {

struct ProductGroup {
  std::vector<std::uint32_t> moduli;
  std::vector<std::size_t> strides;
  std::size_t order = 1;

  explicit ProductGroup(std::vector<std::uint32_t> mods) : moduli(std::move(mods)) {
    require(!moduli.empty(), "group_translation: needs at least one cyclic factor");
    for (std::uint32_t mod : moduli)
      require(mod >= 1, "group_translation: moduli must be positive");
    strides.resize(moduli.size());
    std::size_t stride = 1;
    for (std::size_t j = moduli.size(); j-- > 0;) {
      strides[j] = stride;
      stride *= moduli[j];
      require(stride <= (std::size_t{1} << 26), "group_translation: group too large");
    }
    order = stride;
  }

  std::size_t encode(const GroupElement& x) const {
    require(x.size() == moduli.size(), "group_translation: element arity mismatch");
    std::size_t idx = 0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      require(x[j] < moduli[j], "group_translation: element coordinate out of range");
      idx += x[j] * strides[j];
    }
    return idx;
  }

  std::size_t add(std::size_t atom, std::size_t elem) const {
    std::size_t out = 0;
    for (std::size_t j = 0; j < moduli.size(); ++j) {
      const std::size_t a = (atom / strides[j]) % moduli[j];
      const std::size_t b = (elem / strides[j]) % moduli[j];
      out += ((a + b) % moduli[j]) * strides[j];
    }
    return out;
  }
};

}  // namespace detail

// Translation by `shift` on a product of cyclic groups; level n+1 of the
// filtration is the coset partition of subgroup_chain[n]. The chain must be
// nondecreasing under inclusion (repeats are allowed, giving filtrations
// that stabilize before their depth); level 0 is always the discrete
// partition. Each chain entry is validated to be a subgroup.
inline DynamicalSystem group_translation_system(
    const std::vector<std::uint32_t>& moduli, const GroupElement& shift,
    const std::vector<std::vector<GroupElement>>& subgroup_chain) {
  const detail::ProductGroup group(moduli);
  const std::size_t atoms = group.order;

  std::vector<std::uint32_t> image(atoms);
  const std::size_t shift_idx = group.encode(shift);
  for (std::size_t i = 0; i < atoms; ++i)
    image[i] = static_cast<std::uint32_t>(group.add(i, shift_idx));

  std::vector<Partition> levels;
  levels.reserve(subgroup_chain.size() + 1);
  levels.push_back(Partition::discrete(atoms));

  std::vector<std::size_t> previous;  // sorted element indices of the previous subgroup
  previous.push_back(0);
  for (const auto& chain_entry : subgroup_chain) {
    std::vector<std::size_t> subgroup;
    subgroup.reserve(chain_entry.size());
    for (const auto& element : chain_entry) subgroup.push_back(group.encode(element));
    std::sort(subgroup.begin(), subgroup.end());
    subgroup.erase(std::unique(subgroup.begin(), subgroup.end()), subgroup.end());

    const auto contains = [&subgroup](std::size_t idx) {
      return std::binary_search(subgroup.begin(), subgroup.end(), idx);
    };
    detail::require(contains(0), "group_translation: chain entry must contain the identity");
    for (std::size_t h1 : subgroup)
      for (std::size_t h2 : subgroup)
        detail::require(contains(group.add(h1, h2)),
                        "group_translation: chain entry is not a subgroup");
    for (std::size_t h : previous)
      detail::require(contains(h), "group_translation: chain must be nondecreasing");

    constexpr std::uint32_t unset = 0xffffffffu;
    std::vector<std::uint32_t> block_of(atoms, unset);
    std::size_t next_block = 0;
    for (std::size_t i = 0; i < atoms; ++i) {
      if (block_of[i] != unset) continue;
      const std::uint32_t b = static_cast<std::uint32_t>(next_block++);
      for (std::size_t h : subgroup) block_of[group.add(i, h)] = b;
    }
    levels.emplace_back(std::move(block_of), next_block);
    previous = std::move(subgroup);
  }

  return DynamicalSystem::with_verified_commutativity(
      AtomSpace::uniform(atoms), Transformation(std::move(image)),
      BackwardFiltration(std::move(levels)));
}

// Two commuting translations on Z_{2^m1} x Z_{2^m2}. The bundled system
// carries the first shift as its map; both shifts are exposed for the
// double-average experiments. Filtration level n groups residues modulo
// (2^{m1-n}, 2^{m2-n}), clamped at zero.
struct ProductTorusSystem {
  DynamicalSystem system;
  Transformation first_shift;
  Transformation second_shift;
  unsigned m1 = 0;
  unsigned m2 = 0;
};

inline ProductTorusSystem product_torus_system(unsigned m1, unsigned m2,
                                               std::pair<std::uint32_t, std::uint32_t> shift_a =
                                                   {1, 0},
                                               std::pair<std::uint32_t, std::uint32_t> shift_b = {
                                                   0, 1}) {
  detail::require(m1 + m2 <= 26, "product_torus: group too large");
  const std::size_t nx = std::size_t{1} << m1;
  const std::size_t ny = std::size_t{1} << m2;
  const std::size_t atoms = nx * ny;

  const auto translation = [&](std::uint32_t sx, std::uint32_t sy) {
    std::vector<std::uint32_t> image(atoms);
    for (std::size_t x = 0; x < nx; ++x) {
      for (std::size_t y = 0; y < ny; ++y) {
        const std::size_t tx = (x + sx) & (nx - 1);
        const std::size_t ty = (y + sy) & (ny - 1);
        image[x * ny + y] = static_cast<std::uint32_t>(tx * ny + ty);
      }
    }
    return Transformation(std::move(image));
  };

  const unsigned depth = std::max(m1, m2);
  std::vector<Partition> levels;
  levels.reserve(depth + 1);
  for (unsigned n = 0; n <= depth; ++n) {
    const unsigned r1 = m1 > n ? m1 - n : 0;
    const unsigned r2 = m2 > n ? m2 - n : 0;
    const std::size_t bx = std::size_t{1} << r1;
    const std::size_t by = std::size_t{1} << r2;
    std::vector<std::uint32_t> block_of(atoms);
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t y = 0; y < ny; ++y)
        block_of[x * ny + y] = static_cast<std::uint32_t>((x & (bx - 1)) * by + (y & (by - 1)));
    levels.emplace_back(std::move(block_of), bx * by);
  }

  Transformation first = translation(shift_a.first, shift_a.second);
  Transformation second = translation(shift_b.first, shift_b.second);
  DynamicalSystem system = DynamicalSystem::with_verified_commutativity(
      AtomSpace::uniform(atoms), first, BackwardFiltration(std::move(levels)));
  return ProductTorusSystem{std::move(system), std::move(first), std::move(second), m1, m2};
}

// Swap of atoms 0 and 1 on Z_{2^m} with the residue filtration: measure
// preserving, but fails the commutativity check at level 1. Kept as the
// documented failing input for verification demos and tests.
inline DynamicalSystem transposition_counterexample_system(unsigned m = 2) {
  detail::require(m >= 1 && m <= kMaxCyclicLog2, "transposition_counterexample: bad m");
  const std::size_t atoms = std::size_t{1} << m;
  std::vector<std::uint32_t> image(atoms);
  for (std::size_t i = 0; i < atoms; ++i) image[i] = static_cast<std::uint32_t>(i);
  image[0] = 1;
  image[1] = 0;

  std::vector<Partition> levels;
  for (unsigned n = 0; n <= m; ++n) {
    const std::size_t block_count = std::size_t{1} << (m - n);
    const std::uint32_t mask = static_cast<std::uint32_t>(block_count - 1);
    std::vector<std::uint32_t> block_of(atoms);
    for (std::size_t i = 0; i < atoms; ++i) block_of[i] = static_cast<std::uint32_t>(i) & mask;
    levels.emplace_back(std::move(block_of), block_count);
  }

  return DynamicalSystem(AtomSpace::uniform(atoms), Transformation(std::move(image)),
                         BackwardFiltration(std::move(levels)));
}

}  // namespace empp
