#pragma once

// The bilinear paraproducts: ergodic-martingale, martingale-ergodic, their
// dyadic-resampled variant, the two-filtration product-space paraproduct,
// and double ergodic averages for a pair of commuting transformations.
//
// Conventions: A_N is the Cesaro average over the first N iterates, E_k the
// conditional expectation onto filtration level k, d_k = E_{k+1} - E_k the
// martingale difference. All operators are bilinear in (f, g); n = 0 yields
// the empty sum (a zero observable), never an error.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "empp/dynamics.hpp"
#include "empp/martingale.hpp"
#include "empp/numeric.hpp"
#include "empp/space.hpp"

namespace empp {

namespace detail {

inline void require_paraproduct_inputs(const Observable& f, const Observable& g,
                                       const DynamicalSystem& system, double a, std::size_t n,
                                       const char* who) {
  require(f.size() == system.atom_count() && g.size() == system.atom_count(),
          std::string(who) + ": observables and system differ in atom count");
  require(a > 1.0 && std::isfinite(a), std::string(who) + ": lacunary base must exceed 1");
  require(n <= system.depth(), std::string(who) + ": level exceeds the filtration depth");
}

}  // namespace detail

// sum_{k=0}^{n-1} (A_{floor(a^k)} f) (E_{k+1} g - E_k g).
inline Observable ergodic_martingale_paraproduct(const Observable& f, const Observable& g,
                                                 const DynamicalSystem& system, double a,
                                                 std::size_t n) {
  detail::require_paraproduct_inputs(f, g, system, a, n, "ergodic_martingale_paraproduct");
  Observable acc = Observable::zero(system.atom_count());
  if (n == 0) return acc;

  const ErgodicAverager averager(f, system.map());
  Observable previous = g;  // E_0 g: level 0 is discrete
  Observable next, avg;
  for (std::size_t k = 0; k < n; ++k) {
    conditional_expectation_into(previous, system.filtration().level(k + 1), system.space(), next);
    averager.average_into(floor_power(a, static_cast<unsigned>(k)), avg);
    for (std::size_t i = 0; i < acc.size(); ++i)
      acc.values[i] += avg.values[i] * (next.values[i] - previous.values[i]);
    std::swap(previous, next);
  }
  return acc;
}

// sum_{k=0}^{n-1} (A_{floor(a^{k+1})} f - A_{floor(a^k)} f) (E_{k+1} g).
inline Observable martingale_ergodic_paraproduct(const Observable& f, const Observable& g,
                                                 const DynamicalSystem& system, double a,
                                                 std::size_t n) {
  detail::require_paraproduct_inputs(f, g, system, a, n, "martingale_ergodic_paraproduct");
  Observable acc = Observable::zero(system.atom_count());
  if (n == 0) return acc;

  const ErgodicAverager averager(f, system.map());
  Observable level = g;
  Observable next_level, avg_lo, avg_hi;
  averager.average_into(floor_power(a, 0), avg_lo);
  for (std::size_t k = 0; k < n; ++k) {
    conditional_expectation_into(level, system.filtration().level(k + 1), system.space(),
                                 next_level);
    averager.average_into(floor_power(a, static_cast<unsigned>(k + 1)), avg_hi);
    for (std::size_t i = 0; i < acc.size(); ++i)
      acc.values[i] += (avg_hi.values[i] - avg_lo.values[i]) * next_level.values[i];
    std::swap(level, next_level);
    std::swap(avg_lo, avg_hi);
  }
  return acc;
}

// Max-norm of  Pi^em + Pi^me - (A_{floor(a^n)} f)(E_n g) + f g ; zero in
// exact arithmetic by summation by parts.
inline double summation_by_parts_residual(const Observable& f, const Observable& g,
                                          const DynamicalSystem& system, double a, std::size_t n) {
  detail::require_paraproduct_inputs(f, g, system, a, n, "summation_by_parts_residual");
  const Observable em = ergodic_martingale_paraproduct(f, g, system, a, n);
  const Observable me = martingale_ergodic_paraproduct(f, g, system, a, n);

  const Observable avg = ergodic_average(f, system.map(), floor_power(a, static_cast<unsigned>(n)));
  Observable level = g;
  Observable next;
  for (std::size_t k = 1; k <= n; ++k) {
    conditional_expectation_into(level, system.filtration().level(k), system.space(), next);
    std::swap(level, next);
  }

  double residual = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double lhs = em.values[i] + me.values[i];
    const double rhs = avg.values[i] * level.values[i] - f.values[i] * g.values[i];
    residual = std::max(residual, std::abs(lhs - rhs));
  }
  return residual;
}

// Dyadic resampling of the ergodic-martingale paraproduct:
//   sum_{l=0}^{floor((n-1) log2 a)} (A_{2^l} f) (E_{K(l+1)} g - E_{K(l)} g),
// where K(l) is the smallest k with floor(a^k) >= 2^l. For a = 2 this is
// exactly the plain paraproduct since K is the identity.
inline Observable dyadic_sampled_paraproduct(const Observable& f, const Observable& g,
                                             const DynamicalSystem& system, double a,
                                             std::size_t n) {
  detail::require(n >= 1, "dyadic_sampled_paraproduct: n must be positive");
  detail::require_paraproduct_inputs(f, g, system, a, 0, "dyadic_sampled_paraproduct");
  const unsigned l_max =
      static_cast<unsigned>(std::floor(static_cast<double>(n - 1) * std::log2(a)));

  std::vector<unsigned> sample_index(l_max + 2);
  for (unsigned l = 0; l <= l_max + 1; ++l) sample_index[l] = dyadic_sampling_index(a, l);
  detail::require(sample_index[l_max + 1] <= system.depth(),
                  "dyadic_sampled_paraproduct: filtration too shallow for the sampled levels");

  // E_0 .. E_{K(l_max+1)} via the usual level-from-previous chain.
  std::vector<Observable> levels(sample_index[l_max + 1] + 1);
  levels[0] = g;
  for (std::size_t k = 1; k < levels.size(); ++k)
    conditional_expectation_into(levels[k - 1], system.filtration().level(k), system.space(),
                                 levels[k]);

  const ErgodicAverager averager(f, system.map());
  Observable acc = Observable::zero(system.atom_count());
  Observable avg;
  for (unsigned l = 0; l <= l_max; ++l) {
    averager.average_into(floor_power(2.0, l), avg);
    const Observable& hi = levels[sample_index[l + 1]];
    const Observable& lo = levels[sample_index[l]];
    for (std::size_t i = 0; i < acc.size(); ++i)
      acc.values[i] += avg.values[i] * (hi.values[i] - lo.values[i]);
  }
  return acc;
}

// -------------------------------------------------------------------------
// Product spaces with one forward filtration per coordinate.

struct ProductObservable {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // row-major

  ProductObservable() = default;
  ProductObservable(std::size_t r, std::size_t c, std::vector<double> v)
      : rows(r), cols(c), values(std::move(v)) {
    detail::require(values.size() == rows * cols, "ProductObservable: shape mismatch");
  }

  static ProductObservable zero(std::size_t r, std::size_t c) {
    return ProductObservable(r, c, std::vector<double>(r * c, 0.0));
  }

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
};

class ProductSpace {
 public:
  ProductSpace(AtomSpace first, AtomSpace second, ForwardFiltration first_filtration,
               ForwardFiltration second_filtration)
      : first_(std::move(first)),
        second_(std::move(second)),
        filtration1_(std::move(first_filtration)),
        filtration2_(std::move(second_filtration)) {
    detail::require(filtration1_.atom_count() == first_.atom_count(),
                    "ProductSpace: first filtration and space differ in atom count");
    detail::require(filtration2_.atom_count() == second_.atom_count(),
                    "ProductSpace: second filtration and space differ in atom count");
  }

  const AtomSpace& first() const { return first_; }
  const AtomSpace& second() const { return second_; }
  const ForwardFiltration& first_filtration() const { return filtration1_; }
  const ForwardFiltration& second_filtration() const { return filtration2_; }
  std::size_t rows() const { return first_.atom_count(); }
  std::size_t cols() const { return second_.atom_count(); }

  double weight(std::size_t r, std::size_t c) const {
    return first_.weight(r) * second_.weight(c);
  }

 private:
  AtomSpace first_, second_;
  ForwardFiltration filtration1_, filtration2_;
};

namespace detail {

inline void require_shape(const ProductObservable& F, const ProductSpace& ps, const char* who) {
  require(F.rows == ps.rows() && F.cols == ps.cols(),
          std::string(who) + ": observable shape does not match the product space");
}

}  // namespace detail

// Conditioning in the first coordinate only: for each fixed column, the
// weighted block mean over rows.
inline ProductObservable conditional_expectation_first(const ProductObservable& F,
                                                       const Partition& part,
                                                       const ProductSpace& ps) {
  detail::require_shape(F, ps, "conditional_expectation_first");
  detail::require(part.atom_count() == ps.rows(),
                  "conditional_expectation_first: partition does not match the first coordinate");
  const std::size_t blocks = part.block_count();
  std::vector<double> sums(blocks * F.cols, 0.0);
  std::vector<double> block_weight(blocks, 0.0);
  for (std::size_t r = 0; r < F.rows; ++r) {
    const std::uint32_t b = part.block_of(r);
    const double w = ps.first().weight(r);
    block_weight[b] += w;
    for (std::size_t c = 0; c < F.cols; ++c) sums[b * F.cols + c] += w * F.at(r, c);
  }
  ProductObservable out = ProductObservable::zero(F.rows, F.cols);
  for (std::size_t r = 0; r < F.rows; ++r) {
    const std::uint32_t b = part.block_of(r);
    for (std::size_t c = 0; c < F.cols; ++c) out.at(r, c) = sums[b * F.cols + c] / block_weight[b];
  }
  return out;
}

// Conditioning in the second coordinate only.
inline ProductObservable conditional_expectation_second(const ProductObservable& G,
                                                        const Partition& part,
                                                        const ProductSpace& ps) {
  detail::require_shape(G, ps, "conditional_expectation_second");
  detail::require(part.atom_count() == ps.cols(),
                  "conditional_expectation_second: partition does not match the second coordinate");
  const std::size_t blocks = part.block_count();
  std::vector<double> sums(G.rows * blocks, 0.0);
  std::vector<double> block_weight(blocks, 0.0);
  for (std::size_t c = 0; c < G.cols; ++c) block_weight[part.block_of(c)] += ps.second().weight(c);
  for (std::size_t r = 0; r < G.rows; ++r)
    for (std::size_t c = 0; c < G.cols; ++c)
      sums[r * blocks + part.block_of(c)] += ps.second().weight(c) * G.at(r, c);
  ProductObservable out = ProductObservable::zero(G.rows, G.cols);
  for (std::size_t r = 0; r < G.rows; ++r)
    for (std::size_t c = 0; c < G.cols; ++c)
      out.at(r, c) = sums[r * blocks + part.block_of(c)] / block_weight[part.block_of(c)];
  return out;
}

// sum_{k=0}^{n-1} E_1(F|U_k) (E_2(G|V_{k+1}) - E_2(G|V_k))  on a product
// space with forward filtrations (U_i), (V_i) acting per coordinate.
inline ProductObservable martingale_martingale_paraproduct(const ProductObservable& F,
                                                           const ProductObservable& G,
                                                           const ProductSpace& ps, std::size_t n) {
  detail::require_shape(F, ps, "martingale_martingale_paraproduct");
  detail::require_shape(G, ps, "martingale_martingale_paraproduct");
  detail::require(n <= ps.first_filtration().depth() && n <= ps.second_filtration().depth(),
                  "martingale_martingale_paraproduct: level exceeds a filtration depth");

  ProductObservable acc = ProductObservable::zero(ps.rows(), ps.cols());
  if (n == 0) return acc;

  ProductObservable g_level = conditional_expectation_second(G, ps.second_filtration().level(0), ps);
  for (std::size_t k = 0; k < n; ++k) {
    const ProductObservable f_level =
        conditional_expectation_first(F, ps.first_filtration().level(k), ps);
    ProductObservable g_next =
        conditional_expectation_second(G, ps.second_filtration().level(k + 1), ps);
    for (std::size_t i = 0; i < acc.values.size(); ++i)
      acc.values[i] += f_level.values[i] * (g_next.values[i] - g_level.values[i]);
    g_level = std::move(g_next);
  }
  return acc;
}

// Weighted L^p norm on the product space.
inline double lp_norm(const ProductObservable& F, Exponent p, const ProductSpace& ps) {
  detail::require_shape(F, ps, "lp_norm");
  if (p.is_infinite) {
    double m = 0.0;
    for (double v : F.values) m = std::max(m, std::abs(v));
    return m;
  }
  detail::require(p.value > 0.0, "lp_norm: exponent must be positive");
  CompensatedSum acc;
  for (std::size_t r = 0; r < F.rows; ++r)
    for (std::size_t c = 0; c < F.cols; ++c)
      acc.add(ps.weight(r, c) * std::pow(std::abs(F.at(r, c)), p.value));
  return std::pow(acc.value(), 1.0 / p.value);
}

// -------------------------------------------------------------------------
// Double ergodic averages for commuting transformations.

// First atom where S(T(.)) and T(S(.)) disagree, if any.
inline std::optional<std::size_t> first_noncommuting_atom(const Transformation& s,
                                                          const Transformation& t) {
  detail::require(s.atom_count() == t.atom_count(),
                  "first_noncommuting_atom: transformations differ in atom count");
  for (std::size_t i = 0; i < s.atom_count(); ++i)
    if (s.image_of[t.image_of[i]] != t.image_of[s.image_of[i]]) return i;
  return std::nullopt;
}

// B_N(f, g) = (1/N) sum_{k=0}^{N-1} (f o S^k)(g o T^k); S and T must commute
// exactly as atom maps.
inline Observable double_ergodic_average(const Observable& f, const Observable& g,
                                         const Transformation& map_s, const Transformation& map_t,
                                         std::uint64_t N) {
  detail::require(f.size() == map_s.atom_count() && g.size() == map_t.atom_count(),
                  "double_ergodic_average: observables and transformations differ in atom count");
  detail::require(N >= 1, "double_ergodic_average: N must be a positive integer");
  if (const auto witness = first_noncommuting_atom(map_s, map_t)) {
    throw std::invalid_argument("double_ergodic_average: transformations do not commute (atom " +
                                std::to_string(*witness) + ")");
  }

  const std::size_t atoms = f.size();
  std::vector<double> fs = f.values, gt = g.values, fs_next(atoms), gt_next(atoms);
  std::vector<double> acc(atoms, 0.0);
  for (std::size_t i = 0; i < atoms; ++i) acc[i] = fs[i] * gt[i];
  for (std::uint64_t k = 1; k < N; ++k) {
    for (std::size_t i = 0; i < atoms; ++i) fs_next[i] = fs[map_s.image_of[i]];
    for (std::size_t i = 0; i < atoms; ++i) gt_next[i] = gt[map_t.image_of[i]];
    fs.swap(fs_next);
    gt.swap(gt_next);
    for (std::size_t i = 0; i < atoms; ++i) acc[i] += fs[i] * gt[i];
  }
  const double inv_n = 1.0 / static_cast<double>(N);
  for (double& v : acc) v *= inv_n;
  return Observable(std::move(acc));
}

}  // namespace empp
