#pragma once

// Experiment harness: transference to the integer model, empirical constant
// estimation for the paraproduct norm inequality, Cauchy/oscillation
// profiling of the convergence claims, double-average profiles, and the
// deterministic random inputs everything draws from.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "empp/dynamics.hpp"
#include "empp/martingale.hpp"
#include "empp/numeric.hpp"
#include "empp/paraproduct.hpp"
#include "empp/rng.hpp"
#include "empp/space.hpp"

namespace empp {

inline Observable standard_normal_observable(std::size_t atom_count, Rng& rng) {
  std::vector<double> v(atom_count);
  for (double& x : v) x = rng.next_gaussian();
  return Observable(std::move(v));
}

inline Observable student_t3_observable(std::size_t atom_count, Rng& rng) {
  std::vector<double> v(atom_count);
  for (double& x : v) x = rng.next_student_t3();
  return Observable(std::move(v));
}

// -------------------------------------------------------------------------
// System specification, shared by config files and the CLI.

struct SystemSpec {
  enum class Kind { cyclic_rotation, group_translation, product_torus, transposition };

  Kind kind = Kind::cyclic_rotation;
  // cyclic_rotation / transposition
  unsigned m = 2;
  unsigned depth = 2;
  // group_translation
  std::vector<std::uint32_t> moduli;
  GroupElement shift;
  std::vector<std::vector<GroupElement>> chain;
  // product_torus
  unsigned m1 = 2;
  unsigned m2 = 2;
  std::pair<std::uint32_t, std::uint32_t> torus_shift_a{1, 0};
  std::pair<std::uint32_t, std::uint32_t> torus_shift_b{0, 1};
};

struct BuiltSystem {
  DynamicalSystem system;
  // Present for product_torus: the two commuting translations.
  std::optional<std::pair<Transformation, Transformation>> commuting_pair;
};

inline BuiltSystem build_system(const SystemSpec& spec) {
  switch (spec.kind) {
    case SystemSpec::Kind::cyclic_rotation:
      return BuiltSystem{cyclic_rotation_system(spec.m, spec.depth), std::nullopt};
    case SystemSpec::Kind::group_translation:
      return BuiltSystem{group_translation_system(spec.moduli, spec.shift, spec.chain),
                         std::nullopt};
    case SystemSpec::Kind::product_torus: {
      ProductTorusSystem torus =
          product_torus_system(spec.m1, spec.m2, spec.torus_shift_a, spec.torus_shift_b);
      auto pair = std::make_pair(torus.first_shift, torus.second_shift);
      return BuiltSystem{std::move(torus.system), std::move(pair)};
    }
    case SystemSpec::Kind::transposition:
      return BuiltSystem{transposition_counterexample_system(spec.m), std::nullopt};
  }
  throw std::invalid_argument("build_system: unknown system kind");
}

// -------------------------------------------------------------------------
// Experiment configuration.

struct ExperimentConfig {
  double a = 2.0;
  double p = 2.0;
  double q = 2.0;
  double r = 1.0;
  unsigned horizon_n = 1;
  std::uint64_t seed = 0;
  unsigned trials = 1;
  bool heavy_tailed = false;  // Student-t(3) inputs instead of standard normal
  SystemSpec system;

  void validate() const {
    detail::require(a > 1.0 && std::isfinite(a), "ExperimentConfig: a must exceed 1");
    detail::require(p > 0.0 && q > 0.0 && r > 0.0, "ExperimentConfig: exponents must be positive");
    detail::require(std::abs(1.0 / r - 1.0 / p - 1.0 / q) <= kIdentityTol,
                    "ExperimentConfig: exponents must satisfy 1/r = 1/p + 1/q");
    detail::require(horizon_n >= 1, "ExperimentConfig: horizon must be positive");
    detail::require(trials >= 1, "ExperimentConfig: trial count must be positive");
  }

  // Non-fatal: flags exponent triples outside the proven convergence range.
  std::vector<std::string> range_warnings() const {
    std::vector<std::string> warnings;
    const double lo = 4.0 / 3.0 - 1e-9, hi = 4.0 + 1e-9;
    if (p < lo || p > hi) warnings.push_back("p outside [4/3, 4]");
    if (q < lo || q > hi) warnings.push_back("q outside [4/3, 4]");
    if (r < 1.0 - 1e-9 || r > 4.0 / 3.0 + 1e-9) warnings.push_back("r outside [1, 4/3]");
    return warnings;
  }
};

// -------------------------------------------------------------------------
// Transference to Z x Omega along forward orbits.

// values[m][i] = f(T^m i) for m = 0 .. 2^{n+1}-1 (zero outside the window,
// which the finite matrix encodes by omission).
struct IntegerModel {
  std::size_t track_length = 0;
  std::size_t atom_count = 0;
  std::vector<double> values;  // row-major, track_length x atom_count

  double at(std::size_t m, std::size_t atom) const { return values[m * atom_count + atom]; }
};

inline constexpr std::size_t kMaxIntegerModelEntries = std::size_t{1} << 26;

inline IntegerModel transfer_to_integer_model(const Observable& f, const DynamicalSystem& system,
                                              unsigned n) {
  detail::require(f.size() == system.atom_count(),
                  "transfer_to_integer_model: observable and system differ in atom count");
  if (n + 1 >= 63) throw std::range_error("transfer_to_integer_model: track length overflows");
  const std::size_t track = std::size_t{1} << (n + 1);
  const std::size_t atoms = system.atom_count();
  if (track > kMaxIntegerModelEntries / atoms)
    throw std::range_error("transfer_to_integer_model: model too large");

  IntegerModel model;
  model.track_length = track;
  model.atom_count = atoms;
  model.values.resize(track * atoms);

  const auto& image = system.map().image_of;
  for (std::size_t i = 0; i < atoms; ++i) model.values[i] = f.values[i];
  for (std::size_t m = 1; m < track; ++m) {
    const double* prev = model.values.data() + (m - 1) * atoms;
    double* row = model.values.data() + m * atoms;
    for (std::size_t i = 0; i < atoms; ++i) row[i] = prev[image[i]];
  }
  return model;
}

// L^p norm under counting measure (x) atom weights.
inline double lp_norm(const IntegerModel& model, Exponent p, const AtomSpace& space) {
  detail::require(model.atom_count == space.atom_count(),
                  "lp_norm: integer model and space differ in atom count");
  if (p.is_infinite) {
    double m = 0.0;
    for (double v : model.values) m = std::max(m, std::abs(v));
    return m;
  }
  detail::require(p.value > 0.0, "lp_norm: exponent must be positive");
  CompensatedSum acc;
  for (std::size_t m = 0; m < model.track_length; ++m) {
    const double* row = model.values.data() + m * model.atom_count;
    for (std::size_t i = 0; i < model.atom_count; ++i)
      acc.add(space.weight(i) * std::pow(std::abs(row[i]), p.value));
  }
  return std::pow(acc.value(), 1.0 / p.value);
}

// -------------------------------------------------------------------------
// Reports.

struct OscillationStats {
  std::vector<double> per_atom;
  double max_oscillation = 0.0;
  double epsilon = 0.0;
  double exceptional_weight = 0.0;  // total weight of atoms with oscillation > epsilon
};

struct ConvergenceReport {
  std::vector<double> level_norms;        // per level/profile point
  std::vector<double> increments;         // consecutive-difference norms
  std::size_t stabilization_index = 0;    // first index after which increments < 1e-14
  std::vector<double> trial_ratios;       // per-trial max paraproduct norm ratio
  std::vector<double> running_max_ratio;  // prefix maximum, monotone by construction
  double max_ratio = 0.0;                 // empirical lower envelope of the constant
  std::size_t resampled_trials = 0;       // degenerate zero-norm draws replaced
  std::optional<OscillationStats> oscillation;
  std::vector<double> final_values;  // last accumulated observable, when meaningful
};

inline constexpr double kStabilizationTol = 1e-14;

namespace detail {

inline std::size_t stabilization_from_increments(const std::vector<double>& increments) {
  // increments[j] corresponds to profile index j+1
  std::size_t index = 0;
  for (std::size_t j = 0; j < increments.size(); ++j)
    if (increments[j] >= kStabilizationTol) index = j + 1;
  return index;
}

}  // namespace detail

// Norm ratio  |Pi_n^em(f,g)|_r / (|f|_p |g|_q)  of a single evaluation.
inline double paraproduct_norm_ratio(const Observable& f, const Observable& g,
                                     const DynamicalSystem& system, double a, std::size_t n,
                                     Exponent p, Exponent q, Exponent r) {
  const Observable pi = ergodic_martingale_paraproduct(f, g, system, a, n);
  return lp_norm(pi, r, system.space()) /
         (lp_norm(f, p, system.space()) * lp_norm(g, q, system.space()));
}

// Randomized estimation of the best constant in
//   |Pi_n^em(f,g)|_r <= C |f|_p |g|_q :
// over seeded trials with i.i.d. standard normal (or Student-t3) inputs,
// records the ratio maximized over n <= horizon per trial and the running
// maximum, an empirical lower bound for C. Bit-reproducible for a fixed
// (config, seed): trial t draws from trial_seed(seed, t) regardless of
// scheduling, and degenerate zero-norm draws are redrawn, not skipped.
inline ConvergenceReport estimate_constant(const ExperimentConfig& config) {
  config.validate();
  const BuiltSystem built = build_system(config.system);
  const DynamicalSystem& system = built.system;
  detail::require(config.horizon_n <= system.depth(),
                  "estimate_constant: horizon exceeds the filtration depth");

  ConvergenceReport report;
  report.trial_ratios.reserve(config.trials);
  report.running_max_ratio.reserve(config.trials);

  const std::size_t atoms = system.atom_count();
  for (unsigned trial = 0; trial < config.trials; ++trial) {
    Rng rng(trial_seed(config.seed, trial));
    const auto draw = [&](Exponent norm_exponent) {
      for (;;) {
        Observable obs = config.heavy_tailed ? student_t3_observable(atoms, rng)
                                             : standard_normal_observable(atoms, rng);
        if (lp_norm(obs, norm_exponent, system.space()) > 0.0) return obs;
        ++report.resampled_trials;
      }
    };
    const Observable f = draw(config.p);
    const Observable g = draw(config.q);
    const double denom =
        lp_norm(f, config.p, system.space()) * lp_norm(g, config.q, system.space());

    const ErgodicAverager averager(f, system.map());
    Observable level = g, next_level, avg;
    Observable acc = Observable::zero(atoms);
    double best = 0.0;
    for (unsigned n = 1; n <= config.horizon_n; ++n) {
      conditional_expectation_into(level, system.filtration().level(n), system.space(),
                                   next_level);
      averager.average_into(floor_power(config.a, n - 1), avg);
      for (std::size_t i = 0; i < atoms; ++i)
        acc.values[i] += avg.values[i] * (next_level.values[i] - level.values[i]);
      std::swap(level, next_level);
      best = std::max(best, lp_norm(acc, config.r, system.space()) / denom);
    }
    report.trial_ratios.push_back(best);
    report.max_ratio = std::max(report.max_ratio, best);
    report.running_max_ratio.push_back(report.max_ratio);
  }
  return report;
}

// Norms and increments |Pi_n - Pi_{n-1}|_r of the paraproduct partial sums
// for n = 1..horizon (Pi_0 = 0), with the detected stabilization index.
inline ConvergenceReport cauchy_profile(const Observable& f, const Observable& g,
                                        const DynamicalSystem& system, double a, Exponent r,
                                        std::size_t horizon) {
  detail::require_paraproduct_inputs(f, g, system, a, horizon, "cauchy_profile");

  ConvergenceReport report;
  const std::size_t atoms = system.atom_count();
  const ErgodicAverager averager(f, system.map());
  Observable level = g, next_level, avg;
  Observable acc = Observable::zero(atoms), previous_acc = Observable::zero(atoms);
  Observable diff = Observable::zero(atoms);
  for (std::size_t n = 1; n <= horizon; ++n) {
    conditional_expectation_into(level, system.filtration().level(n), system.space(), next_level);
    averager.average_into(floor_power(a, static_cast<unsigned>(n - 1)), avg);
    for (std::size_t i = 0; i < atoms; ++i)
      acc.values[i] += avg.values[i] * (next_level.values[i] - level.values[i]);
    std::swap(level, next_level);

    for (std::size_t i = 0; i < atoms; ++i)
      diff.values[i] = acc.values[i] - previous_acc.values[i];
    report.level_norms.push_back(lp_norm(acc, r, system.space()));
    report.increments.push_back(lp_norm(diff, r, system.space()));
    previous_acc = acc;
  }
  report.stabilization_index = detail::stabilization_from_increments(report.increments);
  report.final_values = acc.values;
  return report;
}

// Pointwise oscillation  max_{n0 <= m1 < m2 <= horizon} |Pi_{m1} - Pi_{m2}|
// and the weight of the set where it exceeds epsilon.
inline OscillationStats oscillation_probe(const Observable& f, const Observable& g,
                                          const DynamicalSystem& system, double a, std::size_t n0,
                                          std::size_t horizon, double epsilon) {
  detail::require_paraproduct_inputs(f, g, system, a, horizon, "oscillation_probe");
  detail::require(n0 < horizon, "oscillation_probe: n0 must be below the horizon");

  const std::size_t atoms = system.atom_count();
  const ErgodicAverager averager(f, system.map());
  Observable level = g, next_level, avg;
  Observable acc = Observable::zero(atoms);
  std::vector<double> lo, hi;
  for (std::size_t n = 1; n <= horizon; ++n) {
    conditional_expectation_into(level, system.filtration().level(n), system.space(), next_level);
    averager.average_into(floor_power(a, static_cast<unsigned>(n - 1)), avg);
    for (std::size_t i = 0; i < atoms; ++i)
      acc.values[i] += avg.values[i] * (next_level.values[i] - level.values[i]);
    std::swap(level, next_level);

    if (n == n0) {
      lo = acc.values;
      hi = acc.values;
    } else if (n > n0) {
      if (lo.empty()) {  // n0 == 0: the empty partial sum participates
        lo.assign(atoms, 0.0);
        hi.assign(atoms, 0.0);
      }
      for (std::size_t i = 0; i < atoms; ++i) {
        lo[i] = std::min(lo[i], acc.values[i]);
        hi[i] = std::max(hi[i], acc.values[i]);
      }
    }
  }
  if (lo.empty()) {
    lo.assign(atoms, 0.0);
    hi.assign(atoms, 0.0);
  }

  OscillationStats stats;
  stats.epsilon = epsilon;
  stats.per_atom.resize(atoms);
  CompensatedSum weight;
  for (std::size_t i = 0; i < atoms; ++i) {
    stats.per_atom[i] = hi[i] - lo[i];
    stats.max_oscillation = std::max(stats.max_oscillation, stats.per_atom[i]);
    if (stats.per_atom[i] > epsilon) weight.add(system.space().weight(i));
  }
  stats.exceptional_weight = weight.value();
  return stats;
}

// L^2 Cauchy profile of the double averages B_N(f,g) along an increasing
// list of N, with pointwise oscillation across the profile points.
inline ConvergenceReport double_average_profile(const Observable& f, const Observable& g,
                                                const Transformation& map_s,
                                                const Transformation& map_t,
                                                const AtomSpace& space,
                                                const std::vector<std::uint64_t>& times) {
  detail::require(f.size() == space.atom_count() && g.size() == space.atom_count(),
                  "double_average_profile: observables and space differ in atom count");
  detail::require(!times.empty() && times.front() >= 1,
                  "double_average_profile: times must be positive");
  for (std::size_t i = 0; i + 1 < times.size(); ++i)
    detail::require(times[i] < times[i + 1],
                    "double_average_profile: times must be strictly increasing");
  if (const auto witness = first_noncommuting_atom(map_s, map_t)) {
    throw std::invalid_argument("double_average_profile: transformations do not commute (atom " +
                                std::to_string(*witness) + ")");
  }

  const std::size_t atoms = f.size();
  std::vector<double> fs = f.values, gt = g.values, fs_next(atoms), gt_next(atoms);
  std::vector<double> sum(atoms, 0.0);
  for (std::size_t i = 0; i < atoms; ++i) sum[i] = fs[i] * gt[i];

  ConvergenceReport report;
  std::vector<double> previous, lo, hi;
  std::size_t next_time = 0;
  Observable snapshot = Observable::zero(atoms), diff = Observable::zero(atoms);
  for (std::uint64_t k = 1; k <= times.back(); ++k) {
    if (k == times[next_time]) {
      const double inv = 1.0 / static_cast<double>(k);
      for (std::size_t i = 0; i < atoms; ++i) snapshot.values[i] = sum[i] * inv;
      report.level_norms.push_back(lp_norm(snapshot, 2.0, space));
      if (!previous.empty()) {
        for (std::size_t i = 0; i < atoms; ++i) diff.values[i] = snapshot.values[i] - previous[i];
        report.increments.push_back(lp_norm(diff, 2.0, space));
      }
      if (lo.empty()) {
        lo = snapshot.values;
        hi = snapshot.values;
      } else {
        for (std::size_t i = 0; i < atoms; ++i) {
          lo[i] = std::min(lo[i], snapshot.values[i]);
          hi[i] = std::max(hi[i], snapshot.values[i]);
        }
      }
      previous = snapshot.values;
      ++next_time;
      if (next_time == times.size()) break;
    }
    for (std::size_t i = 0; i < atoms; ++i) fs_next[i] = fs[map_s.image_of[i]];
    for (std::size_t i = 0; i < atoms; ++i) gt_next[i] = gt[map_t.image_of[i]];
    fs.swap(fs_next);
    gt.swap(gt_next);
    for (std::size_t i = 0; i < atoms; ++i) sum[i] += fs[i] * gt[i];
  }

  report.stabilization_index = detail::stabilization_from_increments(report.increments);
  report.final_values = previous;
  OscillationStats osc;
  osc.per_atom.resize(atoms);
  for (std::size_t i = 0; i < atoms; ++i) {
    osc.per_atom[i] = hi[i] - lo[i];
    osc.max_oscillation = std::max(osc.max_oscillation, osc.per_atom[i]);
  }
  osc.epsilon = 0.0;
  osc.exceptional_weight = 0.0;
  report.oscillation = std::move(osc);
  return report;
}

// Envelope scaling across system sizes: estimate_constant on
// cyclic_rotation(m, depth = m) for m in [m_lo, m_hi], same seed and trial
// budget. Exploration output, no convergence claim attached.
struct SweepPoint {
  unsigned m = 0;
  double max_ratio = 0.0;
};

inline std::vector<SweepPoint> cyclic_sweep(const ExperimentConfig& base, unsigned m_lo,
                                            unsigned m_hi) {
  detail::require(m_lo >= 1 && m_lo <= m_hi, "cyclic_sweep: bad m range");
  std::vector<SweepPoint> points;
  for (unsigned m = m_lo; m <= m_hi; ++m) {
    ExperimentConfig config = base;
    config.system = SystemSpec{};
    config.system.kind = SystemSpec::Kind::cyclic_rotation;
    config.system.m = m;
    config.system.depth = m;
    config.horizon_n = m;
    points.push_back(SweepPoint{m, estimate_constant(config).max_ratio});
  }
  return points;
}

}  // namespace empp
