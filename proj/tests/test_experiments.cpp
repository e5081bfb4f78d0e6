#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "empp/empp.hpp"
#include "support.hpp"

using namespace empp;

namespace {

DynamicalSystem z4() { return cyclic_rotation_system(2, 2); }

ExperimentConfig z4_config() {
  ExperimentConfig config;
  config.a = 2.0;
  config.p = 2.0;
  config.q = 2.0;
  config.r = 1.0;
  config.horizon_n = 2;
  config.seed = 7;
  config.trials = 20;
  config.system.kind = SystemSpec::Kind::cyclic_rotation;
  config.system.m = 2;
  config.system.depth = 2;
  return config;
}

}  // namespace

TEST_CASE("integer model construction and golden norm") {
  const DynamicalSystem system = z4();
  const Observable f(std::vector<double>{1, 0, 0, 0});

  const IntegerModel model = transfer_to_integer_model(f, system, 1);
  CHECK(model.track_length == 4);

  // rows are f o T^m
  for (std::size_t m = 0; m < model.track_length; ++m) {
    const Observable row = oracle::apply_map(f, iterate(system.map(), m));
    for (std::size_t i = 0; i < 4; ++i) CHECK(model.at(m, i) == row.values[i]);
  }

  CHECK(lp_norm(model, 1.0, system.space()) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(lp_norm(f, 1.0, system.space()) == doctest::Approx(0.25).epsilon(1e-14));

  const IntegerModel zero = transfer_to_integer_model(Observable::zero(4), system, 3);
  for (double v : zero.values) CHECK(v == 0.0);

  // constant c: |F|_p^p = 2^{n+1} |c|^p
  const Observable c = Observable::constant(4, -1.5);
  for (unsigned n : {1u, 2u, 4u}) {
    const IntegerModel cm = transfer_to_integer_model(c, system, n);
    for (double p : {1.0, 2.0, 4.0}) {
      const double norm = lp_norm(cm, p, system.space());
      const double expected = std::pow(static_cast<double>(cm.track_length) *
                                           std::pow(1.5, p),
                                       1.0 / p);
      CHECK(norm == doctest::Approx(expected).epsilon(1e-12));
    }
  }

  CHECK_THROWS_AS(transfer_to_integer_model(f, system, 62), std::range_error);
}

TEST_CASE("transference norm identity over random draws") {
  Rng rng(51);
  for (int draw = 0; draw < 20; ++draw) {
    const DynamicalSystem system = testing_inputs::random_catalog_system(rng, 5);
    const Observable f = testing_inputs::random_observable(system.atom_count(), rng);
    const unsigned n = 1 + static_cast<unsigned>(rng.next_u64() % 10);
    if (system.atom_count() * (std::size_t{2} << n) > (std::size_t{1} << 22)) continue;
    const IntegerModel model = transfer_to_integer_model(f, system, n);
    const double scale = std::pow(2.0, -static_cast<double>(n + 1));
    for (double p : {1.0, 4.0 / 3.0, 2.0, 4.0}) {
      const double lhs = std::pow(lp_norm(f, p, system.space()), p);
      const double rhs = scale * std::pow(lp_norm(model, p, system.space()), p);
      CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
    }
  }
}

TEST_CASE("experiment config validation") {
  ExperimentConfig config = z4_config();
  CHECK_NOTHROW(config.validate());
  CHECK(config.range_warnings().empty());

  config.r = 1.1;  // breaks the Hoelder scaling
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);

  config = z4_config();
  config.a = 1.0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);

  // scaling holds but the triple leaves the proven range: warn, don't fail
  config = z4_config();
  config.p = 8.0;
  config.q = 8.0 / 7.0;
  config.r = 1.0;
  CHECK_NOTHROW(config.validate());
  CHECK_FALSE(config.range_warnings().empty());
}

TEST_CASE("single-evaluation norm ratio matches the worked example") {
  const DynamicalSystem system = z4();
  const Observable f(std::vector<double>{1, 0, 0, 0});
  const Observable g(std::vector<double>{1, 2, 3, 4});
  const double ratio = paraproduct_norm_ratio(f, g, system, 2.0, 2, 2.0, 2.0, 1.0);
  CHECK(ratio == doctest::Approx(0.375 / (0.5 * std::sqrt(7.5))).epsilon(1e-12));

  // a constant g makes the paraproduct, hence the ratio, vanish
  CHECK(paraproduct_norm_ratio(f, Observable::constant(4, 3.5), system, 2.0, 2, 2.0, 2.0, 1.0) <=
        1e-14);
}

TEST_CASE("estimate_constant is deterministic and monotone") {
  const ExperimentConfig config = z4_config();
  const ConvergenceReport first = estimate_constant(config);
  const ConvergenceReport second = estimate_constant(config);

  REQUIRE(first.trial_ratios.size() == config.trials);
  CHECK(first.trial_ratios == second.trial_ratios);  // bitwise
  CHECK(first.running_max_ratio == second.running_max_ratio);
  CHECK(first.max_ratio == second.max_ratio);
  CHECK(first.resampled_trials == 0);

  for (std::size_t t = 0; t + 1 < first.running_max_ratio.size(); ++t)
    CHECK(first.running_max_ratio[t] <= first.running_max_ratio[t + 1]);
  CHECK(first.max_ratio == first.running_max_ratio.back());

  // a prefix of trials agrees with a shorter run
  ExperimentConfig shorter = config;
  shorter.trials = 7;
  const ConvergenceReport prefix = estimate_constant(shorter);
  for (std::size_t t = 0; t < 7; ++t) CHECK(prefix.trial_ratios[t] == first.trial_ratios[t]);

  // the heavy-tailed variant draws a different, still deterministic stream
  ExperimentConfig heavy = config;
  heavy.heavy_tailed = true;
  const ConvergenceReport h1 = estimate_constant(heavy);
  const ConvergenceReport h2 = estimate_constant(heavy);
  CHECK(h1.trial_ratios == h2.trial_ratios);
  CHECK(h1.trial_ratios != first.trial_ratios);
}

TEST_CASE("cauchy profile golden increments and unrolling") {
  const DynamicalSystem system = z4();
  const Observable f(std::vector<double>{1, 0, 0, 0});
  const Observable g(std::vector<double>{1, 2, 3, 4});

  const ConvergenceReport profile = cauchy_profile(f, g, system, 2.0, 1.0, 2);
  REQUIRE(profile.increments.size() == 2);
  CHECK(profile.increments[1] == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(profile.level_norms[1] == doctest::Approx(0.375).epsilon(1e-12));

  // increments are the r-norms of single paraproduct terms
  Rng rng(86);
  for (int draw = 0; draw < 10; ++draw) {
    const DynamicalSystem sys = testing_inputs::random_catalog_system(rng, 6);
    if (sys.depth() == 0) continue;
    const std::size_t atoms = sys.atom_count();
    const Observable rf = testing_inputs::random_observable(atoms, rng);
    const Observable rg = testing_inputs::random_observable(atoms, rng);
    const double a = 1.5 + rng.next_unit();
    const double r = 1.0 + rng.next_unit();
    const ConvergenceReport prof = cauchy_profile(rf, rg, sys, a, r, sys.depth());
    const MartingaleSequence mart = backward_martingale(rg, sys.filtration(), sys.space());
    const auto diffs = martingale_differences(mart);
    for (std::size_t n = 1; n <= sys.depth(); ++n) {
      const Observable avg = oracle::ergodic_average(
          rf, sys.map(), floor_power(a, static_cast<unsigned>(n - 1)));
      Observable term{std::vector<double>(atoms)};
      for (std::size_t i = 0; i < atoms; ++i)
        term.values[i] = avg.values[i] * diffs[n - 1].values[i];
      CHECK(std::abs(prof.increments[n - 1] - lp_norm(term, r, sys.space())) <= 1e-12);
    }
  }

  // constant g: all increments zero, stabilization index zero
  const ConvergenceReport flat =
      cauchy_profile(f, Observable::constant(4, 3.0), system, 2.0, 1.0, 2);
  for (double inc : flat.increments) CHECK(inc == 0.0);
  CHECK(flat.stabilization_index == 0);
}

TEST_CASE("oscillation probe golden values and monotonicity") {
  const DynamicalSystem system = z4();
  const Observable f(std::vector<double>{1, 0, 0, 0});
  const Observable g(std::vector<double>{1, 2, 3, 4});

  const OscillationStats stats = oscillation_probe(f, g, system, 2.0, 1, 2, 0.1);
  CHECK(oracle::max_abs_diff(stats.per_atom, {0.25, 0, 0, 0.25}) <= 1e-13);
  CHECK(stats.exceptional_weight == doctest::Approx(0.5).epsilon(1e-14));

  const OscillationStats inf_stats = oscillation_probe(
      f, g, system, 2.0, 1, 2, std::numeric_limits<double>::infinity());
  CHECK(inf_stats.exceptional_weight == 0.0);

  CHECK_THROWS_AS(oscillation_probe(f, g, system, 2.0, 2, 2, 0.1), std::invalid_argument);

  // monotone: nonincreasing in epsilon and in n0
  Rng rng(13);
  for (int draw = 0; draw < 10; ++draw) {
    const DynamicalSystem sys = testing_inputs::random_catalog_system(rng, 6);
    if (sys.depth() < 2) continue;
    const Observable rf = testing_inputs::random_observable(sys.atom_count(), rng);
    const Observable rg = testing_inputs::random_observable(sys.atom_count(), rng);
    double previous = std::numeric_limits<double>::infinity();
    for (double eps : {0.0, 0.01, 0.1, 1.0, 10.0}) {
      const double w =
          oscillation_probe(rf, rg, sys, 2.0, 0, sys.depth(), eps).exceptional_weight;
      CHECK(w <= previous + 1e-15);
      previous = w;
    }
    previous = std::numeric_limits<double>::infinity();
    for (std::size_t n0 = 0; n0 + 1 <= sys.depth(); ++n0) {
      const double w =
          oscillation_probe(rf, rg, sys, 2.0, n0, sys.depth(), 0.05).exceptional_weight;
      CHECK(w <= previous + 1e-15);
      previous = w;
    }
  }
}

TEST_CASE("oscillation vanishes beyond the stabilization depth") {
  std::vector<GroupElement> h1{{0}, {4}};
  std::vector<GroupElement> full{{0}, {1}, {2}, {3}, {4}, {5}, {6}, {7}};
  const DynamicalSystem system = group_translation_system({8}, {1}, {h1, full, full, full});
  const std::size_t d = stabilization_depth(system.filtration());
  REQUIRE(d == 2);

  Rng rng(20);
  const Observable f = testing_inputs::random_observable(8, rng);
  const Observable g = testing_inputs::random_observable(8, rng);
  const OscillationStats stats = oscillation_probe(f, g, system, 1.5, d, 4, 1e-300);
  CHECK(stats.max_oscillation == 0.0);
  CHECK(stats.exceptional_weight == 0.0);
}

TEST_CASE("double average profile") {
  // identity maps: B_N = fg for every N
  const std::size_t atoms = 8;
  const AtomSpace space = AtomSpace::uniform(atoms);
  Rng rng(3030);
  const Observable f = testing_inputs::random_observable(atoms, rng);
  const Observable g = testing_inputs::random_observable(atoms, rng);
  const Transformation id = Transformation::identity(atoms);
  const ConvergenceReport still =
      double_average_profile(f, g, id, id, space, {1, 2, 4, 8});
  for (double inc : still.increments) CHECK(inc <= 1e-14);
  CHECK(still.oscillation->max_oscillation <= 1e-14);

  // constant g: increments match the ergodic-average differences times |c|
  const ProductTorusSystem torus = product_torus_system(2, 2);
  const std::size_t n_atoms = torus.system.atom_count();
  const Observable tf = testing_inputs::random_observable(n_atoms, rng);
  const double c = 2.25;
  const std::vector<std::uint64_t> times{1, 2, 4, 8, 16};
  const ConvergenceReport reduced = double_average_profile(
      tf, Observable::constant(n_atoms, c), torus.first_shift, torus.second_shift,
      torus.system.space(), times);
  const ErgodicAverager averager(tf, torus.first_shift);
  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    const Observable lo = averager.average(times[i]);
    const Observable hi = averager.average(times[i + 1]);
    Observable diff{std::vector<double>(n_atoms)};
    for (std::size_t j = 0; j < n_atoms; ++j)
      diff.values[j] = c * (hi.values[j] - lo.values[j]);
    CHECK(std::abs(reduced.increments[i] - lp_norm(diff, 2.0, torus.system.space())) <= 1e-12);
  }

  // torus run: increments decay and the final snapshot hits the orbit-average
  const Observable tg = testing_inputs::random_observable(n_atoms, rng);
  std::vector<std::uint64_t> powers;
  for (unsigned k = 0; k <= 8; ++k) powers.push_back(std::uint64_t{1} << k);
  const ConvergenceReport prof = double_average_profile(
      tf, tg, torus.first_shift, torus.second_shift, torus.system.space(), powers);
  CHECK(prof.increments.back() <= 1e-2);

  // period of both shifts is 4, so B_256 is exactly the limit average
  const Observable limit = oracle::double_average(tf, tg, torus.first_shift, torus.second_shift, 4);
  CHECK(oracle::max_abs_diff(prof.final_values, limit.values) <= 1e-10);

  const Transformation shift({1, 2, 3, 0});
  const Transformation swap01({1, 0, 2, 3});
  const Observable f4(std::vector<double>{1, 0, 0, 0});
  CHECK_THROWS_AS(
      double_average_profile(f4, f4, shift, swap01, AtomSpace::uniform(4), {1, 2}),
      std::invalid_argument);
}

TEST_CASE("cyclic sweep runs deterministically") {
  ExperimentConfig base = z4_config();
  base.trials = 5;
  const auto points = cyclic_sweep(base, 3, 5);
  REQUIRE(points.size() == 3);
  CHECK(points[0].m == 3);
  CHECK(points[2].m == 5);
  for (const auto& pt : points) CHECK(pt.max_ratio > 0.0);
  const auto again = cyclic_sweep(base, 3, 5);
  for (std::size_t i = 0; i < points.size(); ++i)
    CHECK(points[i].max_ratio == again[i].max_ratio);
}
