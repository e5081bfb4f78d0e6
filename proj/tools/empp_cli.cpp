// Command-line front end: experiment orchestration over the paraproduct
// library with JSON reports and optional CSV tables.
//
// Subcommands: catalog, verify, paraproduct, converge, constants, double.
// The report on stdout (or --out) is byte-identical across runs for the
// same configuration and seed; wall-clock timing lives in the run manifest
// printed to stderr so it never perturbs the deterministic outputs.
// Exit codes: 0 success, 1 invalid input, 2 failed verification suite.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "empp/empp.hpp"
#include "json.hpp"

using nlohmann::json;
using namespace empp;

namespace {

constexpr const char* kToolVersion = "1.0.0";

std::string format_number(double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

json to_json(const std::vector<double>& values) {
  json out = json::array();
  for (double v : values) out.push_back(v);
  return out;
}

// ---------------------------------------------------------------------
// System specification parsing.

const char* kind_name(SystemSpec::Kind kind) {
  switch (kind) {
    case SystemSpec::Kind::cyclic_rotation: return "cyclic_rotation";
    case SystemSpec::Kind::group_translation: return "group_translation";
    case SystemSpec::Kind::product_torus: return "product_torus";
    case SystemSpec::Kind::transposition: return "transposition";
  }
  return "unknown";
}

json system_to_json(const SystemSpec& spec) {
  json out;
  out["kind"] = kind_name(spec.kind);
  switch (spec.kind) {
    case SystemSpec::Kind::cyclic_rotation:
    case SystemSpec::Kind::transposition:
      out["m"] = spec.m;
      out["depth"] = spec.depth;
      break;
    case SystemSpec::Kind::group_translation: {
      out["moduli"] = spec.moduli;
      out["shift"] = spec.shift;
      json chain = json::array();
      for (const auto& level : spec.chain) {
        json elements = json::array();
        for (const auto& element : level) elements.push_back(element);
        chain.push_back(elements);
      }
      out["chain"] = chain;
      break;
    }
    case SystemSpec::Kind::product_torus:
      out["m1"] = spec.m1;
      out["m2"] = spec.m2;
      out["shift_a"] = {spec.torus_shift_a.first, spec.torus_shift_a.second};
      out["shift_b"] = {spec.torus_shift_b.first, spec.torus_shift_b.second};
      break;
  }
  return out;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string token;
  std::istringstream stream(text);
  while (std::getline(stream, token, sep)) parts.push_back(token);
  return parts;
}

unsigned parse_unsigned(const std::string& text, const char* what) {
  try {
    const unsigned long value = std::stoul(text);
    return static_cast<unsigned>(value);
  } catch (const std::exception&) {
    throw std::invalid_argument(std::string("could not parse ") + what + " from '" + text + "'");
  }
}

// cyclic:M[:DEPTH] | torus:M1:M2 | transposition:M
SystemSpec parse_system_string(const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.empty()) throw std::invalid_argument("empty system spec");
  SystemSpec spec;
  if (parts[0] == "cyclic") {
    if (parts.size() < 2 || parts.size() > 3)
      throw std::invalid_argument("expected cyclic:M or cyclic:M:DEPTH");
    spec.kind = SystemSpec::Kind::cyclic_rotation;
    spec.m = parse_unsigned(parts[1], "m");
    spec.depth = parts.size() == 3 ? parse_unsigned(parts[2], "depth") : spec.m;
    return spec;
  }
  if (parts[0] == "torus") {
    if (parts.size() != 3) throw std::invalid_argument("expected torus:M1:M2");
    spec.kind = SystemSpec::Kind::product_torus;
    spec.m1 = parse_unsigned(parts[1], "m1");
    spec.m2 = parse_unsigned(parts[2], "m2");
    return spec;
  }
  if (parts[0] == "transposition") {
    if (parts.size() != 2) throw std::invalid_argument("expected transposition:M");
    spec.kind = SystemSpec::Kind::transposition;
    spec.m = parse_unsigned(parts[1], "m");
    spec.depth = spec.m;
    return spec;
  }
  throw std::invalid_argument("unknown system kind '" + parts[0] +
                              "' (use cyclic:M[:DEPTH], torus:M1:M2, transposition:M; "
                              "group translations are configured via --config)");
}

SystemSpec system_from_json(const json& j) {
  SystemSpec spec;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "cyclic_rotation" || kind == "cyclic") {
    spec.kind = SystemSpec::Kind::cyclic_rotation;
    spec.m = j.at("m").get<unsigned>();
    spec.depth = j.contains("depth") ? j.at("depth").get<unsigned>() : spec.m;
  } else if (kind == "transposition") {
    spec.kind = SystemSpec::Kind::transposition;
    spec.m = j.at("m").get<unsigned>();
  } else if (kind == "product_torus" || kind == "torus") {
    spec.kind = SystemSpec::Kind::product_torus;
    spec.m1 = j.at("m1").get<unsigned>();
    spec.m2 = j.at("m2").get<unsigned>();
    if (j.contains("shift_a"))
      spec.torus_shift_a = {j["shift_a"][0].get<std::uint32_t>(),
                            j["shift_a"][1].get<std::uint32_t>()};
    if (j.contains("shift_b"))
      spec.torus_shift_b = {j["shift_b"][0].get<std::uint32_t>(),
                            j["shift_b"][1].get<std::uint32_t>()};
  } else if (kind == "group_translation" || kind == "group") {
    spec.kind = SystemSpec::Kind::group_translation;
    spec.moduli = j.at("moduli").get<std::vector<std::uint32_t>>();
    spec.shift = j.at("shift").get<GroupElement>();
    for (const auto& level : j.at("chain")) {
      std::vector<GroupElement> elements;
      for (const auto& element : level) elements.push_back(element.get<GroupElement>());
      spec.chain.push_back(std::move(elements));
    }
  } else {
    throw std::invalid_argument("unknown system kind '" + kind + "' in config");
  }
  return spec;
}

// ---------------------------------------------------------------------
// Function presets: unit:i, ramp, const:c, randn.

Observable make_preset(const std::string& preset, std::size_t atoms, std::uint64_t seed,
                       unsigned role) {
  const auto parts = split(preset, ':');
  if (parts[0] == "unit") {
    if (parts.size() != 2) throw std::invalid_argument("expected unit:INDEX");
    const unsigned index = parse_unsigned(parts[1], "atom index");
    if (index >= atoms) throw std::invalid_argument("unit preset index out of range");
    Observable out = Observable::zero(atoms);
    out.values[index] = 1.0;
    return out;
  }
  if (parts[0] == "ramp") {
    std::vector<double> v(atoms);
    for (std::size_t i = 0; i < atoms; ++i) v[i] = static_cast<double>(i + 1);
    return Observable(std::move(v));
  }
  if (parts[0] == "const") {
    if (parts.size() != 2) throw std::invalid_argument("expected const:VALUE");
    return Observable::constant(atoms, std::stod(parts[1]));
  }
  if (parts[0] == "randn") {
    Rng rng(trial_seed(seed, role));
    return standard_normal_observable(atoms, rng);
  }
  throw std::invalid_argument("unknown preset '" + preset +
                              "' (use unit:I, ramp, const:C, randn)");
}

// ---------------------------------------------------------------------
// Report plumbing.

struct RunContext {
  std::string subcommand;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  std::string out_path;               // empty: stdout
  std::vector<std::string> outputs;   // data files written (excluding the report)
  json config = json::object();
  json warnings = json::array();
};

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream stream(path, std::ios::binary);
  if (!stream) throw std::invalid_argument("cannot open output file '" + path + "'");
  stream << text;
}

// Deterministic report to stdout/--out; manifest with wall-clock to stderr.
int finish(RunContext& ctx, json results, int exit_code = 0) {
  json report;
  report["schema_version"] = 1;
  report["tool"] = "empp";
  report["tool_version"] = kToolVersion;
  report["subcommand"] = ctx.subcommand;
  report["config"] = ctx.config;
  report["warnings"] = ctx.warnings;
  report["results"] = std::move(results);
  report["outputs"] = ctx.outputs;
  const std::string text = report.dump(2) + "\n";
  if (ctx.out_path.empty()) {
    std::fputs(text.c_str(), stdout);
  } else {
    write_text_file(ctx.out_path, text);
  }

  json manifest;
  manifest["tool_version"] = kToolVersion;
  manifest["subcommand"] = ctx.subcommand;
  manifest["config"] = ctx.config;
  manifest["wall_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - ctx.start).count();
  json files = json::array();
  for (const auto& path : ctx.outputs) files.push_back(path);
  if (!ctx.out_path.empty()) files.push_back(ctx.out_path);
  manifest["outputs"] = files;
  std::fputs((manifest.dump() + "\n").c_str(), stderr);
  return exit_code;
}

void write_csv(RunContext& ctx, const std::string& path, const std::string& header,
               const std::vector<std::vector<double>>& rows) {
  std::string text = header + "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) text += ",";
      text += format_number(row[i]);
    }
    text += "\n";
  }
  write_text_file(path, text);
  ctx.outputs.push_back(path);
}

// ---------------------------------------------------------------------
// Shared option state.

struct CommonOptions {
  std::string config_path;
  std::string system_text;
  std::string out_path;
  std::string csv_path;
  double a = 2.0;
  double p = 2.0, q = 2.0, r = 1.0;
  unsigned horizon = 0;
  unsigned trials = 100;
  std::uint64_t seed = 0;
  bool heavy_tailed = false;
  std::string f_preset = "randn";
  std::string g_preset = "randn";
};

// Config file first, CLI flags override anything they set explicitly.
ExperimentConfig resolve_config(const CommonOptions& opts, const CLI::App* cmd,
                                bool* horizon_given = nullptr) {
  ExperimentConfig config;
  if (horizon_given != nullptr) *horizon_given = false;
  if (!opts.config_path.empty()) {
    std::ifstream stream(opts.config_path);
    if (!stream) throw std::invalid_argument("cannot read config file '" + opts.config_path + "'");
    json j = json::parse(stream);
    if (j.contains("a")) config.a = j["a"].get<double>();
    if (j.contains("p")) config.p = j["p"].get<double>();
    if (j.contains("q")) config.q = j["q"].get<double>();
    if (j.contains("r")) config.r = j["r"].get<double>();
    if (j.contains("horizon_n")) {
      config.horizon_n = j["horizon_n"].get<unsigned>();
      if (horizon_given != nullptr) *horizon_given = true;
    }
    if (j.contains("seed")) config.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("trials")) config.trials = j["trials"].get<unsigned>();
    if (j.contains("heavy_tailed")) config.heavy_tailed = j["heavy_tailed"].get<bool>();
    if (j.contains("system")) config.system = system_from_json(j["system"]);
  }
  const auto overridden = [&](const std::string& flag) {
    const CLI::Option* option = cmd->get_option_no_throw(flag);
    return option != nullptr && option->count() > 0;
  };
  if (overridden("--a")) config.a = opts.a;
  if (overridden("--p")) config.p = opts.p;
  if (overridden("--q")) config.q = opts.q;
  if (overridden("--r")) config.r = opts.r;
  if (overridden("--horizon")) {
    config.horizon_n = opts.horizon;
    if (horizon_given != nullptr) *horizon_given = true;
  }
  if (overridden("--trials")) config.trials = opts.trials;
  if (overridden("--seed")) config.seed = opts.seed;
  if (overridden("--heavy-tails")) config.heavy_tailed = opts.heavy_tailed;
  if (overridden("--system")) config.system = parse_system_string(opts.system_text);
  return config;
}

json config_echo(const ExperimentConfig& config) {
  json out;
  out["a"] = config.a;
  out["p"] = config.p;
  out["q"] = config.q;
  out["r"] = config.r;
  out["horizon_n"] = config.horizon_n;
  out["seed"] = config.seed;
  out["trials"] = config.trials;
  out["heavy_tailed"] = config.heavy_tailed;
  out["system"] = system_to_json(config.system);
  return out;
}

// ---------------------------------------------------------------------
// catalog

int run_catalog(RunContext& ctx) {
  json systems = json::array();

  const auto describe = [&](const SystemSpec& spec, const std::string& note) {
    const BuiltSystem built = build_system(spec);
    json entry;
    entry["spec"] = system_to_json(spec);
    entry["atom_count"] = built.system.atom_count();
    entry["depth"] = built.system.depth();
    entry["commutativity_checked"] = built.system.commutativity_checked();
    entry["commutes"] = commutativity_check(built.system).passed;
    entry["note"] = note;
    systems.push_back(entry);
  };

  SystemSpec cyclic;
  cyclic.kind = SystemSpec::Kind::cyclic_rotation;
  cyclic.m = 2;
  cyclic.depth = 2;
  describe(cyclic, "Z_4 rotation, residue filtration; the worked example");
  cyclic.m = 4;
  cyclic.depth = 4;
  describe(cyclic, "Z_16 rotation");

  SystemSpec group;
  group.kind = SystemSpec::Kind::group_translation;
  group.moduli = {2, 2};
  group.shift = {1, 0};
  group.chain = {{{0, 0}, {1, 0}}, {{0, 0}, {1, 0}, {0, 1}, {1, 1}}};
  describe(group, "Z_2 x Z_2 translation over the chain {0} < Z_2 x {0} < G");

  SystemSpec torus;
  torus.kind = SystemSpec::Kind::product_torus;
  torus.m1 = 2;
  torus.m2 = 2;
  describe(torus, "Z_4 x Z_4 with commuting shifts (1,0), (0,1)");

  SystemSpec bad;
  bad.kind = SystemSpec::Kind::transposition;
  bad.m = 2;
  describe(bad, "swap of atoms 0 and 1; fails the commutativity check at level 1");

  json results;
  results["kinds"] = {"cyclic_rotation (cyclic:M[:DEPTH])", "product_torus (torus:M1:M2)",
                      "group_translation (config file only)",
                      "transposition (transposition:M, failing demo)"};
  results["systems"] = systems;
  return finish(ctx, results);
}

// ---------------------------------------------------------------------
// verify

json suite_entry(const std::string& name, bool passed, const std::string& detail) {
  json entry;
  entry["suite"] = name;
  entry["passed"] = passed;
  entry["detail"] = detail;
  return entry;
}

int run_verify(RunContext& ctx, const ExperimentConfig& config, unsigned draws) {
  const BuiltSystem built = build_system(config.system);
  const DynamicalSystem& system = built.system;
  const std::size_t atoms = system.atom_count();
  json suites = json::array();
  bool all_passed = true;

  const auto add = [&](const std::string& name, bool passed, const std::string& detail) {
    suites.push_back(suite_entry(name, passed, detail));
    all_passed = all_passed && passed;
  };

  {
    const CommutativityReport report = commutativity_check(system);
    std::string detail = report.passed ? "identity holds at every level"
                                       : "fails at level " + std::to_string(report.witness->level) +
                                             ", indicator atom " +
                                             std::to_string(report.witness->atom);
    add("commutativity", report.passed, detail);
  }

  Rng rng(trial_seed(config.seed, 7700));
  {
    double worst = 0.0;
    const double bases[3] = {1.5, 2.0, 3.0};
    for (unsigned d = 0; d < draws; ++d) {
      const Observable f = standard_normal_observable(atoms, rng);
      const Observable g = standard_normal_observable(atoms, rng);
      const std::size_t n = rng.next_u64() % (system.depth() + 1);
      worst = std::max(worst,
                       summation_by_parts_residual(f, g, system, bases[rng.next_u64() % 3], n));
    }
    add("summation_by_parts", worst <= 1e-12, "max residual " + format_number(worst));
  }
  {
    double worst = 0.0;
    for (unsigned d = 0; d < draws; ++d) {
      const Observable g = standard_normal_observable(atoms, rng);
      const MartingaleSequence mart = backward_martingale(g, system.filtration(), system.space());
      const double total = lp_norm(g, 2.0, system.space());
      const double tail = lp_norm(mart.level(mart.depth()), 2.0, system.space());
      double diff_sum = 0.0;
      for (const Observable& diff : martingale_differences(mart)) {
        const double nd = lp_norm(diff, 2.0, system.space());
        diff_sum += nd * nd;
      }
      const double lhs = total * total - tail * tail;
      worst = std::max(worst, std::abs(lhs - diff_sum) / std::max(1.0, std::abs(lhs)));
    }
    add("pythagoras", worst <= 1e-10, "max relative error " + format_number(worst));
  }
  {
    double worst = 0.0;
    unsigned n = 6;
    while (n > 1 && atoms * (std::size_t{2} << n) > (std::size_t{1} << 22)) --n;
    for (unsigned d = 0; d < std::min(draws, 10u); ++d) {
      const Observable f = standard_normal_observable(atoms, rng);
      const IntegerModel model = transfer_to_integer_model(f, system, n);
      const double scale = std::pow(2.0, -static_cast<double>(n + 1));
      for (double p : {1.0, 4.0 / 3.0, 2.0, 4.0}) {
        const double lhs = std::pow(lp_norm(f, p, system.space()), p);
        const double rhs = scale * std::pow(lp_norm(model, p, system.space()), p);
        worst = std::max(worst, std::abs(lhs - rhs) / std::max(1e-30, lhs));
      }
    }
    add("transference", worst <= 1e-12, "max relative error " + format_number(worst));
  }
  {
    double worst = 0.0;
    for (unsigned d = 0; d < draws; ++d) {
      const Observable f = standard_normal_observable(atoms, rng);
      const Observable composed = compose(f, system.map());
      for (double p : {1.0, 2.0, 4.0}) {
        const double a = lp_norm(composed, p, system.space());
        const double b = lp_norm(f, p, system.space());
        worst = std::max(worst, std::abs(a - b) / std::max(1e-30, b));
      }
    }
    add("measure_preservation", worst <= 1e-12, "max relative error " + format_number(worst));
  }
  {
    // E_n A_N = A_N E_n; full indicator basis on small systems, random
    // observables otherwise
    double worst = 0.0;
    const bool basis = atoms <= 128;
    const unsigned count = basis ? static_cast<unsigned>(atoms) : std::min(draws, 32u);
    for (std::size_t level = 0; level <= system.depth(); ++level) {
      for (unsigned d = 0; d < count; ++d) {
        Observable f = Observable::zero(atoms);
        if (basis) {
          f.values[d] = 1.0;
        } else {
          f = standard_normal_observable(atoms, rng);
        }
        for (std::uint64_t N : {std::uint64_t{2}, std::uint64_t{5}}) {
          const Observable lhs =
              conditional_expectation(ergodic_average(f, system.map(), N),
                                      system.filtration().level(level), system.space());
          const Observable rhs = ergodic_average(
              conditional_expectation(f, system.filtration().level(level), system.space()),
              system.map(), N);
          for (std::size_t i = 0; i < atoms; ++i)
            worst = std::max(worst, std::abs(lhs.values[i] - rhs.values[i]));
        }
      }
    }
    add("conditioning_commutes_with_averaging", worst <= 1e-12,
        std::string(basis ? "indicator basis" : "random draws") + ", max deviation " +
            format_number(worst));
  }

  json results;
  results["system"] = system_to_json(config.system);
  results["atom_count"] = atoms;
  results["suites"] = suites;
  results["all_passed"] = all_passed;
  return finish(ctx, results, all_passed ? 0 : 2);
}

// ---------------------------------------------------------------------
// paraproduct

int run_paraproduct(RunContext& ctx, const ExperimentConfig& config, const CommonOptions& opts,
                    std::size_t n) {
  const BuiltSystem built = build_system(config.system);
  const DynamicalSystem& system = built.system;
  const std::size_t atoms = system.atom_count();
  const Observable f = make_preset(opts.f_preset, atoms, config.seed, 1);
  const Observable g = make_preset(opts.g_preset, atoms, config.seed, 2);

  const Observable em = ergodic_martingale_paraproduct(f, g, system, config.a, n);
  const Observable me = martingale_ergodic_paraproduct(f, g, system, config.a, n);
  const double residual = summation_by_parts_residual(f, g, system, config.a, n);

  const Observable avg =
      ergodic_average(f, system.map(), floor_power(config.a, static_cast<unsigned>(n)));
  const MartingaleSequence mart = backward_martingale(g, system.filtration(), system.space());
  std::vector<double> lhs(atoms), rhs(atoms);
  for (std::size_t i = 0; i < atoms; ++i) {
    lhs[i] = em.values[i] + me.values[i];
    rhs[i] = avg.values[i] * mart.level(n).values[i] - f.values[i] * g.values[i];
  }

  json results;
  results["n"] = n;
  results["f"] = to_json(f.values);
  results["g"] = to_json(g.values);
  results["pi_em"] = to_json(em.values);
  results["pi_me"] = to_json(me.values);
  results["identity_lhs"] = to_json(lhs);
  results["identity_rhs"] = to_json(rhs);
  results["summation_by_parts_residual"] = residual;

  if (!opts.csv_path.empty()) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < atoms; ++i)
      rows.push_back({static_cast<double>(i), f.values[i], g.values[i], em.values[i],
                      me.values[i], lhs[i], rhs[i]});
    write_csv(ctx, opts.csv_path, "atom,f,g,pi_em,pi_me,identity_lhs,identity_rhs", rows);
  }
  return finish(ctx, results);
}

// ---------------------------------------------------------------------
// converge

int run_converge(RunContext& ctx, const ExperimentConfig& config, const CommonOptions& opts,
                 unsigned n0, double epsilon, bool horizon_given) {
  const BuiltSystem built = build_system(config.system);
  const DynamicalSystem& system = built.system;
  const std::size_t atoms = system.atom_count();
  const unsigned horizon =
      horizon_given ? config.horizon_n : static_cast<unsigned>(system.depth());
  const Observable f = make_preset(opts.f_preset, atoms, config.seed, 1);
  const Observable g = make_preset(opts.g_preset, atoms, config.seed, 2);

  const ConvergenceReport profile = cauchy_profile(f, g, system, config.a, config.r, horizon);
  const OscillationStats osc = oscillation_probe(f, g, system, config.a, n0, horizon, epsilon);

  json results;
  results["horizon"] = horizon;
  results["r"] = config.r;
  results["level_norms"] = to_json(profile.level_norms);
  results["increments"] = to_json(profile.increments);
  results["stabilization_index"] = profile.stabilization_index;
  json oj;
  oj["n0"] = n0;
  oj["epsilon"] = epsilon;
  oj["max_oscillation"] = osc.max_oscillation;
  oj["exceptional_weight"] = osc.exceptional_weight;
  results["oscillation"] = oj;

  if (!opts.csv_path.empty()) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < profile.level_norms.size(); ++i)
      rows.push_back({static_cast<double>(i + 1), profile.level_norms[i], profile.increments[i]});
    write_csv(ctx, opts.csv_path, "n,norm,increment", rows);
  }
  return finish(ctx, results);
}

// ---------------------------------------------------------------------
// constants

int run_constants(RunContext& ctx, const ExperimentConfig& config, const CommonOptions& opts,
                  const std::string& sweep_range) {
  if (!sweep_range.empty()) {
    if (!opts.csv_path.empty())
      throw std::invalid_argument("--csv is not available with --sweep (per-trial table only)");
    const auto parts = split(sweep_range, ':');
    if (parts.size() != 2) throw std::invalid_argument("expected --sweep LO:HI");
    const unsigned lo = parse_unsigned(parts[0], "sweep low end");
    const unsigned hi = parse_unsigned(parts[1], "sweep high end");
    const auto points = cyclic_sweep(config, lo, hi);
    json sweep = json::array();
    for (const auto& point : points) {
      json entry;
      entry["m"] = point.m;
      entry["max_ratio"] = point.max_ratio;
      sweep.push_back(entry);
    }
    json results;
    results["sweep"] = sweep;
    return finish(ctx, results);
  }

  const ConvergenceReport report = estimate_constant(config);
  json results;
  results["max_ratio"] = report.max_ratio;
  results["trial_ratios"] = to_json(report.trial_ratios);
  results["running_max_ratio"] = to_json(report.running_max_ratio);
  results["resampled_trials"] = report.resampled_trials;

  if (!opts.csv_path.empty()) {
    std::vector<std::vector<double>> rows;
    for (std::size_t t = 0; t < report.trial_ratios.size(); ++t)
      rows.push_back({static_cast<double>(t), report.trial_ratios[t]});
    write_csv(ctx, opts.csv_path, "trial,ratio", rows);
  }
  return finish(ctx, results);
}

// ---------------------------------------------------------------------
// double

int run_double(RunContext& ctx, const ExperimentConfig& config, const CommonOptions& opts,
               unsigned max_power, const std::string& explicit_times) {
  if (config.system.kind != SystemSpec::Kind::product_torus)
    throw std::invalid_argument("the double subcommand needs a product_torus system");
  const BuiltSystem built = build_system(config.system);
  const auto& [shift_s, shift_t] = *built.commuting_pair;
  const std::size_t atoms = built.system.atom_count();
  const Observable f = make_preset(opts.f_preset, atoms, config.seed, 1);
  const Observable g = make_preset(opts.g_preset, atoms, config.seed, 2);

  std::vector<std::uint64_t> times;
  if (!explicit_times.empty()) {
    for (const auto& token : split(explicit_times, ','))
      times.push_back(std::stoull(token));
  } else {
    if (max_power > 40) throw std::invalid_argument("--powers must be at most 40");
    for (unsigned k = 0; k <= max_power; ++k) times.push_back(std::uint64_t{1} << k);
  }

  const ConvergenceReport profile =
      double_average_profile(f, g, shift_s, shift_t, built.system.space(), times);

  json results;
  json times_json = json::array();
  for (std::uint64_t t : times) times_json.push_back(t);
  results["times"] = times_json;
  results["level_norms"] = to_json(profile.level_norms);
  results["increments"] = to_json(profile.increments);
  results["max_oscillation"] = profile.oscillation->max_oscillation;
  results["final_l2_norm"] = profile.level_norms.back();

  if (!opts.csv_path.empty()) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < times.size(); ++i)
      rows.push_back({static_cast<double>(times[i]), profile.level_norms[i],
                      i == 0 ? 0.0 : profile.increments[i - 1]});
    write_csv(ctx, opts.csv_path, "n,norm,increment", rows);
  }
  return finish(ctx, results);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-model toolkit for ergodic-martingale paraproducts"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("empp ") + kToolVersion);

  CommonOptions opts;
  unsigned n = 1;
  unsigned n0 = 0;
  double epsilon = 0.01;
  unsigned draws = 50;
  unsigned max_power = 10;
  std::string sweep_range;
  std::string explicit_times;

  const auto add_common = [&](CLI::App* cmd, bool needs_seed) {
    cmd->add_option("--config", opts.config_path, "JSON config file; flags override its values");
    cmd->add_option("--system", opts.system_text,
                    "system spec: cyclic:M[:DEPTH] | torus:M1:M2 | transposition:M");
    cmd->add_option("--out", opts.out_path, "write the JSON report here instead of stdout");
    cmd->add_option("--a", opts.a, "lacunary base a > 1");
    auto* seed = cmd->add_option("--seed", opts.seed, "master seed for randomized draws");
    if (needs_seed) seed->required();
    return cmd;
  };

  CLI::App* catalog = app.add_subcommand("catalog", "list the built-in system kinds");
  catalog->add_option("--out", opts.out_path, "write the JSON report here instead of stdout");

  CLI::App* verify =
      add_common(app.add_subcommand("verify", "run the identity suites on one system"), true);
  verify->add_option("--draws", draws, "random draws per suite");

  CLI::App* paraproduct = add_common(
      app.add_subcommand("paraproduct", "evaluate the paraproduct vectors on one system"), false);
  paraproduct->add_option("--n", n, "paraproduct level")->required();
  paraproduct->add_option("--f", opts.f_preset, "f preset: unit:I | ramp | const:C | randn");
  paraproduct->add_option("--g", opts.g_preset, "g preset");
  paraproduct->add_option("--csv", opts.csv_path, "per-atom CSV table");

  CLI::App* converge =
      add_common(app.add_subcommand("converge", "Cauchy profile and oscillation probe"), false);
  converge->add_option("--r", opts.r, "profile norm exponent");
  converge->add_option("--horizon", opts.horizon, "profile horizon (default: filtration depth)");
  converge->add_option("--n0", n0, "oscillation window start");
  converge->add_option("--eps", epsilon, "oscillation threshold");
  converge->add_option("--f", opts.f_preset, "f preset");
  converge->add_option("--g", opts.g_preset, "g preset");
  converge->add_option("--csv", opts.csv_path, "CSV table: n,norm,increment");

  CLI::App* constants = add_common(
      app.add_subcommand("constants", "estimate the paraproduct norm constant"), true);
  constants->add_option("--p", opts.p, "exponent p");
  constants->add_option("--q", opts.q, "exponent q");
  constants->add_option("--r", opts.r, "exponent r (1/r = 1/p + 1/q)");
  constants->add_option("--horizon", opts.horizon, "max paraproduct level per trial");
  constants->add_option("--trials", opts.trials, "trial count");
  constants->add_flag("--heavy-tails", opts.heavy_tailed, "Student-t(3) inputs");
  constants->add_option("--sweep", sweep_range, "sweep cyclic systems, LO:HI in log2 size");
  constants->add_option("--csv", opts.csv_path, "CSV table: trial,ratio");

  CLI::App* double_cmd = add_common(
      app.add_subcommand("double", "double-average profile on a product torus"), false);
  double_cmd->add_option("--powers", max_power, "profile at N = 2^0 .. 2^POWERS");
  double_cmd->add_option("--ns", explicit_times, "explicit comma-separated N list");
  double_cmd->add_option("--f", opts.f_preset, "f preset");
  double_cmd->add_option("--g", opts.g_preset, "g preset");
  double_cmd->add_option("--csv", opts.csv_path, "CSV table: n,norm,increment");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    json error;
    error["error"] = e.what();
    std::fputs((error.dump() + "\n").c_str(), stderr);
    std::fputs(app.help().c_str(), stderr);
    return 1;
  }

  RunContext ctx;
  ctx.out_path = opts.out_path;

  try {
    if (catalog->parsed()) {
      ctx.subcommand = "catalog";
      return run_catalog(ctx);
    }

    CLI::App* active = app.get_subcommands().front();
    bool horizon_given = false;
    ExperimentConfig config = resolve_config(opts, active, &horizon_given);
    ctx.subcommand = active->get_name();
    ctx.config = config_echo(config);
    if (verify->parsed()) return run_verify(ctx, config, draws);
    if (paraproduct->parsed()) return run_paraproduct(ctx, config, opts, n);
    if (converge->parsed()) return run_converge(ctx, config, opts, n0, epsilon, horizon_given);
    if (constants->parsed()) {
      config.validate();
      for (const auto& warning : config.range_warnings()) {
        ctx.warnings.push_back(warning);
        std::fputs(("warning: " + warning + "\n").c_str(), stderr);
      }
      return run_constants(ctx, config, opts, sweep_range);
    }
    if (double_cmd->parsed()) return run_double(ctx, config, opts, max_power, explicit_times);
    throw std::invalid_argument("no subcommand selected");
  } catch (const std::exception& e) {
    json error;
    error["error"] = e.what();
    std::fputs((error.dump() + "\n").c_str(), stderr);
    return 1;
  }
}
