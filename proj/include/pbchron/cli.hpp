#pragma once
// Command-line front end: one binary, five subcommands (simulate, crs, plum,
// experiment, plot-data). Exit codes: 0 success, 1 bad usage or invalid
// input, 2 runtime failure. Every output CSV starts with a provenance
// comment carrying the tool version and the exact invocation, and all
// randomness flows from --seed, so identical invocations write identical
// bytes.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "pbchron/chronology.hpp"
#include "pbchron/crs.hpp"
#include "pbchron/dataset.hpp"
#include "pbchron/evaluation.hpp"
#include "pbchron/plum.hpp"
#include "pbchron/simulator.hpp"
#include "pbchron/version.hpp"

namespace pbchron {
namespace cli {

inline std::string provenance_line(const std::vector<std::string>& args) {
  std::string line = std::string(kVersion) + " |";
  for (const auto& a : args) line += " " + a;
  return line;
}

inline std::vector<int> parse_int_list(const std::string& csv, const std::string& flag) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = detail::trim(tok);
    if (tok.empty()) continue;
    char* end = nullptr;
    const long v = std::strtol(tok.c_str(), &end, 10);
    if (end == tok.c_str() || *end != '\0')
      throw ValidationError(flag + ": '" + tok + "' is not an integer");
    out.push_back(static_cast<int>(v));
  }
  if (out.empty()) throw ValidationError(flag + ": empty list");
  return out;
}

inline std::vector<std::string> parse_string_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = detail::trim(tok);
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

struct SimulateArgs {
  int scenario = 0;  // 0: custom curve
  double age_linear = 0.0, age_quadratic = 0.0, age_sine_amp = 0.0, age_sine_period = 1.0;
  bool custom_curve = false;
  double phi = -1.0, supported = -1.0;  // <0: keep scenario defaults
  double delta = 1.0, max_depth = kCoreDepth;
  NoiseConfig noise{};
  bool no_noise = false;
  bool nominal_sd_rule = false;
  std::string core_id;
  std::string out_path;
};

inline Scenario scenario_from_args(const SimulateArgs& a) {
  Scenario scn;
  if (a.scenario != 0 && a.custom_curve)
    throw ValidationError("--scenario and a custom age curve are mutually exclusive");
  if (a.scenario != 0) {
    scn = builtin_scenario(a.scenario);
  } else if (a.custom_curve) {
    scn.id = ScenarioId::custom;
    scn.age_fn = {a.age_linear, a.age_quadratic, a.age_sine_amp, a.age_sine_period};
    if (!(a.phi > 0.0) || !(a.supported > 0.0))
      throw ValidationError("--phi and --supported are required with a custom age curve");
  } else {
    throw ValidationError("--scenario: pick 1, 2 or 3, or give a custom age curve");
  }
  if (a.phi > 0.0) scn.phi = a.phi;
  if (a.supported > 0.0) scn.supported = a.supported;
  return scn;
}

inline void run_simulate(const SimulateArgs& args_in, const std::vector<std::string>& argv) {
  SimulateArgs a = args_in;
  if (a.no_noise) {
    const NoiseConfig defaults = NoiseConfig::disabled();
    a.noise.scatter_var = defaults.scatter_var;
    a.noise.p_out = defaults.p_out;
    a.noise.apply_lab_noise = defaults.apply_lab_noise;
  }
  if (a.nominal_sd_rule) a.noise.reported_sd_factor = a.noise.epsilon * a.noise.y_scat;
  const Scenario scn = scenario_from_args(a);
  const Dataset d = simulate_core(scn, a.noise, a.delta, a.max_depth, a.core_id);
  write_dataset(d, a.out_path, {provenance_line(argv)});
}

struct CrsArgs {
  std::string input, out_path;
  std::string variant = "ci";
  int draws = 10000;
  std::uint64_t seed = 0;
  bool no_supported_sd = false, with_lambda_sd = false, with_covariance = false;
};

inline void run_crs(const CrsArgs& a, const std::vector<std::string>& argv) {
  if (a.variant != "ci" && a.variant != "mc")
    throw ValidationError("--variant: must be 'ci' or 'mc'");
  if (a.variant == "mc" && a.draws < 2) throw ValidationError("--draws: draws must be >= 2");
  CrsOptions opts;
  opts.include_supported_sd = !a.no_supported_sd;
  opts.include_lambda_sd = a.with_lambda_sd;
  opts.use_covariance = a.with_covariance;
  const Dataset d = load_dataset(a.input);
  const Chronology c = a.variant == "ci" ? ci_crs_chronology(d, opts)
                                         : r_crs_chronology(d, a.draws, a.seed, opts);
  write_chronology(c, a.out_path, {provenance_line(argv)});
}

struct PlumArgs {
  std::string input, out_path, draws_out;
  PlumPriors priors{};
  McmcConfig mcmc{};
  double depth_step = 1.0;
};

inline void run_plum(const PlumArgs& a, const std::vector<std::string>& argv) {
  if (!(a.depth_step > 0.0 && a.depth_step <= kCoreDepth))
    throw ValidationError("--depth-step: must be in (0, 30]");
  const Dataset d = load_dataset(a.input);
  const PosteriorDraws draws = sample_posterior(d, a.priors, a.mcmc);
  std::vector<double> depths;
  for (double x = a.depth_step; x <= kCoreDepth + 1e-9; x += a.depth_step) depths.push_back(x);
  const Chronology c = summarize_chronology(draws, depths);
  std::vector<std::string> comments = {provenance_line(argv)};
  {
    std::ostringstream acc;
    acc << "acceptance rate " << detail::fmt(draws.acceptance_rate) << " (per-coordinate "
        << detail::fmt(draws.acceptance_min) << ".." << detail::fmt(draws.acceptance_max)
        << "); ess phi " << detail::fmt(draws.ess.phi) << ", supported "
        << detail::fmt(draws.ess.supported) << ", memory " << detail::fmt(draws.ess.w)
        << ", mean slope " << detail::fmt(draws.ess.mean_alpha);
    comments.push_back(acc.str());
  }
  write_chronology(c, a.out_path, comments);
  if (!a.draws_out.empty()) {
    std::ofstream out(a.draws_out);
    if (!out) throw std::runtime_error("cannot write draws file: " + a.draws_out);
    out << "# " << provenance_line(argv) << "\n";
    out << "draw,log_posterior,w,phi,supported";
    for (std::size_t j = 0; j < draws.draws.front().alphas.size(); ++j) out << ",alpha_" << j + 1;
    out << "\n";
    for (std::size_t i = 0; i < draws.draws.size(); ++i) {
      const PlumParams& p = draws.draws[i];
      out << i << ',' << detail::fmt(draws.log_posterior[i]) << ',' << detail::fmt(p.w) << ','
          << detail::fmt(p.phi) << ',' << detail::fmt(p.supported);
      for (double alpha : p.alphas) out << ',' << detail::fmt(alpha);
      out << "\n";
    }
    if (!out) throw std::runtime_error("I/O failure writing " + a.draws_out);
  }
}

struct ExperimentArgs {
  std::string scenarios = "1,2,3";
  std::string percents;  // empty: full grid
  int replicates = 100;
  std::string engines = "ci,plum";
  std::uint64_t seed = 0;
  int jobs = 1;
  int rcrs_draws = 2000;
  McmcConfig plum_mcmc{};
  PlumPriors plum_priors{};
  NoiseConfig noise{};
  bool no_noise = false;
  std::string datasets;  // comma-separated master-core overrides
  std::string records_out, summary_out;
};

inline void run_experiment_cmd(const ExperimentArgs& a, const std::vector<std::string>& argv) {
  ExperimentPlan plan;
  for (int s : parse_int_list(a.scenarios, "--scenarios")) plan.scenarios.push_back(builtin_scenario(s));
  plan.percents = a.percents.empty() ? information_percent_grid() : parse_int_list(a.percents, "--percents");
  plan.replicates = a.replicates;
  plan.master_seed = a.seed;
  plan.jobs = a.jobs;
  plan.run_ci_crs = plan.run_r_crs = plan.run_plum = false;
  for (const auto& e : parse_string_list(a.engines)) {
    if (e == "ci") plan.run_ci_crs = true;
    else if (e == "mc") plan.run_r_crs = true;
    else if (e == "plum") plan.run_plum = true;
    else throw ValidationError("--engines: unknown engine '" + e + "' (use ci, mc, plum)");
  }
  plan.r_crs_draws = a.rcrs_draws;
  plan.plum_mcmc = a.plum_mcmc;
  plan.plum_priors = a.plum_priors;
  plan.noise = a.noise;
  if (a.no_noise) {
    const NoiseConfig defaults = NoiseConfig::disabled();
    plan.noise.scatter_var = defaults.scatter_var;
    plan.noise.p_out = defaults.p_out;
    plan.noise.apply_lab_noise = defaults.apply_lab_noise;
  }
  if (!a.datasets.empty())
    for (const auto& path : parse_string_list(a.datasets)) plan.master_datasets.push_back(load_dataset(path));

  const ExperimentResult result = run_experiment(plan);
  std::vector<std::string> comments = {provenance_line(argv)};
  comments.push_back("attempted " + std::to_string(result.attempted) + " engine runs, completed " +
                     std::to_string(result.completed) + ", skipped " + std::to_string(result.skips.size()));
  for (const auto& s : result.skips)
    comments.push_back("skipped " + s.scenario + " " + std::to_string(s.percent) + "% replicate " +
                       std::to_string(s.replicate) + " " + method_name(s.method) + ": " + s.reason);
  write_records(result.records, a.records_out, comments);
  const auto summary = aggregate_summary(result.records);
  write_summary(summary, a.summary_out, comments);
}

struct PlotDataArgs {
  std::string kind, input, out_path;
  int scenario = 0;
};

inline void run_plot_data(const PlotDataArgs& a, const std::vector<std::string>& argv) {
  std::ofstream out;
  auto open = [&] {
    out.open(a.out_path);
    if (!out) throw std::runtime_error("cannot write plot data file: " + a.out_path);
    out << "# " << provenance_line(argv) << "\n";
  };
  if (a.kind == "agedepth") {
    if (a.scenario == 0) throw ValidationError("--scenario: required for kind 'agedepth'");
    const Scenario scn = builtin_scenario(a.scenario);
    const Chronology c = load_chronology(a.input);
    if (c.estimates.empty()) throw ValidationError("--input: chronology is empty");
    open();
    out << "depth,mean,lower95,upper95,truth\n";
    for (const auto& e : c.estimates) {
      if (!e.dated) continue;
      out << detail::fmt(e.depth) << ',' << detail::fmt(e.age_mean) << ',' << detail::fmt(e.lower95)
          << ',' << detail::fmt(e.upper95) << ',' << detail::fmt(true_age(scn, e.depth)) << "\n";
    }
  } else if (a.kind == "accpre") {
    const auto records = load_records(a.input);
    if (records.empty()) throw ValidationError("--input: records file is empty");
    const auto summary = aggregate_summary(records);
    open();
    out << "percent,method,mean_offset,mean_interval,mean_normalized\n";
    for (const auto& g : summary) {
      if (g.percent < 0 || g.scenario != "all") continue;
      out << g.percent << ',' << method_name(g.method) << ',' << detail::fmt(g.mean_offset) << ','
          << detail::fmt(g.mean_interval) << ',' << detail::fmt(g.mean_normalized) << "\n";
    }
  } else if (a.kind == "depth-normalized") {
    const auto records = load_records(a.input);
    if (records.empty()) throw ValidationError("--input: records file is empty");
    open();
    out << "depth,percent,method,normalized_offset\n";
    for (const auto& r : records) {
      out << detail::fmt(r.depth) << ',' << r.percent << ',' << method_name(r.method) << ',';
      if (r.normalized_valid) out << detail::fmt(r.normalized_offset);
      else out << "inf";
      out << "\n";
    }
  } else {
    throw ValidationError("--kind: unknown kind '" + a.kind + "' (use agedepth, accpre, depth-normalized)");
  }
  if (!out) throw std::runtime_error("I/O failure writing " + a.out_path);
}

inline void add_noise_flags(CLI::App* cmd, NoiseConfig& noise, bool& no_noise) {
  cmd->add_option("--scatter-var", noise.scatter_var, "Pre-lab scatter variance, (Bq/kg)^2")
      ->capture_default_str();
  cmd->add_option("--p-out", noise.p_out, "Outlier probability per slab")->capture_default_str();
  cmd->add_option("--x-shift", noise.x_shift,
                  "Outlier half-width, Bq/kg (0 = 3*sqrt(scatter-var))")
      ->capture_default_str();
  cmd->add_option("--sigma-min", noise.sigma_min, "Reported-sd floor, Bq/kg")->capture_default_str();
  cmd->add_option("--sd-factor", noise.reported_sd_factor,
                  "Reported sd as a fraction of the measured value")
      ->capture_default_str();
  cmd->add_flag("--no-noise", no_noise, "Disable all measurement noise (exact concentrations)");
}

inline void add_prior_flags(CLI::App* cmd, PlumPriors& p) {
  cmd->add_option("--acc-shape", p.acc_shape, "Accumulation prior gamma shape")->capture_default_str();
  cmd->add_option("--acc-mean", p.acc_mean, "Accumulation prior mean, yr/cm")->capture_default_str();
  cmd->add_option("--mem-mean", p.mem_mean, "Memory prior mean, in (0,1)")->capture_default_str();
  cmd->add_option("--mem-strength", p.mem_strength, "Memory prior strength")->capture_default_str();
  cmd->add_option("--phi-shape", p.phi_shape, "Supply prior gamma shape")->capture_default_str();
  cmd->add_option("--phi-mean", p.phi_mean, "Supply prior mean, Bq/(m^2 yr)")->capture_default_str();
  cmd->add_option("--s-shape", p.s_shape, "Supported prior gamma shape")->capture_default_str();
  cmd->add_option("--s-mean", p.s_mean, "Supported prior mean, Bq/kg (0 = mean 226Ra of the input)")
      ->capture_default_str();
}

// Parse and run. Returns the process exit code.
inline int dispatch(const std::vector<std::string>& args) {
  CLI::App app{"210Pb sediment-core chronology toolkit: simulate cores, date them with"
               " classical CRS (plus Monte Carlo uncertainty) or Bayesian accumulation"
               " modeling, and benchmark both against known ages."};
  app.name("pbchron");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  app.failure_message(CLI::FailureMessage::help);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Generate a synthetic core dataset CSV");
  c_sim->add_option("--scenario", sim.scenario, "Built-in scenario number (1, 2 or 3)")
      ->check(CLI::Range(1, 3));
  c_sim->add_option("--age-linear", sim.age_linear, "Custom age curve: linear term, yr/cm");
  c_sim->add_option("--age-quadratic", sim.age_quadratic, "Custom age curve: quadratic term, yr/cm^2");
  c_sim->add_option("--age-sine-amp", sim.age_sine_amp, "Custom age curve: sine amplitude, yr");
  c_sim->add_option("--age-sine-period", sim.age_sine_period, "Custom age curve: sine period, cm");
  c_sim->add_option("--phi", sim.phi, "210Pb supply, Bq/(m^2 yr) (overrides scenario default)");
  c_sim->add_option("--supported", sim.supported, "Supported level, Bq/kg (overrides scenario default)");
  c_sim->add_option("--delta", sim.delta, "Slab thickness, cm")->capture_default_str();
  c_sim->add_option("--max-depth", sim.max_depth, "Core length, cm (at most 30)")->capture_default_str();
  add_noise_flags(c_sim, sim.noise, sim.no_noise);
  c_sim->add_flag("--nominal-sd-rule", sim.nominal_sd_rule,
                  "Use epsilon*y-scat as the reported-sd fraction instead of --sd-factor");
  c_sim->add_option("--epsilon", sim.noise.epsilon, "Nominal analytical uncertainty fraction")
      ->capture_default_str();
  c_sim->add_option("--y-scat", sim.noise.y_scat, "Nominal error multiplier")->capture_default_str();
  c_sim->add_option("--seed", sim.noise.seed, "Random seed")->capture_default_str();
  c_sim->add_option("--core-id", sim.core_id, "Core identifier written to the file header");
  c_sim->add_option("--out", sim.out_path, "Output dataset CSV path")->required();

  CrsArgs crs;
  auto* c_crs = app.add_subcommand("crs", "Date a core with the classical CRS model");
  c_crs->add_option("--input", crs.input, "Input dataset CSV path")->required();
  c_crs->add_option("--variant", crs.variant, "ci: first-order propagation; mc: Monte Carlo")
      ->capture_default_str();
  c_crs->add_option("--draws", crs.draws, "Monte Carlo draws (variant mc), at least 2")
      ->capture_default_str();
  c_crs->add_option("--seed", crs.seed, "Random seed (variant mc)")->capture_default_str();
  c_crs->add_flag("--no-supported-sd", crs.no_supported_sd,
                  "Do not fold the supported-mean uncertainty into excess sds");
  c_crs->add_flag("--with-lambda-sd", crs.with_lambda_sd,
                  "Fold decay-constant uncertainty into age sds");
  c_crs->add_flag("--with-covariance", crs.with_covariance,
                  "Subtract the shared-inventory covariance term in age sds");
  c_crs->add_option("--out", crs.out_path, "Output chronology CSV path")->required();

  PlumArgs plum;
  auto* c_plum = app.add_subcommand("plum", "Date a core with the Bayesian accumulation model");
  c_plum->add_option("--input", plum.input, "Input dataset CSV path")->required();
  add_prior_flags(c_plum, plum.priors);
  c_plum->add_option("--iterations", plum.mcmc.iterations, "Total MCMC sweeps")->capture_default_str();
  c_plum->add_option("--burn-in", plum.mcmc.burn_in, "Sweeps discarded before recording")
      ->capture_default_str();
  c_plum->add_option("--thin", plum.mcmc.thinning, "Keep every n-th sweep after burn-in")
      ->capture_default_str();
  c_plum->add_option("--ess-floor", plum.mcmc.ess_floor, "Warn when block ESS falls below this")
      ->capture_default_str();
  c_plum->add_option("--seed", plum.mcmc.seed, "Random seed")->capture_default_str();
  c_plum->add_option("--depth-step", plum.depth_step, "Spacing of summarized depths, cm")
      ->capture_default_str();
  c_plum->add_option("--out", plum.out_path, "Output chronology CSV path")->required();
  c_plum->add_option("--draws-out", plum.draws_out, "Optional raw posterior draws CSV path");

  ExperimentArgs exp;
  auto* c_exp = app.add_subcommand("experiment",
                                   "Run the subsampling comparison over scenarios and engines");
  c_exp->add_option("--scenarios", exp.scenarios, "Comma list of scenario numbers")
      ->capture_default_str();
  c_exp->add_option("--percents", exp.percents,
                    "Comma list of information percents (default: 10,15,...,95,100)");
  c_exp->add_option("--replicates", exp.replicates, "Replicates per percent below 100")
      ->capture_default_str();
  c_exp->add_option("--engines", exp.engines, "Comma list of engines: ci, mc, plum")
      ->capture_default_str();
  c_exp->add_option("--seed", exp.seed, "Master random seed")->capture_default_str();
  c_exp->add_option("--jobs", exp.jobs, "Worker threads")->capture_default_str();
  c_exp->add_option("--rcrs-draws", exp.rcrs_draws, "Monte Carlo draws for the mc engine")
      ->capture_default_str();
  c_exp->add_option("--plum-iterations", exp.plum_mcmc.iterations, "MCMC sweeps per Bayesian run")
      ->capture_default_str();
  c_exp->add_option("--plum-burn-in", exp.plum_mcmc.burn_in, "MCMC burn-in per Bayesian run")
      ->capture_default_str();
  c_exp->add_option("--plum-thin", exp.plum_mcmc.thinning, "MCMC thinning per Bayesian run")
      ->capture_default_str();
  add_prior_flags(c_exp, exp.plum_priors);
  add_noise_flags(c_exp, exp.noise, exp.no_noise);
  c_exp->add_option("--datasets", exp.datasets,
                    "Comma list of master-core CSVs overriding simulation (one per scenario)");
  c_exp->add_option("--records-out", exp.records_out, "Output per-depth records CSV path")->required();
  c_exp->add_option("--summary-out", exp.summary_out, "Output grouped summary CSV path")->required();

  PlotDataArgs plot;
  auto* c_plot = app.add_subcommand("plot-data", "Reshape results into tidy plot-ready CSVs");
  c_plot->add_option("--kind", plot.kind, "agedepth | accpre | depth-normalized")->required();
  c_plot->add_option("--input", plot.input, "Chronology CSV (agedepth) or records CSV (others)")
      ->required();
  c_plot->add_option("--scenario", plot.scenario, "Scenario for the truth column (agedepth)")
      ->check(CLI::Range(1, 3));
  c_plot->add_option("--out", plot.out_path, "Output CSV path")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    sim.custom_curve = c_sim->count("--age-linear") > 0 || c_sim->count("--age-quadratic") > 0 ||
                       c_sim->count("--age-sine-amp") > 0 || c_sim->count("--age-sine-period") > 0;
    if (c_sim->parsed()) run_simulate(sim, args);
    else if (c_crs->parsed()) run_crs(crs, args);
    else if (c_plum->parsed()) run_plum(plum, args);
    else if (c_exp->parsed()) run_experiment_cmd(exp, args);
    else if (c_plot->parsed()) run_plot_data(plot, args);
    return 0;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace cli
}  // namespace pbchron
