// kamtori: batch front end for the KAM driver, parameter sweeps,
// inequality suites and smoothing-rate checks.
//
// Exit codes: 0 success, 1 input error, 2 resonant halt,
// 3 divergence or step budget exhausted, 4 failed check.

#include <kamtori/io.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace kamtori;

namespace {

constexpr int kExitOk = 0, kExitInput = 1, kExitResonant = 2, kExitDiverged = 3, kExitCheckFailed = 4;

struct Flags {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::vector<double> gammas;
  std::optional<std::size_t> samples;
  std::optional<int> max_steps;
  std::optional<double> tol;
  // bounds
  std::string suite;
  int cases = 200;
  double constant_scale = 1.0;
  // smooth
  std::string function = "decay";
  double decay = 4.0;
  std::optional<double> l;
  double r_tilde = 1.0 / 3.0;
  int levels = 5;
};

fs::path out_dir(const Flags& f) {
  fs::path p(f.out);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) throw InputError("cannot create output directory " + f.out);
  return p;
}

RunConfig config_with_overrides(const Flags& f) {
  if (f.config.empty()) throw InputError("--config is required");
  RunConfig cfg = load_config(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (f.max_steps) cfg.options.max_steps = *f.max_steps;
  if (f.tol) cfg.options.tol = *f.tol;
  if (f.samples) cfg.sweep.samples = *f.samples;
  if (!f.gammas.empty()) cfg.sweep.gammas = f.gammas;
  return cfg;
}

int cmd_run(const Flags& f) {
  const RunConfig cfg = config_with_overrides(f);
  if (!cfg.xi) throw InputError("config has no 'xi' to run at");
  const auto dir = out_dir(f);
  const auto t0 = std::chrono::steady_clock::now();
  const RunResult res = run(cfg.spec, *cfg.xi, cfg.options);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const KamRun& r = res.run;

  write_file((dir / "diagnostics.csv").string(), diagnostics_csv(r.diagnostics));
  if (res.torus) write_file((dir / "torus.json").string(), to_json(*res.torus).dump(2) + "\n");

  std::cout << "status " << status_name(r.status) << " after " << r.steps.size() << " steps (" << fmt(secs) << " s)\n";
  if (!r.diagnostics.empty()) std::cout << "final majorant " << fmt(r.diagnostics.back().majorant()) << "\n";
  if (r.schedule_truncated) std::cout << "note: schedule truncated at k_cap " << fmt(cfg.options.k_cap) << "\n";
  if (res.torus) std::cout << "invariance residual " << fmt(res.torus->residual) << "\n";
  if (!r.message.empty()) std::cerr << r.message << "\n";

  switch (r.status) {
    case RunStatus::Converged: return kExitOk;
    case RunStatus::ResonantHalt:
      std::cout << "resonant k=" << mode_string(r.halt->k) << " m=" << mode_string(r.halt->m)
                << " |divisor|=" << fmt(std::abs(r.halt->divisor)) << "\n";
      return kExitResonant;
    case RunStatus::Diverged:
    case RunStatus::MaxSteps: return kExitDiverged;
  }
  return kExitDiverged;
}

int cmd_sweep(const Flags& f) {
  const RunConfig cfg = config_with_overrides(f);
  if (cfg.sweep.gammas.empty()) throw InputError("sweep needs at least one --gamma");
  const auto& ladder_K = cfg.sweep.ladder_K;
  if (ladder_K.size() < 2) throw InputError("sweep.ladder_K needs at least two entries");
  const auto dir = out_dir(f);

  ZoneLadder ladder;
  ladder.K = ladder_K;
  ladder.iota = cfg.spec.iota;
  ladder.eps_q5 = std::pow(cfg.spec.eps, cfg.spec.q(5));
  // Every stage uses the integrable frequency map; drift between stages is O(eps).
  const StageMap stage = integrable_stage_map(cfg.spec);
  ladder.stages.assign(ladder_K.size() - 1, stage);

  const std::uint64_t seed = derive_seed(cfg.seed, kSweepStream);
  std::vector<SweepResult> results;
  std::vector<double> fractions;
  for (double g : cfg.sweep.gammas) {
    if (!(g > 0)) throw InputError("gamma must be positive");
    results.push_back(survivor_sweep(cfg.spec.box, ladder, g, cfg.sweep.samples, seed));
    fractions.push_back(results.back().estimate.excluded_fraction);
  }
  const SlopeFit fit = loglog_slope(cfg.sweep.gammas, fractions);
  json all = json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    const std::string tag = std::to_string(i);
    write_file((dir / ("sweep_" + tag + ".csv")).string(), sweep_csv(results[i]));
    const json s = sweep_summary(results[i], fit);
    write_file((dir / ("summary_" + tag + ".json")).string(), s.dump(2) + "\n");
    all.push_back(s);
    std::cout << "gamma " << fmt(results[i].gamma) << " excluded " << fmt(fractions[i]) << " +- "
              << fmt(results[i].estimate.ci95) << "\n";
  }
  write_file((dir / "slope_fit.json").string(),
             json{{"slope", fit.slope}, {"intercept", fit.intercept}, {"points", fit.points}, {"alpha", cfg.spec.alpha},
                  {"expected_slope", 1.0 / cfg.spec.alpha}, {"runs", all}}
                     .dump(2) + "\n");
  std::cout << "slope " << fmt(fit.slope) << " (expected " << fmt(1.0 / cfg.spec.alpha) << ")\n";
  return kExitOk;
}

int cmd_bounds(const Flags& f) {
  const std::uint64_t seed = derive_seed(f.seed.value_or(1), kBoundsStream);
  const auto dir = out_dir(f);
  if (f.cases < 1) throw InputError("--cases must be positive");
  std::vector<std::string> failed;
  if (f.suite == "divisor") {
    DivisorSuiteOptions opt;
    opt.cases = f.cases;
    opt.seed = seed;
    opt.constant_scale = f.constant_scale;
    const auto rows = divisor_suite(opt);
    write_file((dir / "bounds_divisor.csv").string(), divisor_csv(rows));
    for (const auto& r : rows)
      if (!r.pass) failed.push_back(std::to_string(r.case_id) + (r.norm == LatticeNorm::L2 ? "/l2" : "/l1"));
  } else if (f.suite == "tail") {
    const auto rows = tail_suite(f.cases, seed, f.constant_scale);
    write_file((dir / "bounds_tail.csv").string(), tail_csv(rows));
    for (const auto& r : rows)
      if (!r.pass) failed.push_back(std::to_string(r.case_id));
  } else if (f.suite == "sublevel") {
    const auto rows = sublevel_suite();
    write_file((dir / "bounds_sublevel.csv").string(), sublevel_csv(rows));
    for (const auto& r : rows)
      if (!r.result.pass) failed.push_back(r.function + "@" + fmt(r.eps));
  } else {
    throw InputError("--suite must be tail, divisor or sublevel");
  }
  if (failed.empty()) {
    std::cout << f.suite << ": all cases pass\n";
    return kExitOk;
  }
  std::cerr << f.suite << ": " << failed.size() << " failing cases:";
  for (const auto& c : failed) std::cerr << " " << c;
  std::cerr << "\n";
  return kExitCheckFailed;
}

int cmd_smooth(const Flags& f) {
  TrigPoly fn;
  double l = 0.0;
  if (f.function == "trig") {
    fn = cos_mode(1, {1}, 1, 0, 1.0) + sin_mode(1, {2}, 1, 0, 0.5);
    l = f.l.value_or(0.0);
  } else if (f.function == "decay") {
    if (!(f.decay > 0)) throw InputError("--decay must be positive");
    fn = decay_function(1, f.decay, 20000);
    l = f.l.value_or(f.decay);
  } else {
    throw InputError("--function must be 'trig' or 'decay'");
  }
  const auto dir = out_dir(f);
  const auto seq = build_sequence(fn, f.r_tilde, f.levels, l);
  const auto rep = rate_report(seq, l);
  write_file((dir / ("smooth_" + f.function + ".csv")).string(), smoothing_csv(seq));
  std::cout << "j r error\n";
  for (std::size_t j = 0; j < seq.radii.size(); ++j)
    std::cout << j << " " << fmt(seq.radii[j]) << " " << fmt(seq.errors[j]) << "\n";
  if (rep.exact)
    std::cout << "exact reproduction: PASS\n";
  else
    std::cout << "slope " << fmt(rep.slope) << " vs l=" << fmt(l) << ": " << (rep.pass ? "PASS" : "FAIL") << "\n";
  return rep.pass ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Invariant tori of quasi-periodic dissipative systems by a numerical KAM scheme"};
  app.require_subcommand(1);
  Flags f;

  auto common = [&](CLI::App* c) {
    c->add_option("--out", f.out, "output directory");
    c->add_option("--seed", f.seed, "random seed");
  };
  auto* run_cmd = app.add_subcommand("run", "run the KAM iteration at the config's xi");
  run_cmd->add_option("--config", f.config, "system JSON")->required();
  run_cmd->add_option("--max-steps", f.max_steps);
  run_cmd->add_option("--tol", f.tol);
  common(run_cmd);

  auto* sweep_cmd = app.add_subcommand("sweep", "Monte-Carlo estimate of the excluded parameter set");
  sweep_cmd->add_option("--config", f.config, "system JSON")->required();
  sweep_cmd->add_option("--gamma", f.gammas, "Diophantine constant (repeatable)");
  sweep_cmd->add_option("--samples", f.samples);
  common(sweep_cmd);

  auto* bounds_cmd = app.add_subcommand("bounds", "randomized inequality suites");
  bounds_cmd->add_option("--suite", f.suite, "tail, divisor or sublevel")->required();
  bounds_cmd->add_option("--cases", f.cases);
  bounds_cmd->add_option("--constant-scale", f.constant_scale, "multiplies the bound's constant (negative control)");
  common(bounds_cmd);

  auto* smooth_cmd = app.add_subcommand("smooth", "approximation rate of the analytic smoothing");
  smooth_cmd->add_option("--function", f.function, "trig or decay");
  smooth_cmd->add_option("--decay", f.decay, "regularity of the decay test function");
  smooth_cmd->add_option("--l", f.l, "claimed rate (defaults to --decay)");
  smooth_cmd->add_option("--r-tilde", f.r_tilde);
  smooth_cmd->add_option("--levels", f.levels);
  common(smooth_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(f);
    if (sweep_cmd->parsed()) return cmd_sweep(f);
    if (bounds_cmd->parsed()) return cmd_bounds(f);
    if (smooth_cmd->parsed()) return cmd_smooth(f);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const InapplicableError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
