// One PASS/FAIL line per acceptance criterion. Tolerances and time limits are
// fixed here; the exit status is nonzero if any criterion fails.

#include "homological_cases.hpp"

#include <kamtori/io.hpp>
#include <kamtori/smoothing.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <sys/wait.h>

using namespace kt;
namespace fs = std::filesystem;

namespace {

const std::string kCli = KAMTORI_CLI;
const std::string kConfigs = KAMTORI_CONFIGS;

int failures = 0;

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); }
};

void report(int id, bool pass, const std::string& detail, double secs) {
  failures += !pass;
  std::printf("%s criterion %d: %s (%.2f s)\n", pass ? "PASS" : "FAIL", id, detail.c_str(), secs);
  std::fflush(stdout);
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("kamtori_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

/// Runs the CLI with stdout captured to out/stdout.txt; returns the exit code.
int cli(const std::string& args, const fs::path& out) {
  const std::string cmd = kCli + " " + args + " --out " + out.string() + " >" + (out / "stdout.txt").string() + " 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string config(const std::string& name) { return kConfigs + "/" + name + ".json"; }

RVector golden_xi() { return (RVector(2) << 1.0, kGolden).finished(); }

void homological_exactness() {
  Timer t;
  std::mt19937_64 rng(20240601);
  double worst = 0.0;
  int solved = 0;
  for (int i = 0; i < 100; ++i) {
    const HomCase c = random_case(rng, i % 2 == 0);
    const auto v0 = solve_v0(c.u0, c.st, c.P1, c.K_plus);
    const auto v1 = solve_v1(c.u1, c.st, c.P1, c.K_plus);
    const auto ph = solve_phi(c.w, c.st, c.P2, c.K_plus);
    worst = std::max({worst, v0_residual(v0, c), v1_residual(v1, c), phi_residual(ph, c)});
    ++solved;
  }
  const double secs = t.seconds();
  report(1, solved == 100 && worst <= 1e-10 && secs < 10,
         "homological exactness, 100 cases, max relative residual " + num(worst) + " <= 1e-10, limit 10 s", secs);
}

void kam_convergence() {
  Timer t;
  const auto spec = planar_spec(1e-3);
  const auto res = run(spec, golden_xi());
  const auto& r = res.run;
  bool ok = r.status == RunStatus::Converged && r.steps.size() <= 6 && res.torus;
  double worst_ratio = 0.0;
  for (std::size_t nu = 1; nu + 1 < r.diagnostics.size(); ++nu)
    worst_ratio = std::max(worst_ratio, r.diagnostics[nu + 1].majorant() / r.diagnostics[nu].majorant());
  const double fine = res.torus ? invariance_residual(*res.torus, spec, golden_xi(), 256) : INFINITY;
  ok = ok && worst_ratio <= 0.5 && fine <= 1e-8;
  const double secs = t.seconds();
  report(2, ok && secs < 30,
         "planar example: " + std::string(status_name(r.status)) + " in " + std::to_string(r.steps.size()) +
             " steps (<= 6), contraction " + num(worst_ratio) + " <= 0.5, residual on 2x grid " + num(fine) +
             " <= 1e-8, limit 30 s",
         secs);
}

void drift_scaling() {
  Timer t;
  const auto a = run(planar_spec(1e-3), golden_xi()), b = run(planar_spec(5e-4), golden_xi());
  double ratio = NAN;
  if (a.torus && b.torus)
    ratio = (a.torus->omega_star - golden_xi()).norm() / (b.torus->omega_star - golden_xi()).norm();
  report(3, ratio >= 2 / 2.5 && ratio <= 2 * 2.5, "frequency drift ratio eps vs eps/2 = " + num(ratio) + " in [0.8, 5]",
         t.seconds());
}

void tail_inequality() {
  Timer t;
  const auto rows = tail_suite(200, derive_seed(1, kBoundsStream));
  int bad = 0;
  double worst = 0.0;
  for (const auto& r : rows) {
    bad += !r.pass;
    worst = std::max(worst, r.tail / r.bound);
  }
  const double secs = t.seconds();
  report(4, bad == 0 && secs < 20,
         "truncation tail, 200 series, " + std::to_string(bad) + " violations, max tail/bound " + num(worst) +
             ", limit 20 s",
         secs);
}

void divisor_sum_inequality() {
  Timer t;
  DivisorSuiteOptions opt;
  opt.seed = derive_seed(1, kBoundsStream);
  const auto rows = divisor_suite(opt);
  int bad_l2 = 0, bad_l1 = 0;
  double worst = 0.0;
  for (const auto& r : rows) {
    (r.norm == LatticeNorm::L2 ? bad_l2 : bad_l1) += !r.pass;
    worst = std::max(worst, r.sum / r.bound);
  }
  const double secs = t.seconds();
  report(5, rows.size() == 400 && bad_l2 == 0 && bad_l1 == 0 && secs < 60,
         "small-divisor sums, 200 cases, violations |k|_2 " + std::to_string(bad_l2) + " / |k|_1 " +
             std::to_string(bad_l1) + ", max sum/bound " + num(worst) + ", limit 60 s",
         secs);
}

void sublevel_inequality() {
  Timer t;
  const auto rows = sublevel_suite(1000000);
  int bad = 0;
  double worst = 0.0;
  for (const auto& r : rows) {
    bad += !r.result.pass;
    worst = std::max(worst, r.result.measured / r.result.bound);
  }
  report(6, rows.size() == 9 && bad == 0,
         "sublevel sets, 3 functions x 3 levels, " + std::to_string(bad) + " failures, max measured/bound " + num(worst),
         t.seconds());
}

void exclusion_scaling(std::string& sweep_a) {
  Timer t;
  const auto out = scratch("sweep_a");
  const int code = cli("sweep --config " + config("planar"), out);
  double slope = NAN;
  if (code == 0) slope = json::parse(read_file((out / "slope_fit.json").string())).at("slope").get<double>();
  sweep_a = out.string();
  const double secs = t.seconds();
  report(7, code == 0 && slope >= 0.8 && slope <= 1.2 && secs < 60,
         "excluded-fraction slope " + num(slope) + " in [0.8, 1.2] over 5 gammas, 1e4 samples, limit 60 s", secs);
}

void smoothing_rate() {
  Timer t;
  bool ok = true;
  std::string detail = "smoothing slopes";
  for (double l : {2.0, 4.0, 6.0}) {
    const auto rep = rate_report(build_sequence(decay_function(1, l, 20000), 1.0 / 3, 6, l), l);
    ok = ok && std::abs(rep.slope - l) <= 0.3;
    detail += " l=" + num(l) + ":" + num(rep.slope);
  }
  const auto seq = build_sequence(cos_mode(1, {1}, 1, 0, 1.0) + sin_mode(1, {3}, 1, 0, 0.5), 1.0 / 3, 5);
  double worst = 0.0;
  for (std::size_t j = 0; j < seq.errors.size(); ++j)
    if (seq.radii[j] * 3 <= 0.5) worst = std::max(worst, seq.errors[j]);
  ok = ok && worst <= 1e-14;
  report(8, ok, detail + " (within 0.3); plateau reproduction error " + num(worst) + " <= 1e-14", t.seconds());
}

void resonant_halt() {
  Timer t;
  const auto out = scratch("resonant");
  const int code = cli("run --config " + config("planar_resonant"), out);
  const std::string text = read_file((out / "stdout.txt").string());
  double divisor = NAN;
  const auto pos = text.find("|divisor|=");
  if (pos != std::string::npos) divisor = std::strtod(text.c_str() + pos + 10, nullptr);
  const auto kpos = text.find("resonant k=");
  const std::string km = kpos == std::string::npos ? "?" : text.substr(kpos + 9, text.find(" |") - kpos - 9);
  report(9, code == 2 && divisor < 1e-14,
         "resonant config exit code " + std::to_string(code) + " (2), " + km + ", |divisor| " + num(divisor) +
             " < 1e-14",
         t.seconds());
}

void determinism(const std::string& sweep_a) {
  Timer t;
  const auto r1 = scratch("run_a"), r2 = scratch("run_b"), s2 = scratch("sweep_b");
  const std::string cfg = " --config " + config("planar");
  bool ok = cli("run" + cfg, r1) == 0 && cli("run" + cfg, r2) == 0 && cli("sweep" + cfg, s2) == 0;
  int compared = 0;
  for (const char* f : {"diagnostics.csv", "torus.json"}) {
    ok = ok && read_file((r1 / f).string()) == read_file((r2 / f).string());
    ++compared;
  }
  for (const auto& e : fs::directory_iterator(sweep_a)) {
    const auto name = e.path().filename().string();
    if (name == "stdout.txt") continue;
    ok = ok && fs::exists(s2 / name) && read_file(e.path().string()) == read_file((s2 / name).string());
    ++compared;
  }
  report(10, ok && compared >= 8, "byte-identical outputs over " + std::to_string(compared) + " files from repeated runs",
         t.seconds());
}

}  // namespace

int main() {
  std::string sweep_a;
  const auto guard = [](int id, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(id, false, std::string("exception: ") + e.what(), 0.0);
    }
  };
  guard(1, homological_exactness);
  guard(2, kam_convergence);
  guard(3, drift_scaling);
  guard(4, tail_inequality);
  guard(5, divisor_sum_inequality);
  guard(6, sublevel_inequality);
  guard(7, [&] { exclusion_scaling(sweep_a); });
  guard(8, smoothing_rate);
  guard(9, resonant_halt);
  guard(10, [&] { determinism(sweep_a); });
  std::printf("%d of 10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
