#include "helpers.hpp"

#include <kamtori/io.hpp>

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sys/wait.h>

using namespace kt;
namespace fs = std::filesystem;

namespace {

const std::string kCli = KAMTORI_CLI;
const std::string kConfigs = KAMTORI_CONFIGS;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("kamtori_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int cli(const std::string& args) {
  const int st = std::system((kCli + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string config(const std::string& name) { return kConfigs + "/" + name + ".json"; }

}  // namespace

TEST(ExitCodes, Run) {
  const auto out = scratch("run");
  EXPECT_EQ(cli("run --config " + config("zero") + " --out " + out.string()), 0);
  EXPECT_EQ(cli("run --config " + config("planar") + " --out " + out.string()), 0);
  EXPECT_TRUE(fs::exists(out / "diagnostics.csv"));
  EXPECT_TRUE(fs::exists(out / "torus.json"));
  EXPECT_EQ(cli("run --config " + config("planar_resonant") + " --out " + out.string()), 2);
  EXPECT_EQ(cli("run --config " + config("planar_diverge") + " --out " + out.string()), 3);
  EXPECT_EQ(cli("run --config " + config("planar") + " --max-steps 1 --out " + out.string()), 3);
}

TEST(ExitCodes, InputErrors) {
  const auto out = scratch("input");
  EXPECT_EQ(cli("run --config " + (out / "missing.json").string()), 1);
  EXPECT_EQ(cli("run"), 1);
  EXPECT_EQ(cli("frobnicate"), 1);
  write_file((out / "bad.json").string(), "{\"dims\": ");
  EXPECT_EQ(cli("run --config " + (out / "bad.json").string()), 1);
  auto j = json::parse(read_file(config("planar")));
  j["sweep"]["gammas"] = json::array();
  write_file((out / "nogamma.json").string(), j.dump());
  EXPECT_EQ(cli("sweep --config " + (out / "nogamma.json").string() + " --out " + out.string()), 1);
  EXPECT_EQ(cli("bounds --suite A9 --out " + out.string()), 1);
}

TEST(ExitCodes, FailedChecks) {
  const auto out = scratch("checks");
  EXPECT_EQ(cli("bounds --suite divisor --cases 20 --out " + out.string()), 0);
  EXPECT_EQ(cli("bounds --suite divisor --cases 20 --constant-scale 1e-6 --out " + out.string()), 4);
  EXPECT_EQ(cli("smooth --function decay --decay 4 --out " + out.string()), 0);
  EXPECT_EQ(cli("smooth --function decay --decay 4 --l 6 --out " + out.string()), 4);
  EXPECT_EQ(cli("smooth --function trig --out " + out.string()), 0);
  EXPECT_TRUE(fs::exists(out / "bounds_divisor.csv"));
  EXPECT_TRUE(fs::exists(out / "smooth_decay.csv"));
}

TEST(Outputs, TorusJsonMatchesLibraryRun) {
  const auto out = scratch("torus");
  ASSERT_EQ(cli("run --config " + config("planar") + " --out " + out.string()), 0);
  const auto j = json::parse(read_file((out / "torus.json").string()));
  const auto cfg = load_config(config("planar"));
  const auto res = run(cfg.spec, *cfg.xi, cfg.options);
  ASSERT_TRUE(res.torus);
  const auto w = j.at("omega_star").get<std::vector<double>>();
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[0], res.torus->omega_star[0]);
  EXPECT_EQ(w[1], res.torus->omega_star[1]);
  const TrigPoly V0 = trigpoly_from_json(j.at("V0"));
  EXPECT_EQ(V0.coeffs().size(), res.torus->V0.coeffs().size());
  for (const auto& [k, c] : res.torus->V0.coeffs()) EXPECT_EQ(max_abs(c - V0.coeff(k)), 0.0);
  EXPECT_LE(j.at("residual").get<double>(), 1e-8);

  const std::string csv = read_file((out / "diagnostics.csv").string());
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "nu,K,r,s,norm_u0,norm_u1,norm_w,residual,omega_drift,lambda_drift,status");
  EXPECT_NE(csv.find(",Converged\n"), std::string::npos);
  EXPECT_EQ(csv.find('\r'), std::string::npos);
}

TEST(Outputs, SweepIsByteDeterministic) {
  const auto a = scratch("sweep_a"), b = scratch("sweep_b");
  const std::string args = "sweep --config " + config("planar") + " --gamma 1e-3 --gamma 1e-2 --samples 400";
  ASSERT_EQ(cli(args + " --out " + a.string()), 0);
  ASSERT_EQ(cli(args + " --out " + b.string()), 0);
  for (const char* f : {"sweep_0.csv", "sweep_1.csv", "summary_0.json", "summary_1.json", "slope_fit.json"})
    EXPECT_EQ(read_file((a / f).string()), read_file((b / f).string())) << f;
  const std::string csv = read_file((a / "sweep_0.csv").string());
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "xi_1,xi_2,excluded,first_offending_k,first_offending_m,nu");
  const auto s = json::parse(read_file((a / "summary_1.json").string()));
  EXPECT_EQ(s.at("samples").get<std::size_t>(), 400u);
  EXPECT_GT(s.at("fraction").get<double>(), 0.0);
}

TEST(Config, PlanarConfigMatchesBuiltin) {
  const auto cfg = load_config(config("planar"));
  const auto ref = planar_spec(1e-3);
  ASSERT_TRUE(cfg.xi);
  EXPECT_EQ(cfg.seed, 42u);
  EXPECT_EQ(cfg.spec.q.q, ref.q.q);
  EXPECT_EQ(cfg.spec.box, ref.box);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 2 * M_PI);
  for (int t = 0; t < 20; ++t) {
    const RVector xi = (RVector(2) << 0.5 + u(rng) / 5, 0.5 + u(rng) / 5).finished();
    const RVector I = RVector::Constant(1, u(rng) - 3), phi = (RVector(2) << u(rng), u(rng)).finished();
    const auto a = integrable_at(cfg.spec, xi), b = integrable_at(ref, xi);
    EXPECT_EQ(a.omega, b.omega);
    EXPECT_EQ(a.lambda, b.lambda);
    const auto ga = G_at(cfg.spec, xi, 1e-3, I, phi), gb = G_at(ref, xi, 1e-3, I, phi);
    EXPECT_EQ(ga.G1, gb.G1);
    EXPECT_EQ(ga.G2, gb.G2);
  }
}

TEST(Config, ExplicitTrigPolyPerturbation) {
  const auto cfg = load_config(config("trigpoly_example"));
  const RVector xi = *cfg.xi;
  for (double p1 : {0.0, 0.7, 2.9})
    for (double p2 : {0.3, 4.1}) {
      const RVector I = RVector::Constant(1, 0.4), phi = (RVector(2) << p1, p2).finished();
      const auto g = G_at(cfg.spec, xi, cfg.spec.eps, I, phi);
      EXPECT_NEAR(g.G1[0], 1e-3 * std::cos(p1), 1e-18);
      EXPECT_NEAR(g.G2[0], 0.0, 1e-18);
      EXPECT_NEAR(g.G2[1], 1e-3 * 0.5 * 0.4 * std::sin(p2), 1e-18);
    }
}

TEST(Config, Rejections) {
  auto base = json::parse(read_file(config("planar")));
  auto bad = base;
  bad.erase("epsilon");
  EXPECT_THROW(config_from_json(bad), InputError);
  bad = base;
  bad["param_box"] = json::array({json::array({2.0, 1.0}), json::array({0.5, 2.0})});
  EXPECT_THROW(config_from_json(bad), InputError);
  bad = base;
  bad["perturbation"] = {{"kind", "builtin"}, {"name", "nope"}};
  EXPECT_THROW(config_from_json(bad), InputError);
  bad = base;
  bad["xi"] = json::array({1.0});
  EXPECT_THROW(config_from_json(bad), InputError);
  bad = base;
  bad["dims"]["n12"] = 2;
  bad["dims"]["n11"] = 0;
  bad["integrable"]["Lambda"] = {{"re", {-1.0, -2.0}}};
  bad["integrable"]["B"] = {{"re", {{1.0, 0.5}, {0.0, 1.0}}}};
  EXPECT_NO_THROW(config_from_json(bad));
  bad["dims"]["n11"] = 1;
  bad["dims"]["n12"] = 1;
  EXPECT_THROW(config_from_json(bad), InputError);
}

TEST(Json, TrigPolyRoundTrip) {
  std::mt19937_64 rng(8);
  for (int n : {1, 2, 3}) {
    const TrigPoly f = random_real(n, 2, 1, 4, rng);
    const TrigPoly g = trigpoly_from_json(json::parse(to_json(f).dump()));
    EXPECT_EQ(g.n_angles(), f.n_angles());
    EXPECT_EQ(g.is_real(), f.is_real());
    ASSERT_EQ(g.coeffs().size(), f.coeffs().size());
    for (const auto& [k, c] : f.coeffs()) EXPECT_EQ(max_abs(c - g.coeff(k)), 0.0);
  }
  EXPECT_THROW(trigpoly_from_json(json::parse(R"({"n_angles": 1, "shape": [1, 1], "entries": [{"k": [1, 2]}]})")),
               InputError);
}

TEST(Format, DoublesRoundTrip) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-30, 30);
  for (int i = 0; i < 1000; ++i) {
    const double x = std::exp(u(rng)) * (i % 2 ? -1 : 1);
    EXPECT_EQ(std::strtod(fmt(x).c_str(), nullptr), x);
  }
  EXPECT_EQ(fmt(0.1), "0.10000000000000001");
  EXPECT_EQ(mode_field({1, -1}), "1;-1");
}

TEST(Seeds, StreamsAreIndependent) {
  EXPECT_NE(derive_seed(42, kSweepStream), derive_seed(42, kBoundsStream));
  EXPECT_NE(derive_seed(42, kSweepStream), derive_seed(43, kSweepStream));
  EXPECT_EQ(derive_seed(42, kSweepStream), derive_seed(42, kSweepStream));
}
