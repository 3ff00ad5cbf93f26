#pragma once

#include "builtin.hpp"
#include "kamdriver.hpp"
#include "resonance.hpp"
#include "suites.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace kamtori {

using json = nlohmann::json;

/// %.17g in the C locale; round-trips every double.
inline std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Integer vector as "1;-1" so it fits in one CSV field.
inline std::string mode_field(const std::vector<int>& k) {
  std::string s;
  for (std::size_t j = 0; j < k.size(); ++j) s += (j ? ";" : "") + std::to_string(k[j]);
  return s;
}

/// Writes bytes verbatim (LF line endings on every platform).
inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw InputError("cannot write " + path);
  f << text;
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

/// splitmix64 of (seed, stream): independent per-subsystem seeds from one config seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

enum SeedStream : std::uint64_t { kSweepStream = 1, kBoundsStream = 2 };

// ---- TrigPoly JSON ----

inline json to_json(const TrigPoly& f) {
  json entries = json::array();
  for (const auto& [k, c] : f.coeffs()) {
    json re = json::array(), im = json::array();
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
      json rr = json::array(), ii = json::array();
      for (Eigen::Index j = 0; j < c.cols(); ++j) rr.push_back(c(i, j).real()), ii.push_back(c(i, j).imag());
      re.push_back(rr);
      im.push_back(ii);
    }
    entries.push_back({{"k", k}, {"re", re}, {"im", im}});
  }
  return {{"n_angles", f.n_angles()}, {"shape", {f.rows(), f.cols()}}, {"real", f.is_real()}, {"entries", entries}};
}

inline CMatrix matrix_from_json(const json& re, const json* im, int rows, int cols, const std::string& what) {
  auto check = [&](const json& m) {
    if (!m.is_array() || int(m.size()) != rows) throw InputError(what + ": expected " + std::to_string(rows) + " rows");
    for (const auto& r : m)
      if (!r.is_array() || int(r.size()) != cols) throw InputError(what + ": expected " + std::to_string(cols) + " columns");
  };
  check(re);
  if (im) check(*im);
  CMatrix c(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      c(i, j) = Complex(re[std::size_t(i)][std::size_t(j)].get<double>(),
                        im ? (*im)[std::size_t(i)][std::size_t(j)].get<double>() : 0.0);
  if (!c.allFinite()) throw InputError(what + ": non-finite entry");
  return c;
}

inline TrigPoly trigpoly_from_json(const json& j) {
  try {
    const int n = j.at("n_angles").get<int>();
    const auto shape = j.at("shape").get<std::vector<int>>();
    if (shape.size() != 2) throw InputError("TrigPoly JSON: shape must be [rows, cols]");
    TrigPoly f(n, shape[0], shape[1], j.value("real", true));
    for (const auto& e : j.at("entries")) {
      const auto k = e.at("k").get<Mode>();
      if (int(k.size()) != n) throw InputError("TrigPoly JSON: mode " + mode_string(k) + " has wrong length");
      const json* im = e.contains("im") ? &e.at("im") : nullptr;
      f.add(k, matrix_from_json(e.at("re"), im, shape[0], shape[1], "TrigPoly JSON entry " + mode_string(k)));
    }
    return f;
  } catch (const json::exception& e) {
    throw InputError(std::string("TrigPoly JSON: ") + e.what());
  }
}

// ---- configuration ----

struct SweepSettings {
  std::vector<double> gammas;
  std::size_t samples = 10000;
  std::vector<double> ladder_K{0.0, 50.0};
};

struct RunConfig {
  SystemSpec spec;
  std::optional<RVector> xi;
  KamOptions options;
  SweepSettings sweep;
  std::uint64_t seed = 42;
};

namespace detail {

inline RVector vec(const json& j, int n, const std::string& what) {
  if (!j.is_array() || int(j.size()) != n) throw InputError(what + ": expected " + std::to_string(n) + " entries");
  RVector v(n);
  for (int i = 0; i < n; ++i) v[i] = j[std::size_t(i)].get<double>();
  if (!v.allFinite()) throw InputError(what + ": non-finite entry");
  return v;
}

/// {matrix: rows x n3, offset: rows} -> xi -> matrix xi + offset.
inline FreqMap affine_map(const RMatrix& A, const RVector& b) {
  return [A, b](const RVector& xi, double) { return RVector(A * xi + b); };
}

inline PolyPerturbation poly_from_json(const json& j, const Dims& d) {
  PolyPerturbation p;
  static const char* names[4] = {"g1", "g2", "g3", "g4"};
  for (int c = 0; c < 4; ++c) {
    if (!j.contains(names[c])) continue;
    for (const auto& t : j.at(names[c])) {
      PolyTerm term{t.value("power", std::vector<int>(std::size_t(d.n1()), 0)), trigpoly_from_json(t.at("coeff"))};
      if (int(term.power.size()) != d.n1()) throw InputError(std::string(names[c]) + ": power needs n1 entries");
      for (int e : term.power)
        if (e < 0) throw InputError(std::string(names[c]) + ": negative power");
      if (term.coeff.n_angles() != d.n2() || term.coeff.rows() != d.g_dim(c + 1) || term.coeff.cols() != 1)
        throw InputError(std::string(names[c]) + ": coefficient must be a g_dim x 1 poly on T^n2");
      p.g[std::size_t(c)].push_back(std::move(term));
    }
  }
  return p;
}

}  // namespace detail

/// Parses the JSON system description. Integrable data is affine in xi
/// (omega) and constant (Lambda, B); B must be block diagonal.
inline RunConfig config_from_json(const json& j) {
  try {
    RunConfig cfg;
    SystemSpec& s = cfg.spec;
    const auto& jd = j.at("dims");
    s.dims = Dims{jd.at("n11").get<int>(), jd.at("n12").get<int>(), jd.at("n21").get<int>(), jd.at("n22").get<int>(),
                  jd.at("n3").get<int>()};
    const Dims& d = s.dims;
    if (d.n11 < 0 || d.n12 < 0 || d.n21 < 0 || d.n22 < 0 || d.n3 < 1 || d.n2() < 1)
      throw InputError("dims: need non-negative blocks, n2 >= 1 and n3 >= 1");
    const auto& jq = j.at("exponents");
    for (int i = 0; i < 7; ++i) s.q.q[std::size_t(i)] = jq.at("q" + std::to_string(i + 1)).get<double>();
    s.eps = j.at("epsilon").get<double>();
    s.gamma = j.at("gamma").get<double>();
    s.iota = j.at("iota").get<double>();
    s.alpha = j.at("alpha").get<int>();
    s.l = j.at("l").get<double>();
    for (const auto& b : j.at("param_box")) {
      const auto lh = b.get<std::vector<double>>();
      if (lh.size() != 2 || !(lh[0] < lh[1])) throw InputError("param_box: each entry must be [lo, hi] with lo < hi");
      s.box.emplace_back(lh[0], lh[1]);
    }
    if (int(s.box.size()) != d.n3) throw InputError("param_box: need n3 intervals");
    if (!(s.eps > 0) || !(s.gamma > 0)) throw InputError("epsilon and gamma must be positive");

    const auto& ji = j.at("integrable");
    const auto& jw = ji.at("omega");
    RMatrix W = matrix_from_json(jw.at("matrix"), nullptr, d.n2(), d.n3, "integrable.omega.matrix").real();
    RVector w0 = jw.contains("offset") ? detail::vec(jw.at("offset"), d.n2(), "integrable.omega.offset")
                                       : RVector(RVector::Zero(d.n2()));
    s.omega1 = detail::affine_map(W.topRows(d.n21), w0.head(d.n21));
    s.omega2 = detail::affine_map(W.bottomRows(d.n22), w0.tail(d.n22));

    CVector lam = CVector::Zero(d.n1());
    if (d.n1()) {
      const auto& jl = ji.at("Lambda");
      lam.real() = detail::vec(jl.at("re"), d.n1(), "integrable.Lambda.re");
      if (jl.contains("im")) lam.imag() = detail::vec(jl.at("im"), d.n1(), "integrable.Lambda.im");
    }
    CMatrix B = CMatrix::Identity(d.n1(), d.n1());
    if (ji.contains("B") && d.n1()) {
      const auto& jb = ji.at("B");
      B = matrix_from_json(jb.at("re"), jb.contains("im") ? &jb.at("im") : nullptr, d.n1(), d.n1(), "integrable.B");
      if (d.n11 && d.n12 &&
          (max_abs(B.topRightCorner(d.n11, d.n12)) > 0 || max_abs(B.bottomLeftCorner(d.n12, d.n11)) > 0))
        throw InputError("integrable.B must be block diagonal");
    }
    const CVector l1 = lam.head(d.n11), l2 = lam.tail(d.n12);
    const CMatrix B1 = B.topLeftCorner(d.n11, d.n11), B2 = B.bottomRightCorner(d.n12, d.n12);
    s.lambda1 = [l1](const RVector&, double) { return l1; };
    s.lambda2 = [l2](const RVector&, double) { return l2; };
    s.B1 = [B1](const RVector&, double) { return B1; };
    s.B2 = [B2](const RVector&, double) { return B2; };

    const auto& jp = j.at("perturbation");
    const auto kind = jp.at("kind").get<std::string>();
    if (kind == "builtin") {
      const auto name = jp.at("name").get<std::string>();
      const auto& reg = builtin_registry();
      auto it = reg.find(name);
      if (it == reg.end()) throw InputError("unknown builtin perturbation '" + name + "'");
      s.pert = make_perturbation(d, it->second());
    } else if (kind == "trigpoly") {
      s.pert = make_perturbation(d, detail::poly_from_json(jp, d), jp.value("analytic", true));
    } else {
      throw InputError("perturbation.kind must be 'trigpoly' or 'builtin'");
    }

    cfg.seed = j.value("seed", std::uint64_t(42));
    if (j.contains("xi")) cfg.xi = detail::vec(j.at("xi"), d.n3, "xi");
    if (j.contains("run")) {
      const auto& jr = j.at("run");
      cfg.options.tol = jr.value("tol", cfg.options.tol);
      cfg.options.max_steps = jr.value("max_steps", cfg.options.max_steps);
      cfg.options.k_cap = jr.value("k_cap", cfg.options.k_cap);
    }
    if (j.contains("sweep")) {
      const auto& js = j.at("sweep");
      cfg.sweep.gammas = js.value("gammas", cfg.sweep.gammas);
      cfg.sweep.samples = js.value("samples", cfg.sweep.samples);
      cfg.sweep.ladder_K = js.value("ladder_K", cfg.sweep.ladder_K);
    }
    return cfg;
  } catch (const json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
}

inline RunConfig load_config(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
  return config_from_json(j);
}

// ---- run output ----

inline std::string diagnostics_csv(const std::vector<Diagnostics>& rows) {
  std::string out = "nu,K,r,s,norm_u0,norm_u1,norm_w,residual,omega_drift,lambda_drift,status\n";
  for (const auto& d : rows)
    out += std::to_string(d.nu) + "," + std::to_string(d.K) + "," + fmt(d.r) + "," + fmt(d.s) + "," + fmt(d.norm_u0) +
           "," + fmt(d.norm_u1) + "," + fmt(d.norm_w) + "," + fmt(d.residual) + "," + fmt(d.omega_drift) + "," +
           fmt(d.lambda_drift) + "," + d.status + "\n";
  return out;
}

inline json to_json(const TorusResult& t) {
  json lam = json::array();
  for (Eigen::Index i = 0; i < t.lambda_star.size(); ++i) lam.push_back({t.lambda_star[i].real(), t.lambda_star[i].imag()});
  return {{"V0", to_json(t.V0)},
          {"angle_shift", to_json(t.AngleShift)},
          {"omega_star", std::vector<double>(t.omega_star.data(), t.omega_star.data() + t.omega_star.size())},
          {"lambda_star", lam},
          {"residual", t.residual}};
}

// ---- sweep output ----

inline std::string sweep_csv(const SweepResult& r) {
  const std::size_t n3 = r.xi.empty() ? 0 : std::size_t(r.xi[0].size());
  std::string out;
  for (std::size_t j = 0; j < n3; ++j) out += "xi_" + std::to_string(j + 1) + ",";
  out += "excluded,first_offending_k,first_offending_m,nu\n";
  for (std::size_t i = 0; i < r.xi.size(); ++i) {
    for (std::size_t j = 0; j < n3; ++j) out += fmt(r.xi[i][Eigen::Index(j)]) + ",";
    const auto& f = r.flags[i];
    out += std::string(f.excluded ? "1" : "0") + "," + mode_field(f.k) + "," + mode_field(f.m) + "," +
           (f.excluded ? std::to_string(f.nu) : "") + "\n";
  }
  return out;
}

inline json sweep_summary(const SweepResult& r, const SlopeFit& fit) {
  return {{"gamma", r.gamma},
          {"fraction", r.estimate.excluded_fraction},
          {"ci95", r.estimate.ci95},
          {"samples", r.estimate.samples},
          {"slope_fit", {{"slope", fit.slope}, {"intercept", fit.intercept}, {"points", fit.points}}}};
}

// ---- bound-check output ----

inline std::string divisor_csv(const std::vector<DivisorRow>& rows) {
  std::string out = "case_id,n,tau,b,v,sigma,gamma,sum,bound,pass,norm\n";
  for (const auto& r : rows)
    out += std::to_string(r.case_id) + "," + std::to_string(r.in.omega.size()) + "," + fmt(r.in.tau) + "," +
           std::to_string(r.in.b) + "," + std::to_string(r.in.v) + "," + fmt(r.in.sigma) + "," + fmt(r.in.gamma) +
           "," + fmt(r.sum) + "," + fmt(r.bound) + "," + (r.pass ? "1" : "0") + "," +
           (r.norm == LatticeNorm::L2 ? "l2" : "l1") + "\n";
  return out;
}

inline std::string tail_csv(const std::vector<TailRow>& rows) {
  std::string out = "case_id,n,r,rho,K,f_norm,tail,bound,pass\n";
  for (const auto& r : rows)
    out += std::to_string(r.case_id) + "," + std::to_string(r.n) + "," + fmt(r.r) + "," + fmt(r.rho) + "," +
           fmt(r.K) + "," + fmt(r.f_norm) + "," + fmt(r.tail) + "," + fmt(r.bound) + "," + (r.pass ? "1" : "0") + "\n";
  return out;
}

inline std::string sublevel_csv(const std::vector<SublevelRow>& rows) {
  std::string out = "case_id,function,alpha,c,eps,measured,bound,min_derivative,applicable,pass\n";
  for (const auto& r : rows)
    out += std::to_string(r.case_id) + "," + r.function + "," + std::to_string(r.alpha) + "," + fmt(r.c) + "," +
           fmt(r.eps) + "," + fmt(r.result.measured) + "," + fmt(r.result.bound) + "," +
           fmt(r.result.min_derivative) + "," + (r.result.applicable ? "1" : "0") + "," +
           (r.result.pass ? "1" : "0") + "\n";
  return out;
}

inline std::string smoothing_csv(const ApproxSequence& seq) {
  std::string out = "j,r,increment,error\n";
  for (std::size_t j = 0; j < seq.radii.size(); ++j)
    out += std::to_string(j) + "," + fmt(seq.radii[j]) + "," + fmt(seq.increments[j]) + "," + fmt(seq.errors[j]) + "\n";
  return out;
}

}  // namespace kamtori
