#pragma once

#include "homological.hpp"
#include "model.hpp"
#include "smoothing.hpp"

#include <optional>
#include <string>

namespace kamtori {

/// Composed near-identity change of variables T(rho, phi) = (a(phi) + M(phi) rho, phi + Psi(phi)),
/// mapping current coordinates to the original ones.
struct Conjugacy {
  TrigPoly a;    // n1 x 1
  TrigPoly M;    // n1 x n1
  TrigPoly Psi;  // n2 x 1

  static Conjugacy identity(int n1, int n2) {
    return {TrigPoly(n2, n1, 1), TrigPoly::constant(n2, CMatrix::Identity(n1, n1)), TrigPoly(n2, n2, 1)};
  }
};

/// Lower-degree part of the perturbation in current coordinates:
/// P1 (u0 + u1 rho) in the action equation and P2 w in the angle equation.
struct LowerDegree {
  TrigPoly u0, u1, w;
};

struct StepTransform {
  TrigPoly v0, v1, Phi;
  int nu = 0;
  double strip_radius = 0.0;
};

enum class RunStatus { Converged, ResonantHalt, Diverged, MaxSteps };

inline const char* status_name(RunStatus s) {
  switch (s) {
    case RunStatus::Converged: return "Converged";
    case RunStatus::ResonantHalt: return "ResonantHalt";
    case RunStatus::Diverged: return "Diverged";
    case RunStatus::MaxSteps: return "MaxSteps";
  }
  return "?";
}

struct Diagnostics {
  int nu = 0;
  int K = 0;
  double r = 0.0, s = 0.0;
  double norm_u0 = 0.0, norm_u1 = 0.0, norm_w = 0.0;
  double residual = 0.0;
  double omega_drift = 0.0, lambda_drift = 0.0;
  std::string status;
  double majorant() const { return std::max(norm_u0, norm_w); }
};

struct KamOptions {
  int max_steps = 10;
  double tol = 1e-9;
  std::optional<double> gamma;  // defaults to spec.gamma
  double k_cap = 12.0;          // working truncation cap for homological solves and transforms
  double r_tilde = 0.1;
  int validation_density = 5;
};

struct KamStep {
  StepTransform transform;
  StageData stage;  // stage after the step
  Diagnostics diag;
};

struct ResonanceHalt {
  Mode k;
  std::vector<int> m;
  Complex divisor;
};

struct KamRun {
  std::vector<KamStep> steps;
  std::vector<Diagnostics> diagnostics;  // one row per stage nu = 0..final
  RunStatus status = RunStatus::MaxSteps;
  std::optional<ResonanceHalt> halt;
  bool schedule_truncated = false;
  double eps0 = 1.0;
  double drift_constant = 0.0;
  double c0_measured = 0.0;
  std::string message;
  LowerDegree last;  // lower-degree part at the final stage
  Conjugacy conjugacy;
  StageData final_stage;
};

struct TorusResult {
  TrigPoly V0;
  TrigPoly AngleShift;
  RVector omega_star;
  CVector lambda_star;
  double residual = 0.0;
};

struct RunResult {
  KamRun run;
  std::optional<TorusResult> torus;
};

namespace detail {

class DivergedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::vector<CMatrix> grid_values(const TrigPoly& f, const Grid& g) { return to_grid(f, g).values; }

}  // namespace detail

/// Samples the field pulled back through T at rho = 0 and its rho-Jacobian, then
/// extracts u0, u1, w. The inverse Jacobian of T is applied pointwise by block
/// back-substitution.
inline LowerDegree pullback_lower_degree(const SystemSpec& spec, const RVector& xi, double eps,
                                         const Integrable& base, const ScalingMatrices& P, const StageData& st,
                                         const Conjugacy& T, const Grid& grid) {
  const int n1 = spec.dims.n1(), n2 = spec.dims.n2();
  const auto a = detail::grid_values(T.a, grid);
  const auto da = detail::grid_values(jacobian(T.a), grid);
  const auto M = detail::grid_values(T.M, grid);
  const auto psi = detail::grid_values(T.Psi, grid);
  const auto dpsi = detail::grid_values(jacobian(T.Psi), grid);
  std::vector<std::vector<CMatrix>> dM;
  for (int j = 0; j < n2; ++j) dM.push_back(detail::grid_values(partial_derivative(T.M, j), grid));

  const RMatrix A0 = base.A().real();
  const CMatrix An = st.A();
  const RVector P1inv = P.P1.cwiseInverse(), P2inv = P.P2.cwiseInverse();
  const std::size_t total = grid.total();
  GridSamples su0{grid, n1, 1, std::vector<CMatrix>(total)};
  GridSamples su1{grid, n1, n1, std::vector<CMatrix>(total)};
  GridSamples sw{grid, n2, 1, std::vector<CMatrix>(total)};
  for (std::size_t i = 0; i < total; ++i) {
    const RVector I = a[i].col(0).real();
    const RVector theta = grid.point(i) + psi[i].col(0).real();
    const auto G = G_at(spec, xi, eps, I, theta);
    const auto J = G_jacobian_at(spec, xi, eps, I, theta);
    const RVector XI = A0 * I + P.P1.cwiseProduct(G.G1);
    const RVector Xphi = base.omega + P.P2.cwiseProduct(G.G2);
    const RMatrix E = RMatrix::Identity(n2, n2) + dpsi[i].real();
    const RMatrix Mi = M[i].real();
    const RMatrix Da = da[i].real();
    Eigen::PartialPivLU<RMatrix> Elu(E), Mlu(Mi);
    const double detE = E.determinant(), detM = Mi.determinant();
    if (!(std::abs(detE) > 1e-8) || !(std::abs(detM) > 1e-8))
      throw detail::DivergedError("transformation Jacobian is singular on the grid");
    const RVector Y = Elu.solve(Xphi);
    const RVector FI = Mlu.solve(XI - Da * Y);
    const RMatrix DXI = A0 + P.P1.asDiagonal() * J.G1;
    const RMatrix DXphi = P.P2.asDiagonal() * J.G2;
    const RMatrix dY = Elu.solve(DXphi * Mi);
    RMatrix inner = DXI * Mi - Da * dY;
    for (int j = 0; j < n2; ++j) inner -= dM[std::size_t(j)][i].real() * Y[j];
    const RMatrix dFI = Mlu.solve(inner);
    su0.values[i] = (P1inv.asDiagonal() * FI).cast<Complex>();
    su1.values[i] = P1inv.cast<Complex>().asDiagonal() * (dFI.cast<Complex>() - An);
    sw.values[i] = (P2inv.asDiagonal() * (Y - st.omega)).cast<Complex>();
  }
  return {from_grid(su0, true), from_grid(su1, true), from_grid(sw, true)};
}

/// sup over the grid of the invariance defect of phi -> (V0(phi), phi + Psi(phi))
/// under phi' = omega, with each component divided by its P-block scale.
inline double embedding_residual(const SystemSpec& spec, const RVector& xi, double eps, const TrigPoly& V0,
                                 const TrigPoly& Psi, const RVector& omega, const Grid& grid) {
  const auto base = integrable_at(spec, xi, eps);
  const auto P = scaling(spec, eps);
  const auto v = detail::grid_values(V0, grid);
  const auto dv = detail::grid_values(directional_derivative(V0, omega), grid);
  const auto psi = detail::grid_values(Psi, grid);
  const auto dpsi = detail::grid_values(directional_derivative(Psi, omega), grid);
  double res = 0.0;
  for (std::size_t i = 0; i < grid.total(); ++i) {
    const RVector I = v[i].col(0).real();
    const RVector theta = grid.point(i) + psi[i].col(0).real();
    const auto X = vector_field(spec, base, P, xi, eps, I, theta);
    const RVector rI = (dv[i].col(0).real() - X.dI).cwiseQuotient(P.P1);
    const RVector rphi = (omega + dpsi[i].col(0).real() - X.dphi).cwiseQuotient(P.P2);
    if (rI.size()) res = std::max(res, rI.cwiseAbs().maxCoeff());
    if (rphi.size()) res = std::max(res, rphi.cwiseAbs().maxCoeff());
  }
  return res;
}

inline double invariance_residual(const TorusResult& torus, const SystemSpec& spec, const RVector& xi, int grid_N) {
  return embedding_residual(spec, xi, spec.eps, torus.V0, torus.AngleShift, torus.omega_star,
                            Grid::uniform(spec.dims.n2(), grid_N));
}

/// Run context shared by all steps.
struct KamContext {
  SystemSpec spec;
  RVector xi;
  double eps = 0.0;
  double gamma = 0.0;
  Integrable base;
  ScalingMatrices P;
  ScheduleParams sched;
  KamOptions opt;
  Grid grid;
  double K_T = 0.0;

  /// Spec whose perturbation is the one used to build stage nu: the analytic
  /// perturbation itself, or its smoothing at radius r_{nu+1}.
  SystemSpec working_spec(int nu) const {
    if (spec.pert.analytic) return spec;
    if (!spec.pert.poly) throw InputError("non-analytic perturbation must be given in trigpoly form");
    const double r = std::min(1.0, opt.r_tilde) * std::pow(3.0, -(nu + 1));
    SystemSpec out = spec;
    out.pert = make_perturbation(spec.dims, spec.pert.poly->map([r](const TrigPoly& c) { return smooth_periodic(c, r); }),
                                 false);
    out.pert.poly = spec.pert.poly;
    return out;
  }
};

struct KamState {
  Conjugacy T;
  StageData stage;
  LowerDegree ld;
};

inline KamContext make_context(const SystemSpec& spec, const RVector& xi, const KamOptions& opt, double c1) {
  KamContext c;
  c.spec = spec;
  c.xi = xi;
  c.eps = spec.eps;
  c.gamma = opt.gamma.value_or(spec.gamma);
  c.base = integrable_at(spec, xi);
  c.P = scaling(spec);
  c.opt = opt;
  c.sched = ScheduleParams{opt.r_tilde, spec.l, spec.alpha, spec.iota, spec.dims.n2(), spec.dims.n3, c1, c.gamma,
                           c.P.eps0};
  c.K_T = opt.k_cap;
  c.grid = working_grid(spec.dims.n2(), opt.k_cap);
  return c;
}

inline Diagnostics diagnose(const KamContext& c, const KamState& s, int K) {
  Diagnostics d;
  d.nu = s.stage.nu;
  d.K = K;
  d.r = s.stage.sched.r;
  d.s = s.stage.sched.s;
  d.norm_u0 = strip_norm_bound(s.ld.u0, d.r).value;
  d.norm_u1 = strip_norm_bound(s.ld.u1, d.r).value;
  d.norm_w = strip_norm_bound(s.ld.w, d.r).value;
  d.residual = embedding_residual(c.spec, c.xi, c.eps, s.T.a, s.T.Psi, s.stage.omega, c.grid);
  d.omega_drift = (s.stage.omega - c.base.omega).cwiseAbs().maxCoeff();
  d.lambda_drift = (s.stage.lambda - c.base.lambda).cwiseAbs().maxCoeff();
  return d;
}

inline KamState initial_state(const KamContext& c) {
  KamState s;
  const int n1 = c.spec.dims.n1(), n2 = c.spec.dims.n2();
  s.T = Conjugacy::identity(n1, n2);
  s.stage = StageData{0, c.base.omega, c.base.lambda, c.base.B, c.base.Binv, schedule(0, c.sched)};
  s.ld = pullback_lower_degree(c.spec.pert.analytic ? c.spec : c.working_spec(0), c.xi, c.eps, c.base, c.P, s.stage,
                               s.T, c.grid);
  return s;
}

/// One KAM step: nonresonance check, the three homological solves at
/// K_{nu+1} (capped), frequency/eigenvalue updates, transform composition and
/// re-extraction of the lower-degree part. Throws ResonantError or DivergedError.
inline KamStep kam_step(const KamContext& c, KamState& s, bool* truncated = nullptr) {
  const int nu = s.stage.nu;
  const auto next = schedule(nu + 1, c.sched);
  const double K_plus = std::min(double(next.K), c.opt.k_cap);
  if (truncated && next.K > c.opt.k_cap) *truncated = true;
  const auto nr = check_nonresonance(s.stage, c.gamma, c.spec.iota, c.eps, c.spec.q(5), 0.0, K_plus, 0.25);
  if (!nr.passed) throw ResonantError(nr.worst_k, nr.worst_m, nr.worst_divisor);

  StepTransform tr;
  tr.nu = nu;
  tr.strip_radius = 2.0 * next.r;
  tr.v0 = solve_v0(s.ld.u0, s.stage, c.P.P1, K_plus);
  auto v1 = solve_v1(s.ld.u1, s.stage, c.P.P1, K_plus);
  auto ph = solve_phi(s.ld.w, s.stage, c.P.P2, K_plus);
  tr.v1 = v1.v1;
  tr.Phi = ph.Phi;

  const int n1 = c.spec.dims.n1();
  const double K = c.K_T;
  const TrigPoly Mc = compose_angle(s.T.M, tr.Phi, K);
  Conjugacy T;
  T.a = compose_angle(s.T.a, tr.Phi, K) + multiply(Mc, tr.v0, K);
  T.M = multiply(Mc, TrigPoly::constant(c.spec.dims.n2(), CMatrix::Identity(n1, n1)) + tr.v1, K);
  T.Psi = truncate(tr.Phi + compose_angle(s.T.Psi, tr.Phi, K), K);
  s.T = std::move(T);

  StageData st = s.stage;
  st.nu = nu + 1;
  st.omega = s.stage.omega + c.P.P2.cwiseProduct(ph.omega_update);
  st.lambda = s.stage.lambda + c.P.P1.cast<Complex>().cwiseProduct(v1.lambda_update);
  st.sched = next;
  s.stage = st;
  s.ld = pullback_lower_degree(c.working_spec(nu + 1), c.xi, c.eps, c.base, c.P, s.stage, s.T, c.grid);

  KamStep out;
  out.transform = std::move(tr);
  out.stage = s.stage;
  out.diag = diagnose(c, s, int(K_plus));
  return out;
}

/// Constant c in the drift bounds |omega1^nu - omega1| <= c eps^{q6}, |omega2^nu - omega2| <= c eps^{q7},
/// |Lambda1^nu - Lambda1| <= c eps^{q2}, |Lambda2^nu - Lambda2| <= c eps^{q4} (unscaled blocks).
inline double drift_constant(const SystemSpec& spec, const Integrable& base, const StageData& st, double eps) {
  const auto& d = spec.dims;
  const auto& q = spec.q;
  double c = 0.0;
  auto upd = [&](double drift, double power) { c = std::max(c, drift / std::pow(eps, power)); };
  const RVector dw = (st.omega - base.omega).cwiseAbs();
  const RVector dl = (st.lambda - base.lambda).cwiseAbs();
  if (d.n21) upd(dw.head(d.n21).maxCoeff() / std::pow(eps, q(5)), q(6));
  if (d.n22) upd(dw.tail(d.n22).maxCoeff(), q(7));
  if (d.n11) upd(dl.head(d.n11).maxCoeff() / std::pow(eps, q(1)), q(2));
  if (d.n12) upd(dl.tail(d.n12).maxCoeff() / std::pow(eps, q(3)), q(4));
  return c;
}

/// Iterates KAM steps until max(|u0|, |w|) <= tol or a halt condition.
inline RunResult run(const SystemSpec& spec, const RVector& xi, const KamOptions& opt = {}) {
  if (xi.size() != spec.dims.n3) throw InputError("run: xi has wrong dimension");
  const auto report = validate(spec, opt.validation_density);
  if (!report.ok()) {
    std::string msg = "spec rejected:";
    for (const auto& v : report.violations) msg += " " + v + ";";
    throw InputError(msg);
  }
  for (int j = 0; j < spec.dims.n3; ++j)
    if (xi[j] < spec.box[std::size_t(j)].first || xi[j] > spec.box[std::size_t(j)].second)
      throw InputError("run: xi outside the parameter box");

  const KamContext c = make_context(spec, xi, opt, report.c1);
  RunResult out;
  KamRun& r = out.run;
  r.eps0 = c.P.eps0;
  r.c0_measured = report.c0;
  KamState s;
  int rising = 0;
  try {
    s = initial_state(c);
    r.diagnostics.push_back(diagnose(c, s, 0));
    for (int nu = 0;; ++nu) {
      const Diagnostics& d = r.diagnostics.back();
      if (!std::isfinite(d.majorant())) throw detail::DivergedError("non-finite perturbation norm");
      if (d.majorant() <= opt.tol) {
        r.status = RunStatus::Converged;
        break;
      }
      if (nu >= 1) {
        const double ratio = d.majorant() / r.diagnostics[r.diagnostics.size() - 2].majorant();
        rising = ratio > 1.0 ? rising + 1 : 0;
        if (rising >= 2) throw detail::DivergedError("contraction ratio above 1 for two consecutive steps");
      }
      if (nu >= opt.max_steps) {
        r.status = RunStatus::MaxSteps;
        break;
      }
      auto step = kam_step(c, s, &r.schedule_truncated);
      r.diagnostics.push_back(step.diag);
      r.steps.push_back(std::move(step));
    }
  } catch (const ResonantError& e) {
    r.status = RunStatus::ResonantHalt;
    r.halt = ResonanceHalt{e.k, e.m, e.divisor};
    r.message = "resonance at k=" + mode_string(e.k) + " m=" + mode_string(e.m);
  } catch (const detail::DivergedError& e) {
    r.status = RunStatus::Diverged;
    r.message = e.what();
  }
  for (auto& d : r.diagnostics) d.status = "InProgress";
  if (!r.diagnostics.empty()) r.diagnostics.back().status = status_name(r.status);
  r.last = s.ld;
  r.conjugacy = s.T;
  r.final_stage = s.stage;
  if (s.stage.omega.size()) r.drift_constant = drift_constant(spec, c.base, s.stage, c.eps);

  if (r.status == RunStatus::Converged) {
    TorusResult t{s.T.a, s.T.Psi, s.stage.omega, s.stage.lambda, 0.0};
    t.residual = invariance_residual(t, spec, xi, 2 * c.grid.sizes[0]);
    if (!(t.residual <= 10 * opt.tol))
      r.message = "torus residual " + std::to_string(t.residual) + " exceeds 10*tol";
    out.torus = std::move(t);
  }
  return out;
}

}  // namespace kamtori
