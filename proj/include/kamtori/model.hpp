#pragma once

#include "common.hpp"
#include "trigpoly.hpp"

#include <array>
#include <functional>
#include <memory>
#include <optional>

namespace kamtori {

/// Block dimensions: I = (I1, I2) in R^{n11} x R^{n12}, phi = (phi1, phi2) on
/// T^{n21} x T^{n22}, parameter xi in R^{n3}.
struct Dims {
  int n11 = 0, n12 = 0, n21 = 0, n22 = 0, n3 = 1;
  int n1() const { return n11 + n12; }
  int n2() const { return n21 + n22; }
  /// Length of g_j, j = 1..4.
  int g_dim(int j) const { return std::array<int, 4>{n11, n12, n21, n22}[std::size_t(j - 1)]; }
};

struct Exponents {
  std::array<double, 7> q{1, 0, 0, 1, 0, 1, 1};
  double operator()(int i) const { return q[std::size_t(i - 1)]; }
};

using FreqMap = std::function<RVector(const RVector& xi, double eps)>;
using EigMap = std::function<CVector(const RVector& xi, double eps)>;
using SimMap = std::function<CMatrix(const RVector& xi, double eps)>;
using PertFn = std::function<RVector(const RVector& I, const RVector& phi, const RVector& xi, double eps)>;
/// d g_j / d I, a g_dim(j) x n1 matrix.
using PertJac = std::function<RMatrix(const RVector& I, const RVector& phi, const RVector& xi, double eps)>;

/// One term c(phi) I^power of a perturbation component.
struct PolyTerm {
  std::vector<int> power;
  TrigPoly coeff;  // g_dim(j) x 1
};

/// Perturbation whose components are polynomial in I with trigonometric
/// coefficients in phi. Independent of xi and eps.
struct PolyPerturbation {
  std::array<std::vector<PolyTerm>, 4> g;

  static double monomial(const RVector& I, const std::vector<int>& p) {
    double v = 1.0;
    for (std::size_t i = 0; i < p.size(); ++i) v *= std::pow(I[Eigen::Index(i)], p[i]);
    return v;
  }

  RVector value(int j, int dim, const RVector& I, const RVector& phi) const {
    RVector out = RVector::Zero(dim);
    for (const auto& t : g[std::size_t(j - 1)])
      out += evaluate(t.coeff, phi).col(0).real() * monomial(I, t.power);
    return out;
  }

  RMatrix jac(int j, int dim, const RVector& I, const RVector& phi) const {
    RMatrix out = RMatrix::Zero(dim, I.size());
    for (const auto& t : g[std::size_t(j - 1)]) {
      const RVector c = evaluate(t.coeff, phi).col(0).real();
      for (Eigen::Index i = 0; i < I.size(); ++i) {
        const int p = t.power[std::size_t(i)];
        if (p == 0) continue;
        auto q = t.power;
        --q[std::size_t(i)];
        out.col(i) += c * (p * monomial(I, q));
      }
    }
    return out;
  }

  /// Applies fn to every coefficient poly.
  PolyPerturbation map(const std::function<TrigPoly(const TrigPoly&)>& fn) const {
    PolyPerturbation out;
    for (std::size_t j = 0; j < 4; ++j)
      for (const auto& t : g[j]) out.g[j].push_back({t.power, fn(t.coeff)});
    return out;
  }
};

/// g_1..g_4 as callables. Empty jacobian slots fall back to central differences.
struct Perturbation {
  std::array<PertFn, 4> g;
  std::array<PertJac, 4> dg;
  bool analytic = true;
  std::shared_ptr<const PolyPerturbation> poly;
};

inline Perturbation make_perturbation(const Dims& d, PolyPerturbation p, bool analytic = true) {
  Perturbation out;
  auto shared = std::make_shared<const PolyPerturbation>(std::move(p));
  for (int j = 1; j <= 4; ++j) {
    const int dim = d.g_dim(j);
    out.g[std::size_t(j - 1)] = [shared, j, dim](const RVector& I, const RVector& phi, const RVector&, double) {
      return shared->value(j, dim, I, phi);
    };
    out.dg[std::size_t(j - 1)] = [shared, j, dim](const RVector& I, const RVector& phi, const RVector&, double) {
      return shared->jac(j, dim, I, phi);
    };
  }
  out.analytic = analytic;
  out.poly = shared;
  return out;
}

inline Perturbation zero_perturbation(const Dims& d) { return make_perturbation(d, PolyPerturbation{}); }

struct SystemSpec {
  Dims dims;
  Exponents q;
  double eps = 1e-3;
  double l = 30.0;
  int alpha = 1;
  double iota = 1.5;
  double gamma = 0.05;
  FreqMap omega1, omega2;
  EigMap lambda1, lambda2;
  SimMap B1, B2;
  Perturbation pert;
  std::vector<std::pair<double, double>> box;
};

/// P1, P2 as diagonals, and eps0 = eps^{q2}.
struct ScalingMatrices {
  RVector P1, P2;
  double eps0 = 1.0;
  RVector P() const {
    RVector p(P1.size() + P2.size());
    p << P1, P2;
    return p;
  }
};

inline ScalingMatrices scaling(const SystemSpec& s, double eps) {
  const auto& d = s.dims;
  const auto& q = s.q;
  ScalingMatrices m;
  m.P1.resize(d.n1());
  m.P1.head(d.n11).setConstant(std::pow(eps, q(1)));
  m.P1.tail(d.n12).setConstant(std::pow(eps, q(3) + q(4) - q(2)));
  m.P2.resize(d.n2());
  m.P2.head(d.n21).setConstant(std::pow(eps, q(5) + q(6) - q(2)));
  m.P2.tail(d.n22).setConstant(std::pow(eps, q(7) - q(2)));
  m.eps0 = std::pow(eps, q(2));
  return m;
}
inline ScalingMatrices scaling(const SystemSpec& s) { return scaling(s, s.eps); }

/// Scaled integrable data at xi: A0 = B diag(lambda) B^{-1} with
/// lambda = (eps^{q1} Lambda1, eps^{q3} Lambda2), omega = (eps^{q5} omega1, omega2).
struct Integrable {
  RVector omega;
  CVector lambda;
  CMatrix B, Binv;
  CMatrix A() const { return B * lambda.asDiagonal() * Binv; }
};

inline Integrable integrable_at(const SystemSpec& s, const RVector& xi, double eps) {
  const auto& d = s.dims;
  Integrable out;
  out.omega.resize(d.n2());
  if (d.n21) out.omega.head(d.n21) = std::pow(eps, s.q(5)) * s.omega1(xi, eps);
  if (d.n22) out.omega.tail(d.n22) = s.omega2(xi, eps);
  out.lambda.resize(d.n1());
  out.B = CMatrix::Zero(d.n1(), d.n1());
  if (d.n11) {
    out.lambda.head(d.n11) = std::pow(eps, s.q(1)) * s.lambda1(xi, eps);
    out.B.topLeftCorner(d.n11, d.n11) = s.B1(xi, eps);
  }
  if (d.n12) {
    out.lambda.tail(d.n12) = std::pow(eps, s.q(3)) * s.lambda2(xi, eps);
    out.B.bottomRightCorner(d.n12, d.n12) = s.B2(xi, eps);
  }
  out.Binv = out.B.inverse();
  return out;
}
inline Integrable integrable_at(const SystemSpec& s, const RVector& xi) { return integrable_at(s, xi, s.eps); }

/// G1 = eps^{q2} (g1, g2) and G2 = eps^{q2} (g3, g4) at one point.
struct FieldSample {
  RVector G1, G2;
};

/// dG1/dI (n1 x n1) and dG2/dI (n2 x n1).
struct FieldJacobian {
  RMatrix G1, G2;
};

namespace detail {

inline void check_finite(const RVector& v, const RVector& phi, const char* what) {
  if (!v.allFinite()) {
    std::string at;
    for (Eigen::Index j = 0; j < phi.size(); ++j) at += (j ? "," : "") + std::to_string(phi[j]);
    throw InputError(std::string(what) + ": non-finite perturbation value at phi=(" + at + ")");
  }
}

inline RVector stack_g(const SystemSpec& s, int a, int b, const RVector& I, const RVector& phi, const RVector& xi,
                       double eps) {
  const int da = s.dims.g_dim(a), db = s.dims.g_dim(b);
  RVector out(da + db);
  if (da) out.head(da) = s.pert.g[std::size_t(a - 1)](I, phi, xi, eps);
  if (db) out.tail(db) = s.pert.g[std::size_t(b - 1)](I, phi, xi, eps);
  return out;
}

inline RMatrix stack_dg(const SystemSpec& s, int a, int b, const RVector& I, const RVector& phi, const RVector& xi,
                        double eps) {
  const int n1 = s.dims.n1();
  const int da = s.dims.g_dim(a), db = s.dims.g_dim(b);
  RMatrix out(da + db, n1);
  auto one = [&](int j, int dim) -> RMatrix {
    if (s.pert.dg[std::size_t(j - 1)]) return s.pert.dg[std::size_t(j - 1)](I, phi, xi, eps);
    RMatrix J(dim, n1);
    const double h = 1e-6 * std::max(1.0, I.size() ? I.cwiseAbs().maxCoeff() : 0.0);
    for (int i = 0; i < n1; ++i) {
      RVector Ip = I, Im = I;
      Ip[i] += h;
      Im[i] -= h;
      J.col(i) = (s.pert.g[std::size_t(j - 1)](Ip, phi, xi, eps) - s.pert.g[std::size_t(j - 1)](Im, phi, xi, eps)) /
                 (2 * h);
    }
    return J;
  };
  if (da) out.topRows(da) = one(a, da);
  if (db) out.bottomRows(db) = one(b, db);
  return out;
}

}  // namespace detail

inline FieldSample G_at(const SystemSpec& s, const RVector& xi, double eps, const RVector& I, const RVector& phi) {
  const double e0 = std::pow(eps, s.q(2));
  FieldSample f{e0 * detail::stack_g(s, 1, 2, I, phi, xi, eps), e0 * detail::stack_g(s, 3, 4, I, phi, xi, eps)};
  detail::check_finite(f.G1, phi, "sample_G");
  detail::check_finite(f.G2, phi, "sample_G");
  return f;
}

inline FieldJacobian G_jacobian_at(const SystemSpec& s, const RVector& xi, double eps, const RVector& I,
                                   const RVector& phi) {
  const double e0 = std::pow(eps, s.q(2));
  FieldJacobian J{e0 * detail::stack_dg(s, 1, 2, I, phi, xi, eps), e0 * detail::stack_dg(s, 3, 4, I, phi, xi, eps)};
  if (!J.G1.allFinite() || !J.G2.allFinite())
    detail::check_finite(RVector::Constant(1, std::nan("")), phi, "sample_G_jacobian");
  return J;
}

inline std::vector<FieldSample> sample_G(const SystemSpec& s, const RVector& xi, double eps,
                                         const std::vector<RVector>& phis, const RVector& I) {
  std::vector<FieldSample> out;
  out.reserve(phis.size());
  for (const auto& phi : phis) out.push_back(G_at(s, xi, eps, I, phi));
  return out;
}

/// dG1/dI at I = 0 on each angle.
inline std::vector<RMatrix> sample_G_jacobian(const SystemSpec& s, const RVector& xi, double eps,
                                              const std::vector<RVector>& phis) {
  const RVector I0 = RVector::Zero(s.dims.n1());
  std::vector<RMatrix> out;
  out.reserve(phis.size());
  for (const auto& phi : phis) out.push_back(G_jacobian_at(s, xi, eps, I0, phi).G1);
  return out;
}

/// Right-hand side of the full system: (A0 I + P1 G1, omega0 + P2 G2).
struct VectorField {
  RVector dI, dphi;
};

inline VectorField vector_field(const SystemSpec& s, const Integrable& base, const ScalingMatrices& P,
                                const RVector& xi, double eps, const RVector& I, const RVector& phi) {
  const auto G = G_at(s, xi, eps, I, phi);
  return {(base.A() * I.cast<Complex>()).real() + P.P1.cwiseProduct(G.G1), base.omega + P.P2.cwiseProduct(G.G2)};
}

struct ValidationReport {
  double c0 = 0.0;
  double c1 = 0.0;
  std::vector<std::string> violations;
  std::vector<std::string> warnings;
  bool ok() const { return violations.empty(); }
};

inline constexpr double kSpectralGapWarning = 1e-6;

/// Checks the exponent and regularity conditions and measures the spectral constants on a
/// grid_density^{n3} grid over the parameter box.
inline ValidationReport validate(const SystemSpec& s, int grid_density) {
  ValidationReport r;
  const auto& d = s.dims;
  const auto& q = s.q;
  if (grid_density < 2) throw InputError("validate: grid_density must be >= 2");
  if (d.n1() < 1 || d.n2() < 1 || d.n3 < 1) r.violations.push_back("dims: need n1 >= 1, n2 >= 1, n3 >= 1");
  if (int(s.box.size()) != d.n3) r.violations.push_back("param_box: expected n3 intervals");
  if (!r.violations.empty()) return r;
  for (double v : q.q)
    if (v < 0) r.violations.push_back("exponents: q_i must be nonnegative");
  if (!(s.eps > 0)) r.violations.push_back("epsilon must be positive");
  if (!(q(1) > q(3))) r.violations.push_back("exponents: q1>q3 fails");
  if (!(q(3) >= q(5))) r.violations.push_back("exponents: q3>=q5 fails");
  if (!(q(7) >= q(2) + q(5))) r.violations.push_back("exponents: q7>=q2+q5 fails");
  if (!(q(2) > 0)) r.violations.push_back("exponents: q2>0 fails");
  if (!(q(2) <= std::min(q(4), q(6)))) r.violations.push_back("exponents: q2<=min(q4,q6) fails");
  const double a = s.alpha;
  if (!(s.l > 2 * (a + 1) * (s.iota + 2) + a * s.iota))
    r.violations.push_back("regularity: l>2(alpha+1)(iota+2)+alpha*iota fails");
  if (!(s.iota > a * d.n2() - 1)) r.violations.push_back("regularity: iota>alpha*n2-1 fails");

  r.c0 = std::numeric_limits<double>::infinity();
  std::size_t total = 1;
  for (int j = 0; j < d.n3; ++j) total *= std::size_t(grid_density);
  for (std::size_t flat = 0; flat < total; ++flat) {
    RVector xi(d.n3);
    std::size_t rest = flat;
    for (int j = d.n3 - 1; j >= 0; --j) {
      const auto [lo, hi] = s.box[std::size_t(j)];
      xi[j] = lo + (hi - lo) * double(rest % std::size_t(grid_density)) / (grid_density - 1);
      rest /= std::size_t(grid_density);
    }
    auto scan = [&](const CVector& lam, const CMatrix& B) {
      for (Eigen::Index i = 0; i < lam.size(); ++i) {
        r.c0 = std::min(r.c0, std::abs(lam[i]));
        for (Eigen::Index j = 0; j < i; ++j) r.c0 = std::min(r.c0, std::abs(lam[i] - lam[j]));
      }
      if (lam.size()) {
        r.c1 = std::max({r.c1, lam.cwiseAbs().maxCoeff(), max_abs(B), max_abs(B.inverse())});
      }
    };
    if (d.n11) scan(s.lambda1(xi, s.eps), s.B1(xi, s.eps));
    if (d.n12) scan(s.lambda2(xi, s.eps), s.B2(xi, s.eps));
    if (d.n21) r.c1 = std::max(r.c1, s.omega1(xi, s.eps).cwiseAbs().maxCoeff());
    if (d.n22) r.c1 = std::max(r.c1, s.omega2(xi, s.eps).cwiseAbs().maxCoeff());
  }
  if (!(r.c0 > 0)) {
    r.violations.push_back("spectrum: eigenvalue or spectral gap vanishes on the parameter grid");
  } else if (r.c0 < kSpectralGapWarning) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "spectrum: c0=%.3g below threshold %.0e", r.c0, kSpectralGapWarning);
    r.warnings.emplace_back(buf);
  }
  return r;
}

}  // namespace kamtori
