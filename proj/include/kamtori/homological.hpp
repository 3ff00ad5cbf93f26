#pragma once

#include "lattice.hpp"
#include "trigpoly.hpp"

#include <cmath>
#include <optional>

namespace kamtori {

struct ScheduleParams {
  double r_tilde = 0.1;
  double l = 30.0;
  int alpha = 1;
  double iota = 1.5;
  int n2 = 1;
  int n3 = 1;
  double c1 = 1.0;
  double gamma = 0.05;
  double c0m_eps0 = 1.0;  // C0 * M * eps0 factor of delta_{nu mu}
};

struct ScheduleValues {
  int nu = 0;
  double r = 0.0;
  double K_prime = 0.0;
  int K = 0;
  double s = 0.0;
  double chi = 0.0;
  std::vector<double> delta;  // mu = 0..alpha
};

inline double factorial(int n) { return std::tgamma(n + 1.0); }

/// C~ = 24 (n2!) n2^{n2} e^{-n2}.
inline double schedule_C_tilde(int n2) { return 24.0 * factorial(n2) * std::pow(n2, n2) * std::exp(-double(n2)); }

inline ScheduleValues schedule(int nu, const ScheduleParams& p) {
  ScheduleValues v;
  v.nu = nu;
  const double r0 = p.r_tilde;
  v.r = r0 * std::pow(3.0, -nu);
  if (nu == 0) {
    v.K_prime = 0.0;
    v.K = 0;
    v.s = p.gamma;
  } else {
    v.K_prime = std::pow(3.0, nu) / r0 *
                (std::log(schedule_C_tilde(p.n2)) + (p.n2 + 1) * std::abs(std::log(r0)) +
                 (p.l + (p.n2 + 1) * nu - p.alpha) * std::log(3.0));
    v.K = int(std::floor(v.K_prime)) + 1;
    v.s = p.gamma / (16.0 * p.c1 * p.n3 * std::sqrt(double(p.n2)) * std::pow(double(v.K), p.iota + 1));
  }
  const double a = p.alpha, io = p.iota;
  v.chi = std::pow(v.r, p.l - 2 * (a + 1) * (io + 1) - a - 3);
  for (int mu = 0; mu <= p.alpha; ++mu)
    v.delta.push_back(std::pow(p.gamma, -mu - 1) * std::pow(v.r, p.l - (a + mu + 2) * (io + 1) - a - 3) * p.c0m_eps0);
  return v;
}

/// X_nu = sum_{j=1}^{nu} chi_j.
inline double schedule_X(int nu, const ScheduleParams& p) {
  double x = 0.0;
  for (int j = 1; j <= nu; ++j) x += schedule(j, p).chi;
  return x;
}

/// Normal-form data at one stage: omega is the scaled frequency vector,
/// lambda the scaled eigenvalues, B the block-diagonal eigenbasis.
struct StageData {
  int nu = 0;
  RVector omega;
  CVector lambda;
  CMatrix B, Binv;
  ScheduleValues sched;
  CMatrix A() const { return B * lambda.asDiagonal() * Binv; }
};

inline Complex dot_m(const std::vector<int>& m, const CVector& lambda) {
  Complex s = 0;
  for (std::size_t i = 0; i < m.size(); ++i) s += double(m[i]) * lambda[Eigen::Index(i)];
  return s;
}

/// i<k,omega> + <m,Lambda>.
inline Complex small_divisor(const Mode& k, const std::vector<int>& m, const StageData& st) {
  return Complex(0, dot(k, st.omega)) + dot_m(m, st.lambda);
}

struct NonresonanceReport {
  bool passed = true;
  Mode worst_k;
  std::vector<int> worst_m;
  double worst_ratio = std::numeric_limits<double>::infinity();
  Complex worst_divisor = 0;
};

/// Checks |i<k,omega> + <m,Lambda>| >= margin gamma eps^{q5} |k|^{-iota} for m in the
/// m-set. margin == 1 scans K_lo < |k| <= K_hi; smaller margins scan 0 < |k| <= K_hi.
inline NonresonanceReport check_nonresonance(const StageData& st, double gamma, double iota, double eps, double q5,
                                             double K_lo, double K_hi, double margin) {
  NonresonanceReport rep;
  const double lo = margin >= 1.0 ? K_lo : 0.0;
  const double scale = gamma * std::pow(eps, q5);
  const auto ms = m_set(int(st.lambda.size()));
  for (const auto& k : enumerate_shell(int(st.omega.size()), lo, K_hi)) {
    const double thr = scale * std::pow(norm2(k), -iota);
    for (const auto& m : ms) {
      const Complex d = small_divisor(k, m, st);
      const double ratio = std::abs(d) / thr;
      if (ratio < rep.worst_ratio) {
        rep.worst_ratio = ratio;
        rep.worst_k = k;
        rep.worst_m = m;
        rep.worst_divisor = d;
      }
    }
  }
  rep.passed = rep.worst_ratio >= margin;
  return rep;
}

inline constexpr double kDivisorFloor = 1e-14;

namespace detail {
inline void check_divisor(const Mode& k, const std::vector<int>& m, Complex d, double kw) {
  if (std::abs(d) < kDivisorFloor * std::max(1.0, std::abs(kw))) throw ResonantError(k, m, d);
}
/// A = B diag(lambda) B^{-1} has real entries (conjugate-closed spectrum).
inline bool real_generator(const StageData& st) {
  const CMatrix A = st.A();
  return A.size() == 0 || A.imag().cwiseAbs().maxCoeff() <= 1e-14 * std::max(1.0, max_abs(A));
}
inline std::vector<int> unit(int n, int i, int v) {
  std::vector<int> m(std::size_t(n), 0);
  m[std::size_t(i)] = v;
  return m;
}
}  // namespace detail

/// Solves d_phi v0 . omega - A v0 = P1 Gamma_{K+} u0 mode by mode.
inline TrigPoly solve_v0(const TrigPoly& u0, const StageData& st, const RVector& P1, double K_plus) {
  const int n1 = int(st.lambda.size());
  TrigPoly v(u0.n_angles(), n1, 1, u0.is_real() && detail::real_generator(st));
  for (const auto& [k, c] : u0.coeffs()) {
    if (norm2(k) > K_plus + 1e-12) continue;
    const double kw = dot(k, st.omega);
    CVector y = st.Binv * c.col(0);
    for (int i = 0; i < n1; ++i) {
      const Complex d = Complex(0, kw) - st.lambda[i];
      detail::check_divisor(k, detail::unit(n1, i, -1), d, kw);
      y[i] /= d;
    }
    v.set(k, P1.asDiagonal() * (st.B * y));
  }
  v.set_degree(std::min(u0.degree(), K_plus));
  return v;
}

struct V1Solution {
  TrigPoly v1;
  CVector lambda_update;
};

/// Solves d_phi v1 . omega + v1 A - A v1 = P1 (Gamma_{K+} u1 - B diag(B^{-1} u1^(0) B) B^{-1}).
inline V1Solution solve_v1(const TrigPoly& u1, const StageData& st, const RVector& P1, double K_plus) {
  const int n1 = int(st.lambda.size());
  V1Solution out{TrigPoly(u1.n_angles(), n1, n1, u1.is_real() && detail::real_generator(st)), CVector::Zero(n1)};
  for (const auto& [k, c] : u1.coeffs()) {
    if (norm2(k) > K_plus + 1e-12) continue;
    const double kw = dot(k, st.omega);
    CMatrix U = st.Binv * c * st.B;
    const bool k0 = is_zero(k);
    if (k0) out.lambda_update = U.diagonal();
    for (int i = 0; i < n1; ++i)
      for (int j = 0; j < n1; ++j) {
        if (k0 && i == j) {
          U(i, j) = 0;
          continue;
        }
        const Complex d = Complex(0, kw) + st.lambda[j] - st.lambda[i];
        std::vector<int> m(std::size_t(n1), 0);
        ++m[std::size_t(j)];
        --m[std::size_t(i)];
        detail::check_divisor(k, m, d, kw);
        U(i, j) /= d;
      }
    out.v1.set(k, P1.asDiagonal() * (st.B * U * st.Binv));
  }
  out.v1.set_degree(std::min(u1.degree(), K_plus));
  return out;
}

struct PhiSolution {
  TrigPoly Phi;
  RVector omega_update;
};

/// Solves d_phi Phi . omega = P2 (Gamma_{K+} w - w^(0)); Phi has zero mean.
inline PhiSolution solve_phi(const TrigPoly& w, const StageData& st, const RVector& P2, double K_plus) {
  const int n2 = int(st.omega.size());
  PhiSolution out{TrigPoly(w.n_angles(), n2, 1, w.is_real()), w.mean().col(0).real()};
  for (const auto& [k, c] : w.coeffs()) {
    if (is_zero(k) || norm2(k) > K_plus + 1e-12) continue;
    const double kw = dot(k, st.omega);
    const Complex d(0, kw);
    detail::check_divisor(k, std::vector<int>(st.lambda.size(), 0), d, kw);
    out.Phi.set(k, P2.asDiagonal() * (c / d));
  }
  out.Phi.set_degree(std::min(w.degree(), K_plus));
  return out;
}

}  // namespace kamtori
