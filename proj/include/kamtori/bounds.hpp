#pragma once

#include "homological.hpp"
#include "lattice.hpp"
#include "trigpoly.hpp"

#include <cmath>

namespace kamtori {

/// C(n) = 6 n! n^n e^{-n} of the truncation tail estimate.
inline double tail_constant(int n) { return 6.0 * factorial(n) * std::pow(n, n) * std::exp(-double(n)); }

struct TailBoundInput {
  int n = 1;
  double f_norm_r = 0.0;
  double r = 0.0;
  double rho = 0.0;
  double K = 0.0;
};

/// |(Id - Gamma_K) f|_{r - 2 rho} <= C(n) |f|_r rho^{-n} e^{-rho K}, valid for K > 1/(2 rho), 0 < 2 rho <= r.
inline double truncation_tail_bound(const TailBoundInput& in) {
  if (!(in.rho > 0) || 2 * in.rho > in.r + 1e-15) throw InapplicableError("tail bound needs 0 < 2 rho <= r");
  if (!(in.K > 1.0 / (2 * in.rho))) throw InapplicableError("tail bound needs K > 1/(2 rho)");
  return tail_constant(in.n) * in.f_norm_r * std::pow(in.rho, -in.n) * std::exp(-in.rho * in.K);
}

struct DivisorSumInput {
  RVector omega;
  double lambda = 0.0;
  double tau = 1.0;
  double gamma = 1.0;
  double sigma = 0.1;
  int b = 1;
  int v = 0;
  double K = 100.0;
};

/// Sum over 0 < |k|_2 <= K of |k|_1^v |<k,omega> + lambda|^{-b} e^{-sigma |k|_1}.
inline double smalldivisor_sum(const DivisorSumInput& in, const std::vector<Mode>& ball) {
  double s = 0.0;
  for (const auto& k : ball) {
    if (norm2(k) > in.K + 1e-12) continue;
    const double d = std::abs(dot(k, in.omega) + in.lambda);
    if (d < kDivisorFloor) throw InputError("small-divisor hypothesis violated at k=" + mode_string(k));
    const int k1 = norm1(k);
    s += std::pow(double(k1), in.v) * std::pow(d, -in.b) * std::exp(-in.sigma * k1);
  }
  return s;
}

inline double smalldivisor_sum(const DivisorSumInput& in) {
  return smalldivisor_sum(in, enumerate_ball(int(in.omega.size()), in.K));
}

/// C = 15 tau sqrt(tau b + v) 2^{2(n+b)-3} n^{tau b + v + 1} (tau b - n + 1)^{-1} ((tau b + v)/e)^{tau b + v}.
inline double smalldivisor_constant(int n, double tau, int b, int v) {
  const double tb = tau * b, e = tb + v;
  return 15.0 * tau * std::sqrt(e) * std::pow(2.0, 2 * (n + b) - 3) * std::pow(double(n), e + 1) / (tb - n + 1) *
         std::pow(e / M_E, e);
}

inline double smalldivisor_bound(const DivisorSumInput& in) {
  const int n = int(in.omega.size());
  if (!(in.tau > n - 1)) throw InapplicableError("small-divisor bound needs tau > n - 1");
  return smalldivisor_constant(n, in.tau, in.b, in.v) * std::pow(in.gamma, -in.b) *
         std::pow(in.sigma, -(in.tau * in.b + in.v + 1));
}

/// min over 0 < |k|_2 <= K of min(|<k,omega>|, |<k,omega> + lambda|) |k|^tau,
/// with |k| measured in the given norm.
inline double empirical_gamma(const RVector& omega, double lambda, double tau, const std::vector<Mode>& ball,
                              LatticeNorm norm) {
  double g = std::numeric_limits<double>::infinity();
  for (const auto& k : ball) {
    const double kw = dot(k, omega);
    const double w = std::pow(lattice_norm(k, norm), tau);
    g = std::min({g, std::abs(kw) * w, std::abs(kw + lambda) * w});
  }
  return g;
}

}  // namespace kamtori
