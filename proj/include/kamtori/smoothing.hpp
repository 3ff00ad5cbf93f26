#pragma once

#include "lattice.hpp"
#include "trigpoly.hpp"

#include <cmath>

namespace kamtori {

/// Even bump: 1 on [-1/4, 1/4], 0 outside (-1, 1), smooth and monotone between.
inline double bump(double t) {
  auto psi = [](double s) { return s > 0 ? std::exp(-1.0 / s) : 0.0; };
  const double a = std::abs(t);
  if (a <= 0.25) return 1.0;
  if (a >= 1.0) return 0.0;
  const double p = psi(1.0 - a);
  return p / (p + psi(a - 0.25));
}

/// Fourier multiplier of the periodic smoothing operator S_r at mode k.
inline double multiplier(double r, const Mode& k) {
  const double n = norm2(k);
  return bump(r * r * n * n);
}

inline TrigPoly smooth_periodic(const TrigPoly& f, double r) {
  if (!(r > 0 && r <= 1)) throw InputError("smooth_periodic: r must lie in (0, 1]");
  TrigPoly out(f.n_angles(), f.rows(), f.cols(), f.is_real());
  for (const auto& [k, c] : f.coeffs()) out.set(k, c * multiplier(r, k));
  out.set_degree(std::min(f.degree(), 1.0 / r));
  return out;
}

/// Sup over the grid of |f|, on a grid fine enough to sample every stored mode.
inline double grid_sup(const TrigPoly& f) {
  int R = 0;
  for (const auto& kv : f.coeffs())
    for (int v : kv.first) R = std::max(R, std::abs(v));
  int N = 2;
  while (N < 2 * R + 2) N *= 2;
  const auto s = to_grid(f, Grid::uniform(f.n_angles(), N));
  double m = 0.0;
  for (const auto& v : s.values) m = std::max(m, max_abs(v));
  return m;
}

struct ApproxSequence {
  std::vector<double> radii;       // r_j = r_tilde 3^{-j}, j = 0..J
  std::vector<TrigPoly> members;   // f_0 = 0, f_j = S_{r_j} f
  std::vector<double> increments;  // strip majorant of f_j - f_{j-1} at radius r_j; [0] unused
  std::vector<double> errors;      // grid sup of f - f_j
  double l = 0.0;
};

inline ApproxSequence build_sequence(const TrigPoly& f, double r_tilde, int J, double l = 0.0) {
  if (!(r_tilde > 0 && r_tilde <= 1) || J < 1) throw InputError("build_sequence: need r~ in (0,1] and J >= 1");
  ApproxSequence seq;
  seq.l = l;
  TrigPoly zero(f.n_angles(), f.rows(), f.cols(), true);
  for (int j = 0; j <= J; ++j) {
    const double r = r_tilde * std::pow(3.0, -j);
    seq.radii.push_back(r);
    seq.members.push_back(j == 0 ? zero : smooth_periodic(f, r));
    seq.increments.push_back(j == 0 ? 0.0 : strip_norm_bound(seq.members[std::size_t(j)] - seq.members[std::size_t(j - 1)], r).value);
    seq.errors.push_back(grid_sup(f - seq.members[std::size_t(j)]));
  }
  return seq;
}

struct RateReport {
  double slope = 0.0;
  double constant = 0.0;
  bool exact = false;
  bool pass = false;
};

inline constexpr double kRateSlack = 0.3;

/// Least-squares fit log(error_j) = log C + slope log(r_j) over j >= 1.
/// Sequences whose errors all vanish are exact and pass.
inline RateReport rate_report(const ApproxSequence& seq, double l) {
  if (seq.members.size() < 3) throw InputError("rate_report: need at least 3 members");
  std::vector<double> x, y;
  double scale = 0.0;
  for (double e : seq.errors) scale = std::max(scale, e);
  for (std::size_t j = 1; j < seq.errors.size(); ++j)
    if (seq.errors[j] > 1e-15 * std::max(scale, 1e-300) && seq.errors[j] > 0) {
      x.push_back(std::log(seq.radii[j]));
      y.push_back(std::log(seq.errors[j]));
    }
  RateReport r;
  if (x.size() < 2) {
    r.exact = true;
    r.pass = true;
    r.slope = l;
    return r;
  }
  const double n = double(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i] / n, my += y[i] / n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
  r.slope = sxy / sxx;
  r.constant = std::exp(my - r.slope * mx);
  r.pass = std::abs(r.slope - l) <= kRateSlack;
  return r;
}

/// Real test function with |f^(k)| = |k|_2^{-l-1} for 0 < |k|_2 <= K_max:
/// Hoelder-type regularity close to l, with an exactly known spectrum.
inline TrigPoly decay_function(int n, double l, double K_max) {
  TrigPoly f(n, 1, 1, true);
  for (const auto& k : enumerate_ball(n, K_max)) f.set(k, CMatrix::Constant(1, 1, std::pow(norm2(k), -l - 1)));
  return f;
}

}  // namespace kamtori
