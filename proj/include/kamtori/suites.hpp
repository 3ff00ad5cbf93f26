#pragma once

#include "bounds.hpp"
#include "parallel.hpp"
#include "resonance.hpp"
#include "smoothing.hpp"

#include <random>

namespace kamtori {

/// One randomized small-divisor case, evaluated in both hypothesis norms.
struct DivisorRow {
  int case_id = 0;
  LatticeNorm norm = LatticeNorm::L2;
  DivisorSumInput in;
  double sum = 0.0, bound = 0.0;
  bool pass = false;
};

struct DivisorSuiteOptions {
  int cases = 200;
  double K_max = 200;
  std::uint64_t seed = 1;
  double constant_scale = 1.0;  // multiplies C; values below 1 exercise the failure path
};

/// Frequencies (1, theta) with theta a quadratic irrational.
inline const std::vector<double>& quadratic_irrationals() {
  static const std::vector<double> v{kGolden, std::sqrt(2.0), std::sqrt(3.0), std::sqrt(5.0) - 1.0,
                                     std::sqrt(7.0) - 2.0, (std::sqrt(13.0) - 1.0) / 2.0};
  return v;
}

inline std::vector<DivisorRow> divisor_suite(const DivisorSuiteOptions& opt) {
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<DivisorSumInput> inputs;
  const std::vector<Mode> balls[2] = {enumerate_ball(1, opt.K_max), enumerate_ball(2, opt.K_max)};
  for (int c = 0; c < opt.cases; ++c) {
    DivisorSumInput in;
    const int n = 1 + int(u(rng) * 2);
    const double scale = 0.5 + 1.5 * u(rng);
    if (n == 1) {
      in.omega = RVector::Constant(1, scale);
    } else {
      const auto& q = quadratic_irrationals();
      in.omega = (RVector(2) << 1.0, q[std::size_t(u(rng) * double(q.size())) % q.size()]).finished() * scale;
    }
    in.tau = n == 1 ? 0.3 + 1.7 * u(rng) : 1.2 + 1.3 * u(rng);
    in.b = 1 + int(u(rng) * 2);
    in.v = int(u(rng) * 2);
    in.sigma = 0.05 + 0.45 * u(rng);
    in.K = opt.K_max;
    // A quarter of the cases take lambda = 0; the rest keep lambda off resonance.
    if (u(rng) < 0.25) {
      in.lambda = 0.0;
    } else {
      do in.lambda = -1.0 + 2.0 * u(rng);
      while (empirical_gamma(in.omega, in.lambda, in.tau, balls[n - 1], LatticeNorm::L2) < 1e-3);
    }
    inputs.push_back(in);
  }
  std::vector<DivisorRow> rows(2 * inputs.size());
  parallel_for(rows.size(), [&](std::size_t i) {
    DivisorRow& r = rows[i];
    r.case_id = int(i / 2);
    r.norm = i % 2 ? LatticeNorm::L1 : LatticeNorm::L2;
    r.in = inputs[i / 2];
    const auto& ball = balls[r.in.omega.size() - 1];
    r.in.gamma = empirical_gamma(r.in.omega, r.in.lambda, r.in.tau, ball, r.norm);
    r.sum = smalldivisor_sum(r.in, ball);
    r.bound = opt.constant_scale * smalldivisor_bound(r.in);
    r.pass = r.sum <= r.bound;
  });
  return rows;
}

struct TailRow {
  int case_id = 0;
  int n = 1;
  double r = 0.0, rho = 0.0, K = 0.0;
  double f_norm = 0.0, tail = 0.0, bound = 0.0;
  bool pass = false;
};

/// Random real analytic series: c_k = e^{-a|k|_1} z_k with |z_k| <= 1 for |k|_2 <= 50.
inline TrigPoly random_analytic_series(int n, double a, double K_f, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  TrigPoly f(n, 1, 1, true);
  f.set(Mode(std::size_t(n), 0), CMatrix::Constant(1, 1, u(rng)));
  for (const auto& k : enumerate_ball(n, K_f)) {
    if (f.coeffs().count(k)) continue;
    Complex z(u(rng), u(rng));
    z *= std::exp(-a * norm1(k)) / std::max(1.0, std::abs(z));
    f.set(k, CMatrix::Constant(1, 1, z));
    f.set(negate(k), CMatrix::Constant(1, 1, std::conj(z)));
  }
  return f;
}

inline std::vector<TailRow> tail_suite(int cases, std::uint64_t seed, double constant_scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<TailRow> rows;
  for (int c = 0; c < cases; ++c) {
    TailRow row;
    row.case_id = c;
    row.n = 1 + int(u(rng) * 2);
    const double a = 0.2 + 0.8 * u(rng);
    do {
      row.r = 0.05 + (a - 0.05) * u(rng);
      row.rho = 0.011 + (row.r / 2 - 0.011) * u(rng);
    } while (row.r / 2 <= 0.011 || std::floor(1.0 / (2 * row.rho)) + 1 > 50);
    const int K_lo = int(std::floor(1.0 / (2 * row.rho))) + 1;
    row.K = K_lo + int(u(rng) * (51 - K_lo)) % (51 - K_lo);
    const TrigPoly f = random_analytic_series(row.n, a, 50, rng);
    row.f_norm = strip_norm_bound(f, row.r).value;
    row.tail = strip_norm_bound(f - truncate(f, row.K), row.r - 2 * row.rho).value;
    row.bound = constant_scale * truncation_tail_bound({row.n, row.f_norm, row.r, row.rho, row.K});
    row.pass = row.tail <= row.bound;
    rows.push_back(row);
  }
  return rows;
}

struct SublevelRow {
  int case_id = 0;
  std::string function;
  int alpha = 1;
  double c = 0.0, eps = 0.0;
  SublevelResult result;
};

/// x on [0,1], x^2 on [-1,1], sin on [0, pi/4], each at eps in {1e-3, 1e-2, 1e-1}.
inline std::vector<SublevelRow> sublevel_suite(std::size_t grid_N = 1000000) {
  struct Fn {
    std::string name;
    std::function<double(double)> f;
    double a, b;
    int alpha;
    double c;
  };
  const std::vector<Fn> fns{{"x", [](double x) { return x; }, 0.0, 1.0, 1, 1.0},
                            {"x^2", [](double x) { return x * x; }, -1.0, 1.0, 2, 2.0},
                            {"sin", [](double x) { return std::sin(x); }, 0.0, M_PI / 4, 1, std::cos(M_PI / 4)}};
  std::vector<SublevelRow> rows;
  int id = 0;
  for (const auto& fn : fns)
    for (double eps : {1e-3, 1e-2, 1e-1})
      rows.push_back({id++, fn.name, fn.alpha, fn.c, eps, sublevel_check(fn.f, fn.a, fn.b, fn.alpha, fn.c, eps, grid_N)});
  return rows;
}

}  // namespace kamtori
