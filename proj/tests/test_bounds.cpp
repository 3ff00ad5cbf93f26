#include "helpers.hpp"

#include <kamtori/bounds.hpp>
#include <kamtori/suites.hpp>

#include <gtest/gtest.h>

using namespace kt;

TEST(TailBound, Constant) {
  EXPECT_NEAR(tail_constant(1), 6 / M_E, 1e-15);
  EXPECT_NEAR(tail_constant(2), 48 * std::exp(-2.0), 1e-14);
  EXPECT_NEAR(tail_constant(3), 6 * 6 * 27 * std::exp(-3.0), 1e-12);
}

TEST(TailBound, Inapplicable) {
  EXPECT_THROW(truncation_tail_bound({1, 1.0, 0.2, 0.0, 10}), InapplicableError);
  EXPECT_THROW(truncation_tail_bound({1, 1.0, 0.2, 0.15, 10}), InapplicableError);
  EXPECT_THROW(truncation_tail_bound({1, 1.0, 0.2, 0.1, 5}), InapplicableError);
  EXPECT_NO_THROW(truncation_tail_bound({1, 1.0, 0.2, 0.1, 5.01}));
}

TEST(TailBound, GeometricSeriesOracle) {
  // f = sum_k e^{-a|k|} e^{ik phi}: both norms are geometric sums in closed form
  const double a = 0.8, r = 0.5, rho = 0.2;
  const double f_norm = 1 + 2 * std::exp(r - a) / (1 - std::exp(r - a));
  for (int K : {3, 6, 10, 20}) {
    const double q = std::exp(r - 2 * rho - a);
    const double tail = 2 * std::pow(q, K + 1) / (1 - q);
    const double bound = truncation_tail_bound({1, f_norm, r, rho, double(K)});
    EXPECT_LE(tail, bound) << K;
    EXPECT_NEAR(bound, 6 / M_E * f_norm / rho * std::exp(-rho * K), 1e-12 * bound);
    // same tail via the library norm
    TrigPoly f(1, 1, 1, true);
    for (int k = -80; k <= 80; ++k) f.set({k}, CMatrix::Constant(1, 1, std::exp(-a * std::abs(k))));
    const double lib = strip_norm_bound(f - truncate(f, K), r - 2 * rho).value;
    EXPECT_NEAR(lib, tail, 1e-9 * tail + 1e-12);
  }
}

TEST(DivisorSum, BruteForceOneDim) {
  DivisorSumInput in;
  in.omega = RVector::Constant(1, 1.0);
  in.lambda = 0.5;
  in.sigma = 0.3;
  in.b = 2;
  in.v = 1;
  in.K = 40;
  double s = 0.0;
  for (int k = 1; k <= 40; ++k) s += k * (std::pow(k + 0.5, -2) + std::pow(k - 0.5, -2)) * std::exp(-0.3 * k);
  EXPECT_NEAR(smalldivisor_sum(in), s, 1e-12 * s);
}

TEST(DivisorSum, ExactResonanceRejected) {
  DivisorSumInput in;
  in.omega = RVector::Ones(2);
  in.lambda = 0.0;
  EXPECT_THROW(smalldivisor_sum(in), InputError);
}

TEST(DivisorSum, ConstantTermByTerm) {
  auto oracle = [](int n, double tau, int b, int v) {
    const double e = tau * b + v;
    double c = 15.0;
    c *= tau;
    c *= std::sqrt(e);
    for (int i = 0; i < 2 * (n + b) - 3; ++i) c *= 2;
    c *= std::exp((e + 1) * std::log(n));
    c /= tau * b - n + 1;
    c *= std::exp(e * (std::log(e) - 1));
    return c;
  };
  for (int n : {1, 2, 3})
    for (double tau : {n - 0.5, n + 0.3, n + 2.0})
      for (int b : {1, 2})
        for (int v : {0, 1, 3}) {
          if (tau <= 0) continue;
          const double c = smalldivisor_constant(n, tau, b, v);
          EXPECT_NEAR(c, oracle(n, tau, b, v), 1e-12 * c);
        }
  EXPECT_NEAR(smalldivisor_constant(1, 1.0, 1, 0), 30 / M_E, 1e-13);
}

TEST(DivisorSum, BoundNeedsTauAboveNMinusOne) {
  DivisorSumInput in;
  in.omega = (RVector(2) << 1.0, kGolden).finished();
  in.tau = 1.0;
  EXPECT_THROW(smalldivisor_bound(in), InapplicableError);
  in.tau = 1.01;
  EXPECT_NO_THROW(smalldivisor_bound(in));
}

TEST(DivisorSum, GoldenExample) {
  DivisorSumInput in;
  in.omega = (RVector(2) << 1.0, kGolden).finished();
  in.tau = 1.5;
  in.b = 1;
  in.v = 0;
  in.sigma = 0.2;
  in.K = 100;
  const auto ball = enumerate_ball(2, in.K);
  in.gamma = empirical_gamma(in.omega, in.lambda, in.tau, ball, LatticeNorm::L2);
  EXPECT_GT(in.gamma, 0.0);
  EXPECT_LE(smalldivisor_sum(in, ball), smalldivisor_bound(in));
}

TEST(EmpiricalGamma, BruteForce) {
  const RVector w = (RVector(2) << 1.0, std::sqrt(2.0)).finished();
  const double lambda = 0.3, tau = 1.2;
  double g = 1e300;
  for (int a = -15; a <= 15; ++a)
    for (int b = -15; b <= 15; ++b) {
      if ((a == 0 && b == 0) || a * a + b * b > 225) continue;
      const double kw = a + b * std::sqrt(2.0), nk = std::abs(a) + std::abs(b);
      g = std::min({g, std::abs(kw) * std::pow(nk, tau), std::abs(kw + lambda) * std::pow(nk, tau)});
    }
  EXPECT_NEAR(empirical_gamma(w, lambda, tau, enumerate_ball(2, 15), LatticeNorm::L1), g, 1e-12 * g);
}

TEST(Suites, DivisorSuitePassesAndNegativeControlFails) {
  DivisorSuiteOptions opt;
  opt.cases = 40;
  opt.K_max = 60;
  const auto rows = divisor_suite(opt);
  ASSERT_EQ(rows.size(), 80u);
  for (const auto& r : rows) EXPECT_TRUE(r.pass) << r.case_id << " sum=" << r.sum << " bound=" << r.bound;
  opt.constant_scale = 1e-6;
  int failed = 0;
  for (const auto& r : divisor_suite(opt)) failed += !r.pass;
  EXPECT_GT(failed, 0);
}

TEST(Suites, DivisorSuiteDeterministic) {
  DivisorSuiteOptions opt;
  opt.cases = 10;
  opt.K_max = 30;
  const auto a = divisor_suite(opt), b = divisor_suite(opt);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].sum, b[i].sum);
    EXPECT_EQ(a[i].in.omega, b[i].in.omega);
  }
}

TEST(Suites, TailSuitePassesAndNegativeControlFails) {
  const auto rows = tail_suite(30, 4);
  for (const auto& r : rows) {
    EXPECT_TRUE(r.pass) << r.case_id;
    EXPECT_GT(r.K, 1.0 / (2 * r.rho));
    EXPECT_LE(2 * r.rho, r.r);
  }
  int failed = 0;
  for (const auto& r : tail_suite(30, 4, 1e-12)) failed += !r.pass;
  EXPECT_GT(failed, 0);
}

TEST(Suites, SublevelSuitePasses) {
  const auto rows = sublevel_suite(100000);
  ASSERT_EQ(rows.size(), 9u);
  for (const auto& r : rows) {
    EXPECT_TRUE(r.result.applicable) << r.function;
    EXPECT_TRUE(r.result.pass) << r.function << " eps=" << r.eps;
  }
}
