#pragma once

#include "homological.hpp"
#include "model.hpp"
#include "parallel.hpp"

#include <random>

namespace kamtori {

using Box = std::vector<std::pair<double, double>>;

/// Frequencies and eigenvalues of one stage as functions of xi.
using StageMap = std::function<StageData(const RVector& xi)>;

struct ZoneSpec {
  Mode k;
  std::vector<int> m;
  int nu = 1;
  double gamma = 0.0, iota = 1.0, eps = 1.0, q5 = 0.0;
};

/// Strict membership |i<k,omega> + <m,Lambda>| < gamma eps^{q5} |k|_2^{-iota}.
inline bool zone_test(const ZoneSpec& z, const StageData& st) {
  const double thr = z.gamma * std::pow(z.eps, z.q5) * std::pow(norm2(z.k), -z.iota);
  return std::abs(small_divisor(z.k, z.m, st)) < thr;
}

struct MeasureEstimate {
  double excluded_fraction = 0.0;
  std::size_t samples = 0;
  double ci95 = 0.0;
  std::optional<double> analytic_bound;
};

/// Half-width of the Wilson 95% interval for a binomial proportion.
inline double wilson_halfwidth(std::size_t hits, std::size_t n) {
  if (n == 0) return 0.0;
  const double z = 1.959963984540054, p = double(hits) / double(n), nn = double(n);
  return z / (1 + z * z / nn) * std::sqrt(p * (1 - p) / nn + z * z / (4 * nn * nn));
}

inline MeasureEstimate make_estimate(std::size_t hits, std::size_t n) {
  return {n ? double(hits) / double(n) : 0.0, n, wilson_halfwidth(hits, n), std::nullopt};
}

/// Uniform samples over a box from a fixed seed.
inline std::vector<RVector> sample_box(const Box& box, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<RVector> out(n, RVector(Eigen::Index(box.size())));
  for (auto& x : out)
    for (std::size_t j = 0; j < box.size(); ++j)
      x[Eigen::Index(j)] = box[j].first + (box[j].second - box[j].first) * u(rng);
  return out;
}

inline double boundary_distance(const Box& box, const RVector& xi) {
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < box.size(); ++j)
    d = std::min({d, xi[Eigen::Index(j)] - box[j].first, box[j].second - xi[Eigen::Index(j)]});
  return d;
}

/// Zone ladder: zones of stage nu use K[nu-1] < |k|_2 <= K[nu] and the maps stages[nu-1].
struct ZoneLadder {
  std::vector<double> K;
  std::vector<StageMap> stages;
  double iota = 1.5;
  double eps_q5 = 1.0;  // eps^{q5}
  int depth() const { return int(K.size()) - 1; }
};

struct SampleFlag {
  bool excluded = false;
  int nu = -1;  // 0 for the boundary collar
  Mode k;
  std::vector<int> m;
};

struct SweepResult {
  double gamma = 0.0;
  MeasureEstimate estimate;
  std::vector<RVector> xi;
  std::vector<SampleFlag> flags;
};

/// Monte-Carlo estimate of the excluded part of the box: the gamma-collar
/// (stage 0) plus every resonant zone up to the ladder depth.
inline SweepResult survivor_sweep(const Box& box, const ZoneLadder& ladder, double gamma, std::size_t n_samples,
                                  std::uint64_t seed) {
  if (n_samples < 100) throw InputError("survivor_sweep: need at least 100 samples");
  if (int(ladder.stages.size()) < ladder.depth()) throw InputError("survivor_sweep: ladder needs one map per stage");
  SweepResult out;
  out.gamma = gamma;
  out.xi = sample_box(box, n_samples, seed);
  out.flags.resize(n_samples);
  const int n2 = ladder.depth() > 0 ? int(ladder.stages[0](out.xi[0]).omega.size()) : 1;
  std::vector<std::vector<Mode>> shells;
  std::vector<std::vector<double>> weights;  // |k|_2^{-iota}
  for (int nu = 1; nu <= ladder.depth(); ++nu) {
    shells.push_back(enumerate_shell(n2, ladder.K[std::size_t(nu - 1)], ladder.K[std::size_t(nu)]));
    weights.emplace_back();
    for (const auto& k : shells.back()) weights.back().push_back(std::pow(norm2(k), -ladder.iota));
  }
  parallel_for(n_samples, [&](std::size_t i) {
    SampleFlag& f = out.flags[i];
    const RVector& xi = out.xi[i];
    if (boundary_distance(box, xi) < gamma) {
      f = {true, 0, {}, {}};
      return;
    }
    for (int nu = 1; nu <= ladder.depth(); ++nu) {
      const StageData st = ladder.stages[std::size_t(nu - 1)](xi);
      const auto ms = m_set(int(st.lambda.size()));
      std::vector<Complex> mlam;
      for (const auto& m : ms) mlam.push_back(dot_m(m, st.lambda));
      const auto& shell = shells[std::size_t(nu - 1)];
      const auto& wts = weights[std::size_t(nu - 1)];
      for (std::size_t ik = 0; ik < shell.size(); ++ik) {
        const double thr = gamma * ladder.eps_q5 * wts[ik];
        const double kw = dot(shell[ik], st.omega);
        for (std::size_t im = 0; im < ms.size(); ++im)
          if (std::abs(Complex(mlam[im].real(), kw + mlam[im].imag())) < thr) {
            f = {true, nu, shell[ik], ms[im]};
            return;
          }
      }
    }
  });
  std::size_t hits = 0;
  for (const auto& f : out.flags) hits += f.excluded;
  out.estimate = make_estimate(hits, n_samples);
  return out;
}

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t points = 0;
};

/// Least-squares slope of log y against log x, over points with y > 0.
inline SlopeFit loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (y[i] > 0 && x[i] > 0) lx.push_back(std::log(x[i])), ly.push_back(std::log(y[i]));
  SlopeFit f;
  f.points = lx.size();
  if (lx.size() < 2) return f;
  const double n = double(lx.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i] / n, my += ly[i] / n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) sxy += (lx[i] - mx) * (ly[i] - my), sxx += (lx[i] - mx) * (lx[i] - mx);
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  return f;
}

/// Monte-Carlo measure (absolute volume) of one zone inside the box.
inline MeasureEstimate zone_measure(const Box& box, const StageMap& stage, const ZoneSpec& z, std::size_t n,
                                    std::uint64_t seed) {
  const auto xs = sample_box(box, n, seed);
  double vol = 1.0;
  for (const auto& [lo, hi] : box) vol *= hi - lo;
  std::vector<char> in(n);
  parallel_for(n, [&](std::size_t i) { in[i] = zone_test(z, stage(xs[i])); });
  std::size_t hits = 0;
  for (char c : in) hits += std::size_t(c);
  auto e = make_estimate(hits, n);
  e.excluded_fraction *= vol;
  e.ci95 *= vol;
  return e;
}

struct ZoneLawEntry {
  Mode k;
  std::vector<int> m;
  bool skipped = false;
  std::string reason;
  MeasureEstimate measure;
  double scale = 0.0;  // (gamma |k|^{-iota-1})^{1/alpha}
};

struct ZoneLawReport {
  std::vector<ZoneLawEntry> entries;
  double c5_fit = 0.0;      // max measured / ((diam)^{n3-1} scale), fitted only
  double shell_slope = 0.0;  // d log(measure) / d log|k|
  double expected_slope = 0.0;
};

/// Zone measures against the (gamma |k|^{-iota-1})^{1/alpha} law. Zones below the
/// |k| threshold (16/c2) c1 |m|_1 n3^{alpha/2} are skipped.
inline ZoneLawReport zone_law_check(const Box& box, const StageMap& stage,
                                         const std::vector<std::pair<Mode, std::vector<int>>>& zones, double gamma,
                                         double iota, double eps_q5, int alpha, double c1, double c2, std::size_t n,
                                         std::uint64_t seed) {
  ZoneLawReport rep;
  const int n3 = int(box.size());
  double diam2 = 0.0;
  for (const auto& [lo, hi] : box) diam2 += (hi - lo) * (hi - lo);
  const double diam = std::sqrt(diam2);
  std::vector<double> ks, ms;
  for (const auto& [k, m] : zones) {
    ZoneLawEntry e{k, m, false, "", {}, 0.0};
    const double threshold = 16.0 / c2 * c1 * norm1(m) * std::pow(double(n3), alpha / 2.0);
    if (norm2(k) < threshold) {
      e.skipped = true;
      e.reason = "|k|_2 below the hypothesis threshold " + std::to_string(threshold);
    } else {
      ZoneSpec z{k, m, 1, gamma, iota, eps_q5, 1.0};
      e.measure = zone_measure(box, stage, z, n, seed);
      e.scale = std::pow(gamma * std::pow(norm2(k), -iota - 1), 1.0 / alpha);
      rep.c5_fit = std::max(rep.c5_fit, e.measure.excluded_fraction / (std::pow(diam, n3 - 1) * e.scale));
      ks.push_back(norm2(k));
      ms.push_back(e.measure.excluded_fraction);
    }
    rep.entries.push_back(std::move(e));
  }
  rep.shell_slope = loglog_slope(ks, ms).slope;
  rep.expected_slope = -(iota + 1) / alpha;
  return rep;
}

struct SublevelResult {
  double measured = 0.0;
  double bound = 0.0;
  bool pass = false;
  bool applicable = true;
  double min_derivative = 0.0;
};

/// Sublevel-set measure of |f| <= eps on a grid_N-point midpoint grid of [a,b]
/// against 4 (alpha! eps / (2c))^{1/alpha}. The hypothesis |f^(alpha)| >= c is
/// checked with alpha-th forward differences on the nodes.
inline SublevelResult sublevel_check(const std::function<double(double)>& f, double a, double b, int alpha, double c,
                               double eps, std::size_t grid_N) {
  SublevelResult r;
  const double h = (b - a) / double(grid_N);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < grid_N; ++i) hits += std::abs(f(a + (double(i) + 0.5) * h)) <= eps;
  r.measured = double(hits) * h;
  r.bound = 4.0 * std::pow(factorial(alpha) * eps / (2 * c), 1.0 / alpha);
  // Derivative hypothesis on a coarser node set: differences lose digits as h shrinks.
  const std::size_t nodes = std::min<std::size_t>(grid_N, 4096);
  const double H = (b - a) / double(nodes);
  std::vector<double> binom(std::size_t(alpha + 1), 1.0);
  for (int j = 1; j <= alpha; ++j) binom[std::size_t(j)] = binom[std::size_t(j - 1)] * (alpha - j + 1) / j;
  r.min_derivative = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + std::size_t(alpha) <= nodes; ++i) {
    double d = 0.0;
    for (int j = 0; j <= alpha; ++j)
      d += ((alpha - j) % 2 ? -1.0 : 1.0) * binom[std::size_t(j)] * f(a + double(i + std::size_t(j)) * H);
    r.min_derivative = std::min(r.min_derivative, std::abs(d) / std::pow(H, alpha));
  }
  r.applicable = r.min_derivative >= c * (1 - 1e-6);
  r.pass = r.applicable && r.measured <= r.bound;
  return r;
}

struct RankReport {
  double c2 = 0.0;
  int min_rank = 0;
  bool degenerate = false;
  double K_star = 0.0;
};

inline constexpr double kDegenerateC2 = 1e-8;

namespace detail {

/// mu-th derivative of t -> g(x + t a) at 0 by central differences.
inline double directional_fd(const std::function<double(const RVector&)>& g, const RVector& x, const RVector& a,
                             int mu) {
  if (mu == 0) return g(x);
  const double h = mu == 1 ? 1e-6 : std::pow(1e-16, 1.0 / (mu + 2));
  double s = 0.0, binom = 1.0;
  for (int j = 0; j <= mu; ++j) {
    s += ((j % 2) ? -1.0 : 1.0) * binom * g(x + (mu / 2.0 - j) * h * a);
    binom = binom * (mu - j) / (j + 1);
  }
  return s / std::pow(h, mu);
}

inline std::vector<RVector> sphere_directions(int n, int count, std::uint64_t seed) {
  std::vector<RVector> out;
  if (n == 1) return {RVector::Constant(1, 1.0)};
  if (n == 2) {
    for (int j = 0; j < count; ++j) {
      const double t = 2 * M_PI * j / count;
      out.push_back((RVector(2) << std::cos(t), std::sin(t)).finished());
    }
    return out;
  }
  for (int i = 0; i < n; ++i) {
    out.push_back(RVector::Unit(n, i));
    for (int j = i + 1; j < n; ++j) {
      out.push_back((RVector::Unit(n, i) + RVector::Unit(n, j)) / std::sqrt(2.0));
      out.push_back((RVector::Unit(n, i) - RVector::Unit(n, j)) / std::sqrt(2.0));
    }
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  while (int(out.size()) < count) {
    RVector v(n);
    for (int i = 0; i < n; ++i) v[i] = nd(rng);
    out.push_back(v.normalized());
  }
  return out;
}

}  // namespace detail

/// c2 = min over the xi-grid and sampled unit b of max_mu |D^mu <b, f>|, with
/// mu from 1 (or 0 when include_zeroth) to alpha. Also reports the smallest
/// rank of the stacked derivative matrix and K* = (32 c1 / c2) n3^{alpha/2}.
inline RankReport rank_nondegeneracy(const std::function<RVector(const RVector&)>& f, int alpha, const Box& box,
                                     int grid_density, int b_samples, double c1, bool include_zeroth = false,
                                     std::uint64_t seed = 7) {
  const int n3 = int(box.size());
  RVector probe(n3);
  for (int j = 0; j < n3; ++j) probe[j] = box[std::size_t(j)].first;
  const int n2 = int(f(probe).size());
  const auto bs = detail::sphere_directions(n2, b_samples, seed);
  const auto as = detail::sphere_directions(n3, std::max(8, b_samples), seed + 1);
  RankReport rep;
  rep.c2 = std::numeric_limits<double>::infinity();
  rep.min_rank = n2;
  std::size_t total = 1;
  for (int j = 0; j < n3; ++j) total *= std::size_t(grid_density);
  for (std::size_t flat = 0; flat < total; ++flat) {
    RVector xi(n3);
    std::size_t rest = flat;
    for (int j = n3 - 1; j >= 0; --j) {
      const auto [lo, hi] = box[std::size_t(j)];
      xi[j] = lo + (hi - lo) * double(rest % std::size_t(grid_density)) / std::max(1, grid_density - 1);
      rest /= std::size_t(grid_density);
    }
    // Stacked derivatives: Jacobian plus pure higher derivatives along axes.
    RMatrix stack(n2, 0);
    for (int mu = 1; mu <= alpha; ++mu)
      for (int j = 0; j < n3; ++j) {
        RVector col(n2);
        for (int i = 0; i < n2; ++i)
          col[i] = detail::directional_fd([&](const RVector& x) { return f(x)[i]; }, xi, RVector::Unit(n3, j), mu);
        stack.conservativeResize(n2, stack.cols() + 1);
        stack.col(stack.cols() - 1) = col;
      }
    Eigen::JacobiSVD<RMatrix> svd(stack);
    const auto sv = svd.singularValues();
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) rank += sv[i] > 1e-8 * std::max(1.0, sv[0]);
    rep.min_rank = std::min(rep.min_rank, rank);

    const RMatrix J = stack.leftCols(n3);
    for (const auto& b : bs) {
      auto g = [&](const RVector& x) { return b.dot(f(x)); };
      double best = include_zeroth ? std::abs(g(xi)) : 0.0;
      best = std::max(best, (J.transpose() * b).norm());
      for (int mu = 2; mu <= alpha; ++mu)
        for (const auto& a : as) best = std::max(best, std::abs(detail::directional_fd(g, xi, a, mu)));
      rep.c2 = std::min(rep.c2, best);
    }
  }
  rep.degenerate = rep.c2 <= kDegenerateC2 || rep.min_rank < n2;
  rep.K_star = rep.c2 > 0 ? 32.0 * c1 / rep.c2 * std::pow(double(n3), alpha / 2.0)
                          : std::numeric_limits<double>::infinity();
  return rep;
}

/// The nondegeneracy map of the frequency part: omega1 at eps = 0 stacked with the
/// eps^{q5} coefficient of omega2, estimated from the maps at eps and eps/2.
/// When q5 = 0 the two-point quotient is undefined; omega2 itself is used, which
/// differs from the coefficient by a xi-independent constant.
inline std::function<RVector(const RVector&)> omega_tilde(const SystemSpec& s) {
  return [s](const RVector& xi) {
    const auto& d = s.dims;
    RVector out(d.n2());
    if (d.n21) out.head(d.n21) = s.omega1(xi, 0.0);
    if (d.n22) {
      const double e = s.eps, q5 = s.q(5);
      if (q5 == 0.0) {
        out.tail(d.n22) = s.omega2(xi, e);
      } else {
        out.tail(d.n22) = (s.omega2(xi, e) - s.omega2(xi, e / 2)) / (std::pow(e, q5) - std::pow(e / 2, q5));
      }
    }
    return out;
  };
}

/// StageMap of the unperturbed integrable part.
inline StageMap integrable_stage_map(const SystemSpec& s) {
  return [s](const RVector& xi) {
    const auto base = integrable_at(s, xi);
    StageData st;
    st.omega = base.omega;
    st.lambda = base.lambda;
    st.B = base.B;
    st.Binv = base.Binv;
    return st;
  };
}

struct InclusionReport {
  std::size_t in_zones = 0;    // samples inside some |m|_1 >= 1 zone
  std::size_t violations = 0;  // of those, samples outside the 2 gamma m = 0 set for the same k
};

/// Samples the |m|_1 >= 1 zones for 0 < |k|_2 <= K and checks they lie inside
/// {|<k,omega>| < 2 gamma eps^{q5} |k|^{-iota}}.
inline InclusionReport m_zone_inclusion(const Box& box, const StageMap& stage, double K, double gamma, double iota,
                                        double eps_q5, std::size_t n, std::uint64_t seed) {
  InclusionReport rep;
  const auto xs = sample_box(box, n, seed);
  const int n2 = int(stage(xs[0]).omega.size());
  const auto ks = enumerate_ball(n2, K);
  for (const auto& xi : xs) {
    const StageData st = stage(xi);
    const auto ms = m_set(int(st.lambda.size()));
    for (const auto& k : ks) {
      const double thr = gamma * eps_q5 * std::pow(norm2(k), -iota);
      for (const auto& m : ms) {
        if (norm1(m) == 0 || std::abs(small_divisor(k, m, st)) >= thr) continue;
        ++rep.in_zones;
        if (std::abs(dot(k, st.omega)) >= 2 * thr) ++rep.violations;
      }
    }
  }
  return rep;
}

}  // namespace kamtori
