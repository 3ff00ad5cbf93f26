#pragma once

#include "common.hpp"
#include "fft.hpp"

#include <cmath>
#include <map>

namespace kamtori {

/// Trigonometric polynomial on T^n with complex matrix coefficients,
///   f(phi) = sum_k c_k e^{i<k,phi>}.
/// Vector-valued polys are stored as rows x 1.
class TrigPoly {
 public:
  TrigPoly() = default;
  TrigPoly(int n_angles, int rows, int cols, bool real = true)
      : n_(n_angles), rows_(rows), cols_(cols), real_(real) {
    if (n_angles <= 0 || rows < 0 || cols < 0) throw InputError("TrigPoly: bad shape");
  }

  static TrigPoly constant(int n_angles, const CMatrix& c, bool real = true) {
    TrigPoly f(n_angles, int(c.rows()), int(c.cols()), real);
    f.set(Mode(std::size_t(n_angles), 0), c);
    return f;
  }

  int n_angles() const { return n_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double degree() const { return degree_; }
  bool is_real() const { return real_; }
  const std::map<Mode, CMatrix>& coeffs() const { return c_; }

  void set_degree(double K) { degree_ = K; }
  void set_real(bool real) { real_ = real; }

  CMatrix coeff(const Mode& k) const {
    auto it = c_.find(k);
    return it == c_.end() ? CMatrix::Zero(rows_, cols_) : it->second;
  }
  CMatrix mean() const { return coeff(Mode(std::size_t(n_), 0)); }

  /// Stores c at k, widening declared_degree if needed. Zero values erase.
  void set(const Mode& k, const CMatrix& c) {
    if (int(k.size()) != n_ || c.rows() != rows_ || c.cols() != cols_)
      throw InputError("TrigPoly::set: shape mismatch");
    if (max_abs(c) == 0.0) {
      c_.erase(k);
      return;
    }
    degree_ = std::max(degree_, norm2(k));
    c_[k] = c;
  }
  void add(const Mode& k, const CMatrix& c) { set(k, coeff(k) + c); }

  TrigPoly& operator+=(const TrigPoly& g) {
    check_same(g);
    for (const auto& [k, c] : g.c_) add(k, c);
    degree_ = std::max(degree_, g.degree_);
    real_ = real_ && g.real_;
    return *this;
  }
  TrigPoly& operator-=(const TrigPoly& g) { return *this += g * Complex(-1.0); }
  TrigPoly operator*(Complex s) const {
    TrigPoly out(n_, rows_, cols_, real_ && s.imag() == 0.0);
    out.degree_ = degree_;
    for (const auto& [k, c] : c_) out.set(k, c * s);
    return out;
  }
  friend TrigPoly operator+(TrigPoly a, const TrigPoly& b) { return a += b; }
  friend TrigPoly operator-(TrigPoly a, const TrigPoly& b) { return a -= b; }

  /// Constant matrix acting on the left of every coefficient.
  friend TrigPoly operator*(const CMatrix& L, const TrigPoly& f) {
    TrigPoly out(f.n_, int(L.rows()), f.cols_, f.real_ && L.imag().cwiseAbs().maxCoeff() == 0.0);
    out.degree_ = f.degree_;
    for (const auto& [k, c] : f.c_) out.set(k, L * c);
    return out;
  }

  /// Single entry (i,j) as a scalar poly.
  TrigPoly entry(int i, int j) const {
    TrigPoly out(n_, 1, 1, real_);
    out.degree_ = degree_;
    for (const auto& [k, c] : c_) out.set(k, c.block(i, j, 1, 1));
    return out;
  }

 private:
  void check_same(const TrigPoly& g) const {
    if (g.n_ != n_ || g.rows_ != rows_ || g.cols_ != cols_)
      throw InputError("TrigPoly: operand shape mismatch");
  }

  int n_ = 1, rows_ = 1, cols_ = 1;
  double degree_ = 0.0;
  bool real_ = true;
  std::map<Mode, CMatrix> c_;
};

/// Values of a matrix-valued function on a Grid, flattened row-major.
struct GridSamples {
  Grid grid;
  int rows = 1, cols = 1;
  std::vector<CMatrix> values;
};

/// Gamma_K: keep exactly the modes with |k|_2 <= K.
inline TrigPoly truncate(const TrigPoly& f, double K) {
  TrigPoly out(f.n_angles(), f.rows(), f.cols(), f.is_real());
  for (const auto& [k, c] : f.coeffs())
    if (norm2(k) <= K + 1e-12) out.set(k, c);
  out.set_degree(K);
  return out;
}

struct StripNorm {
  double radius = 0.0;
  double value = 0.0;
};

/// Majorant sum_k |c_k|_max e^{r|k|_1} of sup |f| on the strip |Im phi| < r.
inline StripNorm strip_norm_bound(const TrigPoly& f, double r) {
  if (r < 0) throw InputError("strip_norm_bound: negative radius");
  double s = 0.0;
  for (const auto& [k, c] : f.coeffs()) s += max_abs(c) * std::exp(r * norm1(k));
  return {r, s};
}

namespace detail {

/// Tables e^{i k z_j} for |k| <= R, one per angle.
inline std::vector<std::vector<Complex>> phase_tables(const CVector& z, int R) {
  std::vector<std::vector<Complex>> t(std::size_t(z.size()), std::vector<Complex>(std::size_t(2 * R + 1)));
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    auto& row = t[std::size_t(j)];
    row[std::size_t(R)] = 1.0;
    for (int k = 1; k <= R; ++k) {
      row[std::size_t(R + k)] = std::exp(Complex(0, 1) * (double(k) * z[j]));
      row[std::size_t(R - k)] = std::exp(Complex(0, -1) * (double(k) * z[j]));
    }
  }
  return t;
}

inline int max_component(const TrigPoly& f) {
  int R = 0;
  for (const auto& kv : f.coeffs())
    for (int v : kv.first) R = std::max(R, std::abs(v));
  return R;
}

}  // namespace detail

/// f(z) for complex z in C^n.
inline CMatrix evaluate(const TrigPoly& f, const CVector& z) {
  if (z.size() != f.n_angles()) throw InputError("evaluate: angle dimension mismatch");
  const int R = detail::max_component(f);
  const auto t = detail::phase_tables(z, R);
  CMatrix out = CMatrix::Zero(f.rows(), f.cols());
  for (const auto& [k, c] : f.coeffs()) {
    Complex e = 1.0;
    for (std::size_t j = 0; j < k.size(); ++j) e *= t[j][std::size_t(R + k[j])];
    out.noalias() += c * e;
  }
  return out;
}

inline CMatrix evaluate(const TrigPoly& f, const RVector& phi) {
  return evaluate(f, CVector(phi.cast<Complex>()));
}

/// Evaluation at many real points, sharing the mode list.
inline std::vector<CMatrix> evaluate_points(const TrigPoly& f, const std::vector<RVector>& pts) {
  std::vector<CMatrix> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(evaluate(f, p));
  return out;
}

/// Samples on a grid via inverse FFT. Modes outside the grid box alias.
inline GridSamples to_grid(const TrigPoly& f, const Grid& grid) {
  if (grid.n_angles() != f.n_angles()) throw InputError("to_grid: grid dimension mismatch");
  const std::size_t total = grid.total();
  GridSamples s{grid, f.rows(), f.cols(), std::vector<CMatrix>(total, CMatrix::Zero(f.rows(), f.cols()))};
  std::vector<Complex> buf(total);
  for (int r = 0; r < f.rows(); ++r)
    for (int c = 0; c < f.cols(); ++c) {
      std::fill(buf.begin(), buf.end(), Complex(0));
      for (const auto& [k, v] : f.coeffs()) {
        std::size_t flat = 0;
        for (std::size_t j = 0; j < k.size(); ++j) {
          const int N = grid.sizes[j];
          flat = flat * std::size_t(N) + std::size_t(((k[j] % N) + N) % N);
        }
        buf[flat] += v(r, c);
      }
      fft_nd(buf, grid.sizes, true);
      for (std::size_t i = 0; i < total; ++i) s.values[i](r, c) = buf[i];
    }
  return s;
}

/// Nyquist radius of a grid: the largest ball radius whose modes the grid
/// resolves without the ambiguous k_j = -N_j/2 frequency.
inline double nyquist_radius(const Grid& grid) {
  int m = grid.sizes.empty() ? 0 : grid.sizes[0];
  for (int N : grid.sizes) m = std::min(m, N);
  return std::max(0, m / 2 - 1 + (m % 2));
}

/// DFT of grid samples. Keeps modes with |k_j| <= N_j/2 - 1 (all of them for
/// odd N_j) and |k|_2 <= nyquist_radius. Content above that aliases.
inline TrigPoly from_grid(const GridSamples& s, bool real_flag) {
  const Grid& grid = s.grid;
  for (int N : grid.sizes)
    if (N < 2) throw InputError("from_grid: need at least 2 points per angle");
  const std::size_t total = grid.total();
  if (s.values.size() != total) throw InputError("from_grid: sample count does not match grid");
  for (std::size_t i = 0; i < total; ++i)
    if (!s.values[i].allFinite())
      throw InputError("from_grid: non-finite sample at grid point " + std::to_string(i));

  const double K = nyquist_radius(grid);
  const int n = grid.n_angles();
  TrigPoly f(n, s.rows, s.cols, real_flag);
  std::map<Mode, CMatrix> acc;
  std::vector<Complex> buf(total);
  for (int r = 0; r < s.rows; ++r)
    for (int c = 0; c < s.cols; ++c) {
      for (std::size_t i = 0; i < total; ++i) buf[i] = s.values[i](r, c);
      fft_nd(buf, grid.sizes, false);
      for (std::size_t i = 0; i < total; ++i) {
        const auto idx = grid.index(i);
        Mode k(static_cast<std::size_t>(n));
        bool keep = true;
        for (std::size_t j = 0; j < idx.size(); ++j) {
          const int N = grid.sizes[j];
          int kj = idx[j] <= N / 2 ? idx[j] : idx[j] - N;
          if (N % 2 == 0 && std::abs(kj) == N / 2) keep = false;
          k[j] = kj;
        }
        if (!keep || norm2(k) > K + 1e-12) continue;
        auto it = acc.find(k);
        if (it == acc.end()) it = acc.emplace(k, CMatrix::Zero(s.rows, s.cols)).first;
        it->second(r, c) = buf[i] / double(total);
      }
    }
  for (auto& [k, c] : acc) {
    if (real_flag) {
      auto it = acc.find(negate(k));
      f.set(k, 0.5 * (c + it->second.conjugate()));
    } else {
      f.set(k, c);
    }
  }
  f.set_degree(K);
  return f;
}

/// d/dt f(phi + t omega) at t = 0: coefficient k picks up i<k,omega>.
inline TrigPoly directional_derivative(const TrigPoly& f, const RVector& omega) {
  if (omega.size() != f.n_angles()) throw InputError("directional_derivative: dimension mismatch");
  TrigPoly out(f.n_angles(), f.rows(), f.cols(), f.is_real());
  for (const auto& [k, c] : f.coeffs()) out.set(k, c * Complex(0, dot(k, omega)));
  out.set_degree(f.degree());
  return out;
}

inline TrigPoly partial_derivative(const TrigPoly& f, int j) {
  RVector e = RVector::Zero(f.n_angles());
  e[j] = 1.0;
  return directional_derivative(f, e);
}

/// Gradient of a vector-valued poly (rows x 1) as a rows x n matrix poly.
inline TrigPoly jacobian(const TrigPoly& f) {
  if (f.cols() != 1) throw InputError("jacobian: expects a vector-valued poly");
  const int n = f.n_angles();
  TrigPoly out(n, f.rows(), n, f.is_real());
  for (const auto& [k, c] : f.coeffs()) {
    CMatrix d(f.rows(), n);
    for (int j = 0; j < n; ++j) d.col(j) = c.col(0) * Complex(0, k[std::size_t(j)]);
    out.set(k, d);
  }
  out.set_degree(f.degree());
  return out;
}

/// Grid sized for degree K_out work: canonical size per angle.
inline Grid working_grid(int n, double K_out) { return Grid::uniform(n, canonical_grid_size(K_out)); }

/// Real points phi_g + Phi(phi_g) for a real vector-valued shift Phi.
inline std::vector<RVector> shifted_points(const TrigPoly& Phi, const Grid& grid) {
  const auto vals = to_grid(Phi, grid);
  std::vector<RVector> pts(grid.total());
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = grid.point(i) + vals.values[i].col(0).real();
  return pts;
}

/// f(phi + Phi(phi)) projected to modes |k|_2 <= K_out.
inline TrigPoly compose_angle(const TrigPoly& f, const TrigPoly& Phi, double K_out) {
  if (Phi.rows() != f.n_angles() || Phi.cols() != 1 || Phi.n_angles() != f.n_angles())
    throw InputError("compose_angle: shift must have n_angles components");
  const Grid grid = working_grid(f.n_angles(), K_out);
  const auto pts = shifted_points(Phi, grid);
  GridSamples s{grid, f.rows(), f.cols(), evaluate_points(f, pts)};
  return truncate(from_grid(s, f.is_real() && Phi.is_real()), K_out);
}

/// Pointwise matrix product f(phi) g(phi), projected to |k|_2 <= K_out.
inline TrigPoly multiply(const TrigPoly& f, const TrigPoly& g, double K_out) {
  if (f.cols() != g.rows() || f.n_angles() != g.n_angles()) throw InputError("multiply: shape mismatch");
  const Grid grid = working_grid(f.n_angles(), K_out);
  const auto a = to_grid(f, grid), b = to_grid(g, grid);
  GridSamples s{grid, f.rows(), g.cols(), {}};
  s.values.reserve(grid.total());
  for (std::size_t i = 0; i < grid.total(); ++i) s.values.push_back(a.values[i] * b.values[i]);
  return truncate(from_grid(s, f.is_real() && g.is_real()), K_out);
}

/// Largest deviation of f(-k) from conj f(k), relative to the largest coefficient.
inline double hermitian_defect(const TrigPoly& f) {
  double big = 0.0, bad = 0.0;
  for (const auto& [k, c] : f.coeffs()) {
    big = std::max(big, max_abs(c));
    bad = std::max(bad, max_abs(c - f.coeff(negate(k)).conjugate()));
  }
  return big == 0.0 ? 0.0 : bad / big;
}

}  // namespace kamtori
