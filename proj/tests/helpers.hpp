#pragma once

#include <kamtori/builtin.hpp>
#include <kamtori/lattice.hpp>

#include <random>

namespace kt {

using namespace kamtori;

/// Scalar poly with a single mode.
inline TrigPoly single(int n, const Mode& k, Complex c, bool real = false) {
  TrigPoly f(n, 1, 1, real);
  f.set(k, CMatrix::Constant(1, 1, c));
  return f;
}

inline Complex scalar(const CMatrix& m) { return m(0, 0); }

/// Real random poly of the given shape with modes in the ball |k|_2 <= K.
inline TrigPoly random_real(int n, int rows, int cols, double K, std::mt19937_64& rng, double decay = 0.5) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  TrigPoly f(n, rows, cols, true);
  for (const auto& k : enumerate_ball(n, K)) {
    if (f.coeffs().count(k)) continue;
    CMatrix c(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) c(i, j) = Complex(u(rng), is_zero(k) ? 0.0 : u(rng));
    c *= std::exp(-decay * norm1(k));
    f.set(k, c);
    if (!is_zero(k)) f.set(negate(k), c.conjugate());
  }
  f.set_degree(K);
  return f;
}

}  // namespace kt
