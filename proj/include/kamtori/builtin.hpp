#pragma once

#include "model.hpp"

#include <map>

namespace kamtori {

/// amp * cos<k,phi> in component `row` of a rows x 1 poly.
inline TrigPoly cos_mode(int n, const Mode& k, int rows, int row, double amp) {
  TrigPoly f(n, rows, 1);
  CMatrix c = CMatrix::Zero(rows, 1);
  c(row, 0) = is_zero(k) ? amp : amp / 2;
  f.add(k, c);
  if (!is_zero(k)) f.add(negate(k), c);
  return f;
}

/// amp * sin<k,phi> in component `row`.
inline TrigPoly sin_mode(int n, const Mode& k, int rows, int row, double amp) {
  TrigPoly f(n, rows, 1);
  CMatrix c = CMatrix::Zero(rows, 1);
  c(row, 0) = Complex(0, -amp / 2);
  f.add(k, c);
  f.add(negate(k), c.conjugate());
  return f;
}

/// Perturbation of the shipped planar example (n12 = 1, n21 = 2):
///   g2 = cos(phi1 + phi2) + I cos(phi2) + I^2 / 2,
///   g3 = (1/2 + sin(phi1), I sin(phi2)).
inline PolyPerturbation planar_perturbation() {
  PolyPerturbation p;
  p.g[1].push_back({{0}, cos_mode(2, {1, 1}, 1, 0, 1.0)});
  p.g[1].push_back({{1}, cos_mode(2, {0, 1}, 1, 0, 1.0)});
  p.g[1].push_back({{2}, cos_mode(2, {0, 0}, 1, 0, 0.5)});
  p.g[2].push_back({{0}, cos_mode(2, {0, 0}, 2, 0, 0.5) + sin_mode(2, {1, 0}, 2, 0, 1.0)});
  p.g[2].push_back({{1}, sin_mode(2, {0, 1}, 2, 1, 1.0)});
  return p;
}

inline const std::map<std::string, std::function<PolyPerturbation()>>& builtin_registry() {
  static const std::map<std::string, std::function<PolyPerturbation()>> reg{
      {"zero", [] { return PolyPerturbation{}; }},
      {"planar", planar_perturbation},
  };
  return reg;
}

/// Planar example: I' = -I + eps g2, phi' = xi + eps g3, xi in [0.5, 2]^2.
/// Exponents q = (1, 1, 0, 1, 0, 1, 1) make P1 = P2 = 1 and G = eps g.
inline SystemSpec planar_spec(double eps = 1e-3) {
  SystemSpec s;
  s.dims = Dims{0, 1, 2, 0, 2};
  s.q.q = {1, 1, 0, 1, 0, 1, 1};
  s.eps = eps;
  s.l = 30;
  s.alpha = 1;
  s.iota = 1.5;
  s.gamma = 0.05;
  s.omega1 = [](const RVector& xi, double) { return RVector(xi); };
  s.omega2 = [](const RVector&, double) { return RVector(0); };
  s.lambda1 = [](const RVector&, double) { return CVector(0); };
  s.lambda2 = [](const RVector&, double) { return CVector::Constant(1, -1.0); };
  s.B1 = [](const RVector&, double) { return CMatrix(0, 0); };
  s.B2 = [](const RVector&, double) { return CMatrix::Identity(1, 1); };
  s.pert = make_perturbation(s.dims, planar_perturbation());
  s.box = {{0.5, 2.0}, {0.5, 2.0}};
  return s;
}

}  // namespace kamtori
