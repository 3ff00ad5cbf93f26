#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace kamtori {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Integer frequency vector k in Z^n.
using Mode = std::vector<int>;

/// Malformed user input: shapes, non-finite samples, violated preconditions.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A bound was requested outside the range where it is proved.
class InapplicableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A small divisor i<k,omega> + <m,Lambda> vanished numerically.
class ResonantError : public std::runtime_error {
 public:
  ResonantError(Mode k, std::vector<int> m, Complex divisor)
      : std::runtime_error("resonant divisor"), k(std::move(k)), m(std::move(m)), divisor(divisor) {}
  Mode k;
  std::vector<int> m;
  Complex divisor;
};

/// (1 + sqrt 5) / 2.
inline const double kGolden = (1.0 + std::sqrt(5.0)) / 2.0;

inline double norm2(const Mode& k) {
  double s = 0;
  for (int v : k) s += double(v) * v;
  return std::sqrt(s);
}

inline int norm1(const Mode& k) {
  int s = 0;
  for (int v : k) s += v < 0 ? -v : v;
  return s;
}

inline double dot(const Mode& k, const RVector& x) {
  double s = 0;
  for (std::size_t j = 0; j < k.size(); ++j) s += k[j] * x[Eigen::Index(j)];
  return s;
}

inline Mode negate(Mode k) {
  for (int& v : k) v = -v;
  return k;
}

inline bool is_zero(const Mode& k) {
  for (int v : k)
    if (v != 0) return false;
  return true;
}

inline double max_abs(const CMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline std::string mode_string(const std::vector<int>& k) {
  std::string s = "(";
  for (std::size_t j = 0; j < k.size(); ++j) {
    if (j) s += ",";
    s += std::to_string(k[j]);
  }
  return s + ")";
}

}  // namespace kamtori
