#pragma once

#include "common.hpp"

#include <algorithm>
#include <cmath>

namespace kamtori {

enum class LatticeNorm { L2, L1 };

inline double lattice_norm(const Mode& k, LatticeNorm norm) {
  return norm == LatticeNorm::L2 ? norm2(k) : double(norm1(k));
}

/// All k in Z^n with lo < |k| <= hi, ordered by |k| ascending and then
/// lexicographically descending, so (1,-1) precedes (-1,1).
inline std::vector<Mode> enumerate_shell(int n, double lo, double hi,
                                         LatticeNorm norm = LatticeNorm::L2) {
  std::vector<Mode> out;
  if (n <= 0 || hi < 0) return out;
  const int R = int(std::floor(hi + 1e-12));
  Mode k(std::size_t(n), -R);
  while (true) {
    const double len = lattice_norm(k, norm);
    if (len > lo && len <= hi) out.push_back(k);
    int j = n - 1;
    while (j >= 0 && k[std::size_t(j)] == R) k[std::size_t(j--)] = -R;
    if (j < 0) break;
    ++k[std::size_t(j)];
  }
  std::stable_sort(out.begin(), out.end(), [&](const Mode& a, const Mode& b) {
    const double na = lattice_norm(a, norm), nb = lattice_norm(b, norm);
    if (na != nb) return na < nb;
    return a > b;
  });
  return out;
}

/// Nonzero k with |k| <= K.
inline std::vector<Mode> enumerate_ball(int n, double K, LatticeNorm norm = LatticeNorm::L2) {
  return enumerate_shell(n, 0.0, K, norm);
}

/// The index set m in Z^{n1} with |m|_1 <= 2 and sum(m) in {0, -1}:
/// these are the combinations <m,Lambda> met by the homological equations.
/// Ordered with m = 0 first, then pairs e_j - e_i, then -e_i.
inline std::vector<std::vector<int>> m_set(int n1) {
  std::vector<std::vector<int>> out;
  out.emplace_back(std::size_t(n1), 0);
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n1; ++j) {
      if (i == j) continue;
      std::vector<int> m(std::size_t(n1), 0);
      m[std::size_t(j)] = 1;
      m[std::size_t(i)] = -1;
      out.push_back(m);
    }
  for (int i = 0; i < n1; ++i) {
    std::vector<int> m(std::size_t(n1), 0);
    m[std::size_t(i)] = -1;
    out.push_back(m);
  }
  return out;
}

}  // namespace kamtori
