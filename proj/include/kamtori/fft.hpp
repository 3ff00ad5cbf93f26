#pragma once

#include "common.hpp"

#include <unsupported/Eigen/FFT>

#include <functional>
#include <numeric>

namespace kamtori {

/// Tensor grid on T^n with N_j equispaced points per axis, phi = 2 pi i / N_j.
/// Flattened row-major: the last axis varies fastest.
struct Grid {
  std::vector<int> sizes;

  int n_angles() const { return int(sizes.size()); }
  std::size_t total() const {
    return std::accumulate(sizes.begin(), sizes.end(), std::size_t(1),
                           [](std::size_t a, int b) { return a * std::size_t(b); });
  }
  std::vector<int> index(std::size_t flat) const {
    std::vector<int> idx(sizes.size());
    for (std::size_t j = sizes.size(); j-- > 0;) {
      idx[j] = int(flat % std::size_t(sizes[j]));
      flat /= std::size_t(sizes[j]);
    }
    return idx;
  }
  RVector point(std::size_t flat) const {
    const auto idx = index(flat);
    RVector phi(Eigen::Index(sizes.size()));
    for (std::size_t j = 0; j < sizes.size(); ++j)
      phi[Eigen::Index(j)] = 2.0 * M_PI * idx[j] / sizes[j];
    return phi;
  }
  static Grid uniform(int n, int N) { return Grid{std::vector<int>(std::size_t(n), N)}; }
};

/// Smallest power of two >= 4K+1: the canonical grid for degree-K data.
inline int canonical_grid_size(double K) {
  int N = 1;
  while (N < 4 * K + 1) N *= 2;
  return std::max(N, 2);
}

/// Unnormalised multidimensional DFT, in place.
/// Forward uses e^{-i k phi}; inverse uses e^{+i k phi}.
inline void fft_nd(std::vector<Complex>& data, const std::vector<int>& sizes, bool inverse) {
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::Unscaled);
  const std::size_t total = data.size();
  std::size_t stride = 1;
  std::vector<Complex> line, out;
  for (std::size_t ax = sizes.size(); ax-- > 0;) {
    const std::size_t n = std::size_t(sizes[ax]);
    const std::size_t block = stride * n;
    line.resize(n);
    for (std::size_t base = 0; base < total; base += block)
      for (std::size_t off = 0; off < stride; ++off) {
        for (std::size_t i = 0; i < n; ++i) line[i] = data[base + off + i * stride];
        if (inverse)
          fft.inv(out, line);
        else
          fft.fwd(out, line);
        for (std::size_t i = 0; i < n; ++i) data[base + off + i * stride] = out[i];
      }
    stride = block;
  }
}

}  // namespace kamtori
