#pragma once

#include <cmath>
#include <vector>

#include "svnn/linalg.hpp"
#include "svnn/random.hpp"

namespace svnn::testing {

inline SymmetricDense random_symmetric(std::size_t n, RandomSource& rng, double scale = 1.0) {
  SymmetricDense a(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) a.set(i, j, scale * rng.normal());
  return a;
}

// B B^T / n + shift I, well conditioned for shift > 0.
inline SymmetricDense random_spd(std::size_t n, RandomSource& rng, double shift = 0.5) {
  std::vector<double> b(n * n);
  for (auto& v : b) v = rng.normal();
  SymmetricDense a(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += b[i * n + k] * b[j * n + k];
      a.set(i, j, s / static_cast<double>(n) + (i == j ? shift : 0.0));
    }
  return a;
}

// Zeroes each off-diagonal pair with probability `drop`.
inline SymmetricDense random_sparse_symmetric(std::size_t n, double drop, RandomSource& rng) {
  SymmetricDense a(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j)
      if (i == j || rng.uniform() >= drop) a.set(i, j, rng.uniform(-1.0, 1.0) + (i == j ? 2.0 : 0.0));
  return a;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace svnn::testing
