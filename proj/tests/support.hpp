// Copyright the critmode authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <random>

#include "critmode/oscillator.hpp"

namespace critmode::testing {

inline std::mt19937_64& rng() {
  static std::mt19937_64 gen(20240611);
  return gen;
}

inline double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng()); }

inline cplx random_cplx() { return {uniform(-1, 1), uniform(-1, 1)}; }

inline CVector random_vector(std::size_t n) {
  CVector v(n);
  for (auto& z : v) z = random_cplx();
  return v;
}

inline ComplexMatrix random_matrix(std::size_t r, std::size_t c) {
  ComplexMatrix m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = random_cplx();
  return m;
}

// Symmetric positive definite: A A^T + shift I.
inline RealMatrix random_spd(std::size_t n, double shift) {
  RealMatrix a(n, n), out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = uniform(-1, 1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = i == j ? shift : 0.0;
      for (std::size_t k = 0; k < n; ++k) s += a(i, k) * a(j, k);
      out(i, j) = s;
    }
  return out;
}

// Generic (hence diagonalizable) random damped system.
inline OscillatorSystem random_system(std::size_t n) {
  return build_system(random_spd(n, 0.5), random_spd(n, 0.1), "random");
}

inline double max_diff(std::span<const cplx> a, std::span<const cplx> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace critmode::testing
