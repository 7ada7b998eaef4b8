// Copyright the critmode authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "critmode/linalg.hpp"

namespace critmode {

/// Small dense real matrix (row-major). Used for stiffness and damping.
class RealMatrix {
 public:
  RealMatrix() = default;
  RealMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
  RealMatrix(std::initializer_list<std::initializer_list<double>> rows);
  static RealMatrix from_rows(const std::vector<std::vector<double>>& rows);
  static RealMatrix identity(std::size_t n);
  static RealMatrix diagonal(std::initializer_list<double> d);
  /// Symmetric N=2 matrix [[a, b], [b, c]].
  static RealMatrix symmetric2(double a, double b, double c);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  RealMatrix transpose() const;
  double max_abs() const;
  ComplexMatrix to_complex() const;
  std::vector<std::vector<double>> to_rows() const;

  friend RealMatrix operator+(const RealMatrix& a, const RealMatrix& b);
  friend RealMatrix operator*(double s, const RealMatrix& a);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Phase-space vector of a system with N oscillators: positions x_0..x_{N-1}
/// followed by momenta p_0..p_{N-1} (p = dx/dt). Length 2N.
using PhaseVector = CVector;

inline std::span<const cplx> positions(const PhaseVector& v) { return {v.data(), v.size() / 2}; }
inline std::span<const cplx> momenta(const PhaseVector& v) { return {v.data() + v.size() / 2, v.size() / 2}; }

/// N ohmically damped coupled oscillators:  x'' + Gamma x' + K x = 0.
///
/// Gamma is the full damping matrix. Sources that write the damping as
/// 2*gamma_ij must be entered with Gamma = 2*gamma.
class OscillatorSystem {
 public:
  std::size_t n() const noexcept { return stiffness_.rows(); }
  std::size_t dim() const noexcept { return 2 * n(); }
  const RealMatrix& stiffness() const noexcept { return stiffness_; }
  const RealMatrix& damping() const noexcept { return damping_; }
  const std::string& label() const noexcept { return label_; }

  /// Largest |A - A^T| entry seen at construction (before symmetrizing).
  double symmetry_defect() const noexcept { return symmetry_defect_; }
  /// Non-fatal findings: Gamma not positive semidefinite, K not positive definite.
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  void add_warning(std::string w) { warnings_.push_back(std::move(w)); }

 private:
  friend OscillatorSystem build_system(RealMatrix, RealMatrix, std::string);
  RealMatrix stiffness_;
  RealMatrix damping_;
  std::string label_;
  double symmetry_defect_ = 0.0;
  std::vector<std::string> warnings_;
};

/// Validates and symmetrizes. Throws DomainError on non-square input, size
/// mismatch or asymmetry beyond 1e-12.
OscillatorSystem build_system(RealMatrix stiffness, RealMatrix damping, std::string label = {});

/// Same damping, stiffness K + eps * dK.
OscillatorSystem perturb_stiffness(const OscillatorSystem& sys, const RealMatrix& dk, double eps);

/// H = i [[0, I], [-K, -Gamma]]; i d/dt (x, p) = H (x, p).
ComplexMatrix evolution_operator(const OscillatorSystem& sys);

/// g = i [[Gamma, I], [I, 0]]; (psi, phi) = psi^T g phi.
ComplexMatrix metric(const OscillatorSystem& sys);

/// Symmetric, non-conjugating pairing under which H is symmetric.
cplx bilinear(const OscillatorSystem& sys, std::span<const cplx> psi, std::span<const cplx> phi);

/// [g phi]^*: the vector whose conjugated inner product with any chi equals
/// (phi, chi).
PhaseVector metric_conjugate(const OscillatorSystem& sys, std::span<const cplx> phi);

}  // namespace critmode
