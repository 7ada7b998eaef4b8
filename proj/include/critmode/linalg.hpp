// Copyright the critmode authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace critmode {

using cplx = std::complex<double>;
using CVector = std::vector<cplx>;

/// Dense complex matrix, row-major. Sized for phase spaces of a few dozen
/// dimensions; nothing here is blocked or cache-tuned.
class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  ComplexMatrix(std::size_t rows, std::size_t cols);
  ComplexMatrix(std::initializer_list<std::initializer_list<cplx>> rows);

  static ComplexMatrix identity(std::size_t n);
  static ComplexMatrix from_columns(const std::vector<CVector>& cols);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  cplx& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const cplx& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<cplx> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const cplx> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  CVector column(std::size_t c) const;

  std::span<const cplx> data() const noexcept { return data_; }

  ComplexMatrix transpose() const;
  ComplexMatrix adjoint() const;

  ComplexMatrix& operator+=(const ComplexMatrix& o);
  ComplexMatrix& operator-=(const ComplexMatrix& o);
  ComplexMatrix& operator*=(cplx s);

  /// Frobenius norm.
  double norm() const;
  double max_abs() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cplx> data_;
};

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator*(cplx s, ComplexMatrix a);
ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);
CVector operator*(const ComplexMatrix& a, std::span<const cplx> x);

/// a - s*I
ComplexMatrix shifted(const ComplexMatrix& a, cplx s);
ComplexMatrix power(const ComplexMatrix& a, unsigned k);

// Vector helpers.
double norm(std::span<const cplx> v);
double max_abs(std::span<const cplx> v);
CVector operator+(const CVector& a, const CVector& b);
CVector operator-(const CVector& a, const CVector& b);
CVector operator*(cplx s, const CVector& v);
CVector conj(const CVector& v);

/// Polynomial with complex coefficients, ascending powers.
class ComplexPolynomial {
 public:
  ComplexPolynomial() = default;
  explicit ComplexPolynomial(CVector ascending);

  /// prod_k (z - roots[k]), monic.
  static ComplexPolynomial from_roots(std::span<const cplx> roots);

  /// -1 for the zero polynomial.
  int degree() const noexcept { return static_cast<int>(coeffs_.size()) - 1; }
  bool is_zero() const noexcept { return coeffs_.empty(); }
  const CVector& coefficients() const noexcept { return coeffs_; }
  cplx coefficient(std::size_t k) const { return k < coeffs_.size() ? coeffs_[k] : cplx{}; }

  cplx operator()(cplx z) const;
  ComplexPolynomial derivative() const;
  double max_abs_coefficient() const;

 private:
  CVector coeffs_;
};

ComplexPolynomial operator*(const ComplexPolynomial& a, const ComplexPolynomial& b);

struct ToleranceConfig {
  double rank_tol = 1e-9;      ///< singular-value cutoff relative to the largest
  double cluster_tol = 1e-6;   ///< root clustering radius
  double residual_tol = 1e-9;  ///< verification threshold

  /// Throws DomainError unless all positive and cluster_tol >= rank_tol.
  void validate() const;
};

/// det(M - w I) as a polynomial in w (Faddeev-LeVerrier).
ComplexPolynomial char_poly(const ComplexMatrix& m);

/// All roots with multiplicity. Aberth-Ehrlich iteration; falls back to the
/// companion-matrix eigenvalues if it does not settle. Throws
/// ConvergenceError if neither route meets the residual bound.
CVector poly_roots(const ComplexPolynomial& p, const ToleranceConfig& tol = {});

struct RankNullspace {
  std::size_t rank = 0;
  std::vector<CVector> nullspace;  ///< orthonormal
  std::vector<double> singular_values;
};

/// Singular values above rank_tol * reference count toward the rank;
/// reference defaults to the largest singular value of m.
RankNullspace numeric_rank_and_nullspace(const ComplexMatrix& m, const ToleranceConfig& tol = {}, double reference = -1.0);

struct AffineSolution {
  CVector particular;  ///< minimum-norm
  std::vector<CVector> nullspace;
  double residual = 0.0;  ///< ||A x - b||
};

/// Minimum-norm solution of A x = b plus the nullspace of A. Throws
/// InconsistentSystemError when b is not in the column space within
/// residual_tol * (||A|| ||x|| + ||b||).
AffineSolution solve_affine(const ComplexMatrix& a, std::span<const cplx> b, const ToleranceConfig& tol = {});

/// Determinant by LU with partial pivoting.
cplx determinant(const ComplexMatrix& m);

/// Solves A X = B (A square, nonsingular) by LU with partial pivoting.
ComplexMatrix lu_solve(const ComplexMatrix& a, const ComplexMatrix& b);

struct EigenDecomposition {
  CVector values;
  std::vector<CVector> vectors;  ///< unit 2-norm right eigenvectors
};

/// Dense eigensolve (no structure assumed).
EigenDecomposition eigen_decompose(const ComplexMatrix& m);
CVector eigenvalues(const ComplexMatrix& m);

}  // namespace critmode
