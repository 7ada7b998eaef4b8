// Copyright the critmode authors.
// SPDX-License-Identifier: Apache-2.0

#include "critmode/linalg.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "critmode/errors.hpp"
#include "critmode/kernels.hpp"

namespace critmode {

namespace {

using EMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

EMatrix to_eigen(const ComplexMatrix& m) {
  EMatrix e(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) e(r, c) = m(r, c);
  return e;
}

template <typename Vec>
CVector to_cvector(const Vec& v) {
  CVector out(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) out[static_cast<std::size_t>(i)] = v(i);
  return out;
}

void require_same_shape(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DomainError("matrix shape mismatch");
}

}  // namespace

// ---------------------------------------------------------------------------
// ComplexMatrix

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

ComplexMatrix::ComplexMatrix(std::initializer_list<std::initializer_list<cplx>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DomainError("ragged matrix initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
  ComplexMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

ComplexMatrix ComplexMatrix::from_columns(const std::vector<CVector>& cols) {
  if (cols.empty()) return {};
  ComplexMatrix m(cols.front().size(), cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (cols[c].size() != m.rows()) throw DomainError("ragged column set");
    for (std::size_t r = 0; r < m.rows(); ++r) m(r, c) = cols[c][r];
  }
  return m;
}

CVector ComplexMatrix::column(std::size_t c) const {
  CVector out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

ComplexMatrix ComplexMatrix::transpose() const {
  ComplexMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

ComplexMatrix ComplexMatrix::adjoint() const {
  ComplexMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = std::conj((*this)(r, c));
  return t;
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& o) {
  require_same_shape(*this, o);
  kernels::axpy(1.0, o.data_, data_);
  return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& o) {
  require_same_shape(*this, o);
  kernels::axpy(-1.0, o.data_, data_);
  return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(cplx s) {
  for (auto& v : data_) v *= s;
  return *this;
}

double ComplexMatrix::norm() const { return critmode::norm(data_); }
double ComplexMatrix::max_abs() const { return critmode::max_abs(data_); }

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
ComplexMatrix operator*(cplx s, ComplexMatrix a) { return a *= s; }

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.cols() != b.rows()) throw DomainError("matrix product shape mismatch");
  ComplexMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const cplx aik = a(i, k);
      if (aik != cplx{}) kernels::axpy(aik, b.row(k), out);
    }
  }
  return c;
}

CVector operator*(const ComplexMatrix& a, std::span<const cplx> x) {
  if (a.cols() != x.size()) throw DomainError("matrix-vector shape mismatch");
  CVector y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = kernels::dotu(a.row(i), x);
  return y;
}

ComplexMatrix shifted(const ComplexMatrix& a, cplx s) {
  if (!a.square()) throw DomainError("shift of a non-square matrix");
  ComplexMatrix out = a;
  for (std::size_t i = 0; i < a.rows(); ++i) out(i, i) -= s;
  return out;
}

ComplexMatrix power(const ComplexMatrix& a, unsigned k) {
  ComplexMatrix out = ComplexMatrix::identity(a.rows());
  for (unsigned i = 0; i < k; ++i) out = a * out;
  return out;
}

double norm(std::span<const cplx> v) { return std::sqrt(kernels::dotc(v, v).real()); }

double max_abs(std::span<const cplx> v) {
  double m = 0.0;
  for (const auto& x : v) m = std::max(m, std::abs(x));
  return m;
}

CVector operator+(const CVector& a, const CVector& b) {
  if (a.size() != b.size()) throw DomainError("vector size mismatch");
  CVector out = a;
  kernels::axpy(1.0, b, out);
  return out;
}

CVector operator-(const CVector& a, const CVector& b) {
  if (a.size() != b.size()) throw DomainError("vector size mismatch");
  CVector out = a;
  kernels::axpy(-1.0, b, out);
  return out;
}

CVector operator*(cplx s, const CVector& v) {
  CVector out = v;
  for (auto& x : out) x *= s;
  return out;
}

CVector conj(const CVector& v) {
  CVector out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [](cplx z) { return std::conj(z); });
  return out;
}

// ---------------------------------------------------------------------------
// ComplexPolynomial

ComplexPolynomial::ComplexPolynomial(CVector ascending) : coeffs_(std::move(ascending)) {
  while (!coeffs_.empty() && coeffs_.back() == cplx{}) coeffs_.pop_back();
}

ComplexPolynomial ComplexPolynomial::from_roots(std::span<const cplx> roots) {
  CVector c{1.0};
  for (const cplx& r : roots) {
    CVector next(c.size() + 1);
    for (std::size_t k = 0; k < c.size(); ++k) {
      next[k + 1] += c[k];
      next[k] -= r * c[k];
    }
    c = std::move(next);
  }
  return ComplexPolynomial(std::move(c));
}

cplx ComplexPolynomial::operator()(cplx z) const {
  cplx acc{};
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * z + *it;
  return acc;
}

ComplexPolynomial ComplexPolynomial::derivative() const {
  if (coeffs_.size() <= 1) return {};
  CVector d(coeffs_.size() - 1);
  for (std::size_t k = 1; k < coeffs_.size(); ++k) d[k - 1] = static_cast<double>(k) * coeffs_[k];
  return ComplexPolynomial(std::move(d));
}

double ComplexPolynomial::max_abs_coefficient() const { return critmode::max_abs(coeffs_); }

ComplexPolynomial operator*(const ComplexPolynomial& a, const ComplexPolynomial& b) {
  if (a.is_zero() || b.is_zero()) return {};
  CVector c(a.coefficients().size() + b.coefficients().size() - 1);
  for (std::size_t i = 0; i < a.coefficients().size(); ++i)
    for (std::size_t j = 0; j < b.coefficients().size(); ++j) c[i + j] += a.coefficients()[i] * b.coefficients()[j];
  return ComplexPolynomial(std::move(c));
}

void ToleranceConfig::validate() const {
  if (!(rank_tol > 0.0 && cluster_tol > 0.0 && residual_tol > 0.0))
    throw DomainError("tolerances must be strictly positive");
  if (cluster_tol < rank_tol) throw DomainError("cluster_tol must be >= rank_tol");
}

// ---------------------------------------------------------------------------
// Characteristic polynomial and roots

ComplexPolynomial char_poly(const ComplexMatrix& m) {
  if (!m.square()) throw DomainError("char_poly needs a square matrix");
  const std::size_t n = m.rows();
  // det(lambda I - A) = sum_k c_k lambda^k, c_n = 1.
  CVector c(n + 1);
  c[n] = 1.0;
  ComplexMatrix mk = ComplexMatrix::identity(n);
  for (std::size_t k = 1; k <= n; ++k) {
    const ComplexMatrix am = m * mk;
    cplx trace{};
    for (std::size_t i = 0; i < n; ++i) trace += am(i, i);
    c[n - k] = -trace / static_cast<double>(k);
    mk = am;
    for (std::size_t i = 0; i < n; ++i) mk(i, i) += c[n - k];
  }
  if (n % 2 == 1)
    for (auto& v : c) v = -v;
  return ComplexPolynomial(std::move(c));
}

namespace {

CVector companion_roots(const ComplexPolynomial& p) {
  const auto& a = p.coefficients();
  const std::size_t n = static_cast<std::size_t>(p.degree());
  ComplexMatrix comp(n, n);
  for (std::size_t i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
  for (std::size_t i = 0; i < n; ++i) comp(i, n - 1) = -a[i] / a[n];
  return eigenvalues(comp);
}

// |p(z)| below this is indistinguishable from zero in double arithmetic.
double horner_error_bound(const CVector& a, cplx z) {
  double acc = 0.0;
  const double az = std::abs(z);
  for (auto it = a.rbegin(); it != a.rend(); ++it) acc = acc * az + std::abs(*it);
  return 8.0 * std::numeric_limits<double>::epsilon() * acc;
}

bool roots_pass(const ComplexPolynomial& p, const CVector& roots, const ToleranceConfig& tol) {
  const double bound = tol.residual_tol * p.max_abs_coefficient();
  for (const cplx& r : roots)
    if (!std::isfinite(r.real()) || !std::isfinite(r.imag()) || std::abs(p(r)) > bound) return false;
  return true;
}

bool aberth(const ComplexPolynomial& p, CVector& z) {
  constexpr int kMaxIterations = 200;
  const auto& a = p.coefficients();
  const std::size_t n = static_cast<std::size_t>(p.degree());
  double radius = 0.0;
  for (std::size_t k = 0; k < n; ++k) radius = std::max(radius, std::abs(a[k] / a[n]));
  radius += 1.0;
  z.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n) + 0.4;
    z[k] = std::polar(radius, angle);
  }
  const ComplexPolynomial dp = p.derivative();
  std::vector<bool> done(n, false);
  for (int it = 0; it < kMaxIterations; ++it) {
    bool all_done = true;
    for (std::size_t k = 0; k < n; ++k) {
      if (done[k]) continue;
      const cplx pz = p(z[k]);
      if (std::abs(pz) <= horner_error_bound(a, z[k])) {
        done[k] = true;
        continue;
      }
      all_done = false;
      const cplx dpz = dp(z[k]);
      cplx repulsion{};
      for (std::size_t j = 0; j < n; ++j)
        if (j != k) repulsion += 1.0 / (z[k] - z[j]);
      if (dpz == cplx{}) {
        z[k] += std::polar(1e-8 * (1.0 + std::abs(z[k])), 0.7 * static_cast<double>(k + 1));
        continue;
      }
      const cplx ratio = pz / dpz;
      const cplx step = ratio / (1.0 - ratio * repulsion);
      z[k] -= step;
      if (std::abs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(z[k])) done[k] = true;
    }
    if (all_done) return true;
  }
  return false;
}

}  // namespace

CVector poly_roots(const ComplexPolynomial& p, const ToleranceConfig& tol) {
  if (p.is_zero()) throw DomainError("roots of the zero polynomial");
  if (p.degree() < 1) throw DomainError("roots of a constant polynomial");
  if (p.degree() == 1) return {-p.coefficient(0) / p.coefficient(1)};
  CVector z;
  if (aberth(p, z) && roots_pass(p, z, tol)) return z;
  z = companion_roots(p);
  if (roots_pass(p, z, tol)) return z;
  throw ConvergenceError("polynomial root finder did not converge");
}

// ---------------------------------------------------------------------------
// SVD-backed rank, nullspace and affine solves

RankNullspace numeric_rank_and_nullspace(const ComplexMatrix& m, const ToleranceConfig& tol, double reference) {
  RankNullspace out;
  const std::size_t cols = m.cols();
  if (m.rows() == 0 || cols == 0) {
    for (std::size_t c = 0; c < cols; ++c) {
      CVector e(cols);
      e[c] = 1.0;
      out.nullspace.push_back(std::move(e));
    }
    return out;
  }
  Eigen::JacobiSVD<EMatrix> svd(to_eigen(m), Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  out.singular_values.assign(sv.data(), sv.data() + sv.size());
  const double smax = reference >= 0.0 ? reference : (sv.size() ? sv(0) : 0.0);
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (smax > 0.0 && sv(i) > tol.rank_tol * smax) ++out.rank;
  const auto& v = svd.matrixV();
  for (std::size_t c = out.rank; c < cols; ++c) out.nullspace.push_back(to_cvector(v.col(static_cast<Eigen::Index>(c))));
  return out;
}

AffineSolution solve_affine(const ComplexMatrix& a, std::span<const cplx> b, const ToleranceConfig& tol) {
  if (a.rows() != b.size()) throw DomainError("solve_affine: right-hand side size mismatch");
  Eigen::JacobiSVD<EMatrix> svd(to_eigen(a), Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const auto& u = svd.matrixU();
  const auto& v = svd.matrixV();
  const double smax = sv.size() ? sv(0) : 0.0;
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (smax > 0.0 && sv(i) > tol.rank_tol * smax) ++rank;

  Eigen::VectorXcd eb(static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < b.size(); ++i) eb(static_cast<Eigen::Index>(i)) = b[i];
  Eigen::VectorXcd x = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(a.cols()));
  for (std::size_t i = 0; i < rank; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    x += v.col(k) * (u.col(k).dot(eb) / sv(k));  // Eigen's dot conjugates the left operand
  }

  AffineSolution out;
  out.particular = to_cvector(x);
  for (std::size_t c = rank; c < a.cols(); ++c) out.nullspace.push_back(to_cvector(v.col(static_cast<Eigen::Index>(c))));
  const CVector ax = a * out.particular;
  CVector r(b.begin(), b.end());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = ax[i] - r[i];
  out.residual = norm(r);
  const double scale = smax * norm(out.particular) + norm(b);
  if (out.residual > tol.residual_tol * scale) {
    throw InconsistentSystemError("no Jordan chain extension: right-hand side outside the column space", out.residual);
  }
  return out;
}

// ---------------------------------------------------------------------------
// LU

namespace {

struct Lu {
  ComplexMatrix lu;
  std::vector<std::size_t> perm;
  int sign = 1;
  bool singular = false;
};

Lu lu_factor(const ComplexMatrix& m) {
  if (!m.square()) throw DomainError("LU of a non-square matrix");
  const std::size_t n = m.rows();
  Lu f{m, std::vector<std::size_t>(n), 1, false};
  for (std::size_t i = 0; i < n; ++i) f.perm[i] = i;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    double best = std::abs(f.lu(k, k));
    for (std::size_t r = k + 1; r < n; ++r) {
      if (std::abs(f.lu(r, k)) > best) {
        best = std::abs(f.lu(r, k));
        piv = r;
      }
    }
    if (best == 0.0) {
      f.singular = true;
      continue;
    }
    if (piv != k) {
      for (std::size_t c = 0; c < n; ++c) std::swap(f.lu(k, c), f.lu(piv, c));
      std::swap(f.perm[k], f.perm[piv]);
      f.sign = -f.sign;
    }
    for (std::size_t r = k + 1; r < n; ++r) {
      const cplx l = f.lu(r, k) / f.lu(k, k);
      f.lu(r, k) = l;
      for (std::size_t c = k + 1; c < n; ++c) f.lu(r, c) -= l * f.lu(k, c);
    }
  }
  return f;
}

}  // namespace

cplx determinant(const ComplexMatrix& m) {
  const Lu f = lu_factor(m);
  if (f.singular) return {};
  cplx det = static_cast<double>(f.sign);
  for (std::size_t i = 0; i < m.rows(); ++i) det *= f.lu(i, i);
  return det;
}

ComplexMatrix lu_solve(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows()) throw DomainError("lu_solve: shape mismatch");
  const Lu f = lu_factor(a);
  if (f.singular) throw DomainError("lu_solve: singular matrix");
  const std::size_t n = a.rows();
  ComplexMatrix x(n, b.cols());
  for (std::size_t col = 0; col < b.cols(); ++col) {
    CVector y(n);
    for (std::size_t i = 0; i < n; ++i) {
      cplx s = b(f.perm[i], col);
      for (std::size_t k = 0; k < i; ++k) s -= f.lu(i, k) * y[k];
      y[i] = s;
    }
    for (std::size_t i = n; i-- > 0;) {
      cplx s = y[i];
      for (std::size_t k = i + 1; k < n; ++k) s -= f.lu(i, k) * x(k, col);
      x(i, col) = s / f.lu(i, i);
    }
  }
  return x;
}

// ---------------------------------------------------------------------------
// Dense eigensolve

EigenDecomposition eigen_decompose(const ComplexMatrix& m) {
  if (!m.square()) throw DomainError("eigen_decompose needs a square matrix");
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(to_eigen(m), true);
  if (es.info() != Eigen::Success) throw ConvergenceError("dense eigensolver did not converge");
  EigenDecomposition out;
  out.values = to_cvector(es.eigenvalues());
  for (Eigen::Index c = 0; c < es.eigenvectors().cols(); ++c) {
    Eigen::VectorXcd v = es.eigenvectors().col(c);
    v.normalize();
    out.vectors.push_back(to_cvector(v));
  }
  return out;
}

CVector eigenvalues(const ComplexMatrix& m) {
  if (!m.square()) throw DomainError("eigenvalues need a square matrix");
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(to_eigen(m), false);
  if (es.info() != Eigen::Success) throw ConvergenceError("dense eigensolver did not converge");
  return to_cvector(es.eigenvalues());
}

}  // namespace critmode
