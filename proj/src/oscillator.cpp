// Copyright the critmode authors.
// SPDX-License-Identifier: Apache-2.0

#include "critmode/oscillator.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "critmode/errors.hpp"
#include "critmode/kernels.hpp"

namespace critmode {

RealMatrix::RealMatrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DomainError("ragged matrix initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

RealMatrix RealMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  RealMatrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols_) throw DomainError("ragged matrix rows");
    for (std::size_t c = 0; c < m.cols_; ++c) m(r, c) = rows[r][c];
  }
  return m;
}

RealMatrix RealMatrix::identity(std::size_t n) {
  RealMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

RealMatrix RealMatrix::diagonal(std::initializer_list<double> d) {
  RealMatrix m(d.size(), d.size());
  std::size_t i = 0;
  for (double v : d) {
    m(i, i) = v;
    ++i;
  }
  return m;
}

RealMatrix RealMatrix::symmetric2(double a, double b, double c) { return RealMatrix{{a, b}, {b, c}}; }

RealMatrix RealMatrix::transpose() const {
  RealMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

double RealMatrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

ComplexMatrix RealMatrix::to_complex() const {
  ComplexMatrix m(rows_, cols_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) m(r, c) = (*this)(r, c);
  return m;
}

std::vector<std::vector<double>> RealMatrix::to_rows() const {
  std::vector<std::vector<double>> out(rows_, std::vector<double>(cols_));
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) out[r][c] = (*this)(r, c);
  return out;
}

RealMatrix operator+(const RealMatrix& a, const RealMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DomainError("matrix shape mismatch");
  RealMatrix out = a;
  for (std::size_t i = 0; i < out.data_.size(); ++i) out.data_[i] += b.data_[i];
  return out;
}

RealMatrix operator*(double s, const RealMatrix& a) {
  RealMatrix out = a;
  for (double& v : out.data_) v *= s;
  return out;
}

namespace {

double symmetrize(RealMatrix& m) {
  double defect = 0.0;
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = r + 1; c < m.cols(); ++c) {
      defect = std::max(defect, std::abs(m(r, c) - m(c, r)));
      const double avg = 0.5 * (m(r, c) + m(c, r));
      m(r, c) = m(c, r) = avg;
    }
  return defect;
}

double min_eigenvalue(const RealMatrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) e(r, c) = m(r, c);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(e, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

OscillatorSystem build_system(RealMatrix stiffness, RealMatrix damping, std::string label) {
  if (stiffness.rows() != stiffness.cols() || damping.rows() != damping.cols())
    throw DomainError("stiffness and damping must be square");
  if (stiffness.rows() != damping.rows()) throw DomainError("stiffness and damping sizes differ");
  if (stiffness.rows() == 0) throw DomainError("empty system");
  for (const RealMatrix* m : {&stiffness, &damping})
    for (std::size_t r = 0; r < m->rows(); ++r)
      for (std::size_t c = 0; c < m->cols(); ++c)
        if (!std::isfinite((*m)(r, c))) throw DomainError("non-finite matrix entry");

  OscillatorSystem sys;
  const double dk = symmetrize(stiffness);
  const double dg = symmetrize(damping);
  if (dk > 1e-12) throw DomainError("stiffness matrix is not symmetric");
  if (dg > 1e-12) throw DomainError("damping matrix is not symmetric");
  sys.symmetry_defect_ = std::max(dk, dg);

  const double gscale = std::max(1.0, damping.max_abs());
  if (min_eigenvalue(damping) < -1e-12 * gscale) sys.warnings_.push_back("damping matrix is not positive semidefinite");
  const double kscale = std::max(1.0, stiffness.max_abs());
  if (min_eigenvalue(stiffness) <= 1e-12 * kscale) sys.warnings_.push_back("stiffness matrix is not positive definite");

  sys.stiffness_ = std::move(stiffness);
  sys.damping_ = std::move(damping);
  sys.label_ = std::move(label);
  return sys;
}

OscillatorSystem perturb_stiffness(const OscillatorSystem& sys, const RealMatrix& dk, double eps) {
  return build_system(sys.stiffness() + eps * dk, sys.damping(), sys.label());
}

ComplexMatrix evolution_operator(const OscillatorSystem& sys) {
  const std::size_t n = sys.n();
  const cplx i{0.0, 1.0};
  ComplexMatrix h(2 * n, 2 * n);
  for (std::size_t r = 0; r < n; ++r) {
    h(r, n + r) = i;
    for (std::size_t c = 0; c < n; ++c) {
      h(n + r, c) = -i * sys.stiffness()(r, c);
      h(n + r, n + c) = -i * sys.damping()(r, c);
    }
  }
  return h;
}

ComplexMatrix metric(const OscillatorSystem& sys) {
  const std::size_t n = sys.n();
  const cplx i{0.0, 1.0};
  ComplexMatrix g(2 * n, 2 * n);
  for (std::size_t r = 0; r < n; ++r) {
    g(r, n + r) = i;
    g(n + r, r) = i;
    for (std::size_t c = 0; c < n; ++c) g(r, c) = i * sys.damping()(r, c);
  }
  return g;
}

namespace {

void check_dim(const OscillatorSystem& sys, std::size_t size) {
  if (size != sys.dim()) {
    std::ostringstream os;
    os << "phase vector has length " << size << ", system needs " << sys.dim();
    throw DomainError(os.str());
  }
}

// Gamma * v for the position block.
CVector apply_damping(const OscillatorSystem& sys, std::span<const cplx> v) {
  const std::size_t n = sys.n();
  CVector out(n);
  for (std::size_t r = 0; r < n; ++r) {
    cplx acc{};
    for (std::size_t c = 0; c < n; ++c) acc += sys.damping()(r, c) * v[c];
    out[r] = acc;
  }
  return out;
}

}  // namespace

cplx bilinear(const OscillatorSystem& sys, std::span<const cplx> psi, std::span<const cplx> phi) {
  check_dim(sys, psi.size());
  check_dim(sys, phi.size());
  const std::size_t n = sys.n();
  const auto psi_x = psi.first(n), psi_p = psi.subspan(n);
  const auto phi_x = phi.first(n), phi_p = phi.subspan(n);
  const CVector gphi = apply_damping(sys, phi_x);
  const cplx sum = kernels::dotu(psi_x, gphi) + kernels::dotu(psi_x, phi_p) + kernels::dotu(psi_p, phi_x);
  return cplx{0.0, 1.0} * sum;
}

PhaseVector metric_conjugate(const OscillatorSystem& sys, std::span<const cplx> phi) {
  check_dim(sys, phi.size());
  const std::size_t n = sys.n();
  const CVector gphi = apply_damping(sys, phi.first(n));
  PhaseVector out(2 * n);
  const cplx i{0.0, 1.0};
  for (std::size_t r = 0; r < n; ++r) {
    out[r] = std::conj(i * (gphi[r] + phi[n + r]));
    out[n + r] = std::conj(i * phi[r]);
  }
  return out;
}

}  // namespace critmode
