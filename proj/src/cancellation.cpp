// Copyright the critmode authors.
// SPDX-License-Identifier: Apache-2.0

// Cluster-sum versus Jordan-evolution comparison near a critical point.
//
// The per-mode weights grow like |lambda|^{1-M} while their sum stays O(1),
// so a double-precision modal sum loses about (2M-2) log10(1/|lambda|)
// digits. Eigenpairs of the cluster are therefore refined in quad precision
// on Q(w) = K - i w Gamma - w^2 before summing.

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/multiprecision/cpp_complex.hpp>

#include "critmode/dynamics.hpp"
#include "critmode/errors.hpp"

namespace critmode {

namespace {

using qcplx = boost::multiprecision::cpp_complex_quad;
using qreal = boost::multiprecision::cpp_bin_float_quad;
using QVector = std::vector<qcplx>;
using QMatrix = std::vector<QVector>;

qcplx to_q(cplx z) { return qcplx(z.real(), z.imag()); }
cplx to_d(const qcplx& z) { return {static_cast<double>(z.real()), static_cast<double>(z.imag())}; }
qreal qabs(const qcplx& z) { return boost::multiprecision::abs(z); }

QMatrix q_of(const RealMatrix& k, const RealMatrix& dk, double eps, const RealMatrix& g, const qcplx& w) {
  const std::size_t n = k.rows();
  const qcplx i_w = qcplx(0, 1) * w;
  QMatrix q(n, QVector(n));
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      q[r][c] = qcplx(k(r, c)) + qcplx(eps) * qcplx(dk(r, c)) - i_w * qcplx(g(r, c));
      if (r == c) q[r][c] -= w * w;
    }
  return q;
}

// Gaussian elimination with complete pivoting. Returns trace(A^{-1} B) when
// `b` is given, otherwise a null vector of the (numerically singular) A.
struct FullPivot {
  QMatrix a;
  std::vector<std::size_t> row, col;

  explicit FullPivot(QMatrix m) : a(std::move(m)), row(a.size()), col(a.size()) {
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) row[i] = col[i] = i;
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t pr = k, pc = k;
      qreal best = -1;
      for (std::size_t r = k; r < n; ++r)
        for (std::size_t c = k; c < n; ++c)
          if (qabs(a[r][c]) > best) {
            best = qabs(a[r][c]);
            pr = r;
            pc = c;
          }
      std::swap(a[k], a[pr]);
      std::swap(row[k], row[pr]);
      if (pc != k) {
        for (auto& rr : a) std::swap(rr[k], rr[pc]);
        std::swap(col[k], col[pc]);
      }
      if (a[k][k] == qcplx(0)) continue;
      for (std::size_t r = k + 1; r < n; ++r) {
        const qcplx f = a[r][k] / a[k][k];
        a[r][k] = f;
        for (std::size_t c = k + 1; c < n; ++c) a[r][c] -= f * a[k][c];
      }
    }
  }

  // Upper factor has its smallest pivot last; set that unknown to one.
  QVector null_vector() const {
    const std::size_t n = a.size();
    QVector y(n);
    y[n - 1] = qcplx(1);
    for (std::size_t k = n - 1; k-- > 0;) {
      qcplx acc = 0;
      for (std::size_t c = k + 1; c < n; ++c) acc -= a[k][c] * y[c];
      y[k] = acc / a[k][k];
    }
    QVector x(n);
    for (std::size_t k = 0; k < n; ++k) x[col[k]] = y[k];
    return x;
  }

  QVector solve(const QVector& b) const {
    const std::size_t n = a.size();
    QVector y(n);
    for (std::size_t k = 0; k < n; ++k) {
      y[k] = b[row[k]];
      for (std::size_t c = 0; c < k; ++c) y[k] -= a[k][c] * y[c];
    }
    for (std::size_t k = n; k-- > 0;) {
      for (std::size_t c = k + 1; c < n; ++c) y[k] -= a[k][c] * y[c];
      y[k] /= a[k][k];
    }
    QVector x(n);
    for (std::size_t k = 0; k < n; ++k) x[col[k]] = y[k];
    return x;
  }
};

// Newton on det Q(w): step = 1 / tr(Q^{-1} dQ/dw).
qcplx polish_root(const OscillatorSystem& crit, const RealMatrix& dk, double eps, qcplx w) {
  const std::size_t n = crit.n();
  const RealMatrix& g = crit.damping();
  // Near a cluster the quad-precision determinant has a noise floor of
  // roughly u_quad / |lambda|^{M-1}; stop once the steps stall there.
  const qreal stop = qreal(1e-30);
  const qreal floor = qreal(1e-20);
  qreal previous = -1;
  for (int it = 0; it < 60; ++it) {
    const FullPivot lu(q_of(crit.stiffness(), dk, eps, g, w));
    qcplx trace = 0;
    for (std::size_t c = 0; c < n; ++c) {
      QVector dq(n);
      for (std::size_t r = 0; r < n; ++r) dq[r] = -qcplx(0, 1) * qcplx(g(r, c));
      dq[c] -= qcplx(2) * w;
      trace += lu.solve(dq)[c];
    }
    // An exactly singular Q leaves a non-finite trace: w is a root already.
    if (!boost::multiprecision::isfinite(trace.real()) || !boost::multiprecision::isfinite(trace.imag())) return w;
    const qcplx step = qcplx(1) / trace;
    w -= step;
    const qreal size = qabs(step) / std::max(qreal(1), qreal(qabs(w)));
    if (size <= stop) return w;
    if (previous >= 0 && size < floor && size > previous / 4) return w;
    previous = size;
  }
  throw ConvergenceError("quad-precision eigenvalue refinement did not converge");
}

qcplx q_bilinear(const RealMatrix& g, const QVector& a, const QVector& b) {
  const std::size_t n = g.rows();
  qcplx acc = 0;
  for (std::size_t r = 0; r < n; ++r) {
    qcplx gb = 0;
    for (std::size_t c = 0; c < n; ++c) gb += qcplx(g(r, c)) * b[c];
    acc += a[r] * gb + a[r] * b[n + r] + a[n + r] * b[r];
  }
  return qcplx(0, 1) * acc;
}

qreal q_norm(const QVector& v) {
  qreal s = 0;
  for (const auto& z : v) s += boost::multiprecision::norm(z);
  return boost::multiprecision::sqrt(s);
}

}  // namespace

CancellationReport cluster_cancellation_experiment(const Spectrum& critical, const RealMatrix& dk, std::span<const double> epsilons,
                                                   std::span<const cplx> phi, std::span<const double> times) {
  const OscillatorSystem& sys = critical.system;
  if (phi.size() != sys.dim()) throw DomainError("state dimension does not match the system");
  if (dk.rows() != sys.n() || dk.cols() != sys.n()) throw DomainError("perturbation size does not match the system");
  if (epsilons.empty() || times.empty()) throw DomainError("cancellation experiment needs epsilon and time grids");

  CancellationReport rep;
  std::size_t found = 0;
  for (std::size_t j = 0; j < critical.blocks.size(); ++j)
    if (critical.blocks[j].size() > 1) {
      rep.block = j;
      ++found;
    }
  if (found != 1) throw DomainError("cancellation experiment needs exactly one nontrivial block");

  const JordanBlock& blk = critical.blocks[rep.block];
  const std::size_t m = blk.size();
  rep.block_size = m;
  rep.times.assign(times.begin(), times.end());
  const auto x0 = positions(blk.chain.front());
  for (std::size_t r = 0; r < sys.n(); ++r)
    for (std::size_t c = 0; c < sys.n(); ++c) rep.xi += x0[r] * dk(r, c) * x0[c];

  if (std::abs(rep.xi) <= 1e-8 * std::max(dk.max_abs(), 1e-300) * std::pow(norm(blk.chain.front()), 2))
    throw DomainError("perturbation is non-generic (xi = 0); the |lambda| scaling does not apply");

  // Jordan-basis evolution of the block at the critical point.
  const std::size_t only[1] = {rep.block};
  std::vector<PhaseVector> jordan;
  for (double t : times) jordan.push_back(evolve_blocks(critical, only, phi, t));

  QVector qphi(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) qphi[i] = to_q(phi[i]);
  const double f0_weight = norm(blk.chain.front()) * std::abs(bilinear(sys, blk.chain.front(), phi));

  std::vector<double> lam_abs, max_weight, diffs;
  for (double eps : epsilons) {
    CancellationSample s;
    s.epsilon = eps;
    s.lambda = std::pow(eps * rep.xi, 1.0 / static_cast<double>(m));

    const OscillatorSystem pert = perturb_stiffness(sys, dk, eps);
    CVector ev = eigenvalues(evolution_operator(pert));
    std::sort(ev.begin(), ev.end(), [&](cplx a, cplx b) {
      const double da = std::abs(a - blk.omega), db = std::abs(b - blk.omega);
      if (da != db) return da < db;
      if (a.real() != b.real()) return a.real() < b.real();
      return a.imag() < b.imag();
    });
    ev.resize(m);

    QVector roots;
    for (const cplx& w : ev) roots.push_back(polish_root(sys, dk, eps, to_q(w)));
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = a + 1; b < m; ++b)
        if (qabs(roots[a] - roots[b]) <= qreal(1e-20) * (1 + qabs(roots[a])))
          throw DomainError("perturbed cluster is still degenerate");

    std::vector<QVector> modes;
    std::vector<qcplx> amp;
    for (const qcplx& w : roots) {
      const QVector x = FullPivot(q_of(sys.stiffness(), dk, eps, sys.damping(), w)).null_vector();
      QVector f(sys.dim());
      for (std::size_t r = 0; r < sys.n(); ++r) {
        f[r] = x[r];
        f[sys.n() + r] = -qcplx(0, 1) * w * x[r];
      }
      const qcplx ff = q_bilinear(pert.damping(), f, f);
      const qcplx fphi = q_bilinear(pert.damping(), f, qphi);
      const double weight = static_cast<double>(q_norm(f) * qabs(fphi) / qabs(ff));
      s.mode_weights.push_back(weight);
      s.cluster.push_back(to_d(w));
      amp.push_back(fphi / ff);
      modes.push_back(std::move(f));
    }
    s.max_mode_weight = *std::max_element(s.mode_weights.begin(), s.mode_weights.end());
    s.predicted_weight = f0_weight / (static_cast<double>(m) * std::pow(std::abs(s.lambda), static_cast<double>(m - 1)));

    for (std::size_t ti = 0; ti < times.size(); ++ti) {
      QVector sum(sys.dim());
      for (std::size_t k = 0; k < m; ++k) {
        const qcplx c = amp[k] * boost::multiprecision::exp(-qcplx(0, 1) * roots[k] * qcplx(times[ti]));
        for (std::size_t i = 0; i < sys.dim(); ++i) sum[i] += c * modes[k][i];
      }
      PhaseVector d(sys.dim());
      for (std::size_t i = 0; i < sys.dim(); ++i) d[i] = to_d(sum[i]) - jordan[ti][i];
      s.difference = std::max(s.difference, norm(d));
    }

    lam_abs.push_back(std::abs(s.lambda));
    max_weight.push_back(s.max_mode_weight);
    diffs.push_back(s.difference);
    rep.bound_constant = std::max(rep.bound_constant, s.difference / std::abs(s.lambda));
    rep.samples.push_back(std::move(s));
  }
  if (rep.samples.size() >= 2) {
    rep.weight_slope = loglog_slope(lam_abs, max_weight);
    rep.difference_slope = loglog_slope(lam_abs, diffs);
  }
  return rep;
}

}  // namespace critmode
