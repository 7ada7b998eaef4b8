// Copyright the critmode authors.
// SPDX-License-Identifier: Apache-2.0

#include "critmode/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "critmode/errors.hpp"
#include "critmode/kernels.hpp"

namespace critmode {

namespace {

const cplx kI{0.0, 1.0};

void require_dim(const Spectrum& spectrum, std::span<const cplx> phi) {
  if (phi.size() != spectrum.system.dim()) throw DomainError("state dimension does not match the system");
}

// sum_l C_l f_{n-l} without building f_{j,n}(t) for every n separately.
void accumulate_block(const JordanBlock& b, std::span<const cplx> phi, const OscillatorSystem& sys, double t, PhaseVector& out) {
  const std::size_t m = b.size();
  CVector coeff(m);
  for (std::size_t l = 0; l < m; ++l) coeff[l] = evolution_coefficient(l, b.omega, t);
  for (std::size_t n = 0; n < m; ++n) {
    const cplx weight = bilinear(sys, b.chain[m - 1 - n], phi);
    for (std::size_t l = 0; l <= n; ++l) kernels::axpy(weight * coeff[l], b.chain[n - l], out);
  }
}

}  // namespace

cplx evolution_coefficient(std::size_t l, cplx omega, double t) {
  const cplx phase = std::exp(-kI * omega * t);
  if (l == 0) return phase;
  if (t == 0.0) return {};
  const double l_d = static_cast<double>(l);
  const double magnitude = std::exp(l_d * std::log(std::abs(t)) - std::lgamma(l_d + 1.0));
  // (-i)^l times the sign of t^l
  static const cplx minus_i_pow[4] = {{1, 0}, {0, -1}, {-1, 0}, {0, 1}};
  const double sign = (t < 0.0 && l % 2 == 1) ? -1.0 : 1.0;
  return sign * magnitude * minus_i_pow[l % 4] * phase;
}

PhaseVector evolve_basis_vector(const JordanBlock& block, std::size_t n, double t) {
  if (n >= block.size()) throw DomainError("chain index out of range");
  PhaseVector out(block.chain[n].size());
  for (std::size_t l = 0; l <= n; ++l) kernels::axpy(evolution_coefficient(l, block.omega, t), block.chain[n - l], out);
  return out;
}

PhaseVector evolve_state(const Spectrum& spectrum, std::span<const cplx> phi, double t) {
  require_dim(spectrum, phi);
  PhaseVector out(phi.size());
  for (const auto& b : spectrum.blocks) accumulate_block(b, phi, spectrum.system, t, out);
  return out;
}

PhaseVector evolve_blocks(const Spectrum& spectrum, std::span<const std::size_t> blocks, std::span<const cplx> phi, double t) {
  require_dim(spectrum, phi);
  PhaseVector out(phi.size());
  for (std::size_t j : blocks) {
    if (j >= spectrum.blocks.size()) throw DomainError("block index out of range");
    accumulate_block(spectrum.blocks[j], phi, spectrum.system, t, out);
  }
  return out;
}

GreensFunctionSample greens_time(const Spectrum& spectrum, double t) {
  const std::size_t dim = spectrum.system.dim();
  GreensFunctionSample s{GreensFunctionSample::Domain::Time, cplx{t, 0.0}, ComplexMatrix(dim, dim)};
  if (t < 0.0) return s;
  for (const auto& b : spectrum.blocks) {
    for (std::size_t n = 0; n < b.size(); ++n) {
      const PhaseVector fn = evolve_basis_vector(b, n, t);
      for (std::size_t r = 0; r < dim; ++r)
        for (std::size_t c = 0; c < dim; ++c) s.matrix(r, c) += fn[r] * std::conj(b.duals[n][c]);
    }
  }
  return s;
}

GreensFunctionSample greens_freq(const Spectrum& spectrum, cplx omega) {
  const std::size_t dim = spectrum.system.dim();
  GreensFunctionSample s{GreensFunctionSample::Domain::Frequency, omega, ComplexMatrix(dim, dim)};
  for (const auto& b : spectrum.blocks) {
    const cplx d = omega - b.omega;
    if (std::abs(d) <= spectrum.tolerances.cluster_tol * std::max(1.0, std::abs(b.omega)))
      throw DomainError("frequency sits on a pole of the Green's function");
    const std::size_t m = b.size();
    CVector pole(m);
    for (std::size_t l = 0; l < m; ++l) pole[l] = kI / std::pow(d, static_cast<int>(l + 1));
    for (std::size_t n = 0; n < m; ++n) {
      PhaseVector col(dim);
      for (std::size_t l = 0; l <= n; ++l) kernels::axpy(pole[l], b.chain[n - l], col);
      for (std::size_t r = 0; r < dim; ++r)
        for (std::size_t c = 0; c < dim; ++c) s.matrix(r, c) += col[r] * std::conj(b.duals[n][c]);
    }
  }
  return s;
}

double SumRuleReport::max() const noexcept { return *std::max_element(max_abs.begin(), max_abs.end()); }

SumRuleReport check_sum_rules(const Spectrum& spectrum) {
  const OscillatorSystem& sys = spectrum.system;
  const std::size_t n_osc = sys.n();
  const ComplexMatrix gamma = sys.damping().to_complex();
  SumRuleReport rep;
  for (auto& r : rep.residual) r = ComplexMatrix(n_osc, n_osc);

  auto add_outer = [&](ComplexMatrix& acc, cplx w, const CVector& a, const CVector& b) {
    for (std::size_t r = 0; r < n_osc; ++r)
      for (std::size_t c = 0; c < n_osc; ++c) acc(r, c) += w * a[r] * b[c];
  };

  for (const auto& blk : spectrum.blocks) {
    const std::size_t m = blk.size();
    std::vector<CVector> x(m), gx(m);
    for (std::size_t n = 0; n < m; ++n) {
      const auto pos = positions(blk.chain[n]);
      x[n].assign(pos.begin(), pos.end());
      gx[n] = gamma * x[n];
    }
    const CVector zero(n_osc);
    auto at = [&](std::ptrdiff_t k) -> const CVector& { return k < 0 ? zero : x[static_cast<std::size_t>(k)]; };
    const cplx w = blk.omega;
    for (std::size_t n = 0; n < m; ++n) {
      const std::size_t np = m - 1 - n;
      const auto sn = static_cast<std::ptrdiff_t>(n);
      add_outer(rep.residual[0], 1.0, x[n], x[np]);
      add_outer(rep.residual[1], w, x[n], x[np]);
      add_outer(rep.residual[1], 1.0, at(sn - 1), x[np]);
      add_outer(rep.residual[2], w * w, x[n], x[np]);
      add_outer(rep.residual[2], 2.0 * w, at(sn - 1), x[np]);
      add_outer(rep.residual[2], 1.0, at(sn - 2), x[np]);
      add_outer(rep.residual[2], kI * w, x[n], gx[np]);
      add_outer(rep.residual[2], kI, at(sn - 1), gx[np]);
      add_outer(rep.residual[3], 1.0, x[n], gx[np]);
    }
  }
  for (std::size_t r = 0; r < n_osc; ++r) rep.residual[1](r, r) -= 1.0;
  for (std::size_t k = 0; k < 4; ++k) rep.max_abs[k] = rep.residual[k].max_abs();
  return rep;
}

// ---------------------------------------------------------------------------
// RK4 oracle

namespace {

struct RealOde {
  const RealMatrix& k;
  const RealMatrix& g;
  std::size_t n;

  // y = (x, p); y' = (p, -K x - Gamma p)
  void rhs(const std::vector<double>& y, std::vector<double>& dy) const {
    for (std::size_t r = 0; r < n; ++r) {
      dy[r] = y[n + r];
      double acc = 0.0;
      for (std::size_t c = 0; c < n; ++c) acc -= k(r, c) * y[c] + g(r, c) * y[n + c];
      dy[n + r] = acc;
    }
  }

  void step(std::vector<double>& y, double h, std::vector<std::vector<double>>& work) const {
    auto& k1 = work[0];
    auto& k2 = work[1];
    auto& k3 = work[2];
    auto& k4 = work[3];
    auto& tmp = work[4];
    const std::size_t d = y.size();
    rhs(y, k1);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
    rhs(tmp, k2);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
    rhs(tmp, k3);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = y[i] + h * k3[i];
    rhs(tmp, k4);
    for (std::size_t i = 0; i < d; ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
};

}  // namespace

std::vector<PhaseVector> integrate_rk4(const OscillatorSystem& sys, std::span<const cplx> phi, std::span<const double> times, double step) {
  if (phi.size() != sys.dim()) throw DomainError("state dimension does not match the system");
  if (!(step > 0.0)) throw DomainError("RK4 step must be positive");
  const std::size_t d = sys.dim();
  const RealOde ode{sys.stiffness(), sys.damping(), sys.n()};
  std::vector<double> re(d), im(d);
  for (std::size_t i = 0; i < d; ++i) {
    re[i] = phi[i].real();
    im[i] = phi[i].imag();
  }
  std::vector<std::vector<double>> work(5, std::vector<double>(d));
  std::vector<PhaseVector> out;
  double now = 0.0;
  for (double target : times) {
    if (target < now) throw DomainError("RK4 times must be ascending and non-negative");
    const auto steps = static_cast<std::size_t>(std::ceil((target - now) / step - 1e-9));
    if (steps > 0) {
      const double h = (target - now) / static_cast<double>(steps);
      for (std::size_t s = 0; s < steps; ++s) {
        ode.step(re, h, work);
        ode.step(im, h, work);
      }
    }
    now = target;
    PhaseVector state(d);
    for (std::size_t i = 0; i < d; ++i) state[i] = {re[i], im[i]};
    out.push_back(std::move(state));
  }
  return out;
}

PhaseVector integrate_rk4(const OscillatorSystem& sys, std::span<const cplx> phi, double t, double step) {
  const double times[1] = {t};
  return integrate_rk4(sys, phi, std::span<const double>(times), step).front();
}

double energy(const OscillatorSystem& sys, std::span<const cplx> phi) {
  if (phi.size() != sys.dim()) throw DomainError("state dimension does not match the system");
  const std::size_t n = sys.n();
  double e = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    e += std::norm(phi[n + r]);
    for (std::size_t c = 0; c < n; ++c) e += sys.stiffness()(r, c) * (std::conj(phi[r]) * phi[c]).real();
  }
  return 0.5 * e;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("slope fit needs two or more matching points");
  const auto n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw DomainError("slope fit needs positive data");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw DomainError("slope fit needs distinct abscissae");
  return (n * sxy - sx * sy) / den;
}

}  // namespace critmode
