// Copyright the critmode authors.
// SPDX-License-Identifier: Apache-2.0

#include "critmode/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "critmode/dynamics.hpp"
#include "critmode/errors.hpp"

namespace critmode {

namespace {

const cplx kI{0.0, 1.0};

cplx zeta(std::size_t k, std::size_t m) {
  const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(m);
  return std::polar(1.0, angle);
}

cplx coordinate_form(std::span<const cplx> a, const RealMatrix& dk, std::span<const cplx> b) {
  cplx acc{};
  for (std::size_t r = 0; r < dk.rows(); ++r)
    for (std::size_t c = 0; c < dk.cols(); ++c) acc += a[r] * dk(r, c) * b[c];
  return acc;
}

void check_direction(const JordanBlock& block, const RealMatrix& dk) {
  if (block.chain.empty()) throw DomainError("empty block");
  if (dk.rows() != dk.cols() || 2 * dk.rows() != block.chain.front().size())
    throw DomainError("perturbation size does not match the system");
}

}  // namespace

Perturbation Perturbation::make(RealMatrix delta_k, double epsilon) {
  if (delta_k.rows() != delta_k.cols()) throw DomainError("perturbation must be square");
  for (std::size_t r = 0; r < delta_k.rows(); ++r)
    for (std::size_t c = 0; c < r; ++c)
      if (std::abs(delta_k(r, c) - delta_k(c, r)) > 1e-12 * std::max(1.0, delta_k.max_abs()))
        throw DomainError("perturbation must be symmetric");
  return {std::move(delta_k), epsilon};
}

RealMatrix unit_direction(std::size_t n, std::size_t r, std::size_t c) {
  if (r >= n || c >= n) throw DomainError("direction index out of range");
  RealMatrix m(n, n);
  m(r, c) = 1.0;
  m(c, r) = 1.0;
  return m;
}

RealMatrix mu_direction(double m11, double m12, double m22) { return RealMatrix::symmetric2(m11, m12, m22); }

ComplexMatrix delta_h(const RealMatrix& dk) {
  const std::size_t n = dk.rows();
  ComplexMatrix h(2 * n, 2 * n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) h(n + r, c) = -kI * dk(r, c);
  return h;
}

cplx xi_generic(const JordanBlock& block, const RealMatrix& dk) {
  check_direction(block, dk);
  const auto x0 = positions(block.chain.front());
  return coordinate_form(x0, dk, x0);
}

cplx xi_bilinear(const OscillatorSystem& sys, const JordanBlock& block, const RealMatrix& dk) {
  check_direction(block, dk);
  return bilinear(sys, block.chain.front(), delta_h(dk) * block.chain.front());
}

cplx xi_prime(const JordanBlock& block, const RealMatrix& dk) {
  check_direction(block, dk);
  if (block.size() < 2) return {};
  return coordinate_form(positions(block.chain[1]), dk, positions(block.chain.front()));
}

double genericity_threshold(const JordanBlock& block, const RealMatrix& dk) {
  check_direction(block, dk);
  const double f0 = norm(block.chain.front());
  return 1e-8 * dk.max_abs() * f0 * f0;
}

bool is_generic(const JordanBlock& block, const RealMatrix& dk) {
  return std::abs(xi_generic(block, dk)) > genericity_threshold(block, dk);
}

SplitPrediction predict_splitting(const JordanBlock& block, const RealMatrix& dk, double eps) {
  if (!is_generic(block, dk)) throw DomainError("xi vanishes for this perturbation; use the non-generic prediction");
  const std::size_t m = block.size();
  SplitPrediction p;
  p.xi = xi_generic(block, dk);
  p.lambda = std::pow(eps * p.xi, 1.0 / static_cast<double>(m));
  for (std::size_t k = 0; k < m; ++k) {
    const cplx s = p.lambda * zeta(k, m);
    p.shifts.push_back(s);
    p.eigenvalues.push_back(block.omega + s);
    PhaseVector f(block.chain.front().size());
    cplx power{1.0};
    for (std::size_t n = 0; n < m; ++n) {
      for (std::size_t i = 0; i < f.size(); ++i) f[i] += power * block.chain[n][i];
      power *= s;
    }
    p.split_vectors.push_back(std::move(f));
    p.norms.push_back(static_cast<double>(m) * std::pow(s, static_cast<int>(m - 1)));
  }
  return p;
}

NonGenericPrediction xi_nongeneric(const JordanBlock& block, const RealMatrix& dk, double eps) {
  const std::size_t m = block.size();
  if (m < 2) throw DomainError("non-generic splitting needs a block of size two or more");
  if (is_generic(block, dk)) throw DomainError("perturbation is generic; use predict_splitting");
  NonGenericPrediction p;
  p.xi = xi_generic(block, dk);
  p.xi_prime = xi_prime(block, dk);
  if (std::abs(p.xi_prime) <= genericity_threshold(block, dk))
    throw DomainError("higher-order nongenericity: xi and xi' both vanish; use exact diagonalization");
  p.j2_same_order = (m == 2);
  const cplx root = std::pow(2.0 * eps * p.xi_prime, 1.0 / static_cast<double>(m - 1));
  p.eigenvalues.push_back(block.omega);
  for (std::size_t k = 0; k + 1 < m; ++k) {
    p.reduced_shifts.push_back(root * zeta(k, m - 1));
    p.eigenvalues.push_back(block.omega + p.reduced_shifts.back());
  }
  return p;
}

J1Result j1_coefficient(const Spectrum& spectrum, std::size_t index, const RealMatrix& dk) {
  if (index >= spectrum.blocks.size()) throw DomainError("block index out of range");
  const JordanBlock& block = spectrum.blocks[index];
  if (block.size() < 2) throw DomainError("system is not critical at this eigenvalue");
  check_direction(block, dk);
  const OscillatorSystem& sys = spectrum.system;
  const std::size_t n = sys.n();
  const std::size_t m = block.size();
  const cplx w = block.omega;
  const double parity = (m % 2 == 0) ? 1.0 : -1.0;

  J1Result r;
  r.xi = xi_generic(block, dk);

  auto det_at = [&](double eps) { return determinant(shifted(evolution_operator(perturb_stiffness(sys, dk, eps)), w)); };
  auto central = [&](double h) { return (det_at(h) - det_at(-h)) / (2.0 * h); };
  const double h = 1e-6 / std::max(1.0, dk.max_abs());
  r.finite_difference = parity * (4.0 * central(h / 2.0) - central(h)) / 3.0;

  if (n == 2) {
    // d/deps det(Q + eps mu) for 2x2 Q = K - i w Gamma - w^2, then
    // det(H - w) = (-1)^N det Q.
    const RealMatrix& k = sys.stiffness();
    const RealMatrix& g = sys.damping();
    auto q = [&](std::size_t a, std::size_t b) { return k(a, b) - kI * w * g(a, b) - (a == b ? w * w : cplx{}); };
    const cplx dq = q(1, 1) * dk(0, 0) + q(0, 0) * dk(1, 1) - 2.0 * q(0, 1) * dk(0, 1);
    r.closed_form = parity * dq;  // (-1)^N = 1
    r.has_closed_form = true;
    r.difference = std::abs(r.closed_form - r.finite_difference) / std::max(1.0, std::abs(r.finite_difference));
  }

  r.other_roots = 1.0;
  for (std::size_t j = 0; j < spectrum.blocks.size(); ++j) {
    if (j == index) continue;
    const auto& o = spectrum.blocks[j];
    r.other_roots *= std::pow(o.omega - w, static_cast<int>(o.size()));
  }
  r.expected = -r.xi * r.other_roots;
  const cplx best = r.has_closed_form ? r.closed_form : r.finite_difference;
  r.relation_defect = std::abs(best - r.expected) / std::max(1.0, std::abs(r.expected));
  return r;
}

CVector exact_perturbed_spectrum(const OscillatorSystem& sys, const RealMatrix& dk, double eps) {
  CVector ev = eigenvalues(evolution_operator(perturb_stiffness(sys, dk, eps)));
  std::sort(ev.begin(), ev.end(), [](cplx a, cplx b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return ev;
}

std::vector<std::size_t> hungarian_assignment(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  for (const auto& row : cost)
    if (row.size() != n) throw DomainError("assignment needs a square cost matrix");
  if (n == 0) return {};
  const double inf = std::numeric_limits<double>::infinity();
  // Potentials formulation, 1-based with a virtual column 0.
  std::vector<double> u(n + 1), v(n + 1);
  std::vector<std::size_t> p(n + 1), way(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> assignment(n);
  for (std::size_t j = 1; j <= n; ++j) assignment[p[j] - 1] = j - 1;
  return assignment;
}

CVector cluster_near(std::span<const cplx> values, cplx omega, std::size_t m) {
  if (m == 0 || m > values.size()) throw DomainError("cluster size out of range");
  CVector sorted(values.begin(), values.end());
  std::stable_sort(sorted.begin(), sorted.end(), [&](cplx a, cplx b) { return std::abs(a - omega) < std::abs(b - omega); });
  if (m < sorted.size()) {
    const double reach = std::abs(sorted[m - 1] - omega);
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t a = m; a < sorted.size(); ++a)
      for (std::size_t b = 0; b < m; ++b) gap = std::min(gap, std::abs(sorted[a] - sorted[b]));
    gap = std::min(gap, std::abs(sorted[m] - omega));
    if (reach > 0.5 * gap) throw DomainError("eigenvalue-to-cluster matching is ambiguous: shifts exceed half the gap");
  }
  sorted.resize(m);
  return sorted;
}

CVector match_to(std::span<const cplx> predicted, std::span<const cplx> numerical) {
  if (predicted.size() != numerical.size()) throw DomainError("matching needs equal-sized sets");
  std::vector<std::vector<double>> cost(predicted.size(), std::vector<double>(numerical.size()));
  for (std::size_t r = 0; r < predicted.size(); ++r)
    for (std::size_t c = 0; c < numerical.size(); ++c) cost[r][c] = std::abs(predicted[r] - numerical[c]);
  const auto assign = hungarian_assignment(cost);
  CVector out(predicted.size());
  for (std::size_t r = 0; r < predicted.size(); ++r) out[r] = numerical[assign[r]];
  return out;
}

SplittingFit fit_splitting_exponent(const OscillatorSystem& sys, cplx omega, std::size_t m, const RealMatrix& dk,
                                    std::span<const double> eps_grid, std::size_t singletons, double min_decades) {
  if (eps_grid.size() < 2) throw DomainError("splitting fit needs at least two epsilon values");
  if (singletons >= m) throw DomainError("at least one mode must remain in the cluster fit");
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  const bool positive = eps_grid.front() > 0.0;
  for (double e : eps_grid) {
    if (e == 0.0 || (e > 0.0) != positive) throw DomainError("epsilon grid must be nonzero and of one sign");
    lo = std::min(lo, std::abs(e));
    hi = std::max(hi, std::abs(e));
  }
  if (std::log10(hi / lo) < min_decades - 1e-9) throw DomainError("epsilon grid spans too few decades");

  std::vector<double> abs_eps, mean_shift;
  std::vector<std::vector<double>> single(singletons);
  for (double e : eps_grid) {
    const CVector cl = cluster_near(exact_perturbed_spectrum(sys, dk, e), omega, m);
    std::vector<double> mags;
    for (const cplx& w : cl) mags.push_back(std::abs(w - omega));
    std::sort(mags.begin(), mags.end());
    for (std::size_t s = 0; s < singletons; ++s) single[s].push_back(mags[s]);
    double mean = 0.0;
    for (std::size_t k = singletons; k < m; ++k) mean += mags[k];
    abs_eps.push_back(std::abs(e));
    mean_shift.push_back(mean / static_cast<double>(m - singletons));
  }

  auto fit = [&](const std::vector<double>& y, double& slope, double& residual) {
    slope = loglog_slope(abs_eps, y);
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      mx += std::log(abs_eps[i]);
      my += std::log(y[i]);
    }
    mx /= static_cast<double>(y.size());
    my /= static_cast<double>(y.size());
    double ss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double pred = my + slope * (std::log(abs_eps[i]) - mx);
      ss += (std::log(y[i]) - pred) * (std::log(y[i]) - pred);
    }
    residual = std::sqrt(ss / static_cast<double>(y.size()));
  };

  SplittingFit out;
  fit(mean_shift, out.exponent, out.residual);
  for (const auto& y : single) {
    double s = 0.0, r = 0.0;
    fit(y, s, r);
    out.singleton_exponents.push_back(s);
    out.singleton_residuals.push_back(r);
  }
  return out;
}

ComplexMatrix deltaH_prime_matrix(const OscillatorSystem& sys, const JordanBlock& block, const RealMatrix& dk, cplx lambda) {
  if (lambda == cplx{}) throw DomainError("split basis needs lambda != 0");
  check_direction(block, dk);
  const std::size_t m = block.size();
  const ComplexMatrix dh = delta_h(dk);
  std::vector<PhaseVector> dhf;
  for (const auto& f : block.chain) dhf.push_back(dh * f);

  ComplexMatrix e(m, m);
  for (std::size_t n = 0; n < m; ++n)
    for (std::size_t np = 0; np < m; ++np) e(n, np) = bilinear(sys, block.chain[m - 1 - n], dhf[np]);
  e(m - 1, 0) = 0.0;  // moved into the unperturbed part

  ComplexMatrix out(m, m);
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t kp = 0; kp < m; ++kp) {
      cplx acc{};
      for (std::size_t n = 0; n < m; ++n)
        for (std::size_t np = 0; np < m; ++np) {
          const int power = static_cast<int>(np) - static_cast<int>(n);
          acc += std::pow(zeta(kp, m), static_cast<int>(np)) * std::pow(zeta(k, m), -static_cast<int>(n)) *
                 std::pow(lambda, power) * e(n, np);
        }
      out(k, kp) = inv_m * acc;
    }
  return out;
}

SecondOrderPrediction predict_second_order(const OscillatorSystem& sys, const JordanBlock& block, const RealMatrix& dk, double eps) {
  SecondOrderPrediction p;
  p.first = predict_splitting(block, dk, eps);
  const ComplexMatrix dhp = deltaH_prime_matrix(sys, block, dk, p.first.lambda);
  for (std::size_t k = 0; k < block.size(); ++k) {
    p.corrections.push_back(eps * dhp(k, k));
    p.eigenvalues.push_back(p.first.eigenvalues[k] + p.corrections.back());
  }
  return p;
}

}  // namespace critmode
