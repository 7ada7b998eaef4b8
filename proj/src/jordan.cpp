// Copyright the critmode authors.
// SPDX-License-Identifier: Apache-2.0

#include "critmode/jordan.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "critmode/errors.hpp"
#include "critmode/kernels.hpp"

namespace critmode {

namespace {

const cplx kI{0.0, 1.0};

cplx ipow(std::size_t m) {
  static const cplx table[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  return table[m % 4];
}

// Overall sign making the first largest-magnitude entry of f_0 point into
// the right half plane (the positive imaginary axis counts as inside).
int sign_rule(const PhaseVector& f0) {
  const double top = max_abs(f0);
  for (const cplx& z : f0) {
    if (std::abs(z) < (1.0 - 1e-8) * top) continue;
    const double edge = 1e-10 * std::abs(z);
    if (z.real() > edge) return 1;
    if (z.real() < -edge) return -1;
    return z.imag() > 0.0 ? 1 : -1;
  }
  return 1;
}

std::vector<PhaseVector> lower_from_top(const ComplexMatrix& shifted_h, PhaseVector top, std::size_t m) {
  std::vector<PhaseVector> chain(m);
  chain[m - 1] = std::move(top);
  for (std::size_t n = m - 1; n-- > 0;) chain[n] = shifted_h * chain[n + 1];
  return chain;
}

std::size_t numeric_rank(const ComplexMatrix& m, const ToleranceConfig& tol) {
  return numeric_rank_and_nullspace(m, tol).rank;
}

double spectral_norm(const ComplexMatrix& m) {
  const RankNullspace rn = numeric_rank_and_nullspace(m);
  return rn.singular_values.empty() ? 0.0 : rn.singular_values.front();
}

// Rank and nullspace of A^k with the cutoff measured against ||A||^k. A
// cutoff relative to A^k itself fails when A^k vanishes up to rounding (a
// block filling the whole space).
RankNullspace power_nullspace(const ComplexMatrix& a, unsigned k, const ToleranceConfig& tol) {
  return numeric_rank_and_nullspace(power(a, k), tol, std::pow(spectral_norm(a), static_cast<double>(k)));
}

std::size_t rank_of_power(const ComplexMatrix& a, unsigned k, const ToleranceConfig& tol) { return power_nullspace(a, k, tol).rank; }

// Full-column-rank test on normalized columns.
bool columns_independent(const std::vector<PhaseVector>& cols, const ToleranceConfig& tol) {
  if (cols.empty()) return true;
  std::vector<PhaseVector> unit;
  unit.reserve(cols.size());
  for (const auto& c : cols) {
    const double nc = norm(c);
    if (nc == 0.0) return false;
    unit.push_back((1.0 / nc) * c);
  }
  return numeric_rank(ComplexMatrix::from_columns(unit), tol) == cols.size();
}

double chain_defect(const ComplexMatrix& h, const JordanBlock& b) {
  const ComplexMatrix a = shifted(h, b.omega);
  const double hn = h.norm() + std::abs(b.omega);
  double worst = 0.0;
  for (std::size_t n = 0; n < b.size(); ++n) {
    CVector r = a * b.chain[n];
    if (n > 0) r = r - b.chain[n - 1];
    const double scale = hn * norm(b.chain[n]) + (n > 0 ? norm(b.chain[n - 1]) : 0.0);
    worst = std::max(worst, norm(r) / std::max(scale, 1e-300));
  }
  return worst;
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) { return parent[x] == x ? x : parent[x] = find(parent[x]); }
  void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

struct Eigenvalue {
  cplx omega;
  std::size_t multiplicity;
};

// Roots of a double-precision characteristic polynomial spread like
// u^(1/m) around an m-fold root, so candidate groups use a loose radius and
// the rank of (H - w)^m at the centroid decides.
std::vector<Eigenvalue> cluster_roots(const ComplexMatrix& h, const ComplexPolynomial& poly, const CVector& roots,
                                      const ToleranceConfig& tol,
                                      std::vector<NearCriticalCluster>& near) {
  double scale = 1.0;
  for (const cplx& r : roots) scale = std::max(scale, std::abs(r));
  const double radius = std::max(tol.cluster_tol, 1e-3) * scale;
  UnionFind uf(roots.size());
  for (std::size_t a = 0; a < roots.size(); ++a)
    for (std::size_t b = a + 1; b < roots.size(); ++b)
      if (std::abs(roots[a] - roots[b]) <= radius) uf.unite(a, b);

  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::size_t> group_of(roots.size(), SIZE_MAX);
  for (std::size_t a = 0; a < roots.size(); ++a) {
    const std::size_t root = uf.find(a);
    if (group_of[root] == SIZE_MAX) {
      group_of[root] = groups.size();
      groups.emplace_back();
    }
    groups[group_of[root]].push_back(a);
  }

  std::vector<Eigenvalue> out;
  const std::size_t dim = h.rows();
  for (const auto& g : groups) {
    if (g.size() == 1) {
      out.push_back({roots[g.front()], 1});
      continue;
    }
    cplx centroid{};
    for (std::size_t idx : g) centroid += roots[idx];
    centroid /= static_cast<double>(g.size());
    // Roots of an m-fold zero scatter by u^(1/m) and their mean is not much
    // better; the (m-1)-th derivative has a simple zero there instead.
    ComplexPolynomial d = poly;
    for (std::size_t k = 1; k < g.size(); ++k) d = d.derivative();
    const ComplexPolynomial dd = d.derivative();
    for (int it = 0; it < 8; ++it) {
      const cplx slope = dd(centroid);
      if (slope == cplx{}) break;
      const cplx step = d(centroid) / slope;
      centroid -= step;
      if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(centroid))) break;
    }
    const ComplexMatrix a = shifted(h, centroid);
    const std::size_t nullity = dim - rank_of_power(a, static_cast<unsigned>(g.size()), tol);
    if (nullity == g.size()) {
      out.push_back({centroid, g.size()});
      continue;
    }
    NearCriticalCluster cl;
    for (std::size_t idx : g) {
      cl.eigenvalues.push_back(roots[idx]);
      out.push_back({roots[idx], 1});
    }
    for (const cplx& x : cl.eigenvalues)
      for (const cplx& y : cl.eigenvalues) cl.spread = std::max(cl.spread, std::abs(x - y));
    near.push_back(std::move(cl));
  }
  return out;
}

// Block sizes at omega from r_k = rank((H - w)^k): #blocks of size >= k is
// r_{k-1} - r_k.
std::vector<std::size_t> block_sizes(const ComplexMatrix& h, cplx omega, std::size_t multiplicity, const ToleranceConfig& tol) {
  if (multiplicity == 1) return {1};
  const ComplexMatrix a = shifted(h, omega);
  std::vector<std::size_t> rank(multiplicity + 2);
  rank[0] = h.rows();
  for (std::size_t k = 1; k <= multiplicity + 1; ++k) rank[k] = rank_of_power(a, static_cast<unsigned>(k), tol);
  std::vector<std::size_t> at_least(multiplicity + 2, 0);
  for (std::size_t k = 1; k <= multiplicity + 1; ++k)
    at_least[k] = rank[k - 1] >= rank[k] ? rank[k - 1] - rank[k] : 0;
  std::vector<std::size_t> sizes;
  std::size_t total = 0;
  for (std::size_t k = multiplicity; k >= 1; --k) {
    const std::size_t exactly = at_least[k] - std::min(at_least[k], at_least[k + 1]);
    for (std::size_t c = 0; c < exactly; ++c) sizes.push_back(k);
    total += exactly * k;
  }
  if (total != multiplicity) {
    throw VerificationError("rank sequence does not account for the algebraic multiplicity",
                            static_cast<double>(total) - static_cast<double>(multiplicity));
  }
  return sizes;
}

PhaseVector smallest_singular_vector(const ComplexMatrix& a, const ToleranceConfig& tol) {
  const RankNullspace rn = numeric_rank_and_nullspace(a, tol);
  if (!rn.nullspace.empty()) return rn.nullspace.back();
  // Full numeric rank: take the direction of the smallest singular value.
  ToleranceConfig loose = tol;
  loose.rank_tol = 1.0 - 1e-15;
  loose.cluster_tol = 1.0;
  const RankNullspace all = numeric_rank_and_nullspace(a, loose);
  return all.nullspace.back();
}

}  // namespace

double SpectrumDiagnostics::max() const noexcept {
  return std::max({chain_residual, pairing_defect, biorthogonality_defect, completeness_defect});
}

std::size_t Spectrum::dimension() const noexcept {
  std::size_t d = 0;
  for (const auto& b : blocks) d += b.size();
  return d;
}

std::size_t Spectrum::block_near(cplx omega) const {
  if (blocks.empty()) throw DomainError("empty spectrum");
  std::size_t best = 0;
  for (std::size_t j = 1; j < blocks.size(); ++j) {
    const double dj = std::abs(blocks[j].omega - omega), db = std::abs(blocks[best].omega - omega);
    if (dj < db - 1e-12 || (std::abs(dj - db) <= 1e-12 && blocks[j].size() > blocks[best].size())) best = j;
  }
  return best;
}

// ---------------------------------------------------------------------------

std::vector<PhaseVector> build_chain(const ComplexMatrix& h, cplx omega, std::size_t m, const ToleranceConfig& tol) {
  if (m == 0) throw DomainError("block size must be positive");
  const ComplexMatrix a = shifted(h, omega);
  std::vector<PhaseVector> chain;
  chain.push_back(smallest_singular_vector(a, tol));
  for (std::size_t n = 1; n < m; ++n) chain.push_back(solve_affine(a, chain.back(), tol).particular);
  try {
    (void)solve_affine(a, chain.back(), tol);
  } catch (const InconsistentSystemError&) {
    return chain;
  }
  throw DomainError("Jordan chain extends beyond the requested block size");
}

NormalizedChain normalize_block(std::vector<PhaseVector> chain, const OscillatorSystem& sys, const ToleranceConfig& tol) {
  const std::size_t m = chain.size();
  if (m == 0) throw DomainError("empty chain");
  auto pairings = [&](const std::vector<PhaseVector>& f) {
    CVector a(2 * m - 1);
    for (std::size_t k = 0; k + 1 < 2 * m; ++k) {
      const std::size_t n = k >= m - 1 ? k - (m - 1) : 0;
      a[k] = bilinear(sys, f[n], f[k - n]);
    }
    return a;
  };

  NormalizedChain out;
  out.ledger.a_before = pairings(chain);
  const cplx top = out.ledger.a_before[m - 1];
  const double g_scale = 1.0 + sys.damping().max_abs();
  if (std::abs(top) <= tol.residual_tol * g_scale * norm(chain.front()) * norm(chain.back())) {
    throw DomainError("eigenvector is orthogonal to its whole block under the bilinear map; impossible configuration");
  }

  const cplx c0 = 1.0 / std::sqrt(top);
  for (auto& f : chain) f = c0 * f;
  out.ledger.c.push_back(c0);

  for (std::size_t n = 1; n < m; ++n) {
    const cplx cn = -0.5 * bilinear(sys, chain[n], chain[m - 1]);
    for (std::size_t k = m; k-- > n;) kernels::axpy(cn, chain[k - n], chain[k]);
    out.ledger.c.push_back(cn);
  }

  const int s = sign_rule(chain.front());
  if (s < 0)
    for (auto& f : chain) f = -1.0 * f;
  out.ledger.sign_flip = s;
  out.ledger.a_after = pairings(chain);
  out.chain = std::move(chain);
  return out;
}

std::vector<std::vector<PhaseVector>> degenerate_chains(const ComplexMatrix& h, cplx omega, std::vector<std::size_t> sizes,
                                                        const ToleranceConfig& tol) {
  std::sort(sizes.begin(), sizes.end(), std::greater<>());
  const ComplexMatrix a = shifted(h, omega);
  std::vector<std::vector<PhaseVector>> chains;
  std::vector<PhaseVector> taken;
  std::size_t i = 0;
  while (i < sizes.size()) {
    const std::size_t k = sizes[i];
    std::size_t wanted = 0;
    while (i + wanted < sizes.size() && sizes[i + wanted] == k) ++wanted;
    const RankNullspace rn = power_nullspace(a, static_cast<unsigned>(k), tol);
    std::size_t found = 0;
    for (const auto& v : rn.nullspace) {
      if (found == wanted) break;
      auto chain = lower_from_top(a, v, k);
      std::vector<PhaseVector> trial = taken;
      trial.insert(trial.end(), chain.begin(), chain.end());
      if (!columns_independent(trial, tol)) continue;
      taken = std::move(trial);
      chains.push_back(std::move(chain));
      ++found;
    }
    if (found != wanted) {
      throw VerificationError("could not find independent Jordan chains for the degenerate eigenvalue",
                              static_cast<double>(wanted - found));
    }
    i += wanted;
  }
  return chains;
}

CrossingGroup biorthogonalize_crossing(CrossingGroup group, const OscillatorSystem& sys, const ToleranceConfig& tol) {
  const ComplexMatrix h = evolution_operator(sys);
  const ComplexMatrix a = shifted(h, group.omega);
  std::vector<JordanBlock> remaining = std::move(group.blocks);
  std::stable_sort(remaining.begin(), remaining.end(), [](const JordanBlock& x, const JordanBlock& y) { return x.size() > y.size(); });
  std::vector<JordanBlock> done;

  while (!remaining.empty()) {
    const std::size_t m1 = remaining.front().size();
    std::size_t ties = 0;
    while (ties < remaining.size() && remaining[ties].size() == m1) ++ties;

    if (ties > 1) {
      // Quadratic form (phi, (H - w)^{M-1} phi) on the span of the top vectors.
      ComplexMatrix q(ties, ties);
      double norm_scale = 0.0;
      for (std::size_t x = 0; x < ties; ++x)
        for (std::size_t y = 0; y < ties; ++y) {
          q(x, y) = bilinear(sys, remaining[x].chain.back(), remaining[y].chain.front());
          norm_scale = std::max(norm_scale, norm(remaining[x].chain.back()) * norm(remaining[y].chain.front()));
        }
      const double floor = tol.residual_tol * (1.0 + sys.damping().max_abs()) * norm_scale;
      std::size_t pick = 0;
      double best_diag = 0.0;
      for (std::size_t x = 0; x < ties; ++x)
        if (std::abs(q(x, x)) > best_diag) best_diag = std::abs(q(pick = x, x));
      if (best_diag <= 1e-3 * q.max_abs()) {
        // All diagonal values vanish: t_x + t_y has form 2 q_xy.
        std::size_t bx = 0, by = 1;
        double best = 0.0;
        for (std::size_t x = 0; x < ties; ++x)
          for (std::size_t y = x + 1; y < ties; ++y) {
            const double v = std::abs(q(x, x) + q(y, y) + 2.0 * q(x, y));
            if (v > best) {
              best = v;
              bx = x;
              by = y;
            }
          }
        if (best <= floor) {
          throw VerificationError("quadratic form on the top vectors vanishes identically", best);
        }
        PhaseVector mixed = remaining[bx].chain.back() + remaining[by].chain.back();
        remaining[bx].chain = lower_from_top(a, std::move(mixed), m1);
        pick = bx;
      } else if (best_diag <= floor) {
        throw VerificationError("quadratic form on the top vectors vanishes identically", best_diag);
      }
      std::swap(remaining[0], remaining[pick]);
    }

    JordanBlock lead = std::move(remaining.front());
    remaining.erase(remaining.begin());
    NormalizedChain nc = normalize_block(std::move(lead.chain), sys, tol);
    lead.chain = std::move(nc.chain);
    lead.ledger = std::move(nc.ledger);

    for (auto& other : remaining) {
      const std::size_t mj = other.size();
      PhaseVector t = other.chain.back();
      for (std::size_t n = m1 - mj; n < m1; ++n) {
        const cplx c = -bilinear(sys, t, lead.chain[n]);
        kernels::axpy(c, lead.chain[m1 - 1 - n], t);
      }
      other.chain = lower_from_top(a, std::move(t), mj);
    }
    done.push_back(std::move(lead));
  }
  group.blocks = std::move(done);
  return group;
}

NormalizedChain single_block_shortcut(const OscillatorSystem& sys, const Spectrum& spectrum, const ToleranceConfig& tol) {
  std::size_t nontrivial = SIZE_MAX;
  for (std::size_t j = 0; j < spectrum.blocks.size(); ++j) {
    if (spectrum.blocks[j].size() < 2) continue;
    if (nontrivial != SIZE_MAX) throw DomainError("single-block construction needs exactly one nontrivial block; found several");
    nontrivial = j;
  }
  if (nontrivial == SIZE_MAX) throw DomainError("single-block construction needs exactly one nontrivial block; found none");

  const JordanBlock& blk = spectrum.blocks[nontrivial];
  PhaseVector psi = metric_conjugate(sys, blk.chain.front());
  for (std::size_t j = 0; j < spectrum.blocks.size(); ++j) {
    if (j == nontrivial) continue;
    const PhaseVector& e = spectrum.blocks[j].chain.front();
    const cplx c = -bilinear(sys, e, psi) / bilinear(sys, e, e);
    kernels::axpy(c, e, psi);
  }
  const ComplexMatrix a = shifted(evolution_operator(sys), blk.omega);
  return normalize_block(lower_from_top(a, std::move(psi), blk.size()), sys, tol);
}

Spectrum enforce_conjugation(Spectrum spectrum) {
  const double axis_tol = std::max(spectrum.tolerances.cluster_tol, 1e-9);
  std::vector<JordanBlock> positive, zero, negative;
  for (auto& b : spectrum.blocks) {
    const double edge = axis_tol * std::max(1.0, std::abs(b.omega));
    if (b.omega.real() > edge) positive.push_back(std::move(b));
    else if (b.omega.real() < -edge) negative.push_back(std::move(b));
    else zero.push_back(std::move(b));
  }
  if (positive.size() != negative.size()) throw DomainError("conjugate pairing failed: unequal numbers of blocks in the two half planes");

  std::stable_sort(positive.begin(), positive.end(), [](const JordanBlock& x, const JordanBlock& y) {
    if (x.omega.real() != y.omega.real()) return x.omega.real() < y.omega.real();
    return x.omega.imag() > y.omega.imag();
  });

  std::vector<JordanBlock> out;
  std::vector<bool> used(negative.size(), false);
  int label = 0;
  for (auto& b : positive) {
    const cplx target = -std::conj(b.omega);
    std::size_t match = SIZE_MAX;
    for (std::size_t k = 0; k < negative.size(); ++k) {
      if (used[k] || negative[k].size() != b.size()) continue;
      if (std::abs(negative[k].omega - target) <= axis_tol * std::max(1.0, std::abs(target)) &&
          (match == SIZE_MAX || std::abs(negative[k].omega - target) < std::abs(negative[match].omega - target)))
        match = k;
    }
    if (match == SIZE_MAX) throw DomainError("conjugate pairing failed: no partner block near -conj(omega)");
    used[match] = true;
    JordanBlock partner = std::move(negative[match]);
    const std::size_t m = b.size();
    partner.omega = target;
    for (std::size_t n = 0; n < m; ++n) {
      const double alt = (n % 2 == 0) ? 1.0 : -1.0;
      partner.chain[n] = (alt * ipow(m)) * conj(b.chain[n]);
    }
    b.label = ++label;
    partner.label = -label;
    b.conjugation_sign = partner.conjugation_sign = 1;
    out.push_back(std::move(b));
    out.push_back(std::move(partner));
  }

  std::stable_sort(zero.begin(), zero.end(), [](const JordanBlock& x, const JordanBlock& y) {
    if (x.omega.imag() != y.omega.imag()) return x.omega.imag() > y.omega.imag();
    return x.size() > y.size();
  });
  for (auto& b : zero) {
    b.label = 0;
    b.omega = {0.0, b.omega.imag()};
    const std::size_t m = b.size();
    double diff[2] = {0.0, 0.0};
    double scale = 0.0;
    for (std::size_t n = 0; n < m; ++n) {
      const double alt = (n % 2 == 0) ? 1.0 : -1.0;
      const PhaseVector image = (alt * ipow(m)) * conj(b.chain[n]);
      diff[0] = std::max(diff[0], norm(b.chain[n] - image));
      diff[1] = std::max(diff[1], norm(b.chain[n] + image));
      scale = std::max(scale, norm(b.chain[n]));
    }
    const double tol = 1e-7 * std::max(scale, 1.0);
    b.conjugation_sign = diff[0] <= tol ? 1 : (diff[1] <= tol ? -1 : 0);
    out.push_back(std::move(b));
  }
  spectrum.blocks = std::move(out);
  return spectrum;
}

Spectrum dual_basis(Spectrum spectrum) {
  for (auto& b : spectrum.blocks) {
    const std::size_t m = b.size();
    b.duals.resize(m);
    for (std::size_t n = 0; n < m; ++n) b.duals[n] = metric_conjugate(spectrum.system, b.chain[m - 1 - n]);
  }
  return spectrum;
}

PhaseVector expand_in_basis(const Spectrum& spectrum, std::span<const cplx> phi) {
  PhaseVector out(phi.size());
  for (const auto& b : spectrum.blocks) {
    const std::size_t m = b.size();
    for (std::size_t n = 0; n < m; ++n) kernels::axpy(bilinear(spectrum.system, b.chain[m - 1 - n], phi), b.chain[n], out);
  }
  return out;
}

SpectrumDiagnostics diagnose(const Spectrum& spectrum) {
  SpectrumDiagnostics d;
  const ComplexMatrix h = evolution_operator(spectrum.system);
  for (const auto& b : spectrum.blocks) d.chain_residual = std::max(d.chain_residual, chain_defect(h, b));

  struct Ref {
    std::size_t block, n;
  };
  std::vector<Ref> refs;
  for (std::size_t j = 0; j < spectrum.blocks.size(); ++j)
    for (std::size_t n = 0; n < spectrum.blocks[j].size(); ++n) refs.push_back({j, n});
  for (const auto& ra : refs) {
    const auto& ba = spectrum.blocks[ra.block];
    for (const auto& rb : refs) {
      const auto& bb = spectrum.blocks[rb.block];
      const double expect = (ra.block == rb.block && ra.n + rb.n + 1 == ba.size()) ? 1.0 : 0.0;
      d.pairing_defect = std::max(d.pairing_defect, std::abs(bilinear(spectrum.system, ba.chain[ra.n], bb.chain[rb.n]) - expect));
      if (!ba.duals.empty()) {
        const double bi = (ra.block == rb.block && ra.n == rb.n) ? 1.0 : 0.0;
        d.biorthogonality_defect =
            std::max(d.biorthogonality_defect, std::abs(kernels::dotc(ba.duals[ra.n], bb.chain[rb.n]) - bi));
      }
    }
  }
  const std::size_t dim = spectrum.system.dim();
  for (std::size_t i = 0; i < dim; ++i) {
    PhaseVector e(dim);
    e[i] = 1.0;
    d.completeness_defect = std::max(d.completeness_defect, norm(expand_in_basis(spectrum, e) - e));
  }
  return d;
}

RepresentationReport verify_representations(const Spectrum& spectrum) {
  const OscillatorSystem& sys = spectrum.system;
  const ComplexMatrix h = evolution_operator(sys);
  RepresentationReport rep;
  for (const auto& b : spectrum.blocks) {
    const std::size_t m = b.size();
    RepresentationReport::Block out{0.0, 0.0, 0.0, ComplexMatrix(m, m), ComplexMatrix(m, m), ComplexMatrix(m, m)};
    std::vector<PhaseVector> hf;
    for (const auto& f : b.chain) hf.push_back(h * f);
    for (std::size_t n = 0; n < m; ++n)
      for (std::size_t k = 0; k < m; ++k) {
        out.metric(n, k) = bilinear(sys, b.chain[n], b.chain[k]);
        out.lowered(n, k) = bilinear(sys, b.chain[n], hf[k]);
        const cplx mixed = b.duals.empty() ? bilinear(sys, b.chain[m - 1 - n], hf[k]) : kernels::dotc(b.duals[n], hf[k]);
        out.jordan(n, k) = mixed;
        const double g_exp = (n + k + 1 == m) ? 1.0 : 0.0;
        const cplx j_exp = (n == k) ? b.omega : (k == n + 1 ? cplx{1.0} : cplx{});
        const cplx l_exp = (n + k + 1 == m) ? b.omega : (n + k == m ? cplx{1.0} : cplx{});
        out.metric_deviation = std::max(out.metric_deviation, std::abs(out.metric(n, k) - g_exp));
        out.jordan_deviation = std::max(out.jordan_deviation, std::abs(mixed - j_exp));
        out.lowered_deviation = std::max(out.lowered_deviation, std::abs(out.lowered(n, k) - l_exp));
      }
    rep.max_deviation = std::max({rep.max_deviation, out.metric_deviation, out.jordan_deviation, out.lowered_deviation});
    rep.blocks.push_back(std::move(out));
  }
  for (std::size_t x = 0; x < spectrum.blocks.size(); ++x)
    for (std::size_t y = 0; y < spectrum.blocks.size(); ++y) {
      if (x == y) continue;
      for (const auto& fa : spectrum.blocks[x].chain)
        for (const auto& fb : spectrum.blocks[y].chain) {
          rep.cross_block = std::max(rep.cross_block, std::abs(bilinear(sys, fa, fb)));
          rep.cross_block = std::max(rep.cross_block, std::abs(bilinear(sys, fa, h * fb)));
        }
    }
  rep.max_deviation = std::max(rep.max_deviation, rep.cross_block);
  return rep;
}

ComplexMatrix span_projector(const std::vector<PhaseVector>& vectors) {
  if (vectors.empty()) return {};
  const std::size_t dim = vectors.front().size();
  std::vector<PhaseVector> basis;
  for (PhaseVector v : vectors) {
    const double original = norm(v);
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : basis) kernels::axpy(-kernels::dotc(q, v), q, v);
    const double nv = norm(v);
    if (nv <= 1e-10 * original) continue;
    basis.push_back((1.0 / nv) * v);
  }
  ComplexMatrix p(dim, dim);
  for (const auto& q : basis)
    for (std::size_t r = 0; r < dim; ++r)
      for (std::size_t c = 0; c < dim; ++c) p(r, c) += q[r] * std::conj(q[c]);
  return p;
}

Spectrum compute_spectrum(const OscillatorSystem& sys, const ToleranceConfig& tol) {
  tol.validate();
  const ComplexMatrix h = evolution_operator(sys);
  const ComplexPolynomial poly = char_poly(h);
  const CVector roots = poly_roots(poly, tol);

  Spectrum spectrum{sys, {}, tol, {}};
  for (const Eigenvalue& ev : cluster_roots(h, poly, roots, tol, spectrum.near_critical)) {
    const std::vector<std::size_t> sizes = block_sizes(h, ev.omega, ev.multiplicity, tol);
    if (sizes.size() == 1) {
      JordanBlock b;
      b.omega = ev.omega;
      NormalizedChain nc = normalize_block(build_chain(h, ev.omega, sizes.front(), tol), sys, tol);
      b.chain = std::move(nc.chain);
      b.ledger = std::move(nc.ledger);
      spectrum.blocks.push_back(std::move(b));
      continue;
    }
    CrossingGroup group{ev.omega, {}};
    for (auto& chain : degenerate_chains(h, ev.omega, sizes, tol)) {
      JordanBlock b;
      b.omega = ev.omega;
      b.chain = std::move(chain);
      group.blocks.push_back(std::move(b));
    }
    group = biorthogonalize_crossing(std::move(group), sys, tol);
    for (auto& b : group.blocks) spectrum.blocks.push_back(std::move(b));
  }

  spectrum = dual_basis(enforce_conjugation(std::move(spectrum)));

  if (spectrum.dimension() != sys.dim())
    throw VerificationError("block sizes do not add up to the phase-space dimension",
                            static_cast<double>(spectrum.dimension()) - static_cast<double>(sys.dim()));
  const SpectrumDiagnostics d = diagnose(spectrum);
  if (d.chain_residual > tol.residual_tol) throw VerificationError("chain relation violated", d.chain_residual);
  if (d.pairing_defect > tol.residual_tol) throw VerificationError("bilinear orthonormality violated", d.pairing_defect);
  if (d.biorthogonality_defect > tol.residual_tol) throw VerificationError("dual basis not biorthogonal", d.biorthogonality_defect);
  if (d.completeness_defect > tol.residual_tol) throw VerificationError("basis is not complete", d.completeness_defect);
  return spectrum;
}

}  // namespace critmode
