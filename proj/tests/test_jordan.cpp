// Copyright the critmode authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <map>

#include "critmode/design.hpp"
#include "critmode/errors.hpp"
#include "critmode/jordan.hpp"
#include "support.hpp"

using namespace critmode;

namespace {

const cplx I{0, 1};

bool has_block(const Spectrum& s, cplx w, std::size_t m) {
  for (const auto& b : s.blocks)
    if (std::abs(b.omega - w) < 1e-9 && b.size() == m) return true;
  return false;
}

double chain_defect(const ComplexMatrix& h, const JordanBlock& b) {
  double worst = 0.0;
  for (std::size_t n = 0; n < b.size(); ++n) {
    CVector r = shifted(h, b.omega) * b.chain[n];
    if (n > 0) r = r - b.chain[n - 1];
    worst = std::max(worst, norm(r) / std::max(1.0, norm(b.chain[n])));
  }
  return worst;
}

// |(f_a, f_b) - delta_{a, partner(b)}| over the whole basis.
double pairing_defect(const Spectrum& s) {
  double worst = 0.0;
  std::size_t oa = 0;
  for (std::size_t ja = 0; ja < s.blocks.size(); ++ja) {
    const auto& A = s.blocks[ja];
    std::size_t ob = 0;
    for (std::size_t jb = 0; jb < s.blocks.size(); ++jb) {
      const auto& B = s.blocks[jb];
      for (std::size_t n = 0; n < A.size(); ++n)
        for (std::size_t m = 0; m < B.size(); ++m) {
          const double want = (ja == jb && n + m + 1 == A.size()) ? 1.0 : 0.0;
          worst = std::max(worst, std::abs(bilinear(s.system, A.chain[n], B.chain[m]) - want));
        }
      ob += B.size();
    }
    oa += A.size();
  }
  return worst;
}

double biorthogonality_defect(const Spectrum& s) {
  std::vector<PhaseVector> f, d;
  for (const auto& b : s.blocks) {
    f.insert(f.end(), b.chain.begin(), b.chain.end());
    d.insert(d.end(), b.duals.begin(), b.duals.end());
  }
  double worst = 0.0;
  for (std::size_t a = 0; a < d.size(); ++a)
    for (std::size_t b = 0; b < f.size(); ++b) {
      cplx ip = 0;
      for (std::size_t k = 0; k < f[b].size(); ++k) ip += std::conj(d[a][k]) * f[b][k];
      worst = std::max(worst, std::abs(ip - (a == b ? 1.0 : 0.0)));
    }
  return worst;
}

// Independent block-structure oracle: Eigen eigenvalues, clustered by a
// wide radius, then block sizes from ranks of powers via full-pivot LU.
std::map<std::size_t, std::size_t> oracle_sizes(const ComplexMatrix& h) {
  const Eigen::Index d = static_cast<Eigen::Index>(h.rows());
  Eigen::MatrixXcd e(d, d);
  for (Eigen::Index r = 0; r < d; ++r)
    for (Eigen::Index c = 0; c < d; ++c) e(r, c) = h(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(e, false);
  std::vector<cplx> ev(es.eigenvalues().data(), es.eigenvalues().data() + d);
  std::vector<bool> used(ev.size(), false);
  std::map<std::size_t, std::size_t> sizes;  // size -> count
  for (std::size_t a = 0; a < ev.size(); ++a) {
    if (used[a]) continue;
    std::vector<cplx> group{ev[a]};
    used[a] = true;
    for (std::size_t b = a + 1; b < ev.size(); ++b)
      if (!used[b] && std::abs(ev[b] - ev[a]) < 1e-2) {
        group.push_back(ev[b]);
        used[b] = true;
      }
    cplx w = 0;
    for (cplx z : group) w += z;
    w /= static_cast<double>(group.size());
    const Eigen::MatrixXcd a1 = e - w * Eigen::MatrixXcd::Identity(d, d);
    std::vector<Eigen::Index> ranks{d};
    Eigen::MatrixXcd p = Eigen::MatrixXcd::Identity(d, d);
    // The eigenvalue mean of a cluster is accurate to roundoff even when
    // the individual eigenvalues are not, so an absolute cutoff against
    // ||A||^k separates true zeros.
    const double a_norm = Eigen::JacobiSVD<Eigen::MatrixXcd>(a1).singularValues()(0);
    for (std::size_t k = 1; k <= group.size() + 1; ++k) {
      p = p * a1;
      const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXcd>(p).singularValues();
      const double cut = 1e-8 * std::pow(a_norm, static_cast<double>(k));
      ranks.push_back((sv.array() > cut).count());
    }
    for (std::size_t k = 1; k + 1 < ranks.size(); ++k) {
      const auto at_least_k = ranks[k - 1] - ranks[k];
      const auto at_least_k1 = ranks[k] - ranks[k + 1];
      if (at_least_k > at_least_k1) sizes[k] += static_cast<std::size_t>(at_least_k - at_least_k1);
    }
  }
  return sizes;
}

}  // namespace

TEST_CASE("block structure of the catalog and simple systems") {
  const Spectrum q = compute_spectrum(catalog_entry("quartic-jb4").system);
  REQUIRE(q.blocks.size() == 1);
  CHECK(has_block(q, -I, 4));

  const Spectrum c = compute_spectrum(catalog_entry("cubic-jb3").system);
  CHECK(c.blocks.size() == 2);
  CHECK(has_block(c, -I, 3));
  CHECK(has_block(c, -4.0 * I, 1));

  const Spectrum u = compute_spectrum(build_system(RealMatrix::diagonal({1, 4}), RealMatrix(2, 2)));
  CHECK(u.blocks.size() == 4);
  for (cplx w : {cplx{1}, cplx{-1}, cplx{2}, cplx{-2}}) CHECK(has_block(u, w, 1));

  const Spectrum d = compute_spectrum(catalog_entry("double-jb2").system);
  CHECK(d.blocks.size() == 2);
  CHECK(has_block(d, cplx{4.0 / 3.0, -1}, 2));
  CHECK(has_block(d, cplx{-4.0 / 3.0, -1}, 2));
}

TEST_CASE("build_chain") {
  const OscillatorSystem s = build_system(RealMatrix{{1}}, RealMatrix{{2}});
  const ComplexMatrix h = evolution_operator(s);
  const auto chain = build_chain(h, -I, 2);
  REQUIRE(chain.size() == 2);
  // f0 parallel to (1, -1); f1 - (f0 / f0[0]) (0, -i) in span of (1, -1).
  const cplx c0 = chain[0][0];
  CHECK(std::abs(chain[0][1] + c0) < 1e-12);
  const CVector rest{chain[1][0] - c0 * 0.0, chain[1][1] - c0 * (-I)};
  CHECK(std::abs(rest[0] + rest[1]) < 1e-12);

  const Spectrum free = compute_spectrum(build_system(RealMatrix{{1}}, RealMatrix(1, 1)));
  const auto simple = build_chain(evolution_operator(free.system), 1.0, 1);
  REQUIRE(simple.size() == 1);
  CHECK(norm(shifted(evolution_operator(free.system), 1.0) * simple[0]) < 1e-12);

  const ComplexMatrix hq = evolution_operator(catalog_entry("quartic-jb4").system);
  const auto q = build_chain(hq, -I, 4);
  CHECK(numeric_rank_and_nullspace(ComplexMatrix::from_columns(q)).rank == 4);
  CHECK_THROWS(build_chain(hq, -I, 5));
}

TEST_CASE("normalize_block: single critical oscillator") {
  const OscillatorSystem s = build_system(RealMatrix{{1}}, RealMatrix{{2}});
  const NormalizedChain n = normalize_block({{1, -1}, {-I, 0}}, s);
  REQUIRE(n.ledger.c.size() == 2);
  CHECK(std::abs(n.ledger.c[0] - 1.0) < 1e-14);
  CHECK(std::abs(n.ledger.c[1] - I) < 1e-14);
  CHECK(testing::max_diff(n.chain[0], CVector{1, -1}) < 1e-14);
  CHECK(testing::max_diff(n.chain[1], CVector{0, -I}) < 1e-14);
  CHECK(std::abs(n.ledger.a_after[1] - 1.0) < 1e-14);

  // M = 1: plain (f, f) = 1.
  const OscillatorSystem free = build_system(RealMatrix{{1}}, RealMatrix(1, 1));
  const NormalizedChain one = normalize_block({{3, -3.0 * I}}, free);
  CHECK(std::abs(bilinear(free, one.chain[0], one.chain[0]) - 1.0) < 1e-14);

  // A_{M-1} = 0 is impossible for a genuine chain; a fake one must be refused.
  CHECK_THROWS(normalize_block({{1, 0}, {0, 0}}, s));
}

TEST_CASE("catalog fixtures up to one sign per block") {
  for (const CatalogEntry& e : catalog()) {
    const Spectrum s = compute_spectrum(e.system);
    for (const BlockFixture& f : e.fixtures) {
      const JordanBlock& b = s.blocks[s.block_near(f.block.omega)];
      CHECK(b.size() == f.block.size);
      CHECK(fixture_deviation(b, f) <= 1e-10);
    }
  }
}

TEST_CASE("single-block shortcut agrees with the chain route") {
  for (const char* name : {"quartic-jb4", "cubic-jb3"}) {
    const Spectrum s = compute_spectrum(catalog_entry(name).system);
    const NormalizedChain shortcut = single_block_shortcut(s.system, s);
    const JordanBlock& b = s.blocks[s.block_near(-I)];
    const ComplexMatrix diff = span_projector(shortcut.chain) - span_projector(b.chain);
    CHECK(diff.max_abs() <= 1e-9);
    JordanBlock alt = b;
    alt.chain = shortcut.chain;
    CHECK(chain_defect(evolution_operator(s.system), alt) <= 1e-9);
  }
  const Spectrum diag = compute_spectrum(testing::random_system(2));
  CHECK_THROWS_AS(single_block_shortcut(diag.system, diag), DomainError);
}

TEST_CASE("level crossing: two identical critical oscillators") {
  const Spectrum s = compute_spectrum(catalog_entry("crossed-pair").system);
  REQUIRE(s.blocks.size() == 2);
  CHECK(s.blocks[0].size() == 2);
  CHECK(s.blocks[1].size() == 2);
  CHECK(pairing_defect(s) <= 1e-9);

  // Random structure-preserving remix of the processed group, then reprocess.
  const ComplexMatrix h = evolution_operator(s.system);
  for (int trial = 0; trial < 20; ++trial) {
    const cplx a00 = testing::random_cplx() + 1.0, a01 = testing::random_cplx(), a10 = testing::random_cplx(),
               a11 = testing::random_cplx() + 1.0;
    const cplx b00 = testing::random_cplx(), b01 = testing::random_cplx(), b10 = testing::random_cplx(), b11 = testing::random_cplx();
    const auto& f = s.blocks[0].chain;
    const auto& g = s.blocks[1].chain;
    CrossingGroup group{-I, {}};
    JordanBlock x, y;
    x.omega = y.omega = -I;
    x.chain = {a00 * f[0] + a01 * g[0], a00 * f[1] + a01 * g[1] + b00 * f[0] + b01 * g[0]};
    y.chain = {a10 * f[0] + a11 * g[0], a10 * f[1] + a11 * g[1] + b10 * f[0] + b11 * g[0]};
    group.blocks = {x, y};
    const CrossingGroup out = biorthogonalize_crossing(group, s.system);
    REQUIRE(out.count() == 2);
    Spectrum t = s;
    t.blocks = out.blocks;
    CHECK(pairing_defect(t) <= 1e-9);
    for (const auto& b : out.blocks) CHECK(chain_defect(h, b) <= 1e-9);
  }

  // A single block passes through.
  const Spectrum one = compute_spectrum(build_system(RealMatrix{{1}}, RealMatrix{{2}}));
  const CrossingGroup passed = biorthogonalize_crossing(CrossingGroup{-I, {one.blocks[0]}}, one.system);
  CHECK(testing::max_diff(passed.blocks[0].chain[0], one.blocks[0].chain[0]) < 1e-12);
}

TEST_CASE("conjugate blocks") {
  const Spectrum d = compute_spectrum(catalog_entry("double-jb2").system);
  const JordanBlock& p = d.blocks[d.block_near({4.0 / 3.0, -1})];
  const JordanBlock& m = d.blocks[d.block_near({-4.0 / 3.0, -1})];
  CHECK(p.label == -m.label);
  CHECK(p.label > 0);
  for (std::size_t n = 0; n < 2; ++n) {
    const double sign = n % 2 ? 1.0 : -1.0;  // i^2 (-1)^n
    CHECK(testing::max_diff(m.chain[n], sign * conj(p.chain[n])) < 1e-12);
  }

  // Zero mode of size 4: alternating real and imaginary vectors.
  const Spectrum q = compute_spectrum(catalog_entry("quartic-jb4").system);
  CHECK(q.blocks[0].label == 0);
  CHECK(q.blocks[0].conjugation_sign != 0);
  for (std::size_t n = 0; n < 4; ++n) {
    double re = 0, im = 0;
    for (const cplx& z : q.blocks[0].chain[n]) {
      re = std::max(re, std::abs(z.real()));
      im = std::max(im, std::abs(z.imag()));
    }
    CHECK(std::min(re, im) < 1e-12);
    CHECK((n % 2 == 0 ? re : im) < 1e-12);  // f0 imaginary, f1 real, ...
  }

  // Undamped pair.
  const Spectrum u = compute_spectrum(build_system(RealMatrix{{1}}, RealMatrix(1, 1)));
  const JordanBlock& up = u.blocks[u.block_near(1.0)];
  const JordanBlock& dn = u.blocks[u.block_near(-1.0)];
  CHECK(std::abs(std::abs(bilinear(u.system, up.chain[0], up.chain[0])) - 1.0) < 1e-12);
  CHECK(testing::max_diff(dn.chain[0], I * conj(up.chain[0])) < 1e-12);
}

TEST_CASE("representations have the stated shapes") {
  for (const CatalogEntry& e : catalog()) {
    const Spectrum s = compute_spectrum(e.system);
    const RepresentationReport r = verify_representations(s);
    CHECK(r.max_deviation <= 1e-9);
    CHECK(r.cross_block <= 1e-9);
  }
  const Spectrum q = compute_spectrum(catalog_entry("quartic-jb4").system);
  const RepresentationReport r = verify_representations(q);
  const ComplexMatrix& g = r.blocks[0].metric;
  const ComplexMatrix& hl = r.blocks[0].lowered;
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = 0; b < 4; ++b) {
      CHECK(std::abs(g(a, b) - (a + b == 3 ? 1.0 : 0.0)) < 1e-12);
      const cplx want = a + b == 3 ? -I : (a + b == 4 ? cplx{1} : cplx{});
      CHECK(std::abs(hl(a, b) - want) < 1e-12);
    }
}

TEST_CASE("completeness, biorthogonality and cross-eigenvalue orthogonality") {
  std::vector<OscillatorSystem> systems;
  for (const CatalogEntry& e : catalog()) systems.push_back(e.system);
  for (int k = 0; k < 100; ++k) systems.push_back(testing::random_system(1 + static_cast<std::size_t>(k % 4)));
  for (const OscillatorSystem& sys : systems) {
    const Spectrum s = compute_spectrum(sys);
    CHECK(s.dimension() == sys.dim());
    CHECK(pairing_defect(s) <= 1e-9);
    CHECK(biorthogonality_defect(s) <= 1e-9);
    const ComplexMatrix h = evolution_operator(sys);
    for (const auto& b : s.blocks) CHECK(chain_defect(h, b) <= 1e-9);
    const CVector phi = testing::random_vector(sys.dim());
    CHECK(norm(expand_in_basis(s, phi) - phi) <= 1e-9 * norm(phi));
  }
}

TEST_CASE("block sizes agree with an independent rank oracle on designed systems") {
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<OscillatorSystem> systems;
    systems.push_back(quartic_critical(testing::uniform(-0.8, 0.8), testing::uniform(-0.8, 0.8)));
    systems.push_back(cubic_critical(testing::uniform(2.0, 6.0), testing::uniform(0.0, 0.5)));
    systems.push_back(double2_critical(testing::uniform(0.5, 2.0)));
    for (const OscillatorSystem& sys : systems) {
      const Spectrum s = compute_spectrum(sys);
      std::map<std::size_t, std::size_t> have;
      for (const auto& b : s.blocks) ++have[b.size()];
      const auto want = oracle_sizes(evolution_operator(sys));
      std::string hs, ws;
      for (auto [k, v] : have) hs += std::to_string(k) + "x" + std::to_string(v) + " ";
      for (auto [k, v] : want) ws += std::to_string(k) + "x" + std::to_string(v) + " ";
      INFO(sys.label(), ": have ", hs, " oracle ", ws);
      CHECK(have == want);
    }
  }
}
