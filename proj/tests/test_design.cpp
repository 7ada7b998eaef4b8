// Copyright the critmode authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "critmode/design.hpp"
#include "critmode/errors.hpp"
#include "critmode/jordan.hpp"
#include "support.hpp"

using namespace critmode;

namespace {

const cplx I{0, 1};

double max4(const std::array<double, 4>& a) { return *std::max_element(a.begin(), a.end()); }

// Independent coefficient check: det(H - w) evaluated by LU at a few points
// against the target product.
double poly_mismatch(const OscillatorSystem& sys, const std::vector<std::pair<cplx, std::size_t>>& target) {
  const ComplexMatrix h = evolution_operator(sys);
  double worst = 0.0;
  for (cplx w : {cplx{0.3, 0.2}, cplx{-1.1, 0.5}, cplx{2.0, -0.7}, cplx{0.0, 1.5}, cplx{-0.4, -2.2}}) {
    cplx want = 1.0;
    for (const auto& [r, m] : target)
      for (std::size_t k = 0; k < m; ++k) want *= (w - r);
    worst = std::max(worst, std::abs(determinant(shifted(h, w)) - want) / std::max(1.0, std::abs(want)));
  }
  return worst;
}

bool near(const RealMatrix& a, const RealMatrix& b, double tol) {
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c)
      if (std::abs(a(r, c) - b(r, c)) > tol) return false;
  return true;
}

}  // namespace

TEST_CASE("quartic design reproduces the printed system") {
  const OscillatorSystem s = quartic_critical(std::asinh(-2.0), 0.5 * std::log(5.0));
  CHECK(near(s.stiffness(), RealMatrix{{5, -2}, {-2, 1}}, 1e-12));
  CHECK(near(s.damping(), RealMatrix{{4, 0}, {0, 0}}, 1e-12));

  const OscillatorSystem id = quartic_critical(0, 0);
  CHECK(near(id.stiffness(), RealMatrix::identity(2), 1e-15));
  CHECK(near(id.damping(), RealMatrix{{2, 0}, {0, 2}}, 1e-15));
  const Spectrum sp = compute_spectrum(id);
  CHECK(sp.blocks.size() == 2);
}

TEST_CASE("quartic design over random parameters") {
  int done = 0;
  while (done < 50) {
    const double x = testing::uniform(-1.7, 1.7), y = testing::uniform(-1.7, 1.7);
    if (std::cosh(x) * std::cosh(y) > 3.0) continue;
    ++done;
    const OscillatorSystem s = quartic_critical(x, y);
    CHECK(s.warnings().empty());
    CHECK(max4(quartic_constraints(s)) <= 1e-12 * std::max(1.0, s.stiffness().max_abs()));
    CHECK(target_residual(s, {{-I, 4}}) <= 1e-10 * std::max(1.0, s.stiffness().max_abs()));
    CHECK(poly_mismatch(s, {{-I, 4}}) <= 1e-10);
    // Geometric multiplicity 1 at -i away from the origin of the family.
    CHECK(numeric_rank_and_nullspace(shifted(evolution_operator(s), -I)).nullspace.size() == 1);
  }
  CHECK_FALSE(quartic_critical(1.5, 1.5).warnings().empty());
  CHECK_THROWS_AS(quartic_critical(std::nan(""), 0), DomainError);
}

TEST_CASE("cubic design") {
  const OscillatorSystem s = cubic_critical(4.0, 3.0);
  CHECK(near(s.stiffness(), RealMatrix{{41.0 / 5, 8.0 / 5}, {8.0 / 5, 4.0 / 5}}, 1e-12));
  CHECK(near(s.damping(), RealMatrix{{6, 0}, {0, 1}}, 1e-12));
  CHECK_THROWS_AS(cubic_critical(1.0, 0.5), DomainError);
  CHECK(cubic_critical(4.0, 3.0, -1).stiffness()(0, 1) == doctest::Approx(-8.0 / 5));

  int done = 0, tried = 0;
  while (done < 50 && tried < 5000) {
    ++tried;
    const double b = testing::uniform(0.1, 8.0), g11 = testing::uniform(-1.0, 5.0);
    if (std::abs(b - 1.0) < 0.05) continue;
    OscillatorSystem sys;
    try {
      sys = cubic_critical(b, g11);
    } catch (const DomainError&) {
      continue;
    }
    ++done;
    const double scale = std::max(1.0, sys.stiffness().max_abs());
    CHECK(max4(cubic_constraints(sys, b)) <= 1e-12 * scale * scale);
    const std::vector<std::pair<cplx, std::size_t>> target{{-I, 3}, {-b * I, 1}};
    CHECK(target_residual(sys, target) <= 1e-10 * scale * scale);
    CHECK(poly_mismatch(sys, target) <= 1e-10 * scale);
  }
  CHECK(done == 50);
}

TEST_CASE("double-block design") {
  const OscillatorSystem s = double2_critical(4.0 / 3.0);
  CHECK(near(s.stiffness(), RealMatrix{{61.0 / 9, -30.0 / 9}, {-30.0 / 9, 25.0 / 9}}, 1e-12));
  CHECK(near(s.damping(), RealMatrix{{4, 0}, {0, 0}}, 1e-15));
  CHECK(near(double2_critical(1e-3).stiffness(), RealMatrix{{5, -2}, {-2, 1}}, 1e-2));
  // The limit converges: the gap shrinks like b^2.
  const double gap = std::abs(double2_critical(1e-4).stiffness()(0, 0) - 5.0);
  CHECK(gap <= 1e-7);
  CHECK_THROWS_AS(double2_critical(0.0), DomainError);
  CHECK_THROWS_AS(double2_critical(-1.0), DomainError);

  for (int k = 0; k < 50; ++k) {
    const double b = testing::uniform(1e-2, 2.0);
    const OscillatorSystem sys = double2_critical(b);
    CHECK(max4(double2_constraints(sys, b)) <= 1e-12 * std::max(1.0, (1 + b * b) * (1 + b * b)));
    const std::vector<std::pair<cplx, std::size_t>> target{{b - I, 2}, {-b - I, 2}};
    CHECK(target_residual(sys, target) <= 1e-10 * 10);
    CHECK(poly_mismatch(sys, target) <= 1e-10);
    if (k < 10 && b > 0.05) {
      const Spectrum sp = compute_spectrum(sys);
      REQUIRE(sp.blocks.size() == 2);
      CHECK(sp.blocks[0].size() == 2);
      CHECK(sp.blocks[1].size() == 2);
    }
  }
}

TEST_CASE("scaling") {
  const OscillatorSystem q = catalog_entry("quartic-jb4").system;
  const OscillatorSystem same = scale_system(q, 1.0);
  CHECK(near(same.stiffness(), q.stiffness(), 0.0));
  CHECK(near(same.damping(), q.damping(), 0.0));
  CHECK_THROWS_AS(scale_system(q, 0.0), DomainError);

  const OscillatorSystem s3 = scale_system(q, 3.0);
  const Spectrum sp = compute_spectrum(s3);
  REQUIRE(sp.blocks.size() == 1);
  CHECK(sp.blocks[0].size() == 4);
  CHECK(std::abs(sp.blocks[0].omega + 3.0 * I) < 1e-9);

  // Chains map under (x, p) -> (x, a p); compare block subspaces.
  const Spectrum orig = compute_spectrum(q);
  std::vector<PhaseVector> mapped;
  for (const auto& f : orig.blocks[0].chain) {
    PhaseVector g = f;
    for (std::size_t k = 2; k < 4; ++k) g[k] *= 3.0;
    mapped.push_back(g);
  }
  CHECK((span_projector(mapped) - span_projector(sp.blocks[0].chain)).max_abs() <= 1e-9);
  // Lower members too: each scaled chain vector lies in the span of the first n+1 mapped ones.
  for (std::size_t n = 0; n < 4; ++n) {
    const std::vector<PhaseVector> head(mapped.begin(), mapped.begin() + static_cast<long>(n) + 1);
    const CVector& v = sp.blocks[0].chain[n];
    CHECK(norm(span_projector(head) * v - v) <= 1e-9 * norm(v));
  }
}

TEST_CASE("general designer") {
  CriticalDesignSpec spec;
  spec.target = {{-I, 4}};
  spec.initial_stiffness = RealMatrix{{4.5, -1.5}, {-1.5, 1.2}};
  spec.initial_damping = RealMatrix{{3.5, 0.2}, {0.2, 0.4}};
  const DesignResult r = design_critical(spec);
  CHECK(r.converged);
  CHECK(r.residual <= 1e-10);
  const Spectrum sp = compute_spectrum(r.system);
  CHECK(sp.blocks.size() == 1);

  CriticalDesignSpec bad = spec;
  bad.target = {{{1, -1}, 4}};  // mirror root missing
  CHECK_THROWS_AS(design_critical(bad), DomainError);
  bad.target = {{-I, 3}};
  CHECK_THROWS_AS(design_critical(bad), DomainError);
}

TEST_CASE("catalog contents") {
  CHECK(catalog().size() == 5);
  const CatalogEntry& q = catalog_entry("quartic-jb4");
  CHECK(q.perturbations[0].xi.value() == cplx{-2, 0});
  const CatalogEntry& c = catalog_entry("cubic-jb3");
  REQUIRE(c.blocks.size() == 2);
  CHECK(c.blocks[0].size == 3);
  CHECK(c.blocks[1].omega == cplx{0, -4});
  CHECK(catalog_entry("double-jb2").perturbations[0].xi.value() == cplx{-9.0 / 32, -12.0 / 32});
  CHECK_THROWS_AS(catalog_entry("nope"), DomainError);

  // Surd and phase helpers.
  CHECK(surd_value(Surd::Sqrt15) * surd_value(Surd::Sqrt15) == doctest::Approx(15.0));
  CHECK(std::abs(std::pow(phase_value(Phase::ExpIPiOver4), 2) - I) < 1e-15);
  CHECK(std::abs(phase_value(Phase::ExpIPiOver4) * phase_value(Phase::ExpMinusIPiOver4) - 1.0) < 1e-15);
  CHECK(std::string(surd_name(Surd::Sqrt2)) == "sqrt2");
}
