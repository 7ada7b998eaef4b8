// Copyright the critmode authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>

#include "critmode/design.hpp"
#include "critmode/dynamics.hpp"
#include "critmode/errors.hpp"
#include "critmode/perturbation.hpp"
#include "support.hpp"

using namespace critmode;

namespace {

const cplx I{0, 1};

std::vector<Spectrum> catalog_spectra() {
  std::vector<Spectrum> out;
  for (const CatalogEntry& e : catalog()) out.push_back(compute_spectrum(e.system));
  return out;
}

CVector real_vector(std::size_t n) {
  CVector v(n);
  for (auto& z : v) z = testing::uniform(-1, 1);
  return v;
}

double max_defect_resolvent(const Spectrum& s, cplx w) {
  const ComplexMatrix g = greens_freq(s, w).matrix;
  ComplexMatrix r = shifted(evolution_operator(s.system), w) * g;
  for (std::size_t k = 0; k < r.rows(); ++k) r(k, k) += I;
  return r.max_abs();
}

}  // namespace

TEST_CASE("evolution coefficient") {
  const cplx w{0.3, -0.7};
  CHECK(std::abs(evolution_coefficient(0, w, 1.3) - std::exp(-I * w * 1.3)) < 1e-15);
  CHECK(std::abs(evolution_coefficient(3, w, 2.0) - std::pow(-2.0 * I, 3) / 6.0 * std::exp(-I * w * 2.0)) < 1e-14);
  // Large order and time stay finite.
  CHECK(std::isfinite(std::abs(evolution_coefficient(40, {0, -1}, 80.0))));
}

TEST_CASE("evolve_basis_vector") {
  const Spectrum s = compute_spectrum(build_system(RealMatrix{{1}}, RealMatrix{{2}}));
  const JordanBlock& b = s.blocks[0];
  for (double t : {0.0, 0.5, 2.0}) {
    // Critical damping closed form: x = -i t e^{-t}, p = x'.
    const PhaseVector f1 = evolve_basis_vector(b, 1, t);
    const PhaseVector f0 = evolve_basis_vector(b, 0, t);
    const double sign = b.chain[1][1].imag() < 0 ? 1.0 : -1.0;  // one overall sign per block
    CHECK(std::abs(f1[0] - sign * (-I * t * std::exp(-t))) < 1e-14);
    CHECK(std::abs(f1[1] - sign * (-I * (1.0 - t) * std::exp(-t))) < 1e-14);
    CHECK(testing::max_diff(f0, std::exp(-t) * b.chain[0]) < 1e-14);
  }
  CHECK_THROWS_AS(evolve_basis_vector(b, 2, 1.0), DomainError);

  // i d/dt f_n(t) = w f_n(t) + f_{n-1}(t), central differences.
  const double h = 1e-4;
  for (const Spectrum& sp : catalog_spectra())
    for (const JordanBlock& blk : sp.blocks)
      for (std::size_t n = 0; n < blk.size(); ++n)
        for (double t : {0.3, 1.7}) {
          const CVector d = (1.0 / (2.0 * h)) * (evolve_basis_vector(blk, n, t + h) - evolve_basis_vector(blk, n, t - h));
          CVector r = I * d - blk.omega * evolve_basis_vector(blk, n, t);
          if (n > 0) r = r - evolve_basis_vector(blk, n - 1, t);
          CHECK(max_abs(r) <= 1e-6 * std::max(1.0, max_abs(blk.chain[n])));
        }
}

TEST_CASE("evolve_state: identity at t = 0 and the RK4 oracle") {
  std::vector<Spectrum> spectra = catalog_spectra();
  for (int k = 0; k < 20; ++k) spectra.push_back(compute_spectrum(testing::random_system(1 + static_cast<std::size_t>(k % 3))));
  const std::vector<double> times{0.5, 1.0, 2.0, 5.0};
  for (const Spectrum& s : spectra) {
    for (int k = 0; k < 5; ++k) {
      const CVector phi = testing::random_vector(s.system.dim());
      CHECK(norm(evolve_state(s, phi, 0.0) - phi) <= 1e-9 * norm(phi));
    }
    const CVector phi = testing::random_vector(s.system.dim());
    const auto rk = integrate_rk4(s.system, phi, times);
    for (std::size_t k = 0; k < times.size(); ++k) {
      const CVector ev = evolve_state(s, phi, times[k]);
      CHECK(norm(ev - rk[k]) <= 1e-8 * norm(rk[k]));
    }
  }
}

TEST_CASE("semigroup and energy dissipation") {
  for (const Spectrum& s : catalog_spectra()) {
    const CVector phi = testing::random_vector(s.system.dim());
    for (auto [t1, t2] : {std::pair{0.5, 1.0}, std::pair{2.0, 3.0}}) {
      const CVector two = evolve_state(s, evolve_state(s, phi, t1), t2);
      const CVector one = evolve_state(s, phi, t1 + t2);
      CHECK(norm(two - one) <= 1e-8 * std::max(1.0, norm(one)));
    }
    // Gamma >= 0 for every catalog system.
    const CVector x0 = real_vector(s.system.dim());
    double prev = energy(s.system, x0);
    for (int k = 1; k <= 50; ++k) {
      const double e = energy(s.system, evolve_state(s, x0, 0.1 * k));
      CHECK(e <= prev + 1e-12);
      prev = e;
    }
  }
}

TEST_CASE("time-domain Green's function") {
  for (const Spectrum& s : catalog_spectra()) {
    const std::size_t d = s.system.dim();
    CHECK(greens_time(s, -1.0).matrix.max_abs() == 0.0);
    const ComplexMatrix g0 = greens_time(s, 0.0).matrix;
    CHECK((g0 - ComplexMatrix::identity(d)).max_abs() <= 1e-9);
    const CVector phi = testing::random_vector(d);
    for (double t : {0.7, 3.0}) CHECK(norm(greens_time(s, t).matrix * phi - evolve_state(s, phi, t)) <= 1e-12 * std::max(1.0, norm(phi)));
  }
}

TEST_CASE("frequency-domain Green's function") {
  std::vector<Spectrum> spectra = catalog_spectra();
  for (int k = 0; k < 5; ++k) spectra.push_back(compute_spectrum(testing::random_system(2)));
  for (const Spectrum& s : spectra) {
    CHECK(max_defect_resolvent(s, {1, 1}) <= 1e-9);
    for (int k = 0; k < 20; ++k) CHECK(max_defect_resolvent(s, {testing::uniform(-3, 3), testing::uniform(-3, 3)}) <= 1e-9);
    // Direct resolvent oracle -i (H - w)^{-1}.
    const cplx w{0.4, 0.9};
    const ComplexMatrix direct = cplx{0, -1} * lu_solve(shifted(evolution_operator(s.system), w), ComplexMatrix::identity(s.system.dim()));
    CHECK((greens_freq(s, w).matrix - direct).max_abs() <= 1e-9);
  }

  const Spectrum q = compute_spectrum(catalog_entry("quartic-jb4").system);
  CHECK_THROWS_AS(greens_freq(q, {0, -1}), DomainError);

  // Leading order i/w far away.
  for (double y : {1e3, 1e5}) {
    const cplx w{0, y};
    CHECK(std::abs(greens_freq(q, w).matrix.max_abs() * y - 1.0) < 10.0 / y);
  }

  // Pole order equals M.
  std::vector<double> deltas{1e-2, 1e-3, 1e-4}, mags;
  for (double dlt : deltas) mags.push_back(greens_freq(q, cplx{0, -1} + dlt).matrix.max_abs());
  CHECK(std::abs(loglog_slope(deltas, mags) + 4.0) < 0.05);
  const Spectrum c = compute_spectrum(catalog_entry("cubic-jb3").system);
  mags.clear();
  for (double dlt : deltas) mags.push_back(greens_freq(c, cplx{0, -1} + dlt).matrix.max_abs());
  CHECK(std::abs(loglog_slope(deltas, mags) + 3.0) < 0.05);
}

TEST_CASE("frequency-domain Green's function is the Fourier transform of the time-domain one") {
  for (const char* name : {"single-critical", "quartic-jb4", "double-jb2"}) {
    const Spectrum s = compute_spectrum(catalog_entry(name).system);
    const cplx w{0.8, 0.5};
    // Composite Simpson on [0, 40].
    const int steps = 8000;
    const double h = 40.0 / steps;
    ComplexMatrix acc(s.system.dim(), s.system.dim());
    for (int k = 0; k <= steps; ++k) {
      const double t = k * h;
      const double wgt = (k == 0 || k == steps) ? 1.0 : (k % 2 ? 4.0 : 2.0);
      acc += (wgt * h / 3.0 * std::exp(I * w * t)) * greens_time(s, t).matrix;
    }
    CHECK((acc - greens_freq(s, w).matrix).max_abs() <= 1e-4);
  }
}

TEST_CASE("sum rules") {
  std::vector<Spectrum> spectra = catalog_spectra();
  for (int k = 0; k < 20; ++k) spectra.push_back(compute_spectrum(testing::random_system(1 + static_cast<std::size_t>(k % 4))));
  for (const Spectrum& s : spectra) {
    const SumRuleReport r = check_sum_rules(s);
    CHECK(r.pass(1e-9));
    for (const auto& m : r.residual) CHECK(m.rows() == s.system.n());
  }
}

TEST_CASE("simple-mode sum rules by hand") {
  // Completeness sum_j f_j f_j^T g = I read off block by block, with
  // g = i [[Gamma, I], [I, 0]]: sum i x x^T = 0 and sum i x p^T = I.
  const Spectrum s = compute_spectrum(testing::random_system(2));
  ComplexMatrix xx(2, 2), xp(2, 2);
  for (const JordanBlock& b : s.blocks) {
    REQUIRE(b.size() == 1);
    const auto& f = b.chain[0];
    for (std::size_t a = 0; a < 2; ++a)
      for (std::size_t c = 0; c < 2; ++c) {
        xx(a, c) += I * f[a] * f[c];
        xp(a, c) += I * f[a] * f[2 + c];
      }
  }
  CHECK(xx.max_abs() < 1e-12);
  CHECK((xp - ComplexMatrix::identity(2)).max_abs() < 1e-12);
}

TEST_CASE("cancellation near the quartic critical point") {
  const Spectrum q = compute_spectrum(catalog_entry("quartic-jb4").system);
  const std::vector<double> eps{1e-10, 1e-9, 1e-8, 1e-7, 1e-6};
  const CVector phi{1, 0.5, -0.25, 0.75};
  const std::vector<double> times{0, 0.5, 1, 2, 5};
  const CancellationReport r = cluster_cancellation_experiment(q, unit_direction(2, 0, 0), eps, phi, times);
  CHECK(std::abs(r.xi + 2.0) < 1e-12);
  CHECK(std::abs(r.weight_slope + 3.0) <= 0.2);
  for (const auto& s : r.samples) {
    CHECK(std::abs(std::abs(s.lambda) - std::pow(2.0 * s.epsilon, 0.25)) < 1e-12);
    CHECK(s.difference <= r.bound_constant * std::abs(s.lambda) * (1 + 1e-12));
    CHECK(s.max_mode_weight / s.predicted_weight == doctest::Approx(1.0).epsilon(0.05));
  }
  // The difference is analytic in eps: it scales like eps = |lambda|^4.
  CHECK(std::abs(r.difference_slope - 4.0) < 0.2);
}

TEST_CASE("cancellation on the cubic block and preconditions") {
  const Spectrum c = compute_spectrum(catalog_entry("cubic-jb3").system);
  const std::vector<double> eps{1e-10, 1e-9, 1e-8, 1e-7, 1e-6};
  const CVector phi{1, 0.5, -0.25, 0.75};
  const std::vector<double> times{0, 1, 2};
  const CancellationReport r = cluster_cancellation_experiment(c, unit_direction(2, 0, 0), eps, phi, times);
  CHECK(r.block_size == 3);
  CHECK(std::abs(r.weight_slope + 2.0) <= 0.2);

  const Spectrum d = compute_spectrum(catalog_entry("double-jb2").system);
  CHECK_THROWS_AS(cluster_cancellation_experiment(d, unit_direction(2, 0, 0), eps, phi, times), DomainError);
  const Spectrum q = compute_spectrum(catalog_entry("quartic-jb4").system);
  CHECK_THROWS_AS(cluster_cancellation_experiment(q, mu_direction(1, -1.5, 2), eps, phi, times), DomainError);
}
