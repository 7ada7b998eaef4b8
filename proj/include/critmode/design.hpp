// Copyright the critmode authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "critmode/jordan.hpp"

namespace critmode {

// ---------------------------------------------------------------------------
// Closed-form critical N=2 systems. Damping follows the library convention
// (Gamma is the full damping matrix); the constraint equations below use
// gamma = Gamma / 2.

/// K = [[e^y cosh x, sinh x], [sinh x, e^{-y} cosh x]] with gamma solving
///   g11 + g22 = 2,  k11 + k22 + 4 (g11 g22 - g12^2) = 6,
///   k11 g22 + k22 g11 - 2 k12 g12 = 2,
/// taking the larger root for g11. det(H - w) = (w + i)^4. Adds a warning
/// when cosh x cosh y > 3 (Gamma not positive semidefinite).
OscillatorSystem quartic_critical(double x, double y);

/// Triple root at -i and a simple root at -i b, in the Gamma eigenbasis
/// (g12 = 0). k12 takes the sign `k12_sign`. Throws DomainError for b = 1,
/// g22 = g11, or k11 k22 < b.
OscillatorSystem cubic_critical(double b, double gamma11, int k12_sign = 1);

/// Two size-2 blocks at -i +- b with Gamma = diag(4, 0) and k12 < 0.
/// Tends to the quartic fixture as b -> 0. Throws DomainError for b <= 0.
OscillatorSystem double2_critical(double b);

/// K -> a^2 K, Gamma -> a Gamma; eigenvalues scale by a.
OscillatorSystem scale_system(const OscillatorSystem& sys, double a);

/// Residuals of the four coefficient constraints for each family, in the
/// order listed above (det K, trace gamma, k-trace, mixed).
std::array<double, 4> quartic_constraints(const OscillatorSystem& sys);
std::array<double, 4> cubic_constraints(const OscillatorSystem& sys, double b);
std::array<double, 4> double2_constraints(const OscillatorSystem& sys, double b);

/// prod (w - r)^m as a polynomial, for comparison with char_poly(H).
ComplexPolynomial target_polynomial(const std::vector<std::pair<cplx, std::size_t>>& roots);

/// Max |coefficient difference| between char_poly(H) and the target.
double target_residual(const OscillatorSystem& sys, const std::vector<std::pair<cplx, std::size_t>>& roots);

// ---------------------------------------------------------------------------
// General designer (no closed form): Levenberg-Marquardt on the entries of
// symmetric K and Gamma, minimizing the characteristic-polynomial
// coefficient residual plus a penalty on negative eigenvalues of Gamma and
// non-positive eigenvalues of K.

struct CriticalDesignSpec {
  std::vector<std::pair<cplx, std::size_t>> target;  ///< (root, multiplicity), total 2N
  RealMatrix initial_stiffness;
  RealMatrix initial_damping;
  std::size_t max_iterations = 200;
  double tolerance = 1e-12;
  double penalty = 1e3;
};

struct DesignResult {
  OscillatorSystem system;
  double residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Throws DomainError if multiplicities do not add up to 2N or the roots
/// are not closed under w -> -w*.
DesignResult design_critical(const CriticalDesignSpec& spec);

// ---------------------------------------------------------------------------
// Catalog of exact fixtures.

enum class Surd { One, Sqrt2, Sqrt6, Sqrt15 };
enum class Phase { One, I, ExpIPiOver4, ExpMinusIPiOver4 };

const char* surd_name(Surd s);
const char* phase_name(Phase p);
double surd_value(Surd s);
cplx phase_value(Phase p);

/// (num / den) * surd * phase * (a_k + i b_k).
struct ExactVector {
  long num = 1;
  long den = 1;
  Surd surd = Surd::One;
  Phase phase = Phase::One;
  std::vector<std::array<long, 2>> entries;

  PhaseVector evaluate() const;
};

/// (re + i im) / den.
struct GaussianRational {
  long re = 0;
  long im = 0;
  long den = 1;
  cplx value() const { return {static_cast<double>(re) / static_cast<double>(den), static_cast<double>(im) / static_cast<double>(den)}; }
};

struct ExpectedBlock {
  cplx omega;
  std::size_t size = 1;
};

struct BlockFixture {
  ExpectedBlock block;
  std::vector<ExactVector> chain;
  std::vector<ExactVector> duals;
};

struct NamedPerturbation {
  std::string name;
  RealMatrix delta_k;
  ExpectedBlock block;  ///< block whose xi is quoted
  GaussianRational xi;
  std::optional<GaussianRational> xi_prime;  ///< present for non-generic directions
};

struct CatalogEntry {
  std::string name;
  std::string description;
  OscillatorSystem system;
  std::vector<ExpectedBlock> blocks;  ///< multiset of (omega, M)
  std::vector<BlockFixture> fixtures;
  std::vector<NamedPerturbation> perturbations;
};

/// single-critical, quartic-jb4, cubic-jb3, double-jb2, crossed-pair.
const std::vector<CatalogEntry>& catalog();

/// Throws DomainError for an unknown name.
const CatalogEntry& catalog_entry(const std::string& name);

/// Largest elementwise |computed - fixture| after choosing the better of the
/// two overall signs; vectors compared in order, chain then duals.
double fixture_deviation(const JordanBlock& block, const BlockFixture& fixture);

}  // namespace critmode
