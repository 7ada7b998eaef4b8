// Copyright the critmode authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "critmode/jordan.hpp"

namespace critmode {

/// K -> K + epsilon * delta_k. Damping is never perturbed.
struct Perturbation {
  RealMatrix delta_k;
  double epsilon = 0.0;

  /// Throws DomainError unless delta_k is square and symmetric.
  static Perturbation make(RealMatrix delta_k, double epsilon = 0.0);
};

/// Single-entry direction e_rc (symmetrized for r != c).
RealMatrix unit_direction(std::size_t n, std::size_t r, std::size_t c);
/// N=2 direction [[m11, m12], [m12, m22]].
RealMatrix mu_direction(double m11, double m12, double m22);

/// dH = i [[0, 0], [-dK, 0]].
ComplexMatrix delta_h(const RealMatrix& dk);

/// x(f_0)^T dK x(f_0).
cplx xi_generic(const JordanBlock& block, const RealMatrix& dk);
/// (f_0, dH f_0) through the phase-space pairing; equals xi_generic.
cplx xi_bilinear(const OscillatorSystem& sys, const JordanBlock& block, const RealMatrix& dk);
/// x(f_1)^T dK x(f_0). Zero for M = 1.
cplx xi_prime(const JordanBlock& block, const RealMatrix& dk);

/// 1e-8 ||dK||_max ||f_0||^2: below this xi counts as zero.
double genericity_threshold(const JordanBlock& block, const RealMatrix& dk);
bool is_generic(const JordanBlock& block, const RealMatrix& dk);

struct SplitPrediction {
  cplx xi;
  cplx lambda;                            ///< principal M-th root of eps * xi
  CVector shifts;                         ///< lambda zeta_k, zeta_k = exp(2 pi i k / M)
  CVector eigenvalues;                    ///< omega_j + shifts
  std::vector<PhaseVector> split_vectors; ///< sum_n f_n (lambda zeta_k)^n
  CVector norms;                          ///< M (lambda zeta_k)^{M-1}
};

/// Generic first-order splitting. Throws DomainError for a non-generic dK.
SplitPrediction predict_splitting(const JordanBlock& block, const RealMatrix& dk, double eps);

struct NonGenericPrediction {
  cplx xi;
  cplx xi_prime;
  std::size_t unshifted_count = 1;
  CVector reduced_shifts;  ///< M-1 roots of shift^{M-1} = 2 eps xi'
  CVector eigenvalues;     ///< omega_j (unshifted) followed by omega_j + reduced shifts
  /// M = 2: the eps^2 J_2 term is of the same order, the shift is only an
  /// order-of-magnitude estimate.
  bool j2_same_order = false;
};

/// Throws DomainError if dK is generic or M = 1, and DomainError
/// ("higher-order nongenericity") if xi' vanishes as well.
NonGenericPrediction xi_nongeneric(const JordanBlock& block, const RealMatrix& dk, double eps = 0.0);

struct J1Result {
  cplx closed_form;             ///< N = 2 formula; valid only if has_closed_form
  bool has_closed_form = false;
  cplx finite_difference;       ///< Richardson-extrapolated central difference
  double difference = 0.0;      ///< |closed - fd| / max(1, |fd|), 0 without a closed form
  cplx xi;
  cplx other_roots;             ///< prod over eigenvalues outside the block of (w_o - w_j)
  cplx expected;                ///< -xi * other_roots
  double relation_defect = 0.0; ///< |J1 - expected| / max(1, |expected|)
};

/// J1(w_j) = (-1)^M d/deps det(H(eps) - w_j) at eps = 0. Throws DomainError
/// unless the chosen block is nontrivial.
J1Result j1_coefficient(const Spectrum& spectrum, std::size_t block, const RealMatrix& dk);

/// Eigenvalues of the full perturbed H, sorted by real then imaginary part.
CVector exact_perturbed_spectrum(const OscillatorSystem& sys, const RealMatrix& dk, double eps);

/// Minimum-cost assignment, row r -> column result[r]. Square costs only.
std::vector<std::size_t> hungarian_assignment(const std::vector<std::vector<double>>& cost);

/// The m eigenvalues in `values` nearest to `omega`. Throws DomainError if
/// the cluster is not separated: its farthest member must lie within half
/// the distance to the nearest eigenvalue outside it.
CVector cluster_near(std::span<const cplx> values, cplx omega, std::size_t m);

/// `numerical` reordered to pair with `predicted` (Hungarian, |difference|).
CVector match_to(std::span<const cplx> predicted, std::span<const cplx> numerical);

struct SplittingFit {
  double exponent = 0.0;               ///< slope of mean |shift| of the non-singleton modes
  double residual = 0.0;               ///< rms log residual of that fit
  std::vector<double> singleton_exponents;  ///< one per excluded small mode
  std::vector<double> singleton_residuals;
};

/// Log-log regression of |shift| against |eps|. At each eps the cluster
/// shifts are sorted by magnitude; the `singletons` smallest are fitted on
/// their own. Needs eps of one sign spanning at least `min_decades`.
SplittingFit fit_splitting_exponent(const OscillatorSystem& sys, cplx omega, std::size_t m, const RealMatrix& dk,
                                    std::span<const double> eps_grid, std::size_t singletons = 0, double min_decades = 3.0);

/// (dH')^k_{k'} in the split basis with the n'=0, n=M-1 element removed:
/// (1/M) sum zeta_{k'}^{n'} zeta_k^{-n} lambda^{n'-n} (f_{M-1-n}, dH f_{n'}).
ComplexMatrix deltaH_prime_matrix(const OscillatorSystem& sys, const JordanBlock& block, const RealMatrix& dk, cplx lambda);

struct SecondOrderPrediction {
  SplitPrediction first;
  CVector corrections;  ///< eps (dH')^k_k, O(lambda^2)
  CVector eigenvalues;  ///< first-order eigenvalues plus corrections
};

SecondOrderPrediction predict_second_order(const OscillatorSystem& sys, const JordanBlock& block, const RealMatrix& dk, double eps);

}  // namespace critmode
