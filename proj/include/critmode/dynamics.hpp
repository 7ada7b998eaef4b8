// Copyright the critmode authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "critmode/jordan.hpp"

namespace critmode {

/// C_l(w, t) = (-i t)^l / l! e^{-i w t}. The factorial is taken in log space.
cplx evolution_coefficient(std::size_t l, cplx omega, double t);

/// f_{j,n}(t) = sum_{l<=n} C_l(w_j, t) f_{j,n-l}. Throws DomainError if n >= M.
PhaseVector evolve_basis_vector(const JordanBlock& block, std::size_t n, double t);

/// sum_{j,n} f_{j,n}(t) (f_{j,M-1-n}, phi).
PhaseVector evolve_state(const Spectrum& spectrum, std::span<const cplx> phi, double t);

/// Same, restricted to the blocks whose indices are listed.
PhaseVector evolve_blocks(const Spectrum& spectrum, std::span<const std::size_t> blocks, std::span<const cplx> phi, double t);

struct GreensFunctionSample {
  enum class Domain { Time, Frequency };
  Domain domain = Domain::Time;
  cplx argument;  ///< t (real) or w
  ComplexMatrix matrix;
};

/// theta(t) sum f_{j,n}(t) <f^{j,n}|. t = 0 is taken as 0+.
GreensFunctionSample greens_time(const Spectrum& spectrum, double t);

/// Pole expansion; solves (H - w) G = -i I. Throws DomainError within
/// cluster_tol of an eigenvalue.
GreensFunctionSample greens_freq(const Spectrum& spectrum, cplx omega);

struct SumRuleReport {
  /// Rule 2 is reported as (sum - I); all four should vanish.
  std::array<ComplexMatrix, 4> residual;
  std::array<double, 4> max_abs{};
  double max() const noexcept;
  bool pass(double threshold) const noexcept { return max() <= threshold; }
};

/// The four coordinate-only identities implied by completeness.
SumRuleReport check_sum_rules(const Spectrum& spectrum);

/// Classic fixed-step RK4 on x' = p, p' = -K x - Gamma p, run separately on
/// the real and imaginary parts. Does not touch H or the Jordan basis.
PhaseVector integrate_rk4(const OscillatorSystem& sys, std::span<const cplx> phi, double t, double step = 1e-4);

/// States at each of the (ascending, non-negative) times in one sweep.
std::vector<PhaseVector> integrate_rk4(const OscillatorSystem& sys, std::span<const cplx> phi, std::span<const double> times,
                                       double step = 1e-4);

/// (|p|^2 + Re x^H K x) / 2.
double energy(const OscillatorSystem& sys, std::span<const cplx> phi);

// ---------------------------------------------------------------------------
// Small-denominator cancellation near a critical point.

struct CancellationSample {
  double epsilon = 0.0;
  cplx lambda;                        ///< principal M-th root of eps * xi
  CVector cluster;                    ///< perturbed eigenvalues of the cluster
  std::vector<double> mode_weights;   ///< ||f_k|| |(f_k, phi)| / |(f_k, f_k)|
  double max_mode_weight = 0.0;
  double predicted_weight = 0.0;      ///< leading term ||f_0|| |(f_0, phi)| / (M |lambda|^{M-1})
  double difference = 0.0;            ///< max over t of ||cluster sum - Jordan evolution||
};

struct CancellationReport {
  std::size_t block = 0;
  std::size_t block_size = 0;
  cplx xi;
  std::vector<double> times;
  std::vector<CancellationSample> samples;
  double weight_slope = 0.0;      ///< d log(max weight) / d log|lambda|
  double difference_slope = 0.0;  ///< d log(difference) / d log|lambda|
  double bound_constant = 0.0;    ///< max difference / |lambda|
};

/// Compares the naive modal sum over the perturbed cluster with the Jordan
/// evolution at the critical point. The cluster eigenpairs are polished in
/// quad precision because the modal weights cancel to |lambda|^{2M-2}.
/// Throws DomainError unless the spectrum has exactly one nontrivial block
/// or the perturbed cluster is still degenerate.
CancellationReport cluster_cancellation_experiment(const Spectrum& critical, const RealMatrix& dk, std::span<const double> epsilons,
                                                   std::span<const cplx> phi, std::span<const double> times);

/// Least-squares slope of log y against log x.
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace critmode
