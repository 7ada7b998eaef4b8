// Copyright the critmode authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "critmode/linalg.hpp"
#include "critmode/oscillator.hpp"

namespace critmode {

/// Audit trail of the within-block normalization.
struct NormalizationLedger {
  CVector a_before;  ///< A_k = (f_n, f_n') with n + n' = k, k = 0..2M-2, on the raw chain
  CVector c;         ///< c_0 (rescale), then c_1..c_{M-1} (shear steps), in order applied
  CVector a_after;   ///< same diagnostics after normalization
  int sign_flip = 1; ///< overall sign applied by the deterministic sign rule
};

/// One Jordan block: (H - omega) f_n = f_{n-1}, f_{-1} = 0, normalized so that
/// (f_n, f_n') = delta_{n+n', M-1}; duals satisfy <f^n | f_n'> = delta.
struct JordanBlock {
  int label = 0;  ///< partner of j is -j; 0 for blocks on the imaginary axis
  cplx omega;
  std::vector<PhaseVector> chain;
  std::vector<PhaseVector> duals;
  NormalizationLedger ledger;
  /// s in f_{-j,n} = s i^M (-1)^n f_{j,n}^*. For a self-conjugate block the
  /// relation maps the block onto itself and s is the sign that was realized;
  /// 0 if the relation does not hold (mixed degenerate blocks).
  int conjugation_sign = 0;

  std::size_t size() const noexcept { return chain.size(); }
};

/// Distinct roots that were close enough to look degenerate but failed the
/// rank test, so they are treated as simple modes.
struct NearCriticalCluster {
  CVector eigenvalues;
  double spread = 0.0;
};

struct Spectrum {
  OscillatorSystem system;
  std::vector<JordanBlock> blocks;
  ToleranceConfig tolerances;
  std::vector<NearCriticalCluster> near_critical;

  std::size_t nu() const noexcept { return blocks.size(); }
  std::size_t dimension() const noexcept;
  /// Index of the largest block nearest to `omega`.
  std::size_t block_near(cplx omega) const;
};

/// Several blocks sharing one eigenvalue, largest first after processing.
struct CrossingGroup {
  cplx omega;
  std::vector<JordanBlock> blocks;
  std::size_t count() const noexcept { return blocks.size(); }
};

struct NormalizedChain {
  std::vector<PhaseVector> chain;
  NormalizationLedger ledger;
};

struct SpectrumDiagnostics {
  double chain_residual = 0.0;      ///< max relative defect of the chain relation
  double pairing_defect = 0.0;      ///< max |(f_a, f_b) - delta| over the whole basis
  double biorthogonality_defect = 0.0;
  double completeness_defect = 0.0; ///< on the coordinate unit vectors
  double max() const noexcept;
};

struct RepresentationReport {
  struct Block {
    double metric_deviation = 0.0;   ///< pairing matrix vs the anti-identity
    double jordan_deviation = 0.0;   ///< <f^n|H f_n'> vs omega I + superdiagonal
    double lowered_deviation = 0.0;  ///< (f_n, H f_n') vs the symmetric anti-triangular form
    ComplexMatrix metric;
    ComplexMatrix jordan;
    ComplexMatrix lowered;
  };
  std::vector<Block> blocks;
  double cross_block = 0.0;  ///< largest pairing or H element between different blocks
  double max_deviation = 0.0;
};

/// Full Jordan structure of H for `sys`: roots of det(H - w) clustered and
/// confirmed by the rank sequence of (H - w)^k, chains built and normalized,
/// degenerate blocks biorthogonalized, conjugate pairs tied together, duals
/// attached. Throws VerificationError if any invariant misses residual_tol.
Spectrum compute_spectrum(const OscillatorSystem& sys, const ToleranceConfig& tol = {});

/// Raw chain f_0..f_{M-1} for the single block of size m at omega, built
/// upward by minimum-norm solves. Throws if the chain cannot be built to
/// length m or can be extended beyond it.
std::vector<PhaseVector> build_chain(const ComplexMatrix& h, cplx omega, std::size_t m, const ToleranceConfig& tol = {});

/// Rescale, then shear f_n -> f_n + c_k f_{n-k} until (f_n, f_n') =
/// delta_{n+n', M-1}. Applies the sign rule: the largest |entry| of f_0 ends
/// up with argument in (-pi/2, pi/2].
NormalizedChain normalize_block(std::vector<PhaseVector> chain, const OscillatorSystem& sys, const ToleranceConfig& tol = {});

/// Builds the top vector of the only nontrivial block from [g f_0]^*,
/// orthogonalized against every other eigenvector, and lowers it with
/// (H - omega). Refuses unless exactly one block has size > 1.
NormalizedChain single_block_shortcut(const OscillatorSystem& sys, const Spectrum& spectrum, const ToleranceConfig& tol = {});

/// Chains for all blocks at one eigenvalue (sizes given, any order), chosen
/// top-down from nullspaces of (H - omega)^k. Not normalized.
std::vector<std::vector<PhaseVector>> degenerate_chains(const ComplexMatrix& h, cplx omega, std::vector<std::size_t> sizes,
                                                        const ToleranceConfig& tol = {});

/// Makes (f_{j,n}, f_{j',n'}) = delta_{jj'} delta_{n+n', M_j-1} across all
/// blocks of the group using only structure-preserving mixings.
CrossingGroup biorthogonalize_crossing(CrossingGroup group, const OscillatorSystem& sys, const ToleranceConfig& tol = {});

/// Labels blocks, replaces each partner chain by i^M (-1)^n f_{j,n}^*, and
/// records the realized sign on self-conjugate blocks.
Spectrum enforce_conjugation(Spectrum spectrum);

/// f^{j,n} = [g f_{j,M-1-n}]^*.
Spectrum dual_basis(Spectrum spectrum);

RepresentationReport verify_representations(const Spectrum& spectrum);

SpectrumDiagnostics diagnose(const Spectrum& spectrum);

/// sum_{j,n} f_{j,n} (f_{j,M-1-n}, phi)
PhaseVector expand_in_basis(const Spectrum& spectrum, std::span<const cplx> phi);

/// Orthogonal projector onto the span of `vectors`.
ComplexMatrix span_projector(const std::vector<PhaseVector>& vectors);

}  // namespace critmode
