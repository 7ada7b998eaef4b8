// Copyright the critmode authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <span>
#include <string_view>

namespace critmode::kernels {

using cplx = std::complex<double>;

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa);

/// True when the running CPU (and this build) can execute `isa`.
bool isa_supported(Isa isa);

/// ISA used by the dispatching entry points below. Chosen once at startup:
/// the widest supported one, unless CRITMODE_ISA=scalar|avx2 says otherwise.
Isa active_isa();

/// Pin the dispatch target. Throws std::invalid_argument if unsupported.
void force_isa(Isa isa);

// Dispatching entry points. Lengths of the two operands must match.

/// sum_i a_i * b_i (no conjugation; the bilinear pairing).
cplx dotu(std::span<const cplx> a, std::span<const cplx> b);
/// sum_i conj(a_i) * b_i.
cplx dotc(std::span<const cplx> a, std::span<const cplx> b);
/// y += alpha * x
void axpy(cplx alpha, std::span<const cplx> x, std::span<cplx> y);

namespace scalar {
cplx dotu(std::span<const cplx> a, std::span<const cplx> b);
cplx dotc(std::span<const cplx> a, std::span<const cplx> b);
void axpy(cplx alpha, std::span<const cplx> x, std::span<cplx> y);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define CRITMODE_HAVE_AVX2_KERNELS 1
namespace avx2 {
cplx dotu(std::span<const cplx> a, std::span<const cplx> b);
cplx dotc(std::span<const cplx> a, std::span<const cplx> b);
void axpy(cplx alpha, std::span<const cplx> x, std::span<cplx> y);
}  // namespace avx2
#else
#define CRITMODE_HAVE_AVX2_KERNELS 0
#endif

}  // namespace critmode::kernels
