// Copyright the critmode authors.
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "critmode/kernels.hpp"

namespace critmode::kernels {

namespace {

Isa detect() {
  if (const char* env = std::getenv("CRITMODE_ISA")) {
    const std::string want(env);
    if (want == "scalar") return Isa::Scalar;
    if (want == "avx2" && isa_supported(Isa::Avx2)) return Isa::Avx2;
  }
  return isa_supported(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "unknown";
}

bool isa_supported(Isa isa) {
  if (isa == Isa::Scalar) return true;
#if CRITMODE_HAVE_AVX2_KERNELS
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void force_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw std::invalid_argument("kernel ISA not supported here: " + std::string(isa_name(isa)));
  }
  current().store(isa, std::memory_order_relaxed);
}

cplx dotu(std::span<const cplx> a, std::span<const cplx> b) {
#if CRITMODE_HAVE_AVX2_KERNELS
  if (active_isa() == Isa::Avx2) return avx2::dotu(a, b);
#endif
  return scalar::dotu(a, b);
}

cplx dotc(std::span<const cplx> a, std::span<const cplx> b) {
#if CRITMODE_HAVE_AVX2_KERNELS
  if (active_isa() == Isa::Avx2) return avx2::dotc(a, b);
#endif
  return scalar::dotc(a, b);
}

void axpy(cplx alpha, std::span<const cplx> x, std::span<cplx> y) {
#if CRITMODE_HAVE_AVX2_KERNELS
  if (active_isa() == Isa::Avx2) return avx2::axpy(alpha, x, y);
#endif
  scalar::axpy(alpha, x, y);
}

}  // namespace critmode::kernels
