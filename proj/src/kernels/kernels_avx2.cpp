// Copyright the critmode authors.
// SPDX-License-Identifier: Apache-2.0

#include "critmode/kernels.hpp"

#if CRITMODE_HAVE_AVX2_KERNELS

#include <immintrin.h>

namespace critmode::kernels::avx2 {

namespace {

// Two std::complex<double> per __m256d, interleaved (re0, im0, re1, im1).
inline const double* raw(std::span<const cplx> s) { return reinterpret_cast<const double*>(s.data()); }
inline double* raw(std::span<cplx> s) { return reinterpret_cast<double*>(s.data()); }

__attribute__((target("avx2,fma"))) inline cplx hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return {_mm_cvtsd_f64(s), _mm_cvtsd_f64(_mm_unpackhi_pd(s, s))};
}

// acc_rr accumulates (ar*br, ai*br), acc_ii accumulates (ai*bi, ar*bi).
__attribute__((target("avx2,fma"))) inline void accumulate(__m256d va, __m256d vb, __m256d& acc_rr, __m256d& acc_ii) {
  const __m256d b_re = _mm256_movedup_pd(vb);
  const __m256d b_im = _mm256_permute_pd(vb, 0xF);
  const __m256d a_sw = _mm256_permute_pd(va, 0x5);
  acc_rr = _mm256_fmadd_pd(va, b_re, acc_rr);
  acc_ii = _mm256_fmadd_pd(a_sw, b_im, acc_ii);
}

}  // namespace

__attribute__((target("avx2,fma"))) cplx dotu(std::span<const cplx> a, std::span<const cplx> b) {
  const std::size_t n = a.size();
  const std::size_t body = n & ~std::size_t{1};
  const double* pa = raw(a);
  const double* pb = raw(b);
  __m256d acc_rr = _mm256_setzero_pd();
  __m256d acc_ii = _mm256_setzero_pd();
  for (std::size_t i = 0; i < body; i += 2) {
    accumulate(_mm256_loadu_pd(pa + 2 * i), _mm256_loadu_pd(pb + 2 * i), acc_rr, acc_ii);
  }
  // (re, im) = (rr.re - ii.re, rr.im + ii.im)
  cplx sum = hsum(_mm256_addsub_pd(acc_rr, acc_ii));
  for (std::size_t i = body; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

__attribute__((target("avx2,fma"))) cplx dotc(std::span<const cplx> a, std::span<const cplx> b) {
  const std::size_t n = a.size();
  const std::size_t body = n & ~std::size_t{1};
  const double* pa = raw(a);
  const double* pb = raw(b);
  const __m256d conj_mask = _mm256_set_pd(-0.0, 0.0, -0.0, 0.0);
  __m256d acc_rr = _mm256_setzero_pd();
  __m256d acc_ii = _mm256_setzero_pd();
  for (std::size_t i = 0; i < body; i += 2) {
    const __m256d va = _mm256_xor_pd(_mm256_loadu_pd(pa + 2 * i), conj_mask);
    accumulate(va, _mm256_loadu_pd(pb + 2 * i), acc_rr, acc_ii);
  }
  cplx sum = hsum(_mm256_addsub_pd(acc_rr, acc_ii));
  for (std::size_t i = body; i < n; ++i) sum += std::conj(a[i]) * b[i];
  return sum;
}

__attribute__((target("avx2,fma"))) void axpy(cplx alpha, std::span<const cplx> x, std::span<cplx> y) {
  const std::size_t n = x.size();
  const std::size_t body = n & ~std::size_t{1};
  const double* px = raw(x);
  double* py = raw(y);
  const __m256d al_re = _mm256_set1_pd(alpha.real());
  const __m256d al_im = _mm256_set1_pd(alpha.imag());
  for (std::size_t i = 0; i < body; i += 2) {
    const __m256d vx = _mm256_loadu_pd(px + 2 * i);
    const __m256d vx_sw = _mm256_permute_pd(vx, 0x5);
    const __m256d prod = _mm256_addsub_pd(_mm256_mul_pd(vx, al_re), _mm256_mul_pd(vx_sw, al_im));
    _mm256_storeu_pd(py + 2 * i, _mm256_add_pd(_mm256_loadu_pd(py + 2 * i), prod));
  }
  for (std::size_t i = body; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace critmode::kernels::avx2

#endif
