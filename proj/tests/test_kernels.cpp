// Copyright the critmode authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "critmode/kernels.hpp"
#include "support.hpp"

using namespace critmode;
namespace k = critmode::kernels;

namespace {

// Plain loop, written independently of the scalar kernels.
cplx naive_dot(const CVector& a, const CVector& b, bool conjugate) {
  long double re = 0, im = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const cplx x = conjugate ? std::conj(a[i]) : a[i];
    re += static_cast<long double>(x.real()) * b[i].real() - static_cast<long double>(x.imag()) * b[i].imag();
    im += static_cast<long double>(x.real()) * b[i].imag() + static_cast<long double>(x.imag()) * b[i].real();
  }
  return {static_cast<double>(re), static_cast<double>(im)};
}

}  // namespace

TEST_CASE("scalar kernels agree with a long-double loop") {
  for (std::size_t n : {0u, 1u, 2u, 3u, 7u, 16u, 33u}) {
    const CVector a = testing::random_vector(n), b = testing::random_vector(n);
    CHECK(std::abs(k::scalar::dotu(a, b) - naive_dot(a, b, false)) <= 1e-14 * (1.0 + n));
    CHECK(std::abs(k::scalar::dotc(a, b) - naive_dot(a, b, true)) <= 1e-14 * (1.0 + n));
    CVector y = b;
    const cplx alpha{0.3, -1.7};
    k::scalar::axpy(alpha, a, y);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y[i] - (b[i] + alpha * a[i])) <= 1e-15 * 4);
  }
}

#if CRITMODE_HAVE_AVX2_KERNELS
TEST_CASE("avx2 kernels match the scalar reference") {
  if (!k::isa_supported(k::Isa::Avx2)) {
    MESSAGE("CPU lacks AVX2/FMA, skipping");
    return;
  }
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = static_cast<std::size_t>(testing::uniform(0, 40));
    const CVector a = testing::random_vector(n), b = testing::random_vector(n);
    const double scale = 1e-15 * (1.0 + static_cast<double>(n));
    CHECK(std::abs(k::avx2::dotu(a, b) - k::scalar::dotu(a, b)) <= scale);
    CHECK(std::abs(k::avx2::dotc(a, b) - k::scalar::dotc(a, b)) <= scale);
    const cplx alpha = testing::random_cplx();
    CVector ys = b, yv = b;
    k::scalar::axpy(alpha, a, ys);
    k::avx2::axpy(alpha, a, yv);
    CHECK(testing::max_diff(ys, yv) <= 1e-15 * 4);
  }
}
#endif

TEST_CASE("dispatch follows the pinned ISA") {
  const k::Isa before = k::active_isa();
  k::force_isa(k::Isa::Scalar);
  CHECK(k::active_isa() == k::Isa::Scalar);
  const CVector a = testing::random_vector(9), b = testing::random_vector(9);
  CHECK(k::dotu(a, b) == k::scalar::dotu(a, b));
  CHECK(k::dotc(a, b) == k::scalar::dotc(a, b));
  if (k::isa_supported(k::Isa::Avx2)) {
    k::force_isa(k::Isa::Avx2);
    CHECK(k::active_isa() == k::Isa::Avx2);
    CHECK(std::abs(k::dotu(a, b) - k::scalar::dotu(a, b)) <= 1e-14);
  } else {
    CHECK_THROWS_AS(k::force_isa(k::Isa::Avx2), std::invalid_argument);
  }
  k::force_isa(before);
}

TEST_CASE("environment override is honoured at startup") {
  const char* env = std::getenv("CRITMODE_ISA");
  if (env && std::string(env) == "scalar") CHECK(k::active_isa() == k::Isa::Scalar);
  CHECK(k::isa_name(k::Isa::Scalar) == "scalar");
  CHECK(k::isa_name(k::Isa::Avx2) == "avx2");
}
