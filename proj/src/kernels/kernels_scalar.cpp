// Copyright the critmode authors.
// SPDX-License-Identifier: Apache-2.0

#include "critmode/kernels.hpp"

namespace critmode::kernels::scalar {

// Reference kernels. Written out on re/im parts so that the evaluation order
// matches what the vector kernels compute per lane.

cplx dotu(std::span<const cplx> a, std::span<const cplx> b) {
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    re += a[i].real() * b[i].real() - a[i].imag() * b[i].imag();
    im += a[i].real() * b[i].imag() + a[i].imag() * b[i].real();
  }
  return {re, im};
}

cplx dotc(std::span<const cplx> a, std::span<const cplx> b) {
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    re += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
    im += a[i].real() * b[i].imag() - a[i].imag() * b[i].real();
  }
  return {re, im};
}

void axpy(cplx alpha, std::span<const cplx> x, std::span<cplx> y) {
  const double ar = alpha.real(), ai = alpha.imag();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xr = x[i].real(), xi = x[i].imag();
    y[i] = cplx(y[i].real() + (ar * xr - ai * xi), y[i].imag() + (ar * xi + ai * xr));
  }
}

}  // namespace critmode::kernels::scalar
