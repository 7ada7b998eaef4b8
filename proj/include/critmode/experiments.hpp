// Copyright the critmode authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "critmode/perturbation.hpp"

namespace critmode {

/// eps_n = n^power * eps0 for n = 0..count-1.
std::vector<double> eps_grid(double eps0, int power, std::size_t count);

struct FigureSpec {
  int figure = 0;
  std::string system;        ///< catalog entry
  std::string perturbation;  ///< named perturbation of that entry
  int eps_power = 0;
  double expected_exponent = 0.0;
  std::size_t singletons = 0;             ///< small modes fitted on their own
  double expected_singleton_exponent = 0.0;
};

/// Figures 1 to 5. Throws DomainError for other ids.
FigureSpec figure_spec(int figure);

struct TrackPoint {
  double epsilon = 0.0;
  std::size_t mode = 0;
  cplx numerical;
  cplx predicted;
  double abs_error = 0.0;
};

struct FigureReport {
  FigureSpec spec;
  cplx omega;
  std::size_t block_size = 0;
  bool generic = true;
  std::vector<double> epsilons;
  std::vector<TrackPoint> tracks;  ///< ordered by eps, then mode
  SplittingFit fit;
  /// Largest angular mismatch between numerical and predicted shifts at the
  /// smallest nonzero eps (singletons excluded), and the 5|lambda| allowance.
  double angle_defect = 0.0;
  double angle_bound = 0.0;
  /// Slope of log(max first-order error) against log|lambda| over eps != 0.
  double error_slope = 0.0;
  std::vector<double> lambda_scale;  ///< |lambda| per nonzero eps
  std::vector<double> max_error;     ///< per nonzero eps, singletons excluded
};

/// Numerical eigenvalue tracks of the perturbed cluster against the
/// first-order prediction (generic or non-generic as the direction demands).
/// power <= 0 takes the exponent from the figure.
FigureReport reproduce_figure(int figure, double eps0 = 1e-4, int power = 0, std::size_t count = 9);

}  // namespace critmode
