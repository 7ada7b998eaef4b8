// Copyright the critmode authors.
// SPDX-License-Identifier: Apache-2.0

#include "critmode/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "critmode/design.hpp"
#include "critmode/dynamics.hpp"
#include "critmode/errors.hpp"

namespace critmode {

std::vector<double> eps_grid(double eps0, int power, std::size_t count) {
  if (count == 0) throw DomainError("eps grid must be nonempty");
  if (power < 1) throw DomainError("eps grid power must be positive");
  std::vector<double> out;
  out.reserve(count);
  for (std::size_t n = 0; n < count; ++n) out.push_back(std::pow(static_cast<double>(n), power) * eps0);
  return out;
}

FigureSpec figure_spec(int figure) {
  switch (figure) {
    case 1: return {1, "quartic-jb4", "e11", 4, 0.25, 0, 0.0};
    case 2: return {2, "quartic-jb4", "mu", 3, 1.0 / 3.0, 1, 1.0};
    case 3: return {3, "cubic-jb3", "e11", 3, 1.0 / 3.0, 0, 0.0};
    case 4: return {4, "cubic-jb3", "mu", 2, 0.5, 1, 1.0};
    case 5: return {5, "double-jb2", "e11", 2, 0.5, 0, 0.0};
    default: throw DomainError("figure id must be 1..5");
  }
}

namespace {

double angle_between(cplx a, cplx b) { return std::abs(std::arg(a / b)); }

}  // namespace

FigureReport reproduce_figure(int figure, double eps0, int power, std::size_t count) {
  FigureReport rep;
  rep.spec = figure_spec(figure);
  if (power <= 0) power = rep.spec.eps_power;
  if (eps0 == 0.0 || !std::isfinite(eps0)) throw DomainError("eps0 must be finite and nonzero");

  const CatalogEntry& entry = catalog_entry(rep.spec.system);
  const NamedPerturbation* pert = nullptr;
  for (const auto& p : entry.perturbations)
    if (p.name == rep.spec.perturbation) pert = &p;
  if (!pert) throw DomainError("catalog entry lacks the figure perturbation");

  const Spectrum spectrum = compute_spectrum(entry.system);
  const JordanBlock& block = spectrum.blocks[spectrum.block_near(pert->block.omega)];
  const std::size_t m = block.size();
  rep.omega = block.omega;
  rep.block_size = m;
  rep.generic = is_generic(block, pert->delta_k);
  rep.epsilons = eps_grid(eps0, power, count);

  std::vector<double> fit_grid;
  for (double e : rep.epsilons)
    if (e != 0.0) fit_grid.push_back(e);
  rep.fit = fit_splitting_exponent(entry.system, block.omega, m, pert->delta_k, fit_grid, rep.spec.singletons, 1.0);

  bool first_nonzero = true;
  for (double eps : rep.epsilons) {
    CVector predicted;
    double scale = 0.0;
    std::size_t skip = 0;  // leading predicted entries that are singletons
    if (rep.generic) {
      const SplitPrediction sp = predict_splitting(block, pert->delta_k, eps);
      predicted = sp.eigenvalues;
      scale = std::abs(sp.lambda);
    } else {
      const NonGenericPrediction ng = xi_nongeneric(block, pert->delta_k, eps);
      predicted = ng.eigenvalues;
      skip = ng.unshifted_count;
      scale = ng.reduced_shifts.empty() ? 0.0 : std::abs(ng.reduced_shifts.front());
    }
    const CVector cluster = eps == 0.0 ? CVector(m, block.omega)
                                       : cluster_near(exact_perturbed_spectrum(entry.system, pert->delta_k, eps), block.omega, m);
    const CVector numerical = match_to(predicted, cluster);
    double worst = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const double err = std::abs(numerical[k] - predicted[k]);
      rep.tracks.push_back({eps, k, numerical[k], predicted[k], err});
      if (k >= skip) worst = std::max(worst, err);
    }
    if (eps == 0.0) continue;
    rep.lambda_scale.push_back(scale);
    rep.max_error.push_back(worst);
    if (first_nonzero) {
      first_nonzero = false;
      rep.angle_bound = 5.0 * scale;
      for (std::size_t k = skip; k < m; ++k)
        rep.angle_defect = std::max(rep.angle_defect, angle_between(numerical[k] - block.omega, predicted[k] - block.omega));
    }
  }
  rep.error_slope = loglog_slope(rep.lambda_scale, rep.max_error);
  return rep;
}

}  // namespace critmode
