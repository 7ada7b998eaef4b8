// Copyright the critmode authors.
// SPDX-License-Identifier: Apache-2.0

#include "critmode/design.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "critmode/errors.hpp"

namespace critmode {

namespace {

struct Gamma2 {
  double g11, g12, g22;
};

// gamma = Gamma / 2 read back from a system.
Gamma2 half_damping(const OscillatorSystem& sys) {
  if (sys.n() != 2) throw DomainError("constraint check needs N = 2");
  const RealMatrix& g = sys.damping();
  return {0.5 * g(0, 0), 0.5 * g(0, 1), 0.5 * g(1, 1)};
}

std::array<double, 4> constraint_residuals(const OscillatorSystem& sys, double det_k, double trace_g, double k_trace, double mixed) {
  const RealMatrix& k = sys.stiffness();
  const Gamma2 g = half_damping(sys);
  return {std::abs(k(0, 0) * k(1, 1) - k(0, 1) * k(0, 1) - det_k), std::abs(g.g11 + g.g22 - trace_g),
          std::abs(k(0, 0) + k(1, 1) + 4.0 * (g.g11 * g.g22 - g.g12 * g.g12) - k_trace),
          std::abs(k(0, 0) * g.g22 + k(1, 1) * g.g11 - 2.0 * k(0, 1) * g.g12 - mixed)};
}

OscillatorSystem make2(double k11, double k12, double k22, const Gamma2& g, const std::string& label) {
  return build_system(RealMatrix::symmetric2(k11, k12, k22), RealMatrix::symmetric2(2.0 * g.g11, 2.0 * g.g12, 2.0 * g.g22), label);
}

void verify_constraints(const std::array<double, 4>& r, double scale, const char* what) {
  const double worst = *std::max_element(r.begin(), r.end());
  if (worst > 1e-12 * std::max(1.0, scale)) throw VerificationError(std::string(what) + ": constraint system not satisfied", worst);
}

}  // namespace

OscillatorSystem quartic_critical(double x, double y) {
  if (!std::isfinite(x) || !std::isfinite(y)) throw DomainError("quartic_critical needs finite parameters");
  const double k11 = std::exp(y) * std::cosh(x);
  const double k22 = std::exp(-y) * std::cosh(x);
  const double k12 = std::sinh(x);
  Gamma2 g{};
  if (k12 != 0.0) {
    // Mixed constraint gives g12 = a + b g11; the k-trace constraint then
    // becomes a quadratic in g11.
    const double a = (2.0 * k11 - 2.0) / (2.0 * k12);
    const double b = (k22 - k11) / (2.0 * k12);
    const double c = (6.0 - k11 - k22) / 4.0;
    const double qa = 1.0 + b * b, qb = -(2.0 - 2.0 * a * b), qc = a * a + c;
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc < -1e-12 * std::max(1.0, qb * qb)) throw DomainError("quartic_critical: damping constraints have no real solution");
    g.g11 = (-qb + std::sqrt(std::max(disc, 0.0))) / (2.0 * qa);
    g.g12 = a + b * g.g11;
    g.g22 = 2.0 - g.g11;
  } else if (y != 0.0) {
    g.g11 = 2.0 * std::exp(y) / (1.0 + std::exp(y));
    g.g22 = 2.0 - g.g11;
    const double c = (6.0 - k11 - k22) / 4.0;
    const double sq = g.g11 * g.g22 - c;
    if (sq < -1e-12) throw DomainError("quartic_critical: damping constraints have no real solution");
    g.g12 = std::sqrt(std::max(sq, 0.0));
  } else {
    g = {1.0, 0.0, 1.0};  // two identical critically damped oscillators
  }
  OscillatorSystem sys = make2(k11, k12, k22, g, "quartic_critical");
  verify_constraints(quartic_constraints(sys), k11 + k22, "quartic_critical");
  if (std::cosh(x) * std::cosh(y) > 3.0 + 1e-12) sys.add_warning("cosh x cosh y > 3: damping is not positive semidefinite");
  return sys;
}

OscillatorSystem cubic_critical(double b, double gamma11, int k12_sign) {
  if (!std::isfinite(b) || !std::isfinite(gamma11)) throw DomainError("cubic_critical needs finite parameters");
  if (std::abs(b - 1.0) < 1e-12) throw DomainError("cubic_critical requires b != 1");
  if (k12_sign != 1 && k12_sign != -1) throw DomainError("k12_sign must be +1 or -1");
  const Gamma2 g{gamma11, 0.0, (3.0 + b) / 2.0 - gamma11};
  const double trace_k = 3.0 * (1.0 + b) - 4.0 * g.g11 * g.g22;
  const double spread = g.g22 - g.g11;
  if (std::abs(spread) < 1e-12) throw DomainError("cubic_critical: gamma11 = gamma22 leaves k11 undetermined");
  const double k11 = ((1.0 + 3.0 * b) / 2.0 - trace_k * g.g11) / spread;
  const double k22 = trace_k - k11;
  const double k12_sq = k11 * k22 - b;
  if (k12_sq < -1e-12 * std::max(1.0, std::abs(k11 * k22))) throw DomainError("cubic_critical: no real k12 for these parameters");
  const double k12 = k12_sign * std::sqrt(std::max(k12_sq, 0.0));
  OscillatorSystem sys = make2(k11, k12, k22, g, "cubic_critical");
  verify_constraints(cubic_constraints(sys, b), std::abs(trace_k) + std::abs(b), "cubic_critical");
  return sys;
}

OscillatorSystem double2_critical(double b) {
  if (!(b > 0.0) || !std::isfinite(b)) throw DomainError("double2_critical requires b > 0");
  const double s = 1.0 + b * b;
  OscillatorSystem sys = make2(4.0 + s, -2.0 * std::sqrt(s), s, Gamma2{2.0, 0.0, 0.0}, "double2_critical");
  verify_constraints(double2_constraints(sys, b), s * s, "double2_critical");
  return sys;
}

OscillatorSystem scale_system(const OscillatorSystem& sys, double a) {
  if (!(a > 0.0)) throw DomainError("scale factor must be positive");
  return build_system((a * a) * sys.stiffness(), a * sys.damping(), sys.label());
}

std::array<double, 4> quartic_constraints(const OscillatorSystem& sys) { return constraint_residuals(sys, 1.0, 2.0, 6.0, 2.0); }

std::array<double, 4> cubic_constraints(const OscillatorSystem& sys, double b) {
  return constraint_residuals(sys, b, (3.0 + b) / 2.0, 3.0 * (1.0 + b), (1.0 + 3.0 * b) / 2.0);
}

std::array<double, 4> double2_constraints(const OscillatorSystem& sys, double b) {
  const double s = 1.0 + b * b;
  return constraint_residuals(sys, s * s, 2.0, 6.0 + 2.0 * b * b, 2.0 * s);
}

ComplexPolynomial target_polynomial(const std::vector<std::pair<cplx, std::size_t>>& roots) {
  CVector all;
  for (const auto& [r, m] : roots) all.insert(all.end(), m, r);
  return ComplexPolynomial::from_roots(all);
}

double target_residual(const OscillatorSystem& sys, const std::vector<std::pair<cplx, std::size_t>>& roots) {
  const ComplexPolynomial have = char_poly(evolution_operator(sys));
  const ComplexPolynomial want = target_polynomial(roots);
  const std::size_t top = static_cast<std::size_t>(std::max(have.degree(), want.degree()) + 1);
  double worst = 0.0;
  for (std::size_t k = 0; k < top; ++k) worst = std::max(worst, std::abs(have.coefficient(k) - want.coefficient(k)));
  return worst;
}

// ---------------------------------------------------------------------------
// Levenberg-Marquardt designer

namespace {

struct Packing {
  std::size_t n;
  std::size_t half() const { return n * (n + 1) / 2; }
  std::size_t size() const { return 2 * half(); }

  Eigen::VectorXd pack(const RealMatrix& k, const RealMatrix& g) const {
    Eigen::VectorXd p(static_cast<Eigen::Index>(size()));
    Eigen::Index i = 0;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = r; c < n; ++c) p(i++) = k(r, c);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = r; c < n; ++c) p(i++) = g(r, c);
    return p;
  }

  std::pair<RealMatrix, RealMatrix> unpack(const Eigen::VectorXd& p) const {
    RealMatrix k(n, n), g(n, n);
    Eigen::Index i = 0;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = r; c < n; ++c) k(r, c) = k(c, r) = p(i++);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = r; c < n; ++c) g(r, c) = g(c, r) = p(i++);
    return {k, g};
  }
};

double min_eig(const RealMatrix& m) {
  Eigen::MatrixXd e(static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) e(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m(r, c);
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(e, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

}  // namespace

DesignResult design_critical(const CriticalDesignSpec& spec) {
  const std::size_t n = spec.initial_stiffness.rows();
  if (n == 0 || spec.initial_stiffness.cols() != n || spec.initial_damping.rows() != n || spec.initial_damping.cols() != n)
    throw DomainError("designer needs square N x N starting matrices");
  std::size_t total = 0;
  for (const auto& [r, m] : spec.target) {
    total += m;
    const cplx mirror = -std::conj(r);
    std::size_t partner = 0;
    for (const auto& [r2, m2] : spec.target)
      if (std::abs(r2 - mirror) <= 1e-12 * std::max(1.0, std::abs(r))) partner += m2;
    if (partner < m) throw DomainError("target roots must be closed under w -> -conj(w)");
  }
  if (total != 2 * n) throw DomainError("target multiplicities must add up to 2N");

  const ComplexPolynomial want = target_polynomial(spec.target);
  const Packing pk{n};
  const std::size_t coeffs = 2 * n;  // leading coefficient matches by construction

  auto residual = [&](const Eigen::VectorXd& p) {
    auto [k, g] = pk.unpack(p);
    OscillatorSystem sys = build_system(k, g);
    const ComplexPolynomial have = char_poly(evolution_operator(sys));
    Eigen::VectorXd r(static_cast<Eigen::Index>(2 * coeffs + 2));
    for (std::size_t c = 0; c < coeffs; ++c) {
      const cplx d = have.coefficient(c) - want.coefficient(c);
      r(static_cast<Eigen::Index>(2 * c)) = d.real();
      r(static_cast<Eigen::Index>(2 * c + 1)) = d.imag();
    }
    r(static_cast<Eigen::Index>(2 * coeffs)) = spec.penalty * std::max(0.0, -min_eig(g));
    r(static_cast<Eigen::Index>(2 * coeffs + 1)) = spec.penalty * std::max(0.0, -min_eig(k));
    return r;
  };

  Eigen::VectorXd p = pk.pack(spec.initial_stiffness, spec.initial_damping);
  Eigen::VectorXd r = residual(p);
  double mu = 1e-3;
  DesignResult out;
  for (out.iterations = 0; out.iterations < spec.max_iterations; ++out.iterations) {
    if (r.lpNorm<Eigen::Infinity>() <= spec.tolerance) {
      out.converged = true;
      break;
    }
    Eigen::MatrixXd jac(r.size(), p.size());
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double h = 1e-7 * std::max(1.0, std::abs(p(i)));
      Eigen::VectorXd up = p, dn = p;
      up(i) += h;
      dn(i) -= h;
      jac.col(i) = (residual(up) - residual(dn)) / (2.0 * h);
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * r;
    bool improved = false;
    for (int tries = 0; tries < 30 && !improved; ++tries) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += mu * (jtj.diagonal().array() + 1.0).matrix();
      const Eigen::VectorXd step = a.ldlt().solve(-jtr);
      const Eigen::VectorXd trial = p + step;
      const Eigen::VectorXd rt = residual(trial);
      if (rt.squaredNorm() < r.squaredNorm()) {
        p = trial;
        r = rt;
        mu = std::max(mu / 3.0, 1e-15);
        improved = true;
      } else {
        mu *= 4.0;
      }
    }
    if (!improved) break;
  }
  auto [k, g] = pk.unpack(p);
  out.system = build_system(k, g, "designed");
  out.residual = target_residual(out.system, spec.target);
  out.converged = out.converged || out.residual <= spec.tolerance;
  return out;
}

// ---------------------------------------------------------------------------
// Catalog

const char* surd_name(Surd s) {
  switch (s) {
    case Surd::One: return "1";
    case Surd::Sqrt2: return "sqrt2";
    case Surd::Sqrt6: return "sqrt6";
    case Surd::Sqrt15: return "sqrt15";
  }
  return "?";
}

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::One: return "1";
    case Phase::I: return "i";
    case Phase::ExpIPiOver4: return "exp(i pi/4)";
    case Phase::ExpMinusIPiOver4: return "exp(-i pi/4)";
  }
  return "?";
}

double surd_value(Surd s) {
  switch (s) {
    case Surd::One: return 1.0;
    case Surd::Sqrt2: return std::numbers::sqrt2;
    case Surd::Sqrt6: return std::sqrt(6.0);
    case Surd::Sqrt15: return std::sqrt(15.0);
  }
  return 1.0;
}

cplx phase_value(Phase p) {
  switch (p) {
    case Phase::One: return 1.0;
    case Phase::I: return {0.0, 1.0};
    case Phase::ExpIPiOver4: return std::polar(1.0, std::numbers::pi / 4.0);
    case Phase::ExpMinusIPiOver4: return std::polar(1.0, -std::numbers::pi / 4.0);
  }
  return 1.0;
}

PhaseVector ExactVector::evaluate() const {
  const cplx scale = static_cast<double>(num) / static_cast<double>(den) * surd_value(surd) * phase_value(phase);
  PhaseVector v;
  v.reserve(entries.size());
  for (const auto& e : entries) v.push_back(scale * cplx(static_cast<double>(e[0]), static_cast<double>(e[1])));
  return v;
}

namespace {

ExactVector real_vec(long num, long den, Surd s, Phase p, std::initializer_list<long> xs) {
  ExactVector v{num, den, s, p, {}};
  for (long x : xs) v.entries.push_back({x, 0});
  return v;
}

ExactVector gauss_vec(long num, long den, Surd s, Phase p, std::initializer_list<std::array<long, 2>> xs) {
  return ExactVector{num, den, s, p, std::vector<std::array<long, 2>>(xs)};
}

std::vector<CatalogEntry> build_catalog() {
  const cplx mi{0.0, -1.0};
  std::vector<CatalogEntry> out;

  {
    CatalogEntry e;
    e.name = "single-critical";
    e.description = "one oscillator at critical damping, k = gamma^2 with gamma = 1";
    e.system = build_system(RealMatrix{{1.0}}, RealMatrix{{2.0}}, e.name);
    e.blocks = {{mi, 2}};
    e.fixtures.push_back({{mi, 2},
                          {gauss_vec(1, 1, Surd::One, Phase::One, {{1, 0}, {-1, 0}}), gauss_vec(1, 1, Surd::One, Phase::One, {{0, 0}, {0, -1}})},
                          {}});
    e.perturbations.push_back({"e11", RealMatrix{{1.0}}, {mi, 2}, {1, 0, 1}, std::nullopt});
    out.push_back(std::move(e));
  }
  {
    CatalogEntry e;
    e.name = "quartic-jb4";
    e.description = "N=2 system with a single size-4 block at -i";
    e.system = build_system(RealMatrix{{5.0, -2.0}, {-2.0, 1.0}}, RealMatrix{{4.0, 0.0}, {0.0, 0.0}}, e.name);
    e.blocks = {{mi, 4}};
    e.fixtures.push_back({{mi, 4},
                          {real_vec(1, 1, Surd::Sqrt2, Phase::I, {1, 1, -1, -1}), real_vec(1, 2, Surd::Sqrt2, Phase::One, {-1, 1, 3, 1}),
                           real_vec(1, 8, Surd::Sqrt2, Phase::I, {-1, -1, 5, -3}), real_vec(1, 16, Surd::Sqrt2, Phase::One, {-1, 1, -1, -3})},
                          {real_vec(1, 16, Surd::Sqrt2, Phase::I, {5, 3, 1, -1}), real_vec(1, 8, Surd::Sqrt2, Phase::One, {-1, 3, 1, 1}),
                           real_vec(1, 2, Surd::Sqrt2, Phase::I, {1, -1, 1, -1}), real_vec(1, 1, Surd::Sqrt2, Phase::One, {-3, 1, -1, -1})}});
    e.perturbations.push_back({"e11", RealMatrix{{1.0, 0.0}, {0.0, 0.0}}, {mi, 4}, {-2, 0, 1}, std::nullopt});
    e.perturbations.push_back({"mu", RealMatrix{{1.0, -1.5}, {-1.5, 2.0}}, {mi, 4}, {0, 0, 1}, GaussianRational{0, 1, 1}});
    out.push_back(std::move(e));
  }
  {
    CatalogEntry e;
    e.name = "cubic-jb3";
    e.description = "N=2 system with a size-3 block at -i and a simple mode at -4i";
    e.system = build_system(RealMatrix{{41.0 / 5.0, 8.0 / 5.0}, {8.0 / 5.0, 4.0 / 5.0}}, RealMatrix{{6.0, 0.0}, {0.0, 1.0}}, e.name);
    e.blocks = {{mi, 3}, {{0.0, -4.0}, 1}};
    e.fixtures.push_back({{mi, 3},
                          {real_vec(1, 15, Surd::Sqrt15, Phase::ExpIPiOver4, {2, -4, -2, 4}),
                           real_vec(1, 180, Surd::Sqrt15, Phase::ExpMinusIPiOver4, {-19, -22, 43, -26}),
                           real_vec(1, 2880, Surd::Sqrt15, Phase::ExpIPiOver4, {-221, -78, 525, 430})},
                          {real_vec(1, 2880, Surd::Sqrt15, Phase::ExpIPiOver4, {801, -352, 221, 78}),
                           real_vec(1, 180, Surd::Sqrt15, Phase::ExpMinusIPiOver4, {-71, -48, -19, -22}),
                           real_vec(1, 15, Surd::Sqrt15, Phase::ExpIPiOver4, {-10, 0, -2, 4})}});
    e.fixtures.push_back({{{0.0, -4.0}, 1},
                          {real_vec(1, 45, Surd::Sqrt15, Phase::ExpIPiOver4, {8, -1, -32, 4})},
                          {real_vec(1, 45, Surd::Sqrt15, Phase::ExpIPiOver4, {-16, -3, -8, 1})}});
    e.perturbations.push_back({"e11", RealMatrix{{1.0, 0.0}, {0.0, 0.0}}, {mi, 3}, {0, 4, 15}, std::nullopt});
    e.perturbations.push_back({"mu", RealMatrix{{-2.0, 0.5}, {0.5, 1.0}}, {mi, 3}, {0, 0, 1}, GaussianRational{1, 0, 1}});
    out.push_back(std::move(e));
  }
  {
    CatalogEntry e;
    e.name = "double-jb2";
    e.description = "N=2 system with two size-2 blocks at -i +- 4/3";
    e.system = build_system(RealMatrix{{61.0 / 9.0, -30.0 / 9.0}, {-30.0 / 9.0, 25.0 / 9.0}}, RealMatrix{{4.0, 0.0}, {0.0, 0.0}}, e.name);
    const cplx right{4.0 / 3.0, -1.0};
    e.blocks = {{right, 2}, {{-4.0 / 3.0, -1.0}, 2}};
    e.fixtures.push_back({{right, 2},
                          {gauss_vec(1, 24, Surd::Sqrt6, Phase::One, {{3, -6}, {-3, -6}, {-11, 2}, {-5, 10}}),
                           gauss_vec(1, 192, Surd::Sqrt6, Phase::One, {{15, 30}, {-15, 30}, {-23, -74}, {7, 14}})},
                          {gauss_vec(1, 192, Surd::Sqrt6, Phase::One, {{-46, -37}, {-14, -7}, {-30, -15}, {-30, 15}}),
                           gauss_vec(1, 24, Surd::Sqrt6, Phase::One, {{22, -1}, {-10, 5}, {6, -3}, {6, 3}})}});
    e.perturbations.push_back({"e11", RealMatrix{{1.0, 0.0}, {0.0, 0.0}}, {right, 2}, {-9, -12, 32}, std::nullopt});
    out.push_back(std::move(e));
  }
  {
    CatalogEntry e;
    e.name = "crossed-pair";
    e.description = "two identical critically damped oscillators: two size-2 blocks crossing at -i";
    e.system = build_system(RealMatrix{{1.0, 0.0}, {0.0, 1.0}}, RealMatrix{{2.0, 0.0}, {0.0, 2.0}}, e.name);
    e.blocks = {{mi, 2}, {mi, 2}};
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace

const std::vector<CatalogEntry>& catalog() {
  static const std::vector<CatalogEntry> entries = build_catalog();
  return entries;
}

const CatalogEntry& catalog_entry(const std::string& name) {
  for (const auto& e : catalog())
    if (e.name == name) return e;
  throw DomainError("unknown catalog entry: " + name);
}

double fixture_deviation(const JordanBlock& block, const BlockFixture& fixture) {
  if (block.size() != fixture.chain.size()) throw DomainError("fixture and block sizes differ");
  if (!fixture.duals.empty() && block.duals.size() != fixture.duals.size()) throw DomainError("block has no duals to compare");
  double best = std::numeric_limits<double>::infinity();
  for (double sign : {1.0, -1.0}) {
    double worst = 0.0;
    auto compare = [&](const PhaseVector& have, const ExactVector& want) {
      const PhaseVector w = want.evaluate();
      if (w.size() != have.size()) throw DomainError("fixture vector has the wrong length");
      for (std::size_t i = 0; i < w.size(); ++i) worst = std::max(worst, std::abs(sign * have[i] - w[i]));
    };
    for (std::size_t n = 0; n < fixture.chain.size(); ++n) compare(block.chain[n], fixture.chain[n]);
    for (std::size_t n = 0; n < fixture.duals.size(); ++n) compare(block.duals[n], fixture.duals[n]);
    best = std::min(best, worst);
  }
  return best;
}

}  // namespace critmode
