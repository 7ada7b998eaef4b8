// Copyright the critmode authors.
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "critmode/design.hpp"
#include "critmode/dynamics.hpp"
#include "critmode/errors.hpp"
#include "critmode/experiments.hpp"
#include "critmode/io.hpp"
#include "critmode/perturbation.hpp"

namespace critmode::cli {

namespace {

using io::format_real;
using io::json;

struct CommonOptions {
  std::string system;
  std::optional<double> tol_rank, tol_cluster, tol_residual;
  std::string out_dir;
  std::string format = "csv";

  ToleranceConfig tolerances() const {
    ToleranceConfig tol;
    if (const char* env = std::getenv("CRITMODE_TOL_OVERRIDE"); env && *env) tol = io::apply_tolerance_override(tol, env);
    if (tol_rank) tol.rank_tol = *tol_rank;
    if (tol_cluster) tol.cluster_tol = *tol_cluster;
    if (tol_residual) tol.residual_tol = *tol_residual;
    try {
      tol.validate();
    } catch (const DomainError& e) {
      throw ParseError(e.what());
    }
    return tol;
  }
};

struct EpsOptions {
  std::optional<double> eps0;
  std::optional<int> power;
  std::optional<std::size_t> count;
};

void add_common(CLI::App* app, CommonOptions& o, bool needs_system) {
  auto* sys = app->add_option("--system", o.system, "system JSON path or catalog:<name>");
  if (needs_system) sys->required();
  app->add_option("--tol-rank", o.tol_rank, "singular-value cutoff relative to the largest");
  app->add_option("--tol-cluster", o.tol_cluster, "root clustering radius");
  app->add_option("--tol-residual", o.tol_residual, "verification threshold");
  app->add_option("--out", o.out_dir, "output directory (stdout if omitted)");
  app->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
}

void add_eps(CLI::App* app, EpsOptions& e) {
  app->add_option("--eps0", e.eps0, "grid base eps0");
  app->add_option("--eps-power", e.power, "grid exponent p in eps = n^p eps0");
  app->add_option("--eps-count", e.count, "number of grid points")->check(CLI::PositiveNumber);
}

// Writes `content` to out_dir/name, or to `out` when no directory is set.
void emit(const CommonOptions& o, const std::string& name, const std::string& content, std::ostream& out) {
  if (o.out_dir.empty()) {
    out << content;
  } else {
    io::write_file(o.out_dir + "/" + name, content);
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json cplx_json(cplx z) { return json::array({z.real(), z.imag()}); }

json cvec_json(const CVector& v) {
  json a = json::array();
  for (const cplx& z : v) a.push_back(cplx_json(z));
  return a;
}

RealMatrix direction_from(const std::vector<double>& entries, std::size_t n) {
  if (entries.empty()) return unit_direction(n, 0, 0);
  if (entries.size() != n * n) throw ParseError("--dk needs N*N row-major entries");
  RealMatrix dk(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) dk(r, c) = entries[r * n + c];
  return dk;
}

PhaseVector phi_from(const std::vector<double>& re, const std::vector<double>& im, std::size_t dim) {
  if (re.empty()) {
    // Deterministic default touching every component.
    PhaseVector phi(dim);
    for (std::size_t k = 0; k < dim; ++k) phi[k] = (k % 2 ? -1.0 : 1.0) / static_cast<double>(k + 1);
    return phi;
  }
  if (re.size() != dim) throw ParseError("--phi needs 2N entries");
  if (!im.empty() && im.size() != dim) throw ParseError("--phi-imag needs 2N entries");
  PhaseVector phi(dim);
  for (std::size_t k = 0; k < dim; ++k) phi[k] = {re[k], im.empty() ? 0.0 : im[k]};
  return phi;
}

std::vector<double> interleaved(std::span<const cplx> v) {
  std::vector<double> out;
  out.reserve(2 * v.size());
  for (const cplx& z : v) {
    out.push_back(z.real());
    out.push_back(z.imag());
  }
  return out;
}

// ---------------------------------------------------------------------------

int cmd_analyze(const CommonOptions& o, std::ostream& out, std::ostream& err) {
  const ToleranceConfig tol = o.tolerances();
  const OscillatorSystem sys = io::load_system(o.system);
  const Spectrum spectrum = compute_spectrum(sys, tol);
  const SpectrumDiagnostics diag = diagnose(spectrum);
  const RepresentationReport rep = verify_representations(spectrum);
  const SumRuleReport rules = check_sum_rules(spectrum);

  json report = {{"chain_residual", diag.chain_residual},
                 {"pairing_defect", diag.pairing_defect},
                 {"biorthogonality_defect", diag.biorthogonality_defect},
                 {"completeness_defect", diag.completeness_defect},
                 {"representation_deviation", rep.max_deviation},
                 {"cross_block", rep.cross_block},
                 {"sum_rules", {rules.max_abs[0], rules.max_abs[1], rules.max_abs[2], rules.max_abs[3]}},
                 {"residual_tol", tol.residual_tol}};
  const double worst = std::max({diag.max(), rep.max_deviation, rules.max()});
  const bool pass = worst <= tol.residual_tol;
  report["pass"] = pass;

  std::ostringstream summary;
  summary << "system," << (sys.label().empty() ? o.system : sys.label()) << "\n";
  summary << "blocks," << spectrum.blocks.size() << "\n";
  summary << "label,omega_re,omega_im,M\n";
  for (const JordanBlock& b : spectrum.blocks)
    summary << b.label << ',' << format_real(b.omega.real()) << ',' << format_real(b.omega.imag()) << ',' << b.size() << "\n";
  summary << "max_residual," << format_real(worst) << "\n";
  summary << "pass," << (pass ? "true" : "false") << "\n";

  if (o.out_dir.empty()) {
    if (o.format == "json") out << dump({{"spectrum", io::spectrum_to_json(spectrum)}, {"verification", report}});
    else out << summary.str();
  } else {
    io::write_file(o.out_dir + "/spectrum.json", dump(io::spectrum_to_json(spectrum)));
    io::write_file(o.out_dir + "/verification.json", dump(report));
    io::write_file(o.out_dir + "/summary.csv", summary.str());
  }
  for (const auto& w : sys.warnings()) err << "warning: " << w << "\n";
  if (!pass) {
    err << "verification failed: max residual " << format_real(worst) << "\n" << dump(report);
    return kVerification;
  }
  return kOk;
}

struct EvolveOptions {
  std::vector<double> phi, phi_imag, times;
  double t_max = 5.0;
  std::size_t t_count = 51;
  bool oracle = false;
};

int cmd_evolve(const CommonOptions& o, const EvolveOptions& e, std::ostream& out, std::ostream& err) {
  const OscillatorSystem sys = io::load_system(o.system);
  const Spectrum spectrum = compute_spectrum(sys, o.tolerances());
  const PhaseVector phi = phi_from(e.phi, e.phi_imag, sys.dim());
  std::vector<double> times = e.times;
  if (times.empty()) {
    if (e.t_count == 0 || !(e.t_max >= 0.0)) throw ParseError("time grid needs t-count > 0 and t-max >= 0");
    for (std::size_t k = 0; k < e.t_count; ++k)
      times.push_back(e.t_count == 1 ? 0.0 : e.t_max * static_cast<double>(k) / static_cast<double>(e.t_count - 1));
  }
  if (!std::is_sorted(times.begin(), times.end()) || times.front() < 0.0) throw ParseError("times must be ascending and non-negative");

  std::vector<PhaseVector> states;
  for (double t : times) states.push_back(evolve_state(spectrum, phi, t));
  std::vector<PhaseVector> rk;
  double deviation = 0.0;
  if (e.oracle) {
    rk = integrate_rk4(sys, phi, times);
    for (std::size_t k = 0; k < times.size(); ++k)
      deviation = std::max(deviation, norm(states[k] - rk[k]) / std::max(norm(rk[k]), 1e-300));
  }

  std::string text;
  if (o.format == "json") {
    json j = {{"times", times}, {"states", json::array()}};
    for (const auto& s : states) j["states"].push_back(interleaved(s));
    if (e.oracle) {
      j["oracle"] = json::array();
      for (const auto& s : rk) j["oracle"].push_back(interleaved(s));
      j["max_relative_deviation"] = deviation;
    }
    text = dump(j);
  } else {
    std::ostringstream csv;
    csv << "t";
    const std::size_t n = sys.n();
    auto header = [&](const char* prefix) {
      for (std::size_t c = 0; c < 2 * n; ++c) {
        const std::string name = std::string(prefix) + (c < n ? "x" : "p") + std::to_string(c % n);
        csv << ',' << name << "_re," << name << "_im";
      }
    };
    header("");
    if (e.oracle) header("rk_");
    csv << "\n";
    for (std::size_t k = 0; k < times.size(); ++k) {
      std::vector<double> row{times[k]};
      const auto a = interleaved(states[k]);
      row.insert(row.end(), a.begin(), a.end());
      if (e.oracle) {
        const auto b = interleaved(rk[k]);
        row.insert(row.end(), b.begin(), b.end());
      }
      csv << io::csv_row(row) << "\n";
    }
    text = csv.str();
  }
  emit(o, o.format == "json" ? "trajectory.json" : "trajectory.csv", text, out);
  if (e.oracle) {
    err << "max_relative_deviation," << format_real(deviation) << "\n";
    if (deviation > 1e-8) return kVerification;
  }
  return kOk;
}

struct PerturbOptions {
  std::vector<double> dk;
  double eps = 1e-4;
  std::vector<double> omega;
};

int cmd_perturb(const CommonOptions& o, const PerturbOptions& p, std::ostream& out) {
  const OscillatorSystem sys = io::load_system(o.system);
  const Spectrum spectrum = compute_spectrum(sys, o.tolerances());
  const RealMatrix dk = direction_from(p.dk, sys.n());
  std::size_t index = 0;
  if (p.omega.size() == 2) {
    index = spectrum.block_near({p.omega[0], p.omega[1]});
  } else if (!p.omega.empty()) {
    throw ParseError("--omega needs re,im");
  } else {
    for (std::size_t b = 0; b < spectrum.blocks.size(); ++b)
      if (spectrum.blocks[b].size() > spectrum.blocks[index].size()) index = b;
  }
  const JordanBlock& block = spectrum.blocks[index];
  const std::size_t m = block.size();

  json j = {{"omega", cplx_json(block.omega)}, {"M", m}, {"epsilon", p.eps}};
  j["xi"] = cplx_json(xi_generic(block, dk));
  j["xi_prime"] = cplx_json(xi_prime(block, dk));
  const bool generic = is_generic(block, dk);
  j["generic"] = generic;
  CVector predicted;
  if (generic) {
    const SplitPrediction sp = predict_splitting(block, dk, p.eps);
    j["lambda"] = cplx_json(sp.lambda);
    predicted = sp.eigenvalues;
  } else if (m > 1) {
    const NonGenericPrediction ng = xi_nongeneric(block, dk, p.eps);
    j["reduced_shifts"] = cvec_json(ng.reduced_shifts);
    j["j2_same_order"] = ng.j2_same_order;
    predicted = ng.eigenvalues;
  }
  if (m > 1) {
    const J1Result j1 = j1_coefficient(spectrum, index, dk);
    j["j1"] = {{"finite_difference", cplx_json(j1.finite_difference)},
               {"expected", cplx_json(j1.expected)},
               {"relation_defect", j1.relation_defect}};
    if (j1.has_closed_form) j["j1"]["closed_form"] = cplx_json(j1.closed_form);
  }
  CVector numerical;
  if (!predicted.empty()) {
    numerical = match_to(predicted, cluster_near(exact_perturbed_spectrum(sys, dk, p.eps), block.omega, m));
    j["predicted"] = cvec_json(predicted);
    j["numerical"] = cvec_json(numerical);
  }

  std::string text;
  if (o.format == "json") {
    text = dump(j);
  } else {
    std::ostringstream csv;
    csv << "k,numerical_re,numerical_im,predicted_re,predicted_im,abs_error\n";
    for (std::size_t k = 0; k < predicted.size(); ++k)
      csv << k << ',' << io::csv_row(std::vector<double>{numerical[k].real(), numerical[k].imag(), predicted[k].real(), predicted[k].imag(),
                                                         std::abs(numerical[k] - predicted[k])})
          << "\n";
    text = csv.str();
  }
  emit(o, o.format == "json" ? "perturb.json" : "perturb.csv", text, out);
  if (!o.out_dir.empty() && o.format == "csv") io::write_file(o.out_dir + "/perturb.json", dump(j));
  return kOk;
}

struct DesignOptions {
  std::string kind = "quartic";
  double x = 0.0, y = 0.0, b = 4.0, gamma11 = 3.0, scale = 1.0;
  int k12_sign = 1;
};

int cmd_design(const CommonOptions& o, const DesignOptions& d, std::ostream& out) {
  json j;
  if (d.kind == "catalog") {
    constexpr std::string_view prefix = "catalog:";
    if (!o.system.starts_with(prefix)) throw ParseError("design --kind catalog needs --system catalog:<name>");
    try {
      j = io::fixtures_to_json(catalog_entry(o.system.substr(prefix.size())));
    } catch (const DomainError& e) {
      throw ParseError(e.what());
    }
  } else {
    OscillatorSystem sys;
    std::array<double, 4> residual{};
    std::vector<std::pair<cplx, std::size_t>> target;
    if (d.kind == "quartic") {
      sys = quartic_critical(d.x, d.y);
      residual = quartic_constraints(sys);
      target = {{{0.0, -1.0}, 4}};
    } else if (d.kind == "cubic") {
      sys = cubic_critical(d.b, d.gamma11, d.k12_sign);
      residual = cubic_constraints(sys, d.b);
      target = {{{0.0, -1.0}, 3}, {{0.0, -d.b}, 1}};
    } else if (d.kind == "double2") {
      sys = double2_critical(d.b);
      residual = double2_constraints(sys, d.b);
      target = {{{d.b, -1.0}, 2}, {{-d.b, -1.0}, 2}};
    } else {
      throw ParseError("--kind must be quartic, cubic, double2 or catalog");
    }
    const double target_res = target_residual(sys, target);
    if (d.scale != 1.0) sys = scale_system(sys, d.scale);
    j = {{"system", io::system_to_json(sys)},
         {"constraint_residuals", residual},
         {"target_residual", target_res},
         {"warnings", sys.warnings()}};
  }
  emit(o, "design.json", dump(j), out);
  return kOk;
}

int cmd_figure(const CommonOptions& o, int figure, const EpsOptions& e, std::ostream& out, std::ostream& err) {
  const FigureSpec spec = figure_spec(figure);
  const FigureReport rep = reproduce_figure(figure, e.eps0.value_or(1e-4), e.power.value_or(spec.eps_power), e.count.value_or(9));
  json summary = {{"figure", figure},
                  {"system", spec.system},
                  {"perturbation", spec.perturbation},
                  {"omega", cplx_json(rep.omega)},
                  {"M", rep.block_size},
                  {"generic", rep.generic},
                  {"epsilons", rep.epsilons},
                  {"exponent", rep.fit.exponent},
                  {"expected_exponent", spec.expected_exponent},
                  {"fit_residual", rep.fit.residual},
                  {"singleton_exponents", rep.fit.singleton_exponents},
                  {"angle_defect", rep.angle_defect},
                  {"angle_bound", rep.angle_bound},
                  {"error_slope", rep.error_slope}};
  std::string text;
  if (o.format == "json") {
    json tracks = json::array();
    for (const TrackPoint& t : rep.tracks)
      tracks.push_back({{"epsilon", t.epsilon},
                        {"k", t.mode},
                        {"shift_numerical", cplx_json(t.numerical - rep.omega)},
                        {"shift_predicted", cplx_json(t.predicted - rep.omega)},
                        {"abs_error", t.abs_error}});
    summary["tracks"] = tracks;
    text = dump(summary);
  } else {
    std::ostringstream csv;
    // Shifts from the unperturbed eigenvalue, not absolute positions.
    csv << "epsilon,k,shift_num_re,shift_num_im,shift_pred_re,shift_pred_im,abs_error\n";
    for (const TrackPoint& t : rep.tracks) {
      const cplx dn = t.numerical - rep.omega, dp = t.predicted - rep.omega;
      csv << format_real(t.epsilon) << ',' << t.mode << ','
          << io::csv_row(std::vector<double>{dn.real(), dn.imag(), dp.real(), dp.imag(), t.abs_error}) << "\n";
    }
    text = csv.str();
  }
  const std::string stem = "figure" + std::to_string(figure);
  emit(o, stem + (o.format == "json" ? ".json" : "_tracks.csv"), text, out);
  if (!o.out_dir.empty() && o.format == "csv") io::write_file(o.out_dir + "/" + stem + "_summary.json", dump(summary));
  err << "figure " << figure << ": exponent " << format_real(rep.fit.exponent) << " (expected " << format_real(spec.expected_exponent) << ")\n";
  return kOk;
}

struct CancellationOptions {
  std::vector<double> dk, phi, phi_imag, times{0.0, 0.5, 1.0, 2.0, 5.0};
};

int cmd_cancellation(const CommonOptions& o, const CancellationOptions& c, const EpsOptions& e, std::ostream& out, std::ostream& err) {
  const OscillatorSystem sys = io::load_system(o.system.empty() ? "catalog:quartic-jb4" : o.system);
  const Spectrum spectrum = compute_spectrum(sys, o.tolerances());
  const RealMatrix dk = direction_from(c.dk, sys.n());
  const PhaseVector phi = phi_from(c.phi, c.phi_imag, sys.dim());
  // Decade grid: eps0 * 10^k, k = 0..count-1.
  std::vector<double> eps;
  const double eps0 = e.eps0.value_or(1e-10);
  for (std::size_t k = 0; k < e.count.value_or(5); ++k) eps.push_back(eps0 * std::pow(10.0, static_cast<double>(k)));
  const CancellationReport rep = cluster_cancellation_experiment(spectrum, dk, eps, phi, c.times);

  json summary = {{"block_size", rep.block_size},
                  {"xi", cplx_json(rep.xi)},
                  {"weight_slope", rep.weight_slope},
                  {"expected_weight_slope", 1.0 - static_cast<double>(rep.block_size)},
                  {"difference_slope", rep.difference_slope},
                  {"bound_constant", rep.bound_constant}};
  std::string text;
  if (o.format == "json") {
    json samples = json::array();
    for (const auto& s : rep.samples)
      samples.push_back({{"epsilon", s.epsilon}, {"lambda", cplx_json(s.lambda)}, {"cluster", cvec_json(s.cluster)},
                         {"mode_weights", s.mode_weights}, {"max_mode_weight", s.max_mode_weight},
                         {"predicted_weight", s.predicted_weight}, {"difference", s.difference}});
    summary["samples"] = samples;
    text = dump(summary);
  } else {
    std::ostringstream csv;
    csv << "epsilon,abs_lambda,max_mode_weight,predicted_weight,difference";
    for (std::size_t k = 0; k < rep.block_size; ++k) csv << ",weight" << k;
    csv << "\n";
    for (const auto& s : rep.samples) {
      std::vector<double> row{s.epsilon, std::abs(s.lambda), s.max_mode_weight, s.predicted_weight, s.difference};
      row.insert(row.end(), s.mode_weights.begin(), s.mode_weights.end());
      csv << io::csv_row(row) << "\n";
    }
    text = csv.str();
  }
  emit(o, o.format == "json" ? "cancellation.json" : "cancellation.csv", text, out);
  if (!o.out_dir.empty() && o.format == "csv") io::write_file(o.out_dir + "/cancellation_summary.json", dump(summary));
  err << "weight slope " << format_real(rep.weight_slope) << ", difference slope " << format_real(rep.difference_slope) << "\n";
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"critmode: Jordan structure of damped oscillators at critical points"};
  app.require_subcommand(1);

  CommonOptions common;
  EpsOptions eps;

  auto* analyze = app.add_subcommand("analyze", "Jordan basis, verification and sum-rule reports");
  add_common(analyze, common, true);

  EvolveOptions ev;
  auto* evolve = app.add_subcommand("evolve", "time evolution of a phase-space state");
  add_common(evolve, common, true);
  evolve->add_option("--phi", ev.phi, "initial state, 2N real parts")->delimiter(',');
  evolve->add_option("--phi-imag", ev.phi_imag, "imaginary parts")->delimiter(',');
  evolve->add_option("--times", ev.times, "explicit ascending times")->delimiter(',');
  evolve->add_option("--t-max", ev.t_max, "end of the uniform time grid");
  evolve->add_option("--t-count", ev.t_count, "points on the uniform time grid");
  evolve->add_flag("--oracle", ev.oracle, "add RK4 columns and report the deviation");

  PerturbOptions pt;
  auto* perturb = app.add_subcommand("perturb", "splitting of a Jordan block under K -> K + eps dK");
  add_common(perturb, common, true);
  perturb->add_option("--dk", pt.dk, "N*N row-major direction (default e11)")->delimiter(',');
  perturb->add_option("--eps", pt.eps, "perturbation strength");
  perturb->add_option("--omega", pt.omega, "re,im of the block (default: largest block)")->delimiter(',');

  DesignOptions ds;
  auto* design = app.add_subcommand("design", "critical-damping designs and catalog fixtures");
  add_common(design, common, false);
  design->add_option("--kind", ds.kind, "quartic, cubic, double2 or catalog");
  design->add_option("--x", ds.x);
  design->add_option("--y", ds.y);
  design->add_option("--b", ds.b);
  design->add_option("--gamma11", ds.gamma11);
  design->add_option("--k12-sign", ds.k12_sign)->check(CLI::IsMember({-1, 1}));
  design->add_option("--scale", ds.scale, "time rescaling a > 0");

  int figure = 1;
  auto* fig = app.add_subcommand("reproduce-figure", "eigenvalue tracks for one of the five splitting figures");
  add_common(fig, common, false);
  add_eps(fig, eps);
  fig->add_option("--figure", figure, "1..5")->required()->check(CLI::Range(1, 5));

  CancellationOptions cc;
  auto* cancel = app.add_subcommand("cancellation", "per-mode weights versus the cluster sum near criticality");
  add_common(cancel, common, false);
  add_eps(cancel, eps);
  cancel->add_option("--dk", cc.dk, "N*N row-major direction (default e11)")->delimiter(',');
  cancel->add_option("--phi", cc.phi, "initial state, 2N real parts")->delimiter(',');
  cancel->add_option("--phi-imag", cc.phi_imag, "imaginary parts")->delimiter(',');
  cancel->add_option("--times", cc.times, "sample times")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kParse;
  }

  try {
    if (*analyze) return cmd_analyze(common, out, err);
    if (*evolve) return cmd_evolve(common, ev, out, err);
    if (*perturb) return cmd_perturb(common, pt, out);
    if (*design) return cmd_design(common, ds, out);
    if (*fig) return cmd_figure(common, figure, eps, out, err);
    if (*cancel) return cmd_cancellation(common, cc, eps, out, err);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kParse;
  } catch (const VerificationError& e) {
    err << "verification failure: " << e.what() << "\n";
    return kVerification;
  } catch (const InconsistentSystemError& e) {
    err << "verification failure: " << e.what() << " (residual " << format_real(e.residual()) << ")\n";
    return kVerification;
  } catch (const ConvergenceError& e) {
    err << "convergence failure: " << e.what() << "\n";
    return kConvergence;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kParse;
  }
  return kParse;
}

}  // namespace critmode::cli
