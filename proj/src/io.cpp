// Copyright the critmode authors.
// SPDX-License-Identifier: Apache-2.0

#include "critmode/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "critmode/errors.hpp"

namespace critmode::io {

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_row(std::span<const double> values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_real(values[i]);
  }
  return out;
}

namespace {

RealMatrix parse_matrix(const json& j, std::size_t n, const char* key) {
  if (!j.is_array() || j.size() != n) throw ParseError(std::string(key) + " must be an array of N rows");
  RealMatrix m(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    const json& row = j[r];
    if (!row.is_array() || row.size() != n) throw ParseError(std::string(key) + " row " + std::to_string(r) + " must hold N numbers");
    for (std::size_t c = 0; c < n; ++c) {
      if (!row[c].is_number()) throw ParseError(std::string(key) + " entries must be numbers");
      m(r, c) = row[c].get<double>();
    }
  }
  return m;
}

json matrix_to_json(const RealMatrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json interleave(std::span<const cplx> v) {
  json a = json::array();
  for (const cplx& z : v) {
    a.push_back(z.real());
    a.push_back(z.imag());
  }
  return a;
}

json exact_to_json(const ExactVector& v) {
  json entries = json::array();
  for (const auto& e : v.entries) entries.push_back({e[0], e[1]});
  return {{"num", v.num}, {"den", v.den}, {"surd", surd_name(v.surd)}, {"phase", phase_name(v.phase)}, {"entries", entries}};
}

}  // namespace

OscillatorSystem parse_system_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("system JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("system JSON must be an object");
  if (!j.contains("N") || !j["N"].is_number_integer() || j["N"].get<long>() <= 0) throw ParseError("system JSON needs a positive integer N");
  if (!j.contains("K") || !j.contains("Gamma")) throw ParseError("system JSON needs K and Gamma");
  const auto n = static_cast<std::size_t>(j["N"].get<long>());
  std::string label;
  if (j.contains("label")) {
    if (!j["label"].is_string()) throw ParseError("label must be a string");
    label = j["label"].get<std::string>();
  }
  try {
    return build_system(parse_matrix(j["K"], n, "K"), parse_matrix(j["Gamma"], n, "Gamma"), label);
  } catch (const DomainError& e) {
    throw ParseError(std::string("system JSON: ") + e.what());
  }
}

json system_to_json(const OscillatorSystem& sys) {
  json j = {{"N", sys.n()}, {"K", matrix_to_json(sys.stiffness())}, {"Gamma", matrix_to_json(sys.damping())}};
  if (!sys.label().empty()) j["label"] = sys.label();
  return j;
}

OscillatorSystem load_system(const std::string& source) {
  constexpr std::string_view prefix = "catalog:";
  if (source.starts_with(prefix)) {
    try {
      return catalog_entry(source.substr(prefix.size())).system;
    } catch (const DomainError& e) {
      throw ParseError(e.what());
    }
  }
  return parse_system_json(read_file(source));
}

json spectrum_to_json(const Spectrum& spectrum) {
  json blocks = json::array();
  for (const JordanBlock& b : spectrum.blocks) {
    json chain = json::array(), duals = json::array();
    for (const auto& f : b.chain) chain.push_back(interleave(f));
    for (const auto& f : b.duals) duals.push_back(interleave(f));
    blocks.push_back({{"label", b.label},
                      {"omega", {b.omega.real(), b.omega.imag()}},
                      {"M", b.size()},
                      {"conjugation_sign", b.conjugation_sign},
                      {"chain", chain},
                      {"duals", duals},
                      {"ledger",
                       {{"a_before", interleave(b.ledger.a_before)},
                        {"c", interleave(b.ledger.c)},
                        {"a_after", interleave(b.ledger.a_after)},
                        {"sign_flip", b.ledger.sign_flip}}}});
  }
  json near = json::array();
  for (const auto& c : spectrum.near_critical) near.push_back({{"eigenvalues", interleave(c.eigenvalues)}, {"spread", c.spread}});
  return {{"system", system_to_json(spectrum.system)},
          {"tolerances",
           {{"rank_tol", spectrum.tolerances.rank_tol},
            {"cluster_tol", spectrum.tolerances.cluster_tol},
            {"residual_tol", spectrum.tolerances.residual_tol}}},
          {"blocks", blocks},
          {"near_critical", near},
          {"warnings", spectrum.system.warnings()}};
}

json fixtures_to_json(const CatalogEntry& entry) {
  json fixtures = json::array();
  for (const BlockFixture& f : entry.fixtures) {
    json chain = json::array(), duals = json::array();
    for (const auto& v : f.chain) chain.push_back(exact_to_json(v));
    for (const auto& v : f.duals) duals.push_back(exact_to_json(v));
    fixtures.push_back({{"omega", {f.block.omega.real(), f.block.omega.imag()}}, {"M", f.block.size}, {"chain", chain}, {"duals", duals}});
  }
  json perts = json::array();
  for (const NamedPerturbation& p : entry.perturbations) {
    json item = {{"name", p.name},
                 {"delta_k", matrix_to_json(p.delta_k)},
                 {"omega", {p.block.omega.real(), p.block.omega.imag()}},
                 {"xi", {{"re", p.xi.re}, {"im", p.xi.im}, {"den", p.xi.den}}}};
    if (p.xi_prime) item["xi_prime"] = {{"re", p.xi_prime->re}, {"im", p.xi_prime->im}, {"den", p.xi_prime->den}};
    perts.push_back(std::move(item));
  }
  return {{"name", entry.name}, {"description", entry.description}, {"system", system_to_json(entry.system)},
          {"fixtures", fixtures}, {"perturbations", perts}};
}

ToleranceConfig apply_tolerance_override(ToleranceConfig base, std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("tolerance override: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("tolerance override must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_number()) throw ParseError("tolerance override values must be numbers");
    const double v = it.value().get<double>();
    if (it.key() == "rank_tol") base.rank_tol = v;
    else if (it.key() == "cluster_tol") base.cluster_tol = v;
    else if (it.key() == "residual_tol") base.residual_tol = v;
    else throw ParseError("unknown tolerance key: " + it.key());
  }
  try {
    base.validate();
  } catch (const DomainError& e) {
    throw ParseError(e.what());
  }
  return base;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  out << content;
}

}  // namespace critmode::io
