// Copyright the critmode authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "../tools/cli.hpp"
#include "critmode/io.hpp"

using namespace critmode;
using critmode::io::json;

namespace {

struct Result {
  int code = 0;
  std::string out, err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "critmode");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Result r;
  r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> v;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) v.push_back(l);
  return v;
}

double deviation_from(const std::string& err) {
  const auto pos = err.find("max_relative_deviation,");
  REQUIRE(pos != std::string::npos);
  return std::stod(err.substr(pos + 23));
}

}  // namespace

TEST_CASE("analyze the quartic system") {
  const Result r = invoke({"analyze", "--system", "catalog:quartic-jb4", "--format", "json"});
  CHECK(r.code == cli::kOk);
  const json j = json::parse(r.out);
  REQUIRE(j["spectrum"]["blocks"].size() == 1);
  CHECK(j["spectrum"]["blocks"][0]["M"] == 4);
  CHECK(j["verification"]["pass"] == true);
}

TEST_CASE("analyze the crossing group and a diagonalizable system") {
  Result r = invoke({"analyze", "--system", "catalog:crossed-pair"});
  CHECK(r.code == cli::kOk);
  CHECK(r.out.find("pass,true") != std::string::npos);

  const auto dir = std::filesystem::temp_directory_path() / "critmode_test_cli";
  const std::string sys = (dir / "plain.json").string();
  io::write_file(sys, R"({"N": 2, "K": [[3, 0.4], [0.4, 2]], "Gamma": [[0.3, 0.1], [0.1, 0.5]]})");
  r = invoke({"analyze", "--system", sys, "--out", (dir / "out").string()});
  CHECK(r.code == cli::kOk);
  const json spec = json::parse(io::read_file((dir / "out" / "spectrum.json").string()));
  CHECK(spec["blocks"].size() == 4);
  for (const auto& b : spec["blocks"]) CHECK(b["M"] == 1);
  CHECK(std::filesystem::exists(dir / "out" / "verification.json"));
  CHECK(std::filesystem::exists(dir / "out" / "summary.csv"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("exit codes") {
  CHECK(invoke({}).code == cli::kParse);
  CHECK(invoke({"analyze"}).code == cli::kParse);
  CHECK(invoke({"analyze", "--system", "catalog:missing"}).code == cli::kParse);
  CHECK(invoke({"analyze", "--system", "/no/such/file.json"}).code == cli::kParse);
  CHECK(invoke({"analyze", "--system", "catalog:quartic-jb4", "--format", "xml"}).code == cli::kParse);
  CHECK(invoke({"evolve", "--system", "catalog:quartic-jb4", "--phi", "1,0"}).code == cli::kParse);
  CHECK(invoke({"reproduce-figure", "--figure", "6"}).code == cli::kParse);
  CHECK(invoke({"--help"}).code == cli::kOk);

  // Just below the achieved residuals the invariant checks fail; far below
  // roundoff the root finder cannot meet its stopping rule.
  Result r = invoke({"analyze", "--system", "catalog:quartic-jb4", "--tol-residual", "1e-15"});
  CHECK(r.code == cli::kVerification);
  CHECK(r.err.find("verification fail") != std::string::npos);
  r = invoke({"analyze", "--system", "catalog:quartic-jb4", "--tol-residual", "1e-30"});
  CHECK(r.code == cli::kConvergence);
}

TEST_CASE("tolerance override from the environment") {
  ::setenv("CRITMODE_TOL_OVERRIDE", R"({"residual_tol": 1e-30})", 1);
  CHECK(invoke({"analyze", "--system", "catalog:single-critical"}).code != cli::kOk);
  // Flags win over the environment.
  CHECK(invoke({"analyze", "--system", "catalog:single-critical", "--tol-residual", "1e-9"}).code == cli::kOk);
  ::setenv("CRITMODE_TOL_OVERRIDE", R"({"bogus": 1})", 1);
  CHECK(invoke({"analyze", "--system", "catalog:single-critical"}).code == cli::kParse);
  ::unsetenv("CRITMODE_TOL_OVERRIDE");
}

TEST_CASE("evolve") {
  Result r = invoke({"evolve", "--system", "catalog:single-critical", "--phi", "0.25,-1.5", "--times", "0"});
  CHECK(r.code == cli::kOk);
  const auto rows = lines(r.out);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == "t,x0_re,x0_im,p0_re,p0_im");
  CHECK(rows[1] == "0,0.25,0,-1.5,0");

  r = invoke({"evolve", "--system", "catalog:single-critical", "--phi", "1,0", "--oracle"});
  CHECK(r.code == cli::kOk);
  CHECK(deviation_from(r.err) <= 1e-8);
  CHECK(lines(r.out).size() == 52);

  r = invoke({"evolve", "--system", "catalog:double-jb2", "--phi", "0.3,-0.7,1.1,0.2", "--phi-imag", "0.5,0,-0.4,0.9", "--oracle"});
  CHECK(r.code == cli::kOk);
  CHECK(deviation_from(r.err) <= 1e-8);

  CHECK(invoke({"evolve", "--system", "catalog:single-critical", "--times", "1,0.5"}).code == cli::kParse);
}

TEST_CASE("output is deterministic") {
  for (const std::vector<std::string>& args :
       {std::vector<std::string>{"analyze", "--system", "catalog:cubic-jb3", "--format", "json"},
        std::vector<std::string>{"reproduce-figure", "--figure", "3"},
        std::vector<std::string>{"evolve", "--system", "catalog:quartic-jb4", "--t-count", "11"},
        std::vector<std::string>{"perturb", "--system", "catalog:quartic-jb4"}}) {
    const Result a = invoke(args), b = invoke(args);
    CHECK(a.code == cli::kOk);
    CHECK(a.out == b.out);
    CHECK_FALSE(a.out.empty());
  }
}

TEST_CASE("perturb") {
  Result r = invoke({"perturb", "--system", "catalog:quartic-jb4", "--format", "json"});
  CHECK(r.code == cli::kOk);
  json j = json::parse(r.out);
  CHECK(j["generic"] == true);
  CHECK(j["xi"][0].get<double>() == doctest::Approx(-2.0));

  r = invoke({"perturb", "--system", "catalog:quartic-jb4", "--dk", "1,-1.5,-1.5,2", "--format", "json"});
  CHECK(r.code == cli::kOk);
  j = json::parse(r.out);
  CHECK(j["generic"] == false);
  CHECK(std::abs(j["xi_prime"][1].get<double>() - 1.0) < 1e-12);
  CHECK(invoke({"perturb", "--system", "catalog:quartic-jb4", "--dk", "1,2,3"}).code == cli::kParse);
}

TEST_CASE("design") {
  Result r = invoke({"design", "--kind", "cubic", "--b", "4", "--gamma11", "3"});
  CHECK(r.code == cli::kOk);
  json j = json::parse(r.out);
  CHECK(j["system"]["K"][0][0].get<double>() == doctest::Approx(41.0 / 5));
  CHECK(j["target_residual"].get<double>() <= 1e-10);

  r = invoke({"design", "--kind", "catalog", "--system", "catalog:double-jb2"});
  CHECK(r.code == cli::kOk);
  CHECK(json::parse(r.out)["fixtures"].size() >= 1);

  CHECK(invoke({"design", "--kind", "cubic", "--b", "1"}).code == cli::kParse);
  CHECK(invoke({"design", "--kind", "sextic"}).code == cli::kParse);
}

TEST_CASE("figure reproduction") {
  const auto dir = std::filesystem::temp_directory_path() / "critmode_test_fig";
  for (int fig = 1; fig <= 5; ++fig) {
    const Result r = invoke({"reproduce-figure", "--figure", std::to_string(fig), "--out", dir.string()});
    CHECK(r.code == cli::kOk);
    const std::string stem = "figure" + std::to_string(fig);
    const auto rows = lines(io::read_file((dir / (stem + "_tracks.csv")).string()));
    CHECK(rows[0] == "epsilon,k,shift_num_re,shift_num_im,shift_pred_re,shift_pred_im,abs_error");
    const json s = json::parse(io::read_file((dir / (stem + "_summary.json")).string()));
    CHECK(std::abs(s["exponent"].get<double>() - s["expected_exponent"].get<double>()) <= 0.01);
    CHECK(s["epsilons"].size() == 9);
  }
  // Negative eps0 mirrors the grid.
  const Result r = invoke({"reproduce-figure", "--figure", "1", "--eps0", "-1e-4", "--format", "json"});
  CHECK(r.code == cli::kOk);
  const json j = json::parse(r.out);
  CHECK(j["epsilons"][1].get<double>() < 0.0);
  CHECK(std::abs(j["exponent"].get<double>() - 0.25) <= 0.01);
  std::filesystem::remove_all(dir);
}

TEST_CASE("cancellation") {
  Result r = invoke({"cancellation", "--format", "json"});
  CHECK(r.code == cli::kOk);
  json j = json::parse(r.out);
  CHECK(j["block_size"] == 4);
  CHECK(std::abs(j["weight_slope"].get<double>() + 3.0) <= 0.2);
  CHECK(j["samples"].size() == 5);

  r = invoke({"cancellation", "--system", "catalog:cubic-jb3", "--eps0", "1e-9", "--format", "json"});
  CHECK(r.code == cli::kOk);
  j = json::parse(r.out);
  CHECK(std::abs(j["weight_slope"].get<double>() + 2.0) <= 0.2);

  // Needs a single nontrivial block.
  CHECK(invoke({"cancellation", "--system", "catalog:double-jb2"}).code == cli::kParse);
}
