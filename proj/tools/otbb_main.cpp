/*************************************************************************************************
 * Command line interface
 *
 * Copyright 2026 The otbb Authors
 * Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file
 * except in compliance with the License.  You may obtain a copy of the License at
 *     https://www.apache.org/licenses/LICENSE-2.0
 * Unless required by applicable law or agreed to in writing, software distributed under the
 * License is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND,
 * either express or implied.  See the License for the specific language governing permissions
 * and limitations under the License.
 *************************************************************************************************/

// Command-line front end. Builds an experiment spec from flags (optionally on top of a
// --spec file) and runs it through the C API.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "otbb/otbb.h"

namespace {

using json = nlohmann::json;

enum Exit { kExitOk = 0, kExitInternal = 1, kExitValidation = 2, kExitNotConverged = 3, kExitVerification = 4 };

struct Flags {
  std::string spec;
  std::string model, mesh, mean, domain, center, penalty, oracle, linear, trace;
  std::string rho0, rho1, out_csv, out_json, out_path;
  std::vector<std::string> assumptions;
  std::vector<int> N, resolutions;
  std::vector<double> sigmas;
  int dim = 1, cells = 0, icosphere = -1, flat = 0, levels = 3, draws = 8, max_iter = 0, jobs = 0;
  unsigned long long seed = 1;
  double lambda = 1, tol = 0, r = 0, alpha = 0;
  bool no_adapt = false, quiet = false;
};

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) v.push_back(std::stod(tok));
  return v;
}

void add_options(CLI::App* sub, Flags& f, const std::string& mode) {
  sub->add_option("--spec", f.spec, "experiment spec (JSON); flags override its fields");
  sub->add_option("--model", f.model, "model kind")->check(CLI::IsMember({"fv", "tri"}));
  sub->add_option("--dim", f.dim, "grid dimension")->check(CLI::Range(1, 3));
  sub->add_option("--domain", f.domain, "grid domain a,b (per axis)");
  sub->add_option("--cells", f.cells, "cells along the first axis")->check(CLI::PositiveNumber);
  sub->add_option("--mesh", f.mesh, "FV mesh JSON or triangle OFF file");
  sub->add_option("--icosphere", f.icosphere, "icosphere subdivision depth")->check(CLI::NonNegativeNumber);
  sub->add_option("--flat", f.flat, "flat unit-square triangulation, squares per side")->check(CLI::PositiveNumber);
  sub->add_option("--mean", f.mean, "FV mean")->check(
      CLI::IsMember({"arithmetic", "geometric", "harmonic", "logarithmic"}));
  sub->add_option("--jobs", f.jobs, "worker cap")->envname("OTBB_JOBS")->check(CLI::PositiveNumber);
  sub->add_flag("--quiet", f.quiet, "print nothing on success");
  if (mode != "mesh-report") {
    sub->add_option("--N", f.N, "time steps (list for converge)")->delimiter(',');
    sub->add_option("--tol", f.tol, "solver tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--max-iter", f.max_iter, "iteration cap")->check(CLI::PositiveNumber);
    sub->add_option("--r", f.r, "penalty parameter")->check(CLI::PositiveNumber);
    sub->add_option("--alpha", f.alpha, "over-relaxation in [1,2)");
    sub->add_flag("--no-adapt", f.no_adapt, "disable residual balancing");
    sub->add_option("--linear", f.linear, "projection backend")->check(CLI::IsMember({"direct", "cg"}));
    sub->add_option("--trace", f.trace, "per-iteration residual trace CSV");
  }
  if (mode == "solve" || mode == "converge" || mode == "jko") sub->add_option("--rho0", f.rho0, "initial measure");
  if (mode == "solve" || mode == "converge") sub->add_option("--rho1", f.rho1, "final measure");
  if (mode == "solve" || mode == "converge")
    sub->add_option("--oracle", f.oracle, "ground truth")->check(CLI::IsMember({"dirac", "quantile", "lp"}));
  if (mode == "converge") {
    sub->add_option("--resolutions", f.resolutions, "resolution schedule")->delimiter(',');
    sub->add_option("--sigma", f.sigmas, "sigma schedule")->delimiter(',');
  }
  if (mode == "jko" || mode == "verify") {
    sub->add_option("--penalty", f.penalty, "final penalty")->check(
        CLI::IsMember({"none", "potential", "quadratic", "entropy"}));
    sub->add_option("--lambda", f.lambda, "penalty weight")->check(CLI::PositiveNumber);
  }
  if (mode == "jko") sub->add_option("--center", f.center, "potential center x[,y[,z]]");
  if (mode == "verify") {
    sub->add_option("--assumption", f.assumptions, "A1..A9, A'5 or A7 (repeatable, comma separated)")
        ->delimiter(',');
    sub->add_option("--levels", f.levels, "refinement levels")->check(CLI::Range(1, 12));
    sub->add_option("--seed", f.seed, "random seed");
    sub->add_option("--draws", f.draws, "random draws per level")->check(CLI::PositiveNumber);
  }
  sub->add_option("--out", f.out_csv, "CSV output");
  sub->add_option("--json", f.out_json, "JSON summary output");
  if (mode == "solve" || mode == "jko") sub->add_option("--path", f.out_path, "path JSON output");
}

bool given(const CLI::App* sub, const char* name) {
  try {
    return sub->count(name) > 0;
  } catch (const CLI::OptionNotFound&) {
    return false;
  }
}

// Spec JSON from the optional spec file and the flags actually given.
json build_spec(const CLI::App* sub, const Flags& f, const std::string& mode, std::string* base_dir) {
  json j = json::object();
  if (!f.spec.empty()) {
    std::ifstream in(f.spec);
    if (!in) throw std::invalid_argument("spec file '" + f.spec + "' not found");
    try {
      in >> j;
    } catch (const std::exception& e) {
      throw std::invalid_argument(std::string("spec file: ") + e.what());
    }
    *base_dir = std::filesystem::path(f.spec).parent_path().string();
  }
  j["mode"] = mode;
  json& m = j["model"];
  if (m.is_null()) m = json::object();
  if (given(sub, "--model")) m["kind"] = f.model;
  if (given(sub, "--dim")) m["dim"] = f.dim;
  if (given(sub, "--domain")) {
    auto d = parse_list(f.domain);
    if (d.size() != 2) throw std::invalid_argument("--domain needs a,b");
    m["domain"] = d;
  }
  if (given(sub, "--cells")) m["cells"] = f.cells;
  if (given(sub, "--mesh")) m["mesh"] = std::filesystem::absolute(f.mesh).string();
  if (given(sub, "--icosphere")) {
    m["icosphere"] = f.icosphere;
    if (!m.contains("kind")) m["kind"] = "tri";
  }
  if (given(sub, "--flat")) {
    m["flat"] = f.flat;
    if (!m.contains("kind")) m["kind"] = "tri";
  }
  if (given(sub, "--mean")) m["mean"] = f.mean;
  auto measure = [](const std::string& s) -> json {
    if (s.rfind("file:", 0) == 0) return "file:" + std::filesystem::absolute(s.substr(5)).string();
    if (!s.empty() && s.front() == '{') return json::parse(s);
    return s;
  };
  if (given(sub, "--rho0")) j["rho0"] = measure(f.rho0);
  if (given(sub, "--rho1")) j["rho1"] = measure(f.rho1);
  if (given(sub, "--N")) j["N"] = f.N;
  if (given(sub, "--resolutions")) j["resolutions"] = f.resolutions;
  if (given(sub, "--sigma")) j["sigma"] = f.sigmas;
  if (given(sub, "--oracle")) j["oracle"] = f.oracle;
  if (given(sub, "--penalty") || given(sub, "--lambda") || given(sub, "--center")) {
    json& p = j["penalty"];
    if (p.is_null()) p = json::object();
    if (given(sub, "--penalty")) p["kind"] = f.penalty;
    if (given(sub, "--lambda")) p["lambda"] = f.lambda;
    if (given(sub, "--center")) p["center"] = parse_list(f.center);
  }
  json& o = j["solver"];
  if (o.is_null()) o = json::object();
  if (given(sub, "--tol")) o["tol"] = f.tol;
  if (given(sub, "--max-iter")) o["max_iter"] = f.max_iter;
  if (given(sub, "--r")) o["r"] = f.r;
  if (given(sub, "--alpha")) o["alpha"] = f.alpha;
  if (given(sub, "--no-adapt")) o["adapt"] = false;
  if (given(sub, "--linear")) o["linear"] = f.linear;
  if (given(sub, "--trace")) o["trace"] = f.trace;
  if (given(sub, "--assumption")) j["assumptions"] = f.assumptions;
  if (given(sub, "--levels")) j["levels"] = f.levels;
  if (given(sub, "--seed")) j["seed"] = f.seed;
  if (given(sub, "--draws")) j["draws"] = f.draws;
  json& out = j["output"];
  if (out.is_null()) out = json::object();
  if (given(sub, "--out")) out["csv"] = f.out_csv;
  if (given(sub, "--json")) out["json"] = f.out_json;
  if (given(sub, "--path")) out["path"] = f.out_path;
  return j;
}

int exit_for(otbb_status st) {
  switch (st) {
    case OTBB_OK: return kExitOk;
    case OTBB_ERR_NOT_CONVERGED: return kExitNotConverged;
    case OTBB_ERR_VERIFICATION_FAILED: return kExitVerification;
    case OTBB_ERR_INTERNAL: return kExitInternal;
    default: return kExitValidation;
  }
}

int run(const CLI::App* sub, const Flags& f) {
  const std::string mode = sub->get_name();
  std::string base_dir;
  json spec;
  try {
    spec = build_spec(sub, f, mode, &base_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "otbb: %s\n", e.what());
    return kExitValidation;
  }
  if (given(sub, "--jobs")) otbb_set_jobs(f.jobs);
  otbb_experiment* exp = nullptr;
  otbb_status st = otbb_experiment_from_json(spec.dump().c_str(), base_dir.empty() ? nullptr : base_dir.c_str(), &exp);
  if (st != OTBB_OK) {
    std::fprintf(stderr, "otbb: %s\n", otbb_last_error());
    return exit_for(st);
  }
  otbb_result* res = nullptr;
  st = otbb_experiment_run(exp, &res);
  if (st != OTBB_OK) {
    std::fprintf(stderr, "otbb: %s\n", otbb_last_error());
    otbb_experiment_free(exp);
    return exit_for(st);
  }
  if (!f.quiet)
    for (size_t i = 0; i < otbb_result_line_count(res); ++i) std::printf("%s\n", otbb_result_line(res, i));
  int code = static_cast<int>(otbb_result_status(res));
  if (otbb_result_write(exp, res) != OTBB_OK) {
    std::fprintf(stderr, "otbb: %s\n", otbb_last_error());
    code = kExitValidation;
  }
  otbb_result_free(res);
  otbb_experiment_free(exp);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete dynamic optimal transport: solve, verify and convergence experiments"};
  app.set_version_flag("--version", otbb_version());
  app.require_subcommand(1);
  Flags flags;
  const char* modes[][2] = {{"solve", "minimize the discrete transport cost between two measures"},
                            {"verify", "assumption sweeps and the controllability fit"},
                            {"converge", "convergence table against a ground-truth oracle"},
                            {"jko", "one JKO step with a final penalty"},
                            {"mesh-report", "mesh statistics, isotropy and distortion"}};
  for (const auto& m : modes) add_options(app.add_subcommand(m[0], m[1]), flags, m[0]);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::fprintf(stderr, "%s", app.help().c_str());
    return kExitValidation;
  }
  for (const CLI::App* sub : app.get_subcommands()) return run(sub, flags);
  return kExitValidation;
}
