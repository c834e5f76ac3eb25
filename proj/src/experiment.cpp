/*************************************************************************************************
 * Experiment specifications and runner
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

#include "otbb/experiment.hpp"

#include <Eigen/Geometry>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "json.hpp"

namespace otbb {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "1.0.0";

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot read '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write '" + path + "'");
  out << text;
  if (!out) fail(ErrorCode::kIo, "write failed for '" + path + "'");
}

std::string resolve(const std::string& base, const std::string& p) {
  if (p.empty() || base.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(base) / p).string();
}

std::vector<double> split_numbers(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    size_t used = 0;
    double v = 0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    while (used < tok.size() && std::isspace(static_cast<unsigned char>(tok[used]))) ++used;
    if (tok.empty() || used != tok.size() || !std::isfinite(v))
      fail(ErrorCode::kInvalidArgument, "bad number '" + tok + "' in " + what);
    out.push_back(v);
  }
  return out;
}

bool is_sphere(const MeshSource& m) { return m.kind == ModelKind::kTri && m.subdiv >= 0; }

std::string timestamp() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

json metadata(double wall) {
  return {{"version", kVersion}, {"timestamp", timestamp()}, {"wall_time", wall}, {"jobs", jobs()}};
}

json num(double v) {
  if (std::isfinite(v)) return v;
  return fmt_double(v);
}

}  // namespace

const char* mode_name(ExperimentMode m) {
  switch (m) {
    case ExperimentMode::kSolve: return "solve";
    case ExperimentMode::kVerify: return "verify";
    case ExperimentMode::kConverge: return "converge";
    case ExperimentMode::kJko: return "jko";
    case ExperimentMode::kMeshReport: return "mesh-report";
  }
  return "?";
}

ExperimentMode mode_from_name(const std::string& s) {
  for (auto m : {ExperimentMode::kSolve, ExperimentMode::kVerify, ExperimentMode::kConverge, ExperimentMode::kJko,
                 ExperimentMode::kMeshReport})
    if (s == mode_name(m)) return m;
  fail(ErrorCode::kInvalidArgument, "unknown mode '" + s + "'");
}

int MeshSource::resolution() const {
  if (kind == ModelKind::kFV) return cells;
  return subdiv >= 0 ? subdiv : flat_n;
}

ModelFamily MeshSource::family() const {
  if (!refinable()) fail(ErrorCode::kInvalidArgument, "a mesh file cannot be refined; use grid flags or an icosphere");
  if (kind == ModelKind::kFV) return ModelFamily::fv_grid(dim, lo, hi, cells, mean);
  if (subdiv >= 0) return ModelFamily::icosphere(subdiv);
  require(flat_n >= 1, "triangle model needs an icosphere depth, a flat resolution or a mesh file");
  return ModelFamily::flat_triangles(flat_n);
}

std::shared_ptr<const DiscreteModel> MeshSource::build() const {
  if (refinable()) return family().build(resolution());
  std::string text = read_text(mesh_file);
  if (kind == ModelKind::kFV)
    return std::make_shared<const DiscreteModel>(DiscreteModel::fv(fv_mesh_from_json(text), mean));
  return std::make_shared<const DiscreteModel>(DiscreteModel::tri(tri_mesh_from_off(text)));
}

void ExperimentSpec::validate() const {
  require(!N.empty(), "N schedule is empty");
  for (int n : N) require(n >= 1, "N must be positive");
  for (int r : resolutions) require(r >= 0, "resolutions must be nonnegative");
  for (double s : sigmas) require(s > 0, "sigma must be positive");
  require(resolutions.empty() || sigmas.empty(), "give either resolutions or sigmas, not both");
  require(levels >= 1 && draws >= 1, "levels and draws must be positive");
  if (mesh.kind == ModelKind::kFV) {
    require(mesh.dim >= 1 && mesh.dim <= 3, "grid dimension must be 1..3");
    require(mesh.cells >= 1, "cells must be positive");
    for (int a = 0; a < mesh.dim; ++a) require(mesh.hi[a] > mesh.lo[a], "empty domain");
  }
  if (!mesh.mesh_file.empty() && !fs::exists(mesh.mesh_file))
    fail(ErrorCode::kIo, "mesh file '" + mesh.mesh_file + "' not found");
  for (const auto* r : {&rho0, &rho1})
    if (r->rfind("file:", 0) == 0 && !fs::exists(resolve(base_dir, r->substr(5))))
      fail(ErrorCode::kIo, "measure file '" + r->substr(5) + "' not found");
  const bool needs_pair = mode == ExperimentMode::kSolve || mode == ExperimentMode::kConverge;
  if (needs_pair) require(!rho0.empty() && !rho1.empty(), "both marginals are required");
  if (mode == ExperimentMode::kJko) require(!rho0.empty(), "the initial measure is required");
  if (mode == ExperimentMode::kConverge) require(oracle.has_value(), "converge needs an oracle");
  if (mode == ExperimentMode::kConverge || mode == ExperimentMode::kVerify) (void)mesh.family();
  if (mode == ExperimentMode::kConverge) {
    size_t rows = std::max({N.size(), resolutions.size(), sigmas.size()});
    for (size_t n : {N.size(), resolutions.size(), sigmas.size()})
      require(n == 0 || n == 1 || n == rows, "schedules must have matching lengths (or length 1)");
  }
  if (mode == ExperimentMode::kVerify)
    for (const auto& a : assumptions)
      if (a != "A7") (void)assumption_from_name(a);
  solver.validate();
}

std::string ExperimentSpec::to_json() const {
  json j;
  j["mode"] = mode_name(mode);
  json m;
  m["kind"] = mesh.kind == ModelKind::kFV ? "fv" : "tri";
  if (!mesh.mesh_file.empty()) {
    m["mesh"] = mesh.mesh_file;
  } else if (mesh.kind == ModelKind::kFV) {
    m["dim"] = mesh.dim;
    m["lo"] = std::vector<double>(mesh.lo.data(), mesh.lo.data() + mesh.dim);
    m["hi"] = std::vector<double>(mesh.hi.data(), mesh.hi.data() + mesh.dim);
    m["cells"] = mesh.cells;
  } else if (mesh.subdiv >= 0) {
    m["icosphere"] = mesh.subdiv;
  } else {
    m["flat"] = mesh.flat_n;
  }
  if (mesh.kind == ModelKind::kFV) m["mean"] = mean_name(mesh.mean);
  j["model"] = m;
  if (!rho0.empty()) j["rho0"] = rho0;
  if (!rho1.empty()) j["rho1"] = rho1;
  j["N"] = N;
  if (!resolutions.empty()) j["resolutions"] = resolutions;
  if (!sigmas.empty()) j["sigma"] = sigmas;
  if (oracle) j["oracle"] = oracle_name(*oracle);
  j["penalty"] = {{"kind", penalty_name(penalty.kind)},
                  {"lambda", penalty.lambda},
                  {"center", {penalty.center[0], penalty.center[1], penalty.center[2]}}};
  j["solver"] = {{"tol", solver.tol},   {"max_iter", solver.max_iter},
                 {"r", solver.r},       {"adapt", solver.adapt},
                 {"alpha", solver.alpha}, {"linear", linear_solver_name(solver.linear)}};
  if (!solver.trace_csv.empty()) j["solver"]["trace"] = solver.trace_csv;
  if (!assumptions.empty()) j["assumptions"] = assumptions;
  j["levels"] = levels;
  j["seed"] = seed;
  j["draws"] = draws;
  json o = json::object();
  if (!out.csv.empty()) o["csv"] = out.csv;
  if (!out.json.empty()) o["json"] = out.json;
  if (!out.path.empty()) o["path"] = out.path;
  j["output"] = o;
  return j.dump(2);
}

namespace {

Pt json_point(const json& v, const std::string& what) {
  Pt p = Pt::Zero();
  if (v.is_number()) {
    p[0] = v.get<double>();
    return p;
  }
  require(v.is_array() && !v.empty() && v.size() <= 3, what + " must be a number or an array of 1..3 numbers");
  for (size_t i = 0; i < v.size(); ++i) p[i] = v[i].get<double>();
  return p;
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) fail(ErrorCode::kInvalidArgument, "unknown key '" + it.key() + "' in " + where);
}

template <typename T>
std::vector<T> scalar_or_list(const json& v) {
  if (v.is_array()) return v.get<std::vector<T>>();
  return {v.get<T>()};
}

std::string measure_text(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

}  // namespace

ExperimentSpec ExperimentSpec::from_json(const std::string& text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("experiment spec: ") + e.what());
  }
  ExperimentSpec s;
  s.base_dir = base_dir;
  try {
    require(j.is_object(), "experiment spec must be a JSON object");
    check_keys(j, {"mode", "model", "rho0", "rho1", "N", "resolutions", "sigma", "oracle", "penalty", "solver",
                   "assumptions", "levels", "seed", "draws", "output"},
               "experiment spec");
    if (j.contains("mode")) s.mode = mode_from_name(j["mode"].get<std::string>());
    if (j.contains("model")) {
      const json& m = j["model"];
      check_keys(m, {"kind", "dim", "domain", "lo", "hi", "cells", "mesh", "icosphere", "flat", "mean"}, "model");
      std::string kind = m.value("kind", std::string("fv"));
      require(kind == "fv" || kind == "tri", "model kind must be fv or tri");
      s.mesh.kind = kind == "fv" ? ModelKind::kFV : ModelKind::kTri;
      s.mesh.dim = m.value("dim", 1);
      if (m.contains("domain")) {
        auto d = m["domain"].get<std::vector<double>>();
        require(d.size() == 2, "domain must be [a, b]");
        s.mesh.lo = Pt::Zero();
        s.mesh.hi = Pt::Zero();
        for (int a = 0; a < s.mesh.dim && a < 3; ++a) {
          s.mesh.lo[a] = d[0];
          s.mesh.hi[a] = d[1];
        }
      }
      if (m.contains("lo")) s.mesh.lo = json_point(m["lo"], "lo");
      if (m.contains("hi")) s.mesh.hi = json_point(m["hi"], "hi");
      if (m.contains("cells")) s.mesh.cells = m["cells"].get<int>();
      if (m.contains("mesh")) s.mesh.mesh_file = resolve(base_dir, m["mesh"].get<std::string>());
      if (m.contains("icosphere")) s.mesh.subdiv = m["icosphere"].get<int>();
      if (m.contains("flat")) s.mesh.flat_n = m["flat"].get<int>();
      if (m.contains("mean")) s.mesh.mean = mean_from_name(m["mean"].get<std::string>());
    }
    if (j.contains("rho0")) s.rho0 = measure_text(j["rho0"]);
    if (j.contains("rho1")) s.rho1 = measure_text(j["rho1"]);
    if (j.contains("N")) s.N = scalar_or_list<int>(j["N"]);
    if (j.contains("resolutions")) s.resolutions = scalar_or_list<int>(j["resolutions"]);
    if (j.contains("sigma")) s.sigmas = scalar_or_list<double>(j["sigma"]);
    if (j.contains("oracle")) s.oracle = oracle_from_name(j["oracle"].get<std::string>());
    if (j.contains("penalty")) {
      const json& p = j["penalty"];
      check_keys(p, {"kind", "lambda", "center"}, "penalty");
      if (p.contains("kind")) s.penalty.kind = penalty_from_name(p["kind"].get<std::string>());
      if (p.contains("lambda")) s.penalty.lambda = p["lambda"].get<double>();
      if (p.contains("center")) s.penalty.center = json_point(p["center"], "penalty center");
    }
    if (j.contains("solver")) {
      const json& o = j["solver"];
      check_keys(o, {"tol", "max_iter", "r", "adapt", "alpha", "linear", "trace"}, "solver");
      if (o.contains("tol")) s.solver.tol = o["tol"].get<double>();
      if (o.contains("max_iter")) s.solver.max_iter = o["max_iter"].get<int>();
      if (o.contains("r")) s.solver.r = o["r"].get<double>();
      if (o.contains("adapt")) s.solver.adapt = o["adapt"].get<bool>();
      if (o.contains("alpha")) s.solver.alpha = o["alpha"].get<double>();
      if (o.contains("linear")) s.solver.linear = linear_solver_from_name(o["linear"].get<std::string>());
      if (o.contains("trace")) s.solver.trace_csv = o["trace"].get<std::string>();
    }
    if (j.contains("assumptions")) s.assumptions = scalar_or_list<std::string>(j["assumptions"]);
    if (j.contains("levels")) s.levels = j["levels"].get<int>();
    if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("draws")) s.draws = j["draws"].get<int>();
    if (j.contains("output")) {
      const json& o = j["output"];
      check_keys(o, {"csv", "json", "path"}, "output");
      s.out.csv = o.value("csv", std::string());
      s.out.json = o.value("json", std::string());
      s.out.path = o.value("path", std::string());
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("experiment spec: ") + e.what());
  }
  s.validate();
  return s;
}

ExperimentSpec ExperimentSpec::from_file(const std::string& path) {
  if (!fs::exists(path)) fail(ErrorCode::kIo, "spec file '" + path + "' not found");
  return from_json(read_text(path), fs::path(path).parent_path().string());
}

GenericMeasure parse_measure(const std::string& text, const DiscreteModel& model, const std::string& base_dir) {
  const int dim = model.space_dim();
  if (text.rfind("dirac:", 0) == 0) {
    auto v = split_numbers(text.substr(6), "dirac");
    require(!v.empty() && v.size() <= 3, "dirac needs 1..3 coordinates");
    Pt x = Pt::Zero();
    for (size_t i = 0; i < v.size(); ++i) x[i] = v[i];
    GenericMeasure mu(dim, false);
    mu.add_atom(x, 1.0);
    return mu;
  }
  if (text.rfind("uniform:", 0) == 0) {
    auto v = split_numbers(text.substr(8), "uniform");
    require(v.size() == 2 && v[1] > v[0], "uniform needs a,b with a < b");
    if (model.metric() != Metric::kFlat) fail(ErrorCode::kInvalidArgument, "uniform:a,b needs a flat domain");
    const int d = model.kind() == ModelKind::kFV ? model.fv_mesh().dim : 2;
    Pt lo = Pt::Zero(), hi = Pt::Zero();
    for (int a = 0; a < d; ++a) {
      lo[a] = v[0];
      hi[a] = v[1];
    }
    GenericMeasure mu(dim, false);
    mu.add_piece(make_box(lo, hi), 1.0 / std::pow(v[1] - v[0], d));
    return mu;
  }
  RegionResolver resolver = [&model](const std::string& kind, int index) -> Region {
    if (model.kind() == ModelKind::kFV && kind == "cell") {
      require(index >= 0 && index < model.fv_mesh().n_cells(), "cell index out of range");
      return model.fv_mesh().cell_region(index);
    }
    if (model.kind() == ModelKind::kTri && kind == "triangle") {
      require(index >= 0 && index < model.tri_mesh().n_triangles(), "triangle index out of range");
      return model.tri_mesh().preimage(index);
    }
    fail(ErrorCode::kInvalidArgument, "region kind '" + kind + "' does not match the model");
  };
  if (text.rfind("file:", 0) == 0) return measure_from_json(read_text(resolve(base_dir, text.substr(5))), resolver);
  if (!text.empty() && text.front() == '{') return measure_from_json(text, resolver);
  fail(ErrorCode::kInvalidArgument, "cannot parse measure '" + text + "' (dirac:, uniform:, file: or JSON)");
}

namespace {

std::vector<std::pair<int, int>> schedule(const ExperimentSpec& s) {
  size_t rows = std::max({s.N.size(), s.resolutions.size(), s.sigmas.size()});
  auto pick = [](const auto& v, size_t i) { return v.size() == 1 ? v[0] : v[i]; };
  std::vector<std::pair<int, int>> out;
  for (size_t i = 0; i < rows; ++i) {
    int res = s.mesh.resolution();
    if (!s.resolutions.empty()) {
      res = pick(s.resolutions, i);
    } else if (!s.sigmas.empty()) {
      double sigma = pick(s.sigmas, i);
      if (s.mesh.kind == ModelKind::kFV) {
        double h = sigma / std::sqrt(static_cast<double>(s.mesh.dim));
        res = static_cast<int>(std::lround((s.mesh.hi[0] - s.mesh.lo[0]) / h));
      } else if (!is_sphere(s.mesh)) {
        res = static_cast<int>(std::lround(std::sqrt(2.0) / sigma));
      } else {
        fail(ErrorCode::kInvalidArgument, "sigma schedules on the icosphere are not supported; give resolutions");
      }
      require(res >= 1, "sigma too large for the domain");
    }
    out.emplace_back(pick(s.N, i), res);
  }
  return out;
}

std::string steps_csv(const DiscreteProblem& pb, const SpaceTimePath& path) {
  const DiscreteModel& model = *pb.model;
  std::ostringstream os;
  os << "k,t,mass,kinetic\n";
  os << 0 << ',' << fmt_double(0) << ',' << fmt_double(model.mass(path.P[0])) << ',' << fmt_double(0) << '\n';
  for (int k = 1; k <= path.N; ++k) {
    Vec Q = 0.5 * (path.P[k - 1] + path.P[k]);
    os << k << ',' << fmt_double(static_cast<double>(k) / path.N) << ',' << fmt_double(model.mass(path.P[k])) << ','
       << fmt_double(path.tau() * model.action(Q.cwiseMax(0.0), path.M[k - 1])) << '\n';
  }
  return os.str();
}

json kkt_json(const KKTReport& r) {
  return {{"continuity", num(r.continuity)},   {"consensus", num(r.consensus)},
          {"stationarity", num(r.stationarity)}, {"primal", num(r.primal_value)},
          {"dual", num(r.dual_value)},         {"gap", num(r.gap)},
          {"dual_infeasibility", num(r.dual_infeasibility)}, {"feasible", r.feasible}};
}

FinalPenalty make_penalty(const DiscreteModel& model, const PenaltySpec& p) {
  switch (p.kind) {
    case PenaltyKind::kNone: return FinalPenalty::none();
    case PenaltyKind::kPotential: {
      Pt c = p.center;
      return FinalPenalty::potential(model, p.lambda, [c](const Pt& x) { return (x - c).squaredNorm(); });
    }
    case PenaltyKind::kQuadratic: return FinalPenalty::quadratic(p.lambda);
    case PenaltyKind::kEntropy: return FinalPenalty::entropy(model, p.lambda);
  }
  return FinalPenalty::none();
}

Pt barycenter(const DiscreteModel& model, const Vec& P) {
  auto pos = model.positions();
  Pt b = Pt::Zero();
  double m = 0;
  for (int j = 0; j < P.size(); ++j) {
    b += model.volumes()[j] * P[j] * pos[j];
    m += model.volumes()[j] * P[j];
  }
  return m > 0 ? (b / m).eval() : b;
}

std::string stats_line(const SolveStats& st) {
  std::ostringstream os;
  os << "objective " << fmt_double(st.objective) << " iterations " << st.iterations << " primal "
     << fmt_double(st.primal) << " dual " << fmt_double(st.dual) << (st.converged ? " converged" : " NOT CONVERGED");
  return os.str();
}

ExperimentResult run_solve(const ExperimentSpec& s) {
  auto model = s.mesh.build();
  GenericMeasure mu0 = parse_measure(s.rho0, *model, s.base_dir), mu1 = parse_measure(s.rho1, *model, s.base_dir);
  DiscreteProblem pb = assemble(model, model->sample_density(mu0), model->sample_density(mu1), s.N.front());
  SolveResult res = solve(pb, s.solver);
  KKTReport kkt = kkt_report(pb, res.path, res.multipliers, res.stats.consensus);
  ExperimentResult out;
  out.status = res.stats.converged ? RunStatus::kOk : RunStatus::kNotConverged;
  out.csv = steps_csv(pb, res.path);
  out.path = path_to_json(res.path);
  json j;
  j["mode"] = "solve";
  j["N"] = pb.N;
  j["sigma"] = model->sigma();
  j["objective"] = num(res.stats.objective);
  j["stats"] = json::parse(res.stats.to_json());
  j["kkt"] = kkt_json(kkt);
  out.lines.push_back(stats_line(res.stats));
  if (s.oracle) {
    double truth = ground_truth(*s.oracle, mu0, mu1, model->metric());
    double rel = std::abs(res.stats.objective - truth) / std::max(truth, 1e-300);
    j["truth"] = num(truth);
    j["rel_error"] = num(rel);
    out.lines.push_back("truth " + fmt_double(truth) + " rel_error " + fmt_double(rel));
  }
  j["metadata"] = metadata(res.stats.wall_time);
  out.json = j.dump(2);
  return out;
}

ExperimentResult run_jko(const ExperimentSpec& s) {
  auto model = s.mesh.build();
  GenericMeasure mu0 = parse_measure(s.rho0, *model, s.base_dir);
  Vec P0 = model->sample_density(mu0);
  FinalPenalty g = make_penalty(*model, s.penalty);
  SolveResult res = solve_jko(model, P0, g, s.N.front(), s.solver);
  DiscreteProblem pb = assemble_jko(model, P0, g, s.N.front());
  ExperimentResult out;
  out.status = res.stats.converged ? RunStatus::kOk : RunStatus::kNotConverged;
  out.csv = steps_csv(pb, res.path);
  out.path = path_to_json(res.path);
  Pt bary = barycenter(*model, res.path.P.back());
  json j;
  j["mode"] = "jko";
  j["N"] = pb.N;
  j["penalty"] = penalty_name(g.kind);
  j["objective"] = num(res.stats.objective);
  j["final_penalty"] = num(g.value(*model, res.path.P.back()));
  j["final_barycenter"] = {bary[0], bary[1], bary[2]};
  j["stats"] = json::parse(res.stats.to_json());
  j["metadata"] = metadata(res.stats.wall_time);
  out.json = j.dump(2);
  out.lines.push_back(stats_line(res.stats));
  out.lines.push_back("final barycenter " + fmt_double(bary[0]) + " " + fmt_double(bary[1]) + " " +
                      fmt_double(bary[2]));
  return out;
}

ExperimentResult run_converge(const ExperimentSpec& s) {
  auto t0 = std::chrono::steady_clock::now();
  ConvergenceSpec cs;
  cs.family = s.mesh.family();
  auto base = s.mesh.build();
  cs.rho0 = parse_measure(s.rho0, *base, s.base_dir);
  cs.rho1 = parse_measure(s.rho1, *base, s.base_dir);
  cs.oracle = *s.oracle;
  cs.schedule = schedule(s);
  cs.solver = s.solver;
  ConvergenceTable tab = convergence_experiment(cs);
  ExperimentResult out;
  bool flagged = false;
  for (const auto& r : tab.rows) {
    flagged = flagged || r.flagged;
    std::ostringstream os;
    os << "N " << r.N << " resolution " << r.resolution << " sigma " << fmt_double(r.sigma) << " objective "
       << fmt_double(r.objective) << " rel_error " << fmt_double(r.rel_error) << (r.flagged ? " FLAGGED" : "");
    out.lines.push_back(os.str());
  }
  out.lines.push_back(std::string("monotone in N: ") + (tab.monotone_in_N ? "yes" : "NO"));
  out.status = flagged || !tab.monotone_in_N ? RunStatus::kNotConverged : RunStatus::kOk;
  out.csv = tab.to_csv();
  json j = json::parse(tab.to_json());
  j["mode"] = "converge";
  j["oracle"] = oracle_name(cs.oracle);
  j["family"] = cs.family.describe();
  j["metadata"] = metadata(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  out.json = j.dump(2);
  return out;
}

ControllabilitySpec default_controllability(const MeshSource& m, int N) {
  ControllabilitySpec c;
  c.family = m.family();
  c.resolution = m.resolution();
  c.N = N;
  if (is_sphere(m)) {
    c.x = Pt(0.3, 0.2, 1).normalized();
    c.direction = Pt(0, 1, 0).cross(c.x).normalized();
  } else {
    const ModelFamily& f = c.family;
    c.x = f.lo + 0.15 * (f.hi - f.lo);
    if (f.kind == ModelKind::kTri) c.x[2] = 0;
    c.direction = Pt(1, 0, 0);
    const double room = 0.85 * (f.hi[0] - f.lo[0]);
    for (double& d : c.distances) d *= std::min(1.0, room / 1.0);
  }
  return c;
}

ExperimentResult run_verify(const ExperimentSpec& s) {
  auto t0 = std::chrono::steady_clock::now();
  ModelFamily fam = s.mesh.family();
  std::vector<std::string> list = s.assumptions;
  if (list.empty()) {
    list = {"A1", "A2", "A3", "A4", "A5", "A6", "A8", "A9"};
    if (fam.kind == ModelKind::kTri) list.push_back("A'5");
    list.push_back("A7");
  }
  SweepOptions o;
  o.levels = s.levels;
  o.seed = s.seed;
  o.draws = s.draws;
  o.penalty = s.penalty.kind == PenaltyKind::kNone ? PenaltyKind::kPotential : s.penalty.kind;
  o.lambda = s.penalty.lambda;
  ExperimentResult out;
  json j;
  j["mode"] = "verify";
  j["family"] = fam.describe();
  j["seed"] = s.seed;
  j["sweeps"] = json::array();
  std::ostringstream csv;
  csv << "assumption,family,level,resolution,sigma,error\n";
  bool all = true;
  for (const auto& name : list) {
    std::ostringstream line;
    if (name == "A7") {
      ControllabilityReport rep = controllability_bound(default_controllability(s.mesh, s.N.front()));
      j["controllability"] = json::parse(rep.to_json());
      all = all && rep.pass();
      line << "A7 kappa " << fmt_double(rep.kappa) << " r2 " << fmt_double(rep.r2) << " max_time_factor/tau "
           << fmt_double(rep.max_time_factor) << " kappa_2N " << fmt_double(rep.kappa_N2) << " kappa_fine "
           << fmt_double(rep.kappa_fine) << (rep.pass() ? " PASS" : " FAIL");
    } else {
      AssumptionSweep sw = assumption_sweep(fam, assumption_from_name(name), o);
      std::string body = sw.to_csv();
      csv << body.substr(body.find('\n') + 1);
      j["sweeps"].push_back(json::parse(sw.to_json()));
      all = all && sw.pass;
      line << assumption_name(sw.which) << ' ' << sw.family << " errors";
      for (const auto& lv : sw.levels) line << ' ' << fmt_double(lv.error);
      line << " slope " << fmt_double(sw.slope) << (sw.pass ? " PASS" : " FAIL");
    }
    out.lines.push_back(line.str());
  }
  j["pass"] = all;
  j["metadata"] = metadata(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  out.status = all ? RunStatus::kOk : RunStatus::kVerificationFailed;
  out.csv = csv.str();
  out.json = j.dump(2);
  return out;
}

ExperimentResult run_mesh_report(const ExperimentSpec& s) {
  auto t0 = std::chrono::steady_clock::now();
  auto model = s.mesh.build();
  ExperimentResult out;
  json j;
  j["mode"] = "mesh-report";
  j["kind"] = model->kind() == ModelKind::kFV ? "fv" : "tri";
  j["n_density"] = model->n_density();
  j["n_momentum"] = model->n_momentum();
  j["sigma"] = model->sigma();
  std::ostringstream csv;
  csv << "kind,n_density,n_momentum,sigma,regularity,quality\n";
  double reg = 0, quality = 0;
  if (model->kind() == ModelKind::kFV) {
    const FVMesh& m = model->fv_mesh();
    m.validate();
    IsotropyReport iso = isotropy_report(m);
    reg = m.regularity_witness();
    quality = iso.deficit;
    j["cells"] = m.n_cells();
    j["faces"] = m.n_faces();
    j["isotropy"] = {{"deficit", iso.deficit}, {"max_eigen", iso.max_eigen}, {"worst_cell", iso.worst_cell}};
  } else {
    const TriMesh& m = model->tri_mesh();
    DistortionReport d = tri_distortion(m);
    reg = m.regularity_witness();
    quality = std::max({d.alpha_max, d.beta_max, d.theta_max});
    j["vertices"] = m.n_vertices();
    j["triangles"] = m.n_triangles();
    j["distortion"] = {{"normal_deviation", d.normal_deviation},
                       {"alpha_max", d.alpha_max},
                       {"beta_max", d.beta_max},
                       {"theta_max", d.theta_max}};
  }
  j["regularity"] = reg;
  csv << j["kind"].get<std::string>() << ',' << model->n_density() << ',' << model->n_momentum() << ','
      << fmt_double(model->sigma()) << ',' << fmt_double(reg) << ',' << fmt_double(quality) << '\n';
  j["metadata"] = metadata(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  out.csv = csv.str();
  out.json = j.dump(2);
  out.lines.push_back(std::string(j["kind"].get<std::string>()) + " n_density " + std::to_string(model->n_density()) +
                      " n_momentum " + std::to_string(model->n_momentum()) + " sigma " + fmt_double(model->sigma()) +
                      " regularity " + fmt_double(reg) +
                      (model->kind() == ModelKind::kFV ? " isotropy_deficit " : " distortion ") + fmt_double(quality));
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  switch (spec.mode) {
    case ExperimentMode::kSolve: return run_solve(spec);
    case ExperimentMode::kJko: return run_jko(spec);
    case ExperimentMode::kConverge: return run_converge(spec);
    case ExperimentMode::kVerify: return run_verify(spec);
    case ExperimentMode::kMeshReport: return run_mesh_report(spec);
  }
  fail(ErrorCode::kInternal, "unhandled mode");
}

void write_outputs(const ExperimentSpec& spec, const ExperimentResult& res) {
  if (!spec.out.csv.empty()) write_text(spec.out.csv, res.csv);
  if (!spec.out.json.empty()) write_text(spec.out.json, res.json + "\n");
  if (!spec.out.path.empty() && !res.path.empty()) write_text(spec.out.path, res.path + "\n");
}

}  // namespace otbb
