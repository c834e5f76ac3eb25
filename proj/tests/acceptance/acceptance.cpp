/*************************************************************************************************
 * Acceptance checks
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

// Acceptance checks, one line per criterion. Exit status is the number of failed criteria.

#include <Eigen/Geometry>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "../test_util.hpp"
#include "otbb/prox.hpp"
#include "otbb/verify.hpp"

namespace otbb {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Check = std::function<Outcome()>;

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// 1: S_X(div m) = Div(S_Y m) for polynomial no-flux fields.
Outcome exact_commutation() {
  double worst = 0;
  for (int dim : {1, 2})
    for (int cells : {4, 8, 16, 32}) {
      ModelFamily fam = ModelFamily::fv_grid(dim, Pt(0, 0, 0), dim == 1 ? Pt(2, 0, 0) : Pt(1, 1, 0), cells);
      auto model = fam.at_level(0);
      for (const auto& m : default_battery(fam).no_flux) worst = std::max(worst, check_a4(*model, m, 8));
    }
  return {worst <= 1e-10, fmt("max residual %.3g (<= 1e-10)", worst)};
}

// 2: square grids are exactly isotropic.
Outcome isotropy() {
  double worst = 0;
  for (int dim : {1, 2, 3})
    for (int n : {2, 4, 8, 16, 32}) {
      if (dim == 3 && n > 16) continue;
      worst = std::max(worst, isotropy_deficit(build_grid_mesh(dim, Pt(0, 0, 0), Pt(1, 1, 1), {n, n, n})));
    }
  return {worst <= 1e-12, fmt("max deficit %.3g (<= 1e-12)", worst)};
}

// 3: prox_kinetic against the nested golden-section oracle.
Outcome prox_oracle() {
  test::Rng rng(2024);
  double worst = 0, kkt = 0;
  for (int t = 0; t < 1000; ++t) {
    const int dim = 1 + rng.below(3);
    Pt dir(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    for (int i = dim; i < 3; ++i) dir[i] = 0;
    if (dir.norm() == 0) dir[0] = 1;
    dir.normalize();
    const double mag = rng.uniform(0, 3), s0 = rng.uniform(-2, 4), g = rng.uniform(0.1, 10), w = rng.uniform(0.1, 10);
    Pt m0 = mag * dir;
    KineticProxResult r = prox_kinetic(s0, m0.data(), dim, g, w);
    test::BruteProx b = test::brute_prox(s0, mag, g, w);
    worst = std::max({worst, std::abs(r.s - b.s), (r.m - b.m * dir).norm()});
    kkt = std::max(kkt, r.kkt);
  }
  return {worst <= 1e-6 && kkt <= 1e-10, fmt("max |(s,m) - oracle| %.3g (<= 1e-6), max KKT %.3g (<= 1e-10)", worst, kkt)};
}

// 4: uniform shift on [0,2] against the quantile oracle.
Outcome uniform_shift() {
  ConvergenceSpec s;
  s.family = ModelFamily::fv_grid(1, Pt(0, 0, 0), Pt(2, 0, 0), 16);
  s.rho0.add_piece(make_box(Pt(0, 0, 0), Pt(1, 0, 0)), 1);
  s.rho1.add_piece(make_box(Pt(0.5, 0, 0), Pt(1.5, 0, 0)), 1);
  s.oracle = Oracle::kQuantile;
  // sigma = 2 / cells on [0,2].
  s.schedule = {{8, 32}, {16, 64}, {32, 128}, {64, 16}, {8, 256}};
  ConvergenceTable t = convergence_experiment(s);
  const auto& r = t.rows;
  bool finite = true;
  for (const auto& row : r) finite = finite && std::isfinite(row.objective) && !row.flagged;
  const bool decreasing = r[0].rel_error > r[1].rel_error && r[1].rel_error > r[2].rel_error;
  const bool target = r[2].rel_error <= 0.05;
  // Joint refinement beats both skewed rows.
  const bool improved = r[2].rel_error < r[3].rel_error && r[2].rel_error < r[4].rel_error;
  std::string d = fmt("errors (8,1/16) %.4f (16,1/32) %.4f (32,1/64) %.4f (<= 0.05)", r[0].rel_error,
                      r[1].rel_error, r[2].rel_error);
  d += fmt("; skewed (64,1/8) %.4f (8,1/128) %.4f", r[3].rel_error, r[4].rel_error);
  return {finite && decreasing && target && improved, d};
}

Vec atom_sample(const DiscreteModel& model, const Pt& x) {
  GenericMeasure d(model.space_dim(), false);
  d.add_atom(x, 1);
  return model.sample_density(d);
}

// 5: flat Dirac geodesic.
Outcome dirac_flat() {
  auto model = test::grid1d(64, 0, 2);
  DiscreteProblem pb = assemble(model, atom_sample(*model, Pt(0.25, 0, 0)), atom_sample(*model, Pt(1.75, 0, 0)), 16);
  SolveResult r = solve(pb);
  double rel = std::abs(r.stats.objective - 1.125) / 1.125;
  return {r.stats.converged && rel <= 0.05,
          fmt("objective %.6f vs 1.125, rel error %.4f (<= 0.05), iterations %.0f", r.stats.objective, rel,
              r.stats.iterations)};
}

// 6: sphere Dirac geodesic at distance pi/2.
Outcome dirac_sphere() {
  auto model = test::sphere(4);
  const Pt x = Pt(0.3, 0.2, 1).normalized();
  const Pt axis = Pt(0, 1, 0).cross(x).normalized();
  const Pt y = Eigen::AngleAxisd(kPi / 2, axis) * x;
  DiscreteProblem pb = assemble(model, atom_sample(*model, x), atom_sample(*model, y), 16);
  SolverOptions o;
  o.tol = 1e-4;
  SolveResult r = solve(pb, o);
  const double truth = kPi * kPi / 8;
  double rel = std::abs(r.stats.objective - truth) / truth;
  return {r.stats.converged && rel <= 0.10,
          fmt("objective %.5f vs %.5f, rel error %.4f (<= 0.10), iterations %.0f", r.stats.objective, truth, rel,
              r.stats.iterations)};
}

// 7: controllability construction costs.
Outcome controllability() {
  ControllabilitySpec s;
  s.family = ModelFamily::fv_grid(1, Pt(0, 0, 0), Pt(2, 0, 0), 64);
  s.resolution = 64;
  s.N = 16;
  s.x = Pt(0.3, 0, 0);
  ControllabilityReport r = controllability_bound(s);
  return {r.pass(), fmt("kappa %.4f R2 %.4f (>= 0.95), max time factor %.3f tau (<= 16), ", r.kappa, r.r2,
                        r.max_time_factor) +
                        fmt("kappa 2N %.4f fine %.4f (within 20%%)", r.kappa_N2, r.kappa_fine)};
}

// 8: assumption sweeps on both models.
Outcome sweeps() {
  std::vector<ModelFamily> fams{ModelFamily::fv_grid(1, Pt(0, 0, 0), Pt(2, 0, 0), 16),
                                ModelFamily::fv_grid(2, Pt(0, 0, 0), Pt(1, 1, 0), 8), ModelFamily::flat_triangles(4),
                                ModelFamily::icosphere(1)};
  bool ok = true;
  std::string d, failed;
  for (const auto& f : fams) {
    d += f.describe() + " slopes";
    for (Assumption a : {Assumption::kA1, Assumption::kA2, Assumption::kA3, Assumption::kA5, Assumption::kA6}) {
      AssumptionSweep s = assumption_sweep(f, a);
      ok = ok && s.pass;
      if (!s.pass) failed += std::string(" ") + assumption_name(a) + "@" + f.describe();
      d += std::string(" ") + assumption_name(a) + "=" + (std::isfinite(s.slope) ? fmt("%.2f", s.slope) : "exact");
    }
    d += "; ";
  }
  d.resize(d.size() - 2);
  if (!failed.empty()) d += "; failed:" + failed;
  return {ok, d};
}

// 9: JKO step against the closed-form barycenter.
Outcome jko() {
  auto model = test::grid1d(64, -0.5, 1.5);
  Vec P0 = atom_sample(*model, Pt(0, 0, 0));
  FinalPenalty g = FinalPenalty::potential(*model, 1, [](const Pt& x) { return std::pow(x[0] - 1, 2); });
  SolveResult r = solve_jko(model, P0, g, 32);
  auto pos = model->positions();
  double b = 0, m = 0;
  for (int j = 0; j < model->n_density(); ++j) {
    b += model->volumes()[j] * r.path.P.back()[j] * pos[j][0];
    m += model->volumes()[j] * r.path.P.back()[j];
  }
  const double bary = b / m, rel = std::abs(bary - 2.0 / 3.0) / (2.0 / 3.0);
  return {r.stats.converged && rel <= 0.02, fmt("barycenter %.5f vs 0.66667, rel error %.4f (<= 0.02)", bary, rel)};
}

// 10: invariant suites on 500 seeded instances per model.
Outcome invariants() {
  int failures = 0, checks = 0;
  auto expect = [&](bool c) {
    ++checks;
    failures += c ? 0 : 1;
  };
  test::Rng rng(77);
  std::vector<std::shared_ptr<const DiscreteModel>> models{test::grid1d(7), test::grid2d(4),
                                                           test::grid1d(7, 0, 1, MeanKind::kGeometric),
                                                           test::grid2d(4, MeanKind::kLogarithmic),
                                                           test::grid1d(6, 0, 1, MeanKind::kHarmonic),
                                                           test::sphere(1), test::flat_tri(3)};
  for (const auto& model : models)
    for (int t = 0; t < 500; ++t) {
      Vec P = rng.vec(model->n_density(), 0.05, 2), P2 = rng.vec(model->n_density(), 0.05, 2);
      Vec M = rng.vec(model->n_momentum(), -1, 1), M2 = rng.vec(model->n_momentum(), -1, 1);
      Vec B = rng.vec(model->n_momentum(), -1, 1);
      double l = rng.uniform(0.1, 5), A = model->action(P, M);
      expect(std::abs(model->action(l * P, M) - A / l) <= 1e-10 * A / l);
      expect(std::abs(model->action(P, l * M) - l * l * A) <= 1e-10 * l * l * A);
      expect(model->action(P + P2, M) <= A + 1e-12);
      expect(model->action(0.5 * (P + P2), 0.5 * (M + M2)) <= 0.5 * (A + model->action(P2, M2)) + 1e-12);
      expect(model->scalar_product(M, B) <= 2 * std::sqrt(A) * std::sqrt(model->action_conjugate(P, B)) + 1e-12);
    }
  for (MeanKind k : {MeanKind::kArithmetic, MeanKind::kGeometric, MeanKind::kHarmonic, MeanKind::kLogarithmic}) {
    expect(std::abs(mean_value(k, 1, 1) - 1) <= 1e-14);
    for (int t = 0; t < 500; ++t) {
      double a = rng.uniform(0.01, 5), b = rng.uniform(0.01, 5), l = rng.uniform(0.1, 10);
      expect(std::abs(mean_value(k, a, b) - mean_value(k, b, a)) <= 1e-13);
      expect(std::abs(mean_value(k, l * a, l * b) - l * mean_value(k, a, b)) <= 1e-12 * l * (a + b));
      expect(mean_value(k, a, b) <= 0.5 * (a + b) + 1e-13);
    }
  }
  for (int t = 0; t < 500; ++t) {
    GenericMeasure mu(2, false), nu(2, false);
    mu.add_atom(Pt(rng.uniform(), rng.uniform(), 0), rng.uniform(-1, 1));
    mu.add_piece(make_box(Pt(0, 0, 0), Pt(rng.uniform(0.1, 1), 1, 0)), rng.uniform(0, 2));
    nu.add_piece(make_triangle(Pt(0, 0, 0), Pt(1, 0, 0), Pt(0, rng.uniform(0.1, 1), 0)), rng.uniform(0, 2));
    double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
    TestFunction f = affine_function(Pt(rng.uniform(-1, 1), rng.uniform(-1, 1), 0), rng.uniform(-1, 1));
    double lhs = pair(mu.scaled(a).plus(nu.scaled(b)), f).value;
    expect(std::abs(lhs - a * pair(mu, f).value - b * pair(nu, f).value) <= 1e-12);
  }
  return {failures == 0, fmt("%.0f of %.0f checks failed", failures, checks)};
}

}  // namespace
}  // namespace otbb

int main(int argc, char** argv) {
  using namespace otbb;
  struct Criterion {
    int id;
    const char* name;
    double budget;  // seconds
    Check run;
  };
  const std::vector<Criterion> all{
      {1, "exact commutation (A4)", 1, exact_commutation},
      {2, "grid isotropy", 1, isotropy},
      {3, "prox oracle equivalence", 10, prox_oracle},
      {4, "convergence to W2^2/2, uniform shift", 120, uniform_shift},
      {5, "Dirac geodesic, flat", 30, dirac_flat},
      {6, "Dirac geodesic, sphere", 180, dirac_sphere},
      {7, "controllability fit", 10, controllability},
      {8, "assumption sweeps", 120, sweeps},
      {9, "JKO step barycenter", 30, jko},
      {10, "invariant suites", 30, invariants},
  };
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool pass = o.pass && secs < c.budget;
    if (!pass) ++failed;
    std::printf("criterion %2d %s: %s: %s; runtime %.2f s (< %.0f s)\n", c.id, pass ? "PASS" : "FAIL", c.name,
                o.detail.c_str(), secs, c.budget);
    std::fflush(stdout);
  }
  return failed;
}
