/*************************************************************************************************
 * Assumption sweeps, convergence tables and controllability fits
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

#ifndef OTBB_VERIFY_HPP
#define OTBB_VERIFY_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "otbb/solver.hpp"

namespace otbb {

// A family of models indexed by a resolution: cells along the first axis (FV grids),
// squares per side (flat triangulations) or the subdivision depth (icospheres).
struct ModelFamily {
  ModelKind kind = ModelKind::kFV;
  int dim = 1;                 // FV grids
  Pt lo = Pt::Zero(), hi = Pt(1, 0, 0);
  MeanKind mean = MeanKind::kArithmetic;
  SurfaceKind surface = SurfaceKind::kSphere;  // triangle models
  int base = 8;                // resolution at level 0

  static ModelFamily fv_grid(int dim, const Pt& lo, const Pt& hi, int base_cells,
                             MeanKind mean = MeanKind::kArithmetic);
  static ModelFamily icosphere(int base_subdiv);
  static ModelFamily flat_triangles(int base_n);

  // Resolution after `level` halvings of the mesh size.
  int resolution(int level) const;
  std::shared_ptr<const DiscreteModel> build(int resolution) const;
  std::shared_ptr<const DiscreteModel> at_level(int level) const { return build(resolution(level)); }
  std::string describe() const;
};

// Smooth test objects with analytic derivatives adapted to the domain of a family:
// tensor trigonometric/polynomial functions on boxes, low-degree polynomial restrictions
// with tangential derivatives on the sphere.
struct Battery {
  std::vector<TestFunction> scalars;    // C^2 test functions
  std::vector<TestFunction> gradients;  // gradients of `scalars`, as vector fields
  std::vector<TestFunction> densities;  // bounded below by 1/2
  std::vector<TestFunction> fields;     // C^1 vector fields (tangent on the sphere)
  std::vector<TestFunction> no_flux;    // polynomial fields with zero normal flux, with jacobian
};

Battery default_battery(const ModelFamily& family);

enum class Assumption { kA1, kA2, kA3, kA4, kA5, kA5Prime, kA6, kA8, kA9 };

const char* assumption_name(Assumption a);
Assumption assumption_from_name(const std::string& s);

// max |S_X(div m) - Div(S_Y(m))|; the divergence of m is read from its jacobian.
double check_a4(const DiscreteModel& model, const TestFunction& m, int order = 12);

struct SweepOptions {
  int levels = 3;
  std::uint64_t seed = 1;
  int draws = 8;  // random P / M draws per level
  int order = 5;
  PenaltyKind penalty = PenaltyKind::kPotential;  // A8/A9
  double lambda = 1;
};

struct SweepLevel {
  int resolution = 0;
  double sigma = 0;
  double error = 0;
};

struct AssumptionSweep {
  Assumption which = Assumption::kA1;
  std::string family;
  std::uint64_t seed = 0;
  std::vector<SweepLevel> levels;  // decreasing sigma
  double slope = 0;                // log-log slope of error against sigma
  bool pass = false;

  std::string to_csv() const;
  std::string to_json() const;
};

// Pass rule: error drops by 1.5 per halving (or is below 1e-12) over all levels; A4 passes
// when every residual is at most 1e-10.
AssumptionSweep assumption_sweep(const ModelFamily& family, Assumption which, const SweepOptions& opts = {});

enum class Oracle { kDirac, kQuantile, kLP };

const char* oracle_name(Oracle o);
Oracle oracle_from_name(const std::string& s);

// Half the squared Wasserstein distance between the two marginals.
double ground_truth(Oracle oracle, const GenericMeasure& rho0, const GenericMeasure& rho1, Metric metric);

struct ConvergenceSpec {
  ModelFamily family;
  GenericMeasure rho0, rho1;
  Oracle oracle = Oracle::kQuantile;
  std::vector<std::pair<int, int>> schedule;  // (N, resolution)
  SolverOptions solver;
};

struct ConvergenceRow {
  int N = 0;
  int resolution = 0;
  double sigma = 0;
  double objective = kInf;
  double truth = 0;
  double rel_error = kInf;
  SolveStats stats;
  bool flagged = false;  // solver did not converge or the path is infeasible
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  double truth = 0;
  // Objective nonincreasing in N at fixed resolution, up to 10 x solver tolerance.
  bool monotone_in_N = true;

  std::string to_csv() const;
  std::string to_json() const;
};

// Rows run in parallel under the jobs() cap; a failing row is flagged and the rest continue.
ConvergenceTable convergence_experiment(const ConvergenceSpec& spec);

struct ControllabilitySpec {
  ModelFamily family;
  int resolution = 64;
  int N = 16;
  Pt x = Pt::Zero();
  Pt direction = Pt(1, 0, 0);           // flat: displacement direction; sphere: rotation axis
  std::vector<double> distances{0.25, 0.5, 1.0};
};

struct ControllabilityReport {
  std::vector<double> distances, costs;
  double kappa = 0;             // least-squares fit cost = kappa d^2
  double r2 = 0;
  double max_time_factor = 0;   // in units of tau
  double kappa_N2 = 0;          // with 2N steps
  double kappa_fine = 0;        // at doubled resolution
  bool pass_fit = false, pass_time = false, pass_stable = false;

  bool pass() const { return pass_fit && pass_time && pass_stable; }
  std::string to_csv() const;
  std::string to_json() const;
};

ControllabilityReport controllability_bound(const ControllabilitySpec& spec);

}  // namespace otbb

#endif
