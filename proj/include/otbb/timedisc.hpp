/*************************************************************************************************
 * Time discretisation, costs and final penalties
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

#ifndef OTBB_TIMEDISC_HPP
#define OTBB_TIMEDISC_HPP

#include <functional>
#include <memory>
#include <string>

#include "otbb/model.hpp"
#include "otbb/path.hpp"

namespace otbb {

enum class PenaltyKind { kNone, kPotential, kQuadratic, kEntropy };

const char* penalty_name(PenaltyKind k);
PenaltyKind penalty_from_name(const std::string& s);

// G(P) = lambda * sum_j vol_j g_j(P_j) + offset, with
//   potential: g_j(p) = V_j p,  quadratic: p^2/2,  entropy: p log p.
struct FinalPenalty {
  PenaltyKind kind = PenaltyKind::kNone;
  double lambda = 1;
  Vec V;
  double offset = 0;

  static FinalPenalty none();
  static FinalPenalty potential(const DiscreteModel& model, double lambda, const std::function<double(const Pt&)>& V);
  static FinalPenalty quadratic(double lambda);
  // The offset lambda |X| / e makes the value nonnegative.
  static FinalPenalty entropy(const DiscreteModel& model, double lambda);

  double value(const DiscreteModel& model, const Vec& P) const;
  // argmin_{p >= 0} lambda g_j(p) + (rho/2)(p - q)^2.
  double prox(int j, double q, double rho) const;
  // Continuous counterpart on a scalar measure: potential integrates V(x), the others need a density.
  double continuous_value(const GenericMeasure& mu, const std::function<double(const Pt&)>& V, int order = 5) const;
};

struct DiscreteProblem {
  std::shared_ptr<const DiscreteModel> model;
  int N = 1;
  Vec P0, P1;  // P1 unused in JKO mode
  bool jko = false;
  FinalPenalty penalty;

  double tau() const { return 1.0 / N; }
  int n_density() const { return model->n_density(); }
  int n_momentum() const { return model->n_momentum(); }
  int n_momentum_unknowns() const { return N * n_momentum(); }
  int n_continuity_rows() const { return N * n_density(); }
};

DiscreteProblem assemble(std::shared_ptr<const DiscreteModel> model, const Vec& P0, const Vec& P1, int N);
DiscreteProblem assemble_jko(std::shared_ptr<const DiscreteModel> model, const Vec& P0, FinalPenalty penalty, int N);

// Linear constraints on the stacked vector [P_0..P_N, M_1..M_N]:
// tau^{-1}(P_k - P_{k-1}) + Div M_k = 0, then pins on P_0 (and P_N unless JKO).
struct AffineConstraint {
  SpMat A;
  Vec b;
};

AffineConstraint continuity_operator(const DiscreteProblem& pb);

// Linear interpolation between the boundary data with zero momentum.
SpaceTimePath initial_path(const DiscreteProblem& pb);

double continuity_residual(const DiscreteProblem& pb, const SpaceTimePath& path);
// tau sum_k A(Q_k, M_k) (+ G(P_N) in JKO mode); +inf when infeasible.
double evaluate_cost(const DiscreteProblem& pb, const SpaceTimePath& path);

// Space-time measure made of time slabs [t0, t1] whose spatial part varies linearly
// from `start` to `end`.
struct SpaceTimeSlab {
  double t0, t1;
  GenericMeasure start, end;
  bool constant = false;
};

struct SpaceTimeMeasure {
  bool vector = false;
  std::vector<SpaceTimeSlab> slabs;
};

struct SpaceTimeFunction {
  std::function<double(double, const Pt&)> value;
  std::function<Pt(double, const Pt&)> vvalue;
};

SpaceTimeMeasure spacetime_reconstruct(const DiscreteModel& model, const SpaceTimePath& path, Recon which);
// Gauss rule with `time_order` nodes per slab; exact for polynomial time profiles of degree < 2 time_order - 1.
double spacetime_pair(const SpaceTimeMeasure& mu, const SpaceTimeFunction& f, int time_order = 4, int space_order = 5);

}  // namespace otbb

#endif
