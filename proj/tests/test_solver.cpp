/*************************************************************************************************
 * Tests of the ADMM solver
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

#include <gtest/gtest.h>

#include "otbb/solver.hpp"
#include "test_util.hpp"

namespace otbb {
namespace {

Vec dirac_sample(const DiscreteModel& model, double x) {
  GenericMeasure d(model.space_dim(), false);
  d.add_atom(Pt(x, 0, 0), 1);
  return model.sample_density(d);
}

TEST(SolverOptions, Validation) {
  SolverOptions o;
  EXPECT_NO_THROW(o.validate());
  o.alpha = 2;
  EXPECT_THROW(o.validate(), Error);
  o = {};
  o.tol = 0;
  EXPECT_THROW(o.validate(), Error);
  o = {};
  o.r = -1;
  EXPECT_THROW(o.validate(), Error);
}

TEST(Projection, FeasiblePointIsFixed) {
  auto model = test::grid1d(16, 0, 2);
  ControllabilityPath cp = model->controllability(Pt(0.3, 0, 0), Pt(1.1, 0, 0), 6);
  DiscreteProblem pb = assemble(model, cp.path.P.front(), cp.path.P.back(), 6);
  SplittingLayout L(pb);
  Vec v = L.pack(pb, cp.path);
  EXPECT_LE((L.E() * v - L.rhs()).cwiseAbs().maxCoeff(), 1e-10);
  for (LinearSolverKind k : {LinearSolverKind::kDirect, LinearSolverKind::kCG}) {
    Vec p = project_affine(pb, v, k);
    EXPECT_LE((p - v).norm(), 1e-10 * (1 + v.norm())) << linear_solver_name(k);
  }
}

TEST(Projection, ZeroDataMapsZeroToZero) {
  auto model = test::grid2d(4);
  Vec Z = Vec::Zero(model->n_density());
  DiscreteProblem pb = assemble(model, Z, Z, 3);
  SplittingLayout L(pb);
  EXPECT_LE(project_affine(pb, Vec::Zero(L.size())).norm(), 1e-14);
}

class ProjectionBackends : public ::testing::TestWithParam<bool> {};

TEST_P(ProjectionBackends, RandomPointResidualAndCrossCheck) {
  auto model = GetParam() ? test::sphere(1) : test::grid1d(12, 0, 1, MeanKind::kGeometric);
  test::Rng rng(200);
  Vec P0 = rng.vec(model->n_density(), 0.5, 1.5), P1 = rng.vec(model->n_density(), 0.5, 1.5);
  P1 *= model->mass(P0) / model->mass(P1);
  DiscreteProblem pb = assemble(model, P0, P1, 5);
  SplittingLayout L(pb);
  AffineProjector direct(L, LinearSolverKind::kDirect), cg(L, LinearSolverKind::kCG);
  for (int t = 0; t < 3; ++t) {
    Vec w = rng.vec(L.size(), -1, 1);
    Vec a = direct.project(w), b = cg.project(w);
    EXPECT_LE(direct.residual(a), 1e-10 * (1 + w.norm()));
    EXPECT_LE(cg.residual(b), 1e-8 * (1 + w.norm()));
    EXPECT_LE((a - b).norm(), 1e-8 * (1 + w.norm()));
    // Idempotent and orthogonal in the metric: <w - a, a - c>_D = 0 for feasible c.
    EXPECT_LE((direct.project(a) - a).norm(), 1e-10 * (1 + a.norm()));
    Vec c = direct.project(rng.vec(L.size(), -1, 1));
    EXPECT_NEAR((w - a).cwiseProduct(L.metric()).dot(a - c), 0.0, 1e-9 * (1 + w.norm() * c.norm()));
  }
}

INSTANTIATE_TEST_SUITE_P(Models, ProjectionBackends, ::testing::Values(false, true));

TEST(Solve, IdenticalMarginalsCostNothing) {
  auto model = test::grid2d(5);
  test::Rng rng(201);
  Vec P = rng.vec(model->n_density(), 0.2, 1);
  SolveResult r = solve(assemble(model, P, P, 4));
  EXPECT_TRUE(r.stats.converged);
  EXPECT_LE(r.stats.objective, 1e-8);
  for (const auto& Pk : r.path.P) EXPECT_LE((Pk - P).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Solve, DualBoundBracketsObjective) {
  auto model = test::grid1d(24, 0, 2);
  DiscreteProblem pb = assemble(model, dirac_sample(*model, 0.4), dirac_sample(*model, 1.5), 8);
  SolverOptions o;
  o.tol = 1e-7;
  SolveResult r = solve(pb, o);
  ASSERT_TRUE(r.stats.converged);
  KKTReport k = kkt_report(pb, r.path, r.multipliers, r.stats.consensus);
  EXPECT_TRUE(k.feasible);
  EXPECT_LE(k.continuity, 1e-8);
  EXPECT_LE(k.dual_value, k.primal_value + 1e-6);
  EXPECT_LE(k.gap, 1e-3 * k.primal_value);
  // The discrete minimum is bounded by any feasible path, e.g. the controllability one.
  ControllabilityPath cp = model->controllability(Pt(0.4, 0, 0), Pt(1.5, 0, 0), 8);
  EXPECT_LE(r.stats.objective, evaluate_cost(pb, cp.path) + 1e-9);
  // Cells centred 0.375 / 1.5417 carry the atoms: cost is at least half the squared distance.
  EXPECT_GE(r.stats.objective, 0.5 * std::pow(1.5 - 0.4, 2) * 0.9);
}

TEST(Solve, BackendsAgreeAndRunsAreDeterministic) {
  auto model = test::grid1d(16, 0, 2);
  GenericMeasure a(1, false), b(1, false);
  a.add_piece(make_box(Pt(0, 0, 0), Pt(1, 0, 0)), 1);
  b.add_piece(make_box(Pt(0.5, 0, 0), Pt(1.5, 0, 0)), 1);
  DiscreteProblem pb = assemble(model, model->sample_density(a), model->sample_density(b), 8);
  SolverOptions o;
  o.tol = 1e-8;
  SolveResult r1 = solve(pb, o), r2 = solve(pb, o);
  EXPECT_EQ(r1.stats.iterations, r2.stats.iterations);
  EXPECT_EQ(r1.stats.objective, r2.stats.objective);
  o.linear = LinearSolverKind::kCG;
  SolveResult r3 = solve(pb, o);
  EXPECT_NEAR(r3.stats.objective, r1.stats.objective, 1e-6 * r1.stats.objective);
}

TEST(Solve, IterationCapIsFlagged) {
  auto model = test::grid1d(16, 0, 2);
  SolverOptions o;
  o.max_iter = 3;
  SolveResult r = solve(assemble(model, dirac_sample(*model, 0.3), dirac_sample(*model, 1.6), 8), o);
  EXPECT_FALSE(r.stats.converged);
  EXPECT_EQ(r.stats.iterations, 3);
}

TEST(Solve, NonArithmeticMeanConverges) {
  auto model = test::grid1d(12, 0, 1, MeanKind::kHarmonic);
  test::Rng rng(202);
  Vec P0 = rng.vec(12, 0.5, 1.5), P1 = rng.vec(12, 0.5, 1.5);
  P1 *= model->mass(P0) / model->mass(P1);
  DiscreteProblem pb = assemble(model, P0, P1, 4);
  SolverOptions o;
  o.tol = 1e-8;
  SolveResult r = solve(pb, o);
  EXPECT_TRUE(r.stats.converged);
  KKTReport k = kkt_report(pb, r.path, r.multipliers, r.stats.consensus);
  EXPECT_LE(k.continuity, 1e-8);
  // The dual uses the arithmetic conjugate: a lower bound only, as the harmonic mean is smaller.
  EXPECT_LE(k.dual_value, k.primal_value + 1e-10);
  auto arith = test::grid1d(12, 0, 1);
  SolveResult ra = solve(assemble(arith, P0, P1, 4), o);
  EXPECT_GE(r.stats.objective, ra.stats.objective - 1e-8);
}

TEST(Kkt, ZeroMultipliersGiveGapEqualToCost) {
  auto model = test::grid1d(16, 0, 2);
  ControllabilityPath cp = model->controllability(Pt(0.3, 0, 0), Pt(1.2, 0, 0), 6);
  DiscreteProblem pb = assemble(model, cp.path.P.front(), cp.path.P.back(), 6);
  KKTReport k = kkt_report(pb, cp.path, {});
  EXPECT_TRUE(k.feasible);
  EXPECT_NEAR(k.dual_value, 0.0, 1e-14);
  EXPECT_NEAR(k.gap, cp.cost, 1e-10 * cp.cost);
  SpaceTimePath bad = cp.path;
  bad.M[2] *= 2;
  KKTReport kb = kkt_report(pb, bad, {});
  EXPECT_FALSE(kb.feasible);
  EXPECT_GT(kb.continuity, 1e-8);
}

TEST(Jko, ZeroPenaltyKeepsInitialDensity) {
  auto model = test::grid1d(16);
  test::Rng rng(203);
  Vec P0 = rng.vec(16, 0.2, 1);
  SolveResult r = solve_jko(model, P0, FinalPenalty::none(), 4);
  EXPECT_LE(r.stats.objective, 1e-8);
  EXPECT_LE((r.path.P.back() - P0).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(Jko, QuadraticPenaltyObjectiveDecreasesWithLambda) {
  auto model = test::grid1d(16, 0, 1);
  Vec P0 = Vec::Zero(16);
  P0.head(8).setConstant(2.0);
  double prev = kInf;
  for (double lambda : {2.0, 1.0, 0.5, 0.25}) {
    SolveResult r = solve_jko(model, P0, FinalPenalty::quadratic(lambda), 8);
    ASSERT_TRUE(r.stats.converged);
    EXPECT_LT(r.stats.objective, prev);
    prev = r.stats.objective;
  }
}

TEST(Jko, PotentialPullsBarycenterTowardCenter) {
  auto model = test::grid1d(32, -0.5, 1.5);
  GenericMeasure d(1, false);
  d.add_atom(Pt(0, 0, 0), 1);
  Vec P0 = model->sample_density(d);
  SolveResult r = solve_jko(model, P0, FinalPenalty::potential(*model, 1, [](const Pt& x) { return std::pow(x[0] - 1, 2); }), 16);
  ASSERT_TRUE(r.stats.converged);
  auto pos = model->positions();
  double b = 0, m = 0;
  for (int j = 0; j < 32; ++j) {
    b += model->volumes()[j] * r.path.P.back()[j] * pos[j][0];
    m += model->volumes()[j] * r.path.P.back()[j];
  }
  EXPECT_NEAR(m, 1.0, 1e-8);
  EXPECT_NEAR(b / m, 2.0 / 3.0, 0.05);
}

}  // namespace
}  // namespace otbb
