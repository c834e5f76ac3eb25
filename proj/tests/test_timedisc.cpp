/*************************************************************************************************
 * Tests of proximal maps and the time discretisation
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

#include "otbb/prox.hpp"
#include "otbb/timedisc.hpp"
#include "test_util.hpp"

namespace otbb {
namespace {

TEST(Prox, SpecExamples) {
  double m0 = 0;
  KineticProxResult r = prox_kinetic(1, &m0, 1, 1, 1);
  EXPECT_NEAR(r.s, 1, 1e-14);
  EXPECT_EQ(r.m[0], 0);
  double neg = 0;
  r = prox_kinetic(-1, &neg, 1, 1, 1);
  EXPECT_EQ(r.s, 0);
  EXPECT_EQ(r.m[0], 0);
  double two = 2;
  r = prox_kinetic(1, &two, 1, 1, 1);
  test::BruteProx b = test::brute_prox(1, 2, 1, 1);
  EXPECT_NEAR(r.s, b.s, 1e-6);
  EXPECT_NEAR(r.m[0], b.m, 1e-6);
  EXPECT_LE(r.kkt, 1e-10);
}

TEST(Prox, MatchesBruteForceOracle) {
  test::Rng rng(101);
  for (int t = 0; t < 300; ++t) {
    const int dim = 1 + rng.below(3);
    double m0[3] = {0, 0, 0};
    for (int i = 0; i < dim; ++i) m0[i] = rng.uniform(-1.7, 1.7);
    double s0 = rng.uniform(-2, 4), g = rng.uniform(0.1, 10), w = rng.uniform(0.1, 10);
    KineticProxResult r = prox_kinetic(s0, m0, dim, g, w);
    double norm = std::sqrt(m0[0] * m0[0] + m0[1] * m0[1] + m0[2] * m0[2]);
    test::BruteProx b = test::brute_prox(s0, norm, g, w);
    EXPECT_NEAR(r.s, b.s, 1e-6) << s0 << " " << norm << " " << g << " " << w;
    for (int i = 0; i < dim; ++i) EXPECT_NEAR(r.m[i], norm > 0 ? b.m * m0[i] / norm : 0.0, 1e-6);
    EXPECT_LE(r.kkt, 1e-10);
    EXPECT_GE(r.s, 0);
    if (r.s == 0) EXPECT_EQ(r.m.norm(), 0);
  }
}

TEST(Prox, FirmlyNonexpansive) {
  test::Rng rng(102);
  for (int t = 0; t < 1000; ++t) {
    double g = rng.uniform(0.1, 10), w = rng.uniform(0.1, 10);
    double u[2] = {rng.uniform(-2, 4), rng.uniform(-3, 3)}, v[2] = {rng.uniform(-2, 4), rng.uniform(-3, 3)};
    KineticProxResult a = prox_kinetic(u[0], &u[1], 1, g, w), b = prox_kinetic(v[0], &v[1], 1, g, w);
    double ds = a.s - b.s, dm = a.m[0] - b.m[0];
    EXPECT_LE(ds * ds + dm * dm, (u[0] - v[0]) * ds + (u[1] - v[1]) * dm + 1e-9);
  }
}

TEST(Prox, MeanProxMatchesNestedSearch) {
  test::Rng rng(103);
  for (MeanKind k : {MeanKind::kGeometric, MeanKind::kHarmonic, MeanKind::kLogarithmic}) {
    for (int t = 0; t < 8; ++t) {
      double a0 = rng.uniform(0.1, 2), b0 = rng.uniform(0.1, 2), m0 = rng.uniform(-1.5, 1.5);
      double g = rng.uniform(0.2, 3), w = rng.uniform(0.2, 3);
      MeanProxResult r = prox_mean(k, a0, b0, m0, g, w);
      // For fixed (a, b) the optimal m solves a scalar quadratic; a and b are searched.
      auto value = [&](double a, double b) {
        double th = mean_value(k, a, b);
        double m = th > 0 ? m0 * th / (th + g * w) : 0.0;
        double kin = th > 0 ? w * m * m / (2 * th) : 0.0;
        return kin + ((a - a0) * (a - a0) + (b - b0) * (b - b0) + (m - m0) * (m - m0)) / (2 * g);
      };
      auto best_b = [&](double a) { return test::golden_min([&](double b) { return value(a, b); }, 0, 6, 1e-11); };
      double a = test::golden_min([&](double a) { return value(a, best_b(a)); }, 0, 6, 1e-11);
      double b = best_b(a);
      EXPECT_LE(std::abs(value(r.a, r.b) - value(a, b)), 1e-9) << mean_name(k);
      EXPECT_NEAR(r.a, a, 1e-4);
      EXPECT_NEAR(r.b, b, 1e-4);
    }
  }
}

TEST(FinalPenalty, ProxMatchesScalarSearch) {
  auto model = test::grid1d(4);
  FinalPenalty pens[] = {FinalPenalty::potential(*model, 0.7, [](const Pt& x) { return x[0] * x[0]; }),
                         FinalPenalty::quadratic(1.3), FinalPenalty::entropy(*model, 0.9)};
  test::Rng rng(104);
  for (const auto& g : pens)
    for (int t = 0; t < 50; ++t) {
      int j = rng.below(4);
      double q = rng.uniform(-1, 3), rho = rng.uniform(0.2, 5);
      auto f = [&](double p) {
        double gj = 0;
        switch (g.kind) {
          case PenaltyKind::kPotential: gj = g.V[j] * p; break;
          case PenaltyKind::kQuadratic: gj = 0.5 * p * p; break;
          case PenaltyKind::kEntropy: gj = p > 0 ? p * std::log(p) : 0.0; break;
          default: break;
        }
        return g.lambda * gj + 0.5 * rho * (p - q) * (p - q);
      };
      double p = test::golden_min(f, 0, 10, 1e-13);
      EXPECT_NEAR(g.prox(j, q, rho), p, 1e-7) << penalty_name(g.kind);
    }
}

TEST(FinalPenalty, ValuesAreVolumeWeighted) {
  auto model = test::grid1d(4);
  Vec P(4);
  P << 1, 2, 0, 0.5;
  FinalPenalty q = FinalPenalty::quadratic(2);
  EXPECT_NEAR(q.value(*model, P), 2 * 0.25 * 0.5 * (1 + 4 + 0 + 0.25), 1e-14);
  FinalPenalty e = FinalPenalty::entropy(*model, 1);
  EXPECT_GE(e.value(*model, P), 0);
}

TEST(Assemble, RejectsMassMismatch) {
  auto model = test::grid1d(4);
  Vec P0 = Vec::Ones(4), P1 = 2 * Vec::Ones(4);
  try {
    assemble(model, P0, P1, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMassMismatch);
  }
  EXPECT_THROW(assemble(model, P0, P0, 0), Error);
}

TEST(EvaluateCost, ConstantPathIsFreeAndNegativesAreInfeasible) {
  auto model = test::grid1d(5);
  Vec P = Vec::Constant(5, 1.0);
  DiscreteProblem pb = assemble(model, P, P, 3);
  SpaceTimePath path = initial_path(pb);
  EXPECT_EQ(continuity_residual(pb, path), 0.0);
  EXPECT_EQ(evaluate_cost(pb, path), 0.0);
  path.P[1][2] = -1e-3;
  EXPECT_EQ(evaluate_cost(pb, path), kInf);
}

TEST(EvaluateCost, TwoCellTransferMatchesHandComputation) {
  // Two cells of width 1/2: moving unit mass density 2 -> 0 in one step.
  auto model = test::grid1d(2);
  Vec P0(2), P1(2);
  P0 << 2, 0;
  P1 << 0, 2;
  DiscreteProblem pb = assemble(model, P0, P1, 1);
  SpaceTimePath path = initial_path(pb);
  // Div M = -(P1 - P0)/tau at cell 0: (|f|/|K|) M = 2 -> M = 1.
  path.M[0][0] = 1;
  EXPECT_LE(continuity_residual(pb, path), 1e-14);
  // A = |f| d M^2 / (2 theta), theta = (1 + 1)/2 = 1, d = 1/2.
  EXPECT_NEAR(evaluate_cost(pb, path), 0.25, 1e-14);
}

TEST(SpaceTime, WeakContinuityHoldsForControllabilityPaths) {
  auto model = test::grid1d(64, 0, 2);
  const Pt x(0.3, 0, 0), y(1.4, 0, 0);
  ControllabilityPath cp = model->controllability(x, y, 8);
  SpaceTimeMeasure rho = spacetime_reconstruct(*model, cp.path, Recon::kCE);
  SpaceTimeMeasure m = spacetime_reconstruct(*model, cp.path, Recon::kY);
  SpaceTimeFunction dt, grad;
  dt.value = [](double t, const Pt& p) { return std::cos(p[0]) * (1 + 2 * t); };
  grad.vvalue = [](double t, const Pt& p) { return Pt(-std::sin(p[0]) * (1 + t + t * t), 0, 0); };
  double lhs = spacetime_pair(rho, dt) + spacetime_pair(m, grad);
  // phi(t, x) = (1 + t + t^2) cos x against the sampled endpoints.
  GenericMeasure e0 = model->reconstruct_density(Recon::kCE, cp.path.P.front());
  GenericMeasure e1 = model->reconstruct_density(Recon::kCE, cp.path.P.back());
  TestFunction c0, c1;
  c0.value = [](const Pt& p) { return std::cos(p[0]); };
  c1.value = [](const Pt& p) { return 3 * std::cos(p[0]); };
  double rhs = pair(e1, c1).value - pair(e0, c0).value;
  EXPECT_NEAR(lhs, rhs, 5e-3);
}

}  // namespace
}  // namespace otbb
