/*************************************************************************************************
 * Tests of finite-volume meshes and operators
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

#include "otbb/timedisc.hpp"
#include "test_util.hpp"

namespace otbb {
namespace {

const MeanKind kMeans[] = {MeanKind::kArithmetic, MeanKind::kGeometric, MeanKind::kHarmonic,
                           MeanKind::kLogarithmic};

TEST(Means, Admissibility) {
  test::Rng rng(21);
  for (MeanKind k : kMeans) {
    EXPECT_NEAR(mean_value(k, 1, 1), 1.0, 1e-14) << mean_name(k);
    for (int i = 0; i < 500; ++i) {
      double a = rng.uniform(0.01, 5), b = rng.uniform(0.01, 5), l = rng.uniform(0.1, 10);
      EXPECT_NEAR(mean_value(k, a, b), mean_value(k, b, a), 1e-13);
      EXPECT_NEAR(mean_value(k, l * a, l * b), l * mean_value(k, a, b), 1e-12 * l * (a + b));
      EXPECT_LE(mean_value(k, a, b), 0.5 * (a + b) + 1e-13);
      // Midpoint concavity along a random segment.
      double c = rng.uniform(0.01, 5), d = rng.uniform(0.01, 5);
      EXPECT_GE(mean_value(k, 0.5 * (a + c), 0.5 * (b + d)),
                0.5 * (mean_value(k, a, b) + mean_value(k, c, d)) - 1e-12);
    }
    if (k != MeanKind::kArithmetic) EXPECT_EQ(mean_value(k, 0, 2.5), 0.0);
  }
}

TEST(Means, GradientMatchesFiniteDifferences) {
  test::Rng rng(22);
  for (MeanKind k : kMeans)
    for (int i = 0; i < 50; ++i) {
      double a = rng.uniform(0.2, 3), b = rng.uniform(0.2, 3), da, db, h = 1e-6;
      mean_gradient(k, a, b, da, db);
      EXPECT_NEAR(da, (mean_value(k, a + h, b) - mean_value(k, a - h, b)) / (2 * h), 1e-6);
      EXPECT_NEAR(db, (mean_value(k, a, b + h) - mean_value(k, a, b - h)) / (2 * h), 1e-6);
    }
}

TEST(FVMesh, GridsAreValidAndIsotropic) {
  for (int dim = 1; dim <= 3; ++dim)
    for (int n : {2, 5, 8}) {
      FVMesh m = build_grid_mesh(dim, Pt(0, 0, 0), Pt(1, 2, 0.5), {n, 2 * n, n + 1});
      EXPECT_NO_THROW(m.validate());
      EXPECT_NEAR(m.volumes().sum(), m.domain_volume, 1e-12);
      EXPECT_LE(isotropy_deficit(m), 1e-12) << dim << " " << n;
      EXPECT_GT(m.regularity_witness(), 0);
    }
}

TEST(FVMesh, NonCentredCellHasPositiveDeficit) {
  const char* text = R"({"dim":1,
    "cells":[{"center":[0.1],"volume":1,"vertices":[[0],[1]]},
             {"center":[1.5],"volume":1,"vertices":[[1],[2]]},
             {"center":[2.9],"volume":1,"vertices":[[2],[3]]}],
    "faces":[{"cells":[0,1],"area":1,"dist":1.4,"normal":[1]},
             {"cells":[1,2],"area":1,"dist":1.4,"normal":[1]}]})";
  FVMesh m = fv_mesh_from_json(text);
  IsotropyReport r = isotropy_report(m);
  EXPECT_NEAR(r.deficit, 0.4, 1e-12);
  EXPECT_EQ(r.worst_cell, 1);
}

TEST(FVMesh, JsonRoundTripKeepsOperators) {
  FVMesh m = build_grid_mesh(2, Pt(0, 0, 0), Pt(1, 1, 0), {3, 4, 1});
  FVMesh back = fv_mesh_from_json(fv_mesh_to_json(m));
  test::Rng rng(4);
  Vec M = rng.vec(m.n_faces(), -1, 1);
  EXPECT_LE((fv_divergence(m, M) - fv_divergence(back, M)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(FVMesh, LocateAssignsSharedFacesToSmallerIndex) {
  FVMesh m = build_grid_mesh(1, Pt(0, 0, 0), Pt(2, 0, 0), {4, 1, 1});
  EXPECT_EQ(m.locate(Pt(0.5, 0, 0)), 0);
  EXPECT_EQ(m.locate(Pt(0.7, 0, 0)), 1);
  EXPECT_EQ(m.locate(Pt(2.5, 0, 0)), -1);
}

class FVOperators : public ::testing::TestWithParam<int> {};

TEST_P(FVOperators, DivergenceIsNegativeAdjointOfGradient) {
  auto model = GetParam() == 1 ? test::grid1d(9) : test::grid2d(5);
  test::Rng rng(30 + GetParam());
  for (int t = 0; t < 20; ++t) {
    Vec M = rng.vec(model->n_momentum(), -1, 1), phi = rng.vec(model->n_density(), -1, 1);
    double lhs = model->scalar_product(M, model->gradient(phi));
    double rhs = -phi.cwiseProduct(model->volumes()).dot(model->divergence(M));
    EXPECT_NEAR(lhs, rhs, 1e-12);
    EXPECT_NEAR(model->volumes().dot(model->divergence(M)), 0.0, 1e-12);
  }
}

TEST_P(FVOperators, ActionInvariants) {
  for (MeanKind k : kMeans) {
    auto model = GetParam() == 1 ? test::grid1d(7, 0, 1, k) : test::grid2d(4, k);
    test::Rng rng(40 + GetParam());
    for (int t = 0; t < 500; ++t) {
      Vec P = rng.vec(model->n_density(), 0.05, 2), M = rng.vec(model->n_momentum(), -1, 1);
      Vec P2 = rng.vec(model->n_density(), 0.05, 2), M2 = rng.vec(model->n_momentum(), -1, 1);
      double l = rng.uniform(0.1, 5), A = model->action(P, M);
      EXPECT_NEAR(model->action(l * P, M), A / l, 1e-10 * A / l);
      EXPECT_NEAR(model->action(P, l * M), l * l * A, 1e-10 * l * l * A);
      EXPECT_LE(model->action(P + P2, M), A + 1e-12);
      EXPECT_LE(model->action(0.5 * (P + P2), 0.5 * (M + M2)),
                0.5 * (A + model->action(P2, M2)) + 1e-12);
      // Young-type inequality and the conjugate maximizer B = M / theta.
      Vec B = rng.vec(model->n_momentum(), -1, 1);
      EXPECT_LE(model->scalar_product(M, B),
                2 * std::sqrt(A) * std::sqrt(model->action_conjugate(P, B)) + 1e-12);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Dims, FVOperators, ::testing::Values(1, 2));

TEST(FVModel, ConjugateMaximizerAttainsEquality) {
  auto model = test::grid1d(6, 0, 1, MeanKind::kGeometric);
  const FVMesh& mesh = model->fv_mesh();
  test::Rng rng(8);
  Vec P = rng.vec(model->n_density(), 0.2, 2), M = rng.vec(model->n_momentum(), -1, 1), B(M.size());
  for (int f = 0; f < mesh.n_faces(); ++f) B[f] = M[f] / mean_value(MeanKind::kGeometric, P[mesh.faces[f].K], P[mesh.faces[f].L]);
  double A = model->action(P, M), As = model->action_conjugate(P, B);
  EXPECT_NEAR(As, A, 1e-12);
  EXPECT_NEAR(model->scalar_product(M, B), 2 * std::sqrt(A * As), 1e-12);
}

TEST(FVModel, VoidConvention) {
  auto model = test::grid1d(3, 0, 1, MeanKind::kHarmonic);
  Vec P(3), M = Vec::Zero(2);
  P << 0, 1, 1;
  EXPECT_EQ(model->action(P, M), 0.0);
  M[0] = 0.5;
  EXPECT_EQ(model->action(P, M), kInf);
}

TEST(FVModel, ReconstructionsPreserveMass) {
  auto model = test::grid2d(6);
  test::Rng rng(9);
  Vec P = rng.vec(model->n_density(), 0, 1);
  for (Recon r : {Recon::kCE, Recon::kA}) EXPECT_NEAR(model->reconstruct_density(r, P).mass(), model->mass(P), 1e-12);
}

TEST(FVModel, SamplingIsExactForLinearMomentum) {
  // m = (x(1-x), 0): face averages of m.n equal the point values at 1-D faces.
  auto model = test::grid1d(8);
  TestFunction m;
  m.vector = true;
  m.vvalue = [](const Pt& x) { return Pt(x[0] * (1 - x[0]), 0, 0); };
  Vec M = model->sample_momentum(m);
  const FVMesh& mesh = model->fv_mesh();
  for (int f = 0; f < mesh.n_faces(); ++f) {
    double x = 0.5 * (mesh.cells[mesh.faces[f].K].center[0] + mesh.cells[mesh.faces[f].L].center[0]);
    EXPECT_NEAR(M[f], x * (1 - x), 1e-14);
  }
}

TEST(FVModel, ControllabilityPathIsFeasible) {
  auto model = test::grid1d(32, 0, 2);
  for (int N : {4, 7, 16}) {
    ControllabilityPath cp = model->controllability(Pt(0.3, 0, 0), Pt(1.3, 0, 0), N);
    DiscreteProblem pb = assemble(model, cp.path.P.front(), cp.path.P.back(), N);
    EXPECT_LE(continuity_residual(pb, cp.path), 1e-12) << N;
    EXPECT_NEAR(evaluate_cost(pb, cp.path), cp.cost, 1e-10 * cp.cost);
    for (double t : cp.time_factors) EXPECT_LE(t, 16.0 / N * (1 + 1e-12));
  }
  EXPECT_EQ(model->controllability(Pt(0.3, 0, 0), Pt(0.3, 0, 0), 8).cost, 0.0);
}

}  // namespace
}  // namespace otbb
