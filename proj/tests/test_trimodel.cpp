/*************************************************************************************************
 * Tests of triangulated surface models
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

TEST(TriMesh, IcosphereCountsAndArea) {
  double prev = 0;
  for (int s = 0; s <= 4; ++s) {
    TriMesh m = build_icosphere(s);
    EXPECT_EQ(m.n_vertices(), 10 * (1 << (2 * s)) + 2);
    EXPECT_EQ(m.n_triangles(), 20 * (1 << (2 * s)));
    double area = 0;
    for (double a : m.area) area += a;
    EXPECT_LT(area, 4 * kPi);
    EXPECT_GT(area, prev);
    EXPECT_NEAR(m.vertex_area.sum(), area, 1e-12);
    prev = area;
  }
  EXPECT_NEAR(prev, 4 * kPi, 0.05);
}

TEST(TriMesh, HatGradientsReproduceLinearFunctions) {
  TriMesh m = build_icosphere(2);
  test::Rng rng(12);
  for (int t = 0; t < 50; ++t) {
    int K = rng.below(m.n_triangles());
    Pt a(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    Pt g = Pt::Zero(), sum = Pt::Zero();
    for (int c = 0; c < 3; ++c) {
      g += a.dot(m.verts[m.tris[K][c]]) * m.grad[K][c];
      sum += m.grad[K][c];
    }
    Pt n = m.normal[K];
    EXPECT_LE((g - (a - n * n.dot(a))).norm(), 1e-12);
    EXPECT_LE(sum.norm(), 1e-12);
  }
}

TEST(TriMesh, FlatGridCoversUnitSquare) {
  TriMesh m = build_flat_grid(5);
  double area = 0;
  for (double a : m.area) area += a;
  EXPECT_NEAR(area, 1.0, 1e-14);
  EXPECT_NEAR(m.sigma, std::sqrt(2.0) / 5, 1e-14);
}

TEST(TriMesh, OffParsing) {
  const char* off = "OFF\n4 2 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n3 0 1 2\n3 0 2 3\n";
  TriMesh m = tri_mesh_from_off(off);
  EXPECT_EQ(m.kind, SurfaceKind::kFlat);
  EXPECT_EQ(m.n_vertices(), 4);
  EXPECT_EQ(m.n_triangles(), 2);
  EXPECT_THROW(tri_mesh_from_off("OFF\n3 1 0\n0 0 0\n1 0 0\n"), Error);
  EXPECT_THROW(tri_mesh_from_off("PLY\n"), Error);
}

TEST(TriMesh, LocateFindsContainingTriangle) {
  TriMesh m = build_icosphere(2);
  test::Rng rng(13);
  for (int t = 0; t < 100; ++t) {
    Pt x = Pt(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)).normalized();
    Pt bary;
    int K = m.locate(x, &bary);
    ASSERT_GE(K, 0);
    EXPECT_GE(bary.minCoeff(), -1e-12);
    EXPECT_NEAR(bary.sum(), 1.0, 1e-12);
  }
}

TEST(TriMesh, DistortionShrinksUnderSubdivision) {
  double prev = kInf;
  for (int s = 1; s <= 4; ++s) {
    DistortionReport d = tri_distortion(build_icosphere(s));
    double worst = std::max({d.alpha_max, d.beta_max, d.theta_max});
    EXPECT_LT(worst, prev);
    prev = worst;
  }
}

class TriOperators : public ::testing::TestWithParam<bool> {};

TEST_P(TriOperators, DivergenceAdjointAndMass) {
  auto model = GetParam() ? test::sphere(2) : test::flat_tri(4);
  test::Rng rng(14);
  for (int t = 0; t < 20; ++t) {
    Vec M = rng.vec(model->n_momentum(), -1, 1), phi = rng.vec(model->n_density(), -1, 1);
    EXPECT_NEAR(model->scalar_product(M, model->gradient(phi)),
                -phi.cwiseProduct(model->volumes()).dot(model->divergence(M)), 1e-11);
    EXPECT_NEAR(model->volumes().dot(model->divergence(M)), 0.0, 1e-11);
  }
}

TEST_P(TriOperators, ActionInvariants) {
  auto model = GetParam() ? test::sphere(1) : test::flat_tri(3);
  test::Rng rng(15);
  for (int t = 0; t < 500; ++t) {
    Vec P = rng.vec(model->n_density(), 0.05, 2), M = rng.vec(model->n_momentum(), -1, 1);
    Vec P2 = rng.vec(model->n_density(), 0.05, 2), M2 = rng.vec(model->n_momentum(), -1, 1);
    double l = rng.uniform(0.1, 5), A = model->action(P, M);
    EXPECT_NEAR(model->action(l * P, M), A / l, 1e-10 * A / l);
    EXPECT_NEAR(model->action(P, l * M), l * l * A, 1e-10 * l * l * A);
    EXPECT_LE(model->action(P + P2, M), A + 1e-12);
    EXPECT_LE(model->action(0.5 * (P + P2), 0.5 * (M + M2)), 0.5 * (A + model->action(P2, M2)) + 1e-12);
    Vec B = rng.vec(model->n_momentum(), -1, 1);
    EXPECT_LE(model->scalar_product(M, B), 2 * std::sqrt(A) * std::sqrt(model->action_conjugate(P, B)) + 1e-12);
  }
}

TEST_P(TriOperators, ControllabilityPathIsFeasible) {
  auto model = GetParam() ? test::sphere(2) : test::flat_tri(8);
  Pt x = GetParam() ? Pt(0.3, 0.2, 1).normalized() : Pt(0.2, 0.3, 0);
  Pt y = GetParam() ? Pt(-0.5, 0.4, 0.6).normalized() : Pt(0.7, 0.6, 0);
  for (int N : {4, 9}) {
    ControllabilityPath cp = model->controllability(x, y, N);
    DiscreteProblem pb = assemble(model, cp.path.P.front(), cp.path.P.back(), N);
    EXPECT_LE(continuity_residual(pb, cp.path), 1e-10);
    EXPECT_NEAR(evaluate_cost(pb, cp.path), cp.cost, 1e-9 * cp.cost);
    for (double t : cp.time_factors) EXPECT_LE(t, 16.0 / N * (1 + 1e-12));
  }
}

INSTANTIATE_TEST_SUITE_P(Surfaces, TriOperators, ::testing::Values(true, false));

TEST(TriModel, SampledDensityOfDiracHasUnitMass) {
  auto model = test::sphere(2);
  GenericMeasure d(3, false);
  d.add_atom(Pt(0.3, -0.2, 0.9).normalized(), 1.0);
  EXPECT_NEAR(model->mass(model->sample_density(d)), 1.0, 1e-12);
}

}  // namespace
}  // namespace otbb
