/*************************************************************************************************
 * Tests of the verification module
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

#include "otbb/verify.hpp"
#include "test_util.hpp"

namespace otbb {
namespace {

TEST(Battery, DerivativesMatchFiniteDifferences) {
  for (const ModelFamily& fam : {ModelFamily::fv_grid(2, Pt(0, 0, 0), Pt(2, 1, 0), 4), ModelFamily::icosphere(1)}) {
    Battery b = default_battery(fam);
    const bool sph = fam.kind == ModelKind::kTri;
    test::Rng rng(300);
    const double h = 1e-6;
    for (int t = 0; t < 20; ++t) {
      Pt x = sph ? Pt(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)).normalized()
                 : Pt(rng.uniform(0.1, 1.9), rng.uniform(0.1, 0.9), 0);
      for (const auto& f : b.scalars) {
        Pt g = Pt::Zero();
        for (int a = 0; a < (sph ? 3 : 2); ++a) {
          Pt e = Pt::Zero();
          e[a] = h;
          g[a] = (f.value(x + e) - f.value(x - e)) / (2 * h);
        }
        if (sph) g -= x * x.dot(g);
        EXPECT_LE((g - f.gradient(x)).norm(), 1e-6) << f.name;
      }
      for (const auto& m : b.no_flux) {
        Eigen::Matrix3d J = Eigen::Matrix3d::Zero();
        for (int a = 0; a < 3; ++a) {
          Pt e = Pt::Zero();
          e[a] = h;
          J.col(a) = (m.vvalue(x + e) - m.vvalue(x - e)) / (2 * h);
        }
        if (!sph) J.col(2).setZero();
        EXPECT_LE((J - m.jacobian(x)).norm(), 1e-5) << m.name;
      }
      for (const auto& d : b.densities) EXPECT_GE(d.value(x), 0.5);
    }
  }
}

TEST(CheckA4, ExactOnGridsAndSphere) {
  for (const ModelFamily& fam : {ModelFamily::fv_grid(1, Pt(0, 0, 0), Pt(2, 0, 0), 16),
                                 ModelFamily::fv_grid(2, Pt(0, 0, 0), Pt(1, 1, 0), 8),
                                 ModelFamily::flat_triangles(6), ModelFamily::icosphere(2)}) {
    auto model = fam.at_level(0);
    for (const auto& m : default_battery(fam).no_flux) EXPECT_LE(check_a4(*model, m), 1e-10) << fam.describe() << " " << m.name;
  }
}

TEST(CheckA4, DetectsFluxThroughBoundary) {
  auto model = test::grid1d(16);
  TestFunction m;
  m.vector = true;
  m.vvalue = [](const Pt& x) { return Pt(1 + x[0], 0, 0); };
  m.jacobian = [](const Pt&) {
    Eigen::Matrix3d J = Eigen::Matrix3d::Zero();
    J(0, 0) = 1;
    return J;
  };
  EXPECT_GT(check_a4(*model, m), 1e-3);
}

TEST(Sweep, AssumptionsDecreaseOnGrid) {
  ModelFamily fam = ModelFamily::fv_grid(1, Pt(0, 0, 0), Pt(2, 0, 0), 8);
  for (Assumption a : {Assumption::kA1, Assumption::kA2, Assumption::kA3, Assumption::kA4, Assumption::kA5,
                       Assumption::kA6, Assumption::kA8, Assumption::kA9}) {
    AssumptionSweep s = assumption_sweep(fam, a);
    EXPECT_TRUE(s.pass) << assumption_name(a);
    EXPECT_EQ(s.levels.size(), 3u);
    EXPECT_GT(s.levels[0].sigma, s.levels[2].sigma);
  }
}

TEST(Sweep, ReproducibleAndSeedSensitive) {
  ModelFamily fam = ModelFamily::flat_triangles(3);
  SweepOptions o;
  o.seed = 9;
  AssumptionSweep a = assumption_sweep(fam, Assumption::kA2, o), b = assumption_sweep(fam, Assumption::kA2, o);
  EXPECT_EQ(a.to_csv(), b.to_csv());
  o.seed = 10;
  EXPECT_NE(assumption_sweep(fam, Assumption::kA2, o).to_csv(), a.to_csv());
}

TEST(Sweep, RejectsTooFewLevelsAndFvPrime) {
  SweepOptions o;
  o.levels = 2;
  EXPECT_THROW(assumption_sweep(ModelFamily::icosphere(0), Assumption::kA1, o), Error);
  EXPECT_THROW(assumption_sweep(ModelFamily::fv_grid(1, Pt(0, 0, 0), Pt(1, 0, 0), 4), Assumption::kA5Prime), Error);
}

TEST(Sweep, NamesRoundTrip) {
  for (Assumption a : {Assumption::kA1, Assumption::kA5Prime, Assumption::kA9})
    EXPECT_EQ(assumption_from_name(assumption_name(a)), a);
  EXPECT_THROW(assumption_from_name("A10"), Error);
}

TEST(GroundTruth, Oracles) {
  GenericMeasure a(1, false), b(1, false);
  a.add_atom(Pt(0.25, 0, 0), 1);
  b.add_atom(Pt(1.75, 0, 0), 1);
  EXPECT_NEAR(ground_truth(Oracle::kDirac, a, b, Metric::kFlat), 1.125, 1e-14);
  EXPECT_NEAR(ground_truth(Oracle::kQuantile, a, b, Metric::kFlat), 1.125, 1e-12);
  EXPECT_NEAR(ground_truth(Oracle::kLP, a, b, Metric::kFlat), 1.125, 1e-12);
  GenericMeasure c(1, false);
  c.add_atom(Pt(1, 0, 0), 2);
  EXPECT_THROW(ground_truth(Oracle::kDirac, a, c, Metric::kFlat), Error);
}

TEST(Convergence, IdenticalMarginalsGiveZeroRows) {
  ConvergenceSpec s;
  s.family = ModelFamily::fv_grid(1, Pt(0, 0, 0), Pt(2, 0, 0), 8);
  s.rho0.add_piece(make_box(Pt(0, 0, 0), Pt(1, 0, 0)), 1);
  s.rho1 = s.rho0;
  s.oracle = Oracle::kQuantile;
  s.schedule = {{4, 8}, {8, 8}, {4, 16}};
  ConvergenceTable t = convergence_experiment(s);
  EXPECT_EQ(t.truth, 0.0);
  for (const auto& r : t.rows) {
    EXPECT_FALSE(r.flagged);
    EXPECT_LE(r.objective, 1e-8);
  }
  EXPECT_TRUE(t.monotone_in_N);
}

TEST(Convergence, FailingRowIsFlaggedAndOthersContinue) {
  ConvergenceSpec s;
  s.family = ModelFamily::fv_grid(1, Pt(0, 0, 0), Pt(2, 0, 0), 8);
  s.rho0.add_atom(Pt(0.3, 0, 0), 1);
  s.rho1.add_atom(Pt(1.7, 0, 0), 1);
  s.oracle = Oracle::kDirac;
  s.solver.max_iter = 2;
  s.schedule = {{4, 8}, {4, 16}};
  ConvergenceTable t = convergence_experiment(s);
  ASSERT_EQ(t.rows.size(), 2u);
  for (const auto& r : t.rows) EXPECT_TRUE(r.flagged);
  EXPECT_NE(t.to_csv().find("rel_error"), std::string::npos);
}

TEST(Controllability, QuadraticFitOnGrid) {
  ControllabilitySpec s;
  s.family = ModelFamily::fv_grid(1, Pt(0, 0, 0), Pt(2, 0, 0), 64);
  s.resolution = 64;
  s.N = 16;
  s.x = Pt(0.3, 0, 0);
  ControllabilityReport r = controllability_bound(s);
  EXPECT_GE(r.r2, 0.95);
  EXPECT_LE(r.max_time_factor, 16.0);
  EXPECT_TRUE(r.pass()) << r.to_json();
  for (size_t i = 1; i < r.costs.size(); ++i) EXPECT_GT(r.costs[i], r.costs[i - 1]);
}

}  // namespace
}  // namespace otbb
