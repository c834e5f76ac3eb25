/*************************************************************************************************
 * Tests of measures, quadrature and oracles
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

#include <algorithm>
#include <numeric>

#include "otbb/measures.hpp"
#include "test_util.hpp"

namespace otbb {
namespace {

TEST(Common, FmtDoubleRoundTrips) {
  test::Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    double v = std::ldexp(rng.uniform(-1, 1), rng.below(80) - 40);
    EXPECT_EQ(std::stod(fmt_double(v)), v);
  }
  EXPECT_EQ(fmt_double(0.5), "0.5");
  EXPECT_EQ(fmt_double(kInf), "inf");
}

TEST(Common, LogLogSlopeOfPowerLaw) {
  std::vector<double> x{0.5, 0.25, 0.125}, y;
  for (double v : x) y.push_back(3 * v * v);
  EXPECT_NEAR(loglog_slope(x, y), 2.0, 1e-12);
}

TEST(Common, ParallelForCoversEveryIndexOnce) {
  set_jobs(3);
  std::vector<int> hits(101, 0);
  parallel_for(101, [&](int i) { hits[i] += 1; });
  set_jobs(0);
  EXPECT_EQ(std::count(hits.begin(), hits.end(), 1), 101);
}

TEST(Quadrature, GaussLegendreIsExactForPolynomials) {
  std::vector<double> x, w;
  gauss_legendre01(5, x, w);
  for (int deg = 0; deg <= 9; ++deg) {
    double s = 0;
    for (size_t i = 0; i < x.size(); ++i) s += w[i] * std::pow(x[i], deg);
    EXPECT_NEAR(s, 1.0 / (deg + 1), 1e-14) << deg;
  }
}

TEST(Quadrature, RegionMeasures) {
  EXPECT_NEAR(make_segment(Pt(0, 0, 0), Pt(3, 4, 0)).measure(), 5, 1e-14);
  EXPECT_NEAR(make_box(Pt(0, 0, 0), Pt(2, 3, 0)).measure(), 6, 1e-14);
  EXPECT_NEAR(make_triangle(Pt(0, 0, 0), Pt(1, 0, 0), Pt(0, 1, 0)).measure(), 0.5, 1e-14);
  // An octant of the unit sphere.
  EXPECT_NEAR(spherical_triangle_area(Pt(1, 0, 0), Pt(0, 1, 0), Pt(0, 0, 1)), kPi / 2, 1e-13);
  Region oct = make_sphere_triangle(Pt(1, 0, 0), Pt(0, 1, 0), Pt(0, 0, 1));
  double s = 0;
  for (const auto& q : oct.quadrature(24)) s += q.w;
  EXPECT_NEAR(s, kPi / 2, 1e-13);
}

TEST(Quadrature, TriangleRuleIntegratesMonomials) {
  // int over the unit right triangle of x^a y^b = a! b! / (a+b+2)!
  Region t = make_triangle(Pt(0, 0, 0), Pt(1, 0, 0), Pt(0, 1, 0));
  auto fact = [](int n) { return std::tgamma(n + 1.0); };
  for (int a = 0; a <= 3; ++a)
    for (int b = 0; a + b <= 4; ++b) {
      double s = 0;
      for (const auto& q : t.quadrature(5)) s += q.w * std::pow(q.x[0], a) * std::pow(q.x[1], b);
      EXPECT_NEAR(s, fact(a) * fact(b) / fact(a + b + 2), 1e-13) << a << "," << b;
    }
}

TEST(Measures, PairingIsLinearInMeasureAndFunction) {
  test::Rng rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    GenericMeasure mu(1, false), nu(1, false);
    mu.add_atom(Pt(rng.uniform(), 0, 0), rng.uniform(-1, 1));
    mu.add_piece(make_box(Pt(0.1, 0, 0), Pt(0.6, 0, 0)), rng.uniform(0, 2));
    nu.add_atom(Pt(rng.uniform(), 0, 0), rng.uniform(-1, 1));
    nu.add_piece(make_box(Pt(0.3, 0, 0), Pt(0.9, 0, 0)), rng.uniform(0, 2));
    double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
    TestFunction f = affine_function(Pt(rng.uniform(-1, 1), 0, 0), rng.uniform(-1, 1));
    TestFunction g = affine_function(Pt(rng.uniform(-1, 1), 0, 0), rng.uniform(-1, 1));
    double lhs = pair(mu.scaled(a).plus(nu.scaled(b)), f).value;
    double rhs = a * pair(mu, f).value + b * pair(nu, f).value;
    EXPECT_NEAR(lhs, rhs, 1e-12);
    TestFunction fg;
    fg.value = [&](const Pt& x) { return a * f.value(x) + b * g.value(x); };
    EXPECT_NEAR(pair(mu, fg).value, a * pair(mu, f).value + b * pair(mu, g).value, 1e-12);
  }
}

TEST(Measures, PieceIntegralMatchesClosedForm) {
  GenericMeasure mu(1, false);
  mu.add_piece(make_box(Pt(0, 0, 0), Pt(2, 0, 0)), 0.5);
  TestFunction f;
  f.value = [](const Pt& x) { return x[0] * x[0]; };
  EXPECT_NEAR(pair(mu, f).value, 0.5 * 8.0 / 3.0, 1e-13);
  EXPECT_NEAR(mu.mass(), 1.0, 1e-14);
}

TEST(Measures, TotalVariationOfVectorMeasure) {
  GenericMeasure m(2, true);
  m.add_vector_atom(Pt(0, 0, 0), Pt(3, 4, 0));
  m.add_vector_piece(make_box(Pt(0, 0, 0), Pt(1, 1, 0)), Pt(0, 2, 0));
  EXPECT_NEAR(total_variation(m), 7.0, 1e-13);
}

TEST(Measures, W2Dirac) {
  EXPECT_DOUBLE_EQ(w2_dirac(Pt(0, 0, 0), Pt(3, 0, 0), Metric::kFlat), 9.0);
  EXPECT_NEAR(w2_dirac(Pt(1, 0, 0), Pt(0, 1, 0), Metric::kSphere), kPi * kPi / 4, 1e-14);
}

TEST(Measures, QuantileOracleOnUniformShift) {
  GenericMeasure a(1, false), b(1, false);
  a.add_piece(make_box(Pt(0, 0, 0), Pt(1, 0, 0)), 1);
  b.add_piece(make_box(Pt(0.5, 0, 0), Pt(1.5, 0, 0)), 1);
  EXPECT_NEAR(w2_1d_quantile(a, b), 0.25, 1e-12);
}

// Independent oracle: for equal-weight atoms in 1-D the monotone matching is optimal,
// and for tiny sets every permutation can be enumerated.
TEST(Measures, LpOracleMatchesPermutationSearch) {
  test::Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 5;
    GenericMeasure mu(2, false), nu(2, false);
    std::vector<Pt> xs, ys;
    for (int i = 0; i < n; ++i) {
      xs.emplace_back(rng.uniform(), rng.uniform(), 0);
      ys.emplace_back(rng.uniform(), rng.uniform(), 0);
      mu.add_atom(xs.back(), 1.0 / n);
      nu.add_atom(ys.back(), 1.0 / n);
    }
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = kInf;
    do {
      double c = 0;
      for (int i = 0; i < n; ++i) c += (xs[i] - ys[perm[i]]).squaredNorm() / n;
      best = std::min(best, c);
    } while (std::next_permutation(perm.begin(), perm.end()));
    EXPECT_NEAR(w2_lp_bruteforce(mu, nu, Metric::kFlat).value, best, 1e-12);
  }
}

TEST(Measures, QuantileAgreesWithLpOnAtoms) {
  test::Rng rng(5);
  GenericMeasure mu(1, false), nu(1, false);
  for (int i = 0; i < 7; ++i) mu.add_atom(Pt(rng.uniform(), 0, 0), 1.0 / 7);
  for (int i = 0; i < 7; ++i) nu.add_atom(Pt(rng.uniform(1, 2), 0, 0), 1.0 / 7);
  EXPECT_NEAR(w2_1d_quantile(mu, nu), w2_lp_bruteforce(mu, nu, Metric::kFlat).value, 1e-12);
}

TEST(Measures, JsonRoundTrip) {
  GenericMeasure mu(2, false);
  mu.add_atom(Pt(0.25, 0.5, 0), 0.3);
  mu.add_piece(make_box(Pt(0, 0, 0), Pt(1, 0.5, 0)), 1.4);
  GenericMeasure back = measure_from_json(measure_to_json(mu));
  TestFunction f = affine_function(Pt(1, 2, 0), 0.5);
  EXPECT_NEAR(pair(back, f).value, pair(mu, f).value, 1e-15);
  EXPECT_EQ(back.atoms().size(), 1u);
  EXPECT_EQ(back.pieces().size(), 1u);
}

TEST(Measures, JsonErrorsAreInvalidArgument) {
  try {
    measure_from_json("{not json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
  }
  EXPECT_THROW(measure_from_json(R"({"pieces":[{"region":{"kind":"cell","index":0},"density":1}]})"), Error);
}

}  // namespace
}  // namespace otbb
