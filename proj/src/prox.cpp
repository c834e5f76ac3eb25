/*************************************************************************************************
 * Proximal maps of the kinetic action
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

#include "otbb/prox.hpp"

#include <algorithm>
#include <cmath>

namespace otbb {

KineticProxResult prox_kinetic(double s0, const double* m0, int dim, double gamma, double w) {
  require(gamma > 0 && w > 0, "prox step and weight must be positive");
  require(dim >= 1 && dim <= 3, "momentum dimension must be 1..3");
  KineticProxResult r;
  double mm = 0;
  for (int i = 0; i < dim; ++i) mm += m0[i] * m0[i];
  const double gw = gamma * w;
  const double c = 0.5 * gw * mm;
  auto f = [&](double s) { return (s - s0) * (s + gw) * (s + gw) - c; };
  if (f(0) >= 0) return r;
  // f is increasing and convex on [max(s0,0), inf); Newton from an upper bound decreases monotonically.
  double lo = std::max(s0, 0.0);
  double s = s0 + c / ((lo + gw) * (lo + gw));
  s = std::max(s, lo);
  for (int it = 0; it < 100; ++it) {
    double fs = f(s);
    double df = (s + gw) * (s + gw) + 2 * (s - s0) * (s + gw);
    if (!(df > 0)) break;
    double step = fs / df;
    double next = std::max(s - step, lo);
    if (std::abs(next - s) <= 1e-16 * std::max(1.0, s)) {
      s = next;
      break;
    }
    s = next;
  }
  r.s = s;
  for (int i = 0; i < dim; ++i) r.m[i] = s * m0[i] / (s + gw);
  if (s > 0) {
    double scale = 1 + std::abs(s0) + std::sqrt(mm);
    double rm = 0;
    for (int i = 0; i < dim; ++i) rm = std::max(rm, std::abs(gw * r.m[i] / s + r.m[i] - m0[i]));
    double m2 = r.m.head(dim).squaredNorm();
    double rs = std::abs(-0.5 * gw * m2 / (s * s) + s - s0);
    r.kkt = std::max(rm, rs) / scale;
  } else {
    r.m.setZero();
  }
  return r;
}

KineticProxResult prox_kinetic(double s0, const Vec& m0, double gamma, double w) {
  return prox_kinetic(s0, m0.data(), static_cast<int>(m0.size()), gamma, w);
}

namespace {

// Second derivative d^2 theta / da^2; the full Hessian follows from 1-homogeneity.
double mean_second(MeanKind k, double a, double b) {
  switch (k) {
    case MeanKind::kArithmetic: return 0;
    case MeanKind::kGeometric: return -0.25 * std::sqrt(b) * std::pow(a, -1.5);
    case MeanKind::kHarmonic: return -4 * b * b / std::pow(a + b, 3);
    case MeanKind::kLogarithmic: {
      double h = 1e-5 * a, da1, db1, da2, db2;
      mean_gradient(k, a + h, b, da1, db1);
      mean_gradient(k, a - h, b, da2, db2);
      return (da1 - da2) / (2 * h);
    }
  }
  return 0;
}

struct MeanObjective {
  MeanKind mean;
  double a0, b0, m0, gamma, w;

  double value(double a, double b) const {
    double th = mean_value(mean, a, b);
    return m0 * m0 / (2 * (th / w + gamma)) + ((a - a0) * (a - a0) + (b - b0) * (b - b0)) / (2 * gamma);
  }
  // Partial derivative in one coordinate (0: a, 1: b) for a, b > 0.
  double partial(double a, double b, int i) const {
    double th = mean_value(mean, a, b), da, db;
    mean_gradient(mean, a, b, da, db);
    double h1 = -m0 * m0 / (2 * w * (th / w + gamma) * (th / w + gamma));
    return i == 0 ? (a - a0) / gamma + h1 * da : (b - b0) / gamma + h1 * db;
  }
};

}  // namespace

MeanProxResult prox_mean(MeanKind mean, double a0, double b0, double m0, double gamma, double w) {
  require(gamma > 0 && w > 0, "prox step and weight must be positive");
  MeanProxResult r;
  auto finish = [&](double a, double b) {
    r.a = a;
    r.b = b;
    double th = mean_value(mean, a, b);
    r.m = th > 0 ? th * m0 / (th + gamma * w) : 0.0;
    return r;
  };
  if (m0 == 0) return finish(std::max(a0, 0.0), std::max(b0, 0.0));
  const MeanObjective F{mean, a0, b0, m0, gamma, w};
  const double scale = 1 + std::abs(a0) + std::abs(b0) + std::abs(m0);
  const double floor = 1e-12 * scale;

  // Interior Newton with backtracking.
  double a = std::max(a0, 0.0) + 0.5 * std::abs(m0) + floor;
  double b = std::max(b0, 0.0) + 0.5 * std::abs(m0) + floor;
  bool ok = false;
  for (int it = 0; it < 50; ++it) {
    ++r.newton_steps;
    double th = mean_value(mean, a, b), da, db;
    mean_gradient(mean, a, b, da, db);
    double q = th / w + gamma;
    double h1 = -m0 * m0 / (2 * w * q * q);
    double h2 = m0 * m0 / (w * w * q * q * q);
    double ga = (a - a0) / gamma + h1 * da, gb = (b - b0) / gamma + h1 * db;
    if (std::max(std::abs(ga), std::abs(gb)) <= 1e-13 * scale / gamma) {
      ok = true;
      break;
    }
    double taa = mean_second(mean, a, b);
    double tab = -taa * a / b, tbb = taa * a * a / (b * b);
    double Haa = 1 / gamma + h2 * da * da + h1 * taa;
    double Hab = h2 * da * db + h1 * tab;
    double Hbb = 1 / gamma + h2 * db * db + h1 * tbb;
    double det = Haa * Hbb - Hab * Hab;
    if (!(det > 0) || !std::isfinite(det)) break;
    double pa = -(Hbb * ga - Hab * gb) / det, pb = -(Haa * gb - Hab * ga) / det;
    double t = 1;
    if (a + pa <= 0) t = std::min(t, 0.99 * a / -pa);
    if (b + pb <= 0) t = std::min(t, 0.99 * b / -pb);
    double f0 = F.value(a, b), slope = ga * pa + gb * pb;
    while (t > 1e-12 && F.value(a + t * pa, b + t * pb) > f0 + 1e-4 * t * slope) t *= 0.5;
    if (t <= 1e-12) break;
    a += t * pa;
    b += t * pb;
    if (!(a > 0) || !(b > 0)) break;
  }
  if (ok) return finish(a, b);

  // Fallback: cyclic coordinate minimization with bisection on the partial derivative.
  r.fallback = true;
  double x[2] = {std::max(a0, 0.0), std::max(b0, 0.0)};
  auto coord = [&](int i) {
    auto d = [&](double v) { return i == 0 ? F.partial(v, x[1], 0) : F.partial(x[0], v, 1); };
    double tiny = 1e-300;
    if (x[1 - i] <= 0) {
      x[i] = std::max(i == 0 ? a0 : b0, 0.0);
      return;
    }
    if (d(tiny) >= 0) {
      x[i] = 0;
      return;
    }
    double lo = tiny, hi = std::max(x[i], 1.0) * 2;
    while (d(hi) < 0) hi *= 2;
    for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
      double mid = 0.5 * (lo + hi);
      (d(mid) < 0 ? lo : hi) = mid;
    }
    x[i] = 0.5 * (lo + hi);
  };
  for (int sweep = 0; sweep < 2000; ++sweep) {
    double pa = x[0], pb = x[1];
    if (x[1] <= 0 && x[0] <= 0) x[1] = std::max(b0, 0.0);
    coord(0);
    coord(1);
    if (std::abs(x[0] - pa) + std::abs(x[1] - pb) <= 1e-15 * scale) break;
  }
  return finish(x[0], x[1]);
}

}  // namespace otbb
