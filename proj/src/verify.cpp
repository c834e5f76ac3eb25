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

#include "otbb/verify.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "json.hpp"

namespace otbb {

using json = nlohmann::json;
using Mat3 = Eigen::Matrix3d;

ModelFamily ModelFamily::fv_grid(int dim, const Pt& lo, const Pt& hi, int base_cells, MeanKind mean) {
  require(dim >= 1 && dim <= 3, "grid dimension must be 1..3");
  require(base_cells >= 1, "base resolution must be positive");
  ModelFamily f;
  f.kind = ModelKind::kFV;
  f.dim = dim;
  f.lo = lo;
  f.hi = hi;
  f.mean = mean;
  f.base = base_cells;
  return f;
}

ModelFamily ModelFamily::icosphere(int base_subdiv) {
  require(base_subdiv >= 0, "subdivision depth must be nonnegative");
  ModelFamily f;
  f.kind = ModelKind::kTri;
  f.surface = SurfaceKind::kSphere;
  f.base = base_subdiv;
  return f;
}

ModelFamily ModelFamily::flat_triangles(int base_n) {
  require(base_n >= 1, "base resolution must be positive");
  ModelFamily f;
  f.kind = ModelKind::kTri;
  f.surface = SurfaceKind::kFlat;
  f.dim = 2;
  f.lo = Pt::Zero();
  f.hi = Pt(1, 1, 0);
  f.base = base_n;
  return f;
}

int ModelFamily::resolution(int level) const {
  require(level >= 0 && level < 16, "level out of range");
  if (kind == ModelKind::kTri && surface == SurfaceKind::kSphere) return base + level;
  return base << level;
}

std::shared_ptr<const DiscreteModel> ModelFamily::build(int res) const {
  require(res >= (kind == ModelKind::kTri && surface == SurfaceKind::kSphere ? 0 : 1), "resolution out of range");
  if (kind == ModelKind::kTri) {
    TriMesh m = surface == SurfaceKind::kSphere ? build_icosphere(res) : build_flat_grid(res);
    return std::make_shared<const DiscreteModel>(DiscreteModel::tri(std::move(m)));
  }
  std::array<int, 3> cells{1, 1, 1};
  const double L0 = hi[0] - lo[0];
  require(L0 > 0, "empty domain");
  for (int a = 0; a < dim; ++a) cells[a] = std::max(1, static_cast<int>(std::lround(res * (hi[a] - lo[a]) / L0)));
  return std::make_shared<const DiscreteModel>(DiscreteModel::fv(build_grid_mesh(dim, lo, hi, cells), mean));
}

std::string ModelFamily::describe() const {
  std::ostringstream os;
  if (kind == ModelKind::kFV) {
    os << "fv-" << dim << "d-" << mean_name(mean);
  } else {
    os << (surface == SurfaceKind::kSphere ? "tri-sphere" : "tri-flat");
  }
  return os.str();
}

namespace {

TestFunction scalar_fn(std::string name, std::function<double(const Pt&)> v, std::function<Pt(const Pt&)> g,
                       bool sphere, double sup) {
  TestFunction f;
  f.name = std::move(name);
  f.value = std::move(v);
  if (sphere) {
    f.gradient = [g](const Pt& x) {
      Pt d = g(x);
      return (d - x * x.dot(d)).eval();
    };
  } else {
    f.gradient = std::move(g);
  }
  f.sup0 = f.sup1 = f.sup2 = sup;
  return f;
}

TestFunction field_fn(std::string name, std::function<Pt(const Pt&)> v, std::function<Mat3(const Pt&)> J,
                      double sup) {
  TestFunction f;
  f.vector = true;
  f.name = std::move(name);
  f.vvalue = std::move(v);
  f.jacobian = std::move(J);
  f.sup0 = f.sup1 = f.sup2 = sup;
  return f;
}

TestFunction gradient_field(const TestFunction& s) {
  auto g = s.gradient;
  return field_fn("grad " + s.name, g, [](const Pt&) { return Mat3::Zero().eval(); }, s.sup1);
}

void box_battery(const ModelFamily& fam, Battery& b) {
  const Pt lo = fam.lo, hi = fam.hi;
  const double L0 = hi[0] - lo[0], L1 = fam.dim > 1 ? hi[1] - lo[1] : 1.0;
  auto u = [=](const Pt& x) { return (x[0] - lo[0]) / L0; };
  auto v = [=](const Pt& x) { return fam.dim > 1 ? (x[1] - lo[1]) / L1 : 0.0; };
  const Pt e0(1 / L0, 0, 0), e1(0, fam.dim > 1 ? 1 / L1 : 0.0, 0);
  const double pi = kPi;
  if (fam.dim == 1) {
    b.scalars.push_back(scalar_fn("cos(pi u)", [=](const Pt& x) { return std::cos(pi * u(x)); },
                                  [=](const Pt& x) { return (-pi * std::sin(pi * u(x)) * e0).eval(); }, false, pi * pi));
    b.scalars.push_back(scalar_fn("sin(2 pi u)/2", [=](const Pt& x) { return 0.5 * std::sin(2 * pi * u(x)); },
                                  [=](const Pt& x) { return (pi * std::cos(2 * pi * u(x)) * e0).eval(); }, false,
                                  2 * pi * pi));
    b.scalars.push_back(scalar_fn("u^2(1-u)", [=](const Pt& x) { return u(x) * u(x) * (1 - u(x)); },
                                  [=](const Pt& x) { return ((2 * u(x) - 3 * u(x) * u(x)) * e0).eval(); }, false, 6));
    b.densities.push_back(scalar_fn("1+cos(pi u)/2", [=](const Pt& x) { return 1 + 0.5 * std::cos(pi * u(x)); },
                                    [=](const Pt& x) { return (-0.5 * pi * std::sin(pi * u(x)) * e0).eval(); }, false,
                                    pi * pi));
    b.densities.push_back(scalar_fn("1+u^2/2", [=](const Pt& x) { return 1 + 0.5 * u(x) * u(x); },
                                    [=](const Pt& x) { return (u(x) * e0).eval(); }, false, 2));
    b.fields.push_back(field_fn("cos(pi u)/2", [=](const Pt& x) { return Pt(0.5 * std::cos(pi * u(x)), 0, 0); },
                                [=](const Pt& x) {
                                  Mat3 J = Mat3::Zero();
                                  J(0, 0) = -0.5 * pi * std::sin(pi * u(x)) / L0;
                                  return J;
                                },
                                pi * pi));
    b.fields.push_back(field_fn("(1+u)/2", [=](const Pt& x) { return Pt(0.5 * (1 + u(x)), 0, 0); },
                                [=](const Pt&) {
                                  Mat3 J = Mat3::Zero();
                                  J(0, 0) = 0.5 / L0;
                                  return J;
                                },
                                1));
  } else {
    b.scalars.push_back(scalar_fn(
        "cos(pi u)cos(pi v)", [=](const Pt& x) { return std::cos(pi * u(x)) * std::cos(pi * v(x)); },
        [=](const Pt& x) {
          return (-pi * std::sin(pi * u(x)) * std::cos(pi * v(x)) * e0 -
                  pi * std::cos(pi * u(x)) * std::sin(pi * v(x)) * e1)
              .eval();
        },
        false, 2 * pi * pi));
    b.scalars.push_back(scalar_fn(
        "sin(2 pi u) v/2", [=](const Pt& x) { return 0.5 * std::sin(2 * pi * u(x)) * v(x); },
        [=](const Pt& x) {
          return (pi * std::cos(2 * pi * u(x)) * v(x) * e0 + 0.5 * std::sin(2 * pi * u(x)) * e1).eval();
        },
        false, 2 * pi * pi));
    b.scalars.push_back(scalar_fn("u^2-v^2/2", [=](const Pt& x) { return u(x) * u(x) - 0.5 * v(x) * v(x); },
                                  [=](const Pt& x) { return (2 * u(x) * e0 - v(x) * e1).eval(); }, false, 2));
    b.densities.push_back(scalar_fn(
        "1+cos(pi u)cos(pi v)/2", [=](const Pt& x) { return 1 + 0.5 * std::cos(pi * u(x)) * std::cos(pi * v(x)); },
        [=](const Pt& x) {
          return (-0.5 * pi * std::sin(pi * u(x)) * std::cos(pi * v(x)) * e0 -
                  0.5 * pi * std::cos(pi * u(x)) * std::sin(pi * v(x)) * e1)
              .eval();
        },
        false, pi * pi));
    b.densities.push_back(scalar_fn("1+uv/2", [=](const Pt& x) { return 1 + 0.5 * u(x) * v(x); },
                                    [=](const Pt& x) { return (0.5 * v(x) * e0 + 0.5 * u(x) * e1).eval(); }, false, 1));
    b.fields.push_back(field_fn(
        "(cos(pi v), sin(pi u))/2", [=](const Pt& x) { return Pt(0.5 * std::cos(pi * v(x)), 0.5 * std::sin(pi * u(x)), 0); },
        [=](const Pt& x) {
          Mat3 J = Mat3::Zero();
          J(0, 1) = -0.5 * pi * std::sin(pi * v(x)) / L1;
          J(1, 0) = 0.5 * pi * std::cos(pi * u(x)) / L0;
          return J;
        },
        pi * pi));
    b.fields.push_back(field_fn("(uv, 1-u)/2", [=](const Pt& x) { return Pt(0.5 * u(x) * v(x), 0.5 * (1 - u(x)), 0); },
                                [=](const Pt& x) {
                                  Mat3 J = Mat3::Zero();
                                  J(0, 0) = 0.5 * v(x) / L0;
                                  J(0, 1) = 0.5 * u(x) / L1;
                                  J(1, 0) = -0.5 / L0;
                                  return J;
                                },
                                1));
  }
  for (const auto& s : b.scalars) b.gradients.push_back(gradient_field(s));

  // No-flux polynomial fields: each component vanishes on the faces normal to its axis.
  auto a = [=](double t, int ax) { return (t - lo[ax]) * (hi[ax] - t); };
  auto da = [=](double t, int ax) { return hi[ax] + lo[ax] - 2 * t; };
  if (fam.dim == 1) {
    b.no_flux.push_back(field_fn("a(x)", [=](const Pt& x) { return Pt(a(x[0], 0), 0, 0); },
                                 [=](const Pt& x) {
                                   Mat3 J = Mat3::Zero();
                                   J(0, 0) = da(x[0], 0);
                                   return J;
                                 },
                                 4));
    b.no_flux.push_back(field_fn("a(x)(x-lo)^2", [=](const Pt& x) { return Pt(a(x[0], 0) * std::pow(x[0] - lo[0], 2), 0, 0); },
                                 [=](const Pt& x) {
                                   Mat3 J = Mat3::Zero();
                                   double t = x[0] - lo[0];
                                   J(0, 0) = da(x[0], 0) * t * t + 2 * a(x[0], 0) * t;
                                   return J;
                                 },
                                 16));
  } else {
    b.no_flux.push_back(field_fn(
        "(a(x)(1+y), a(y)x^2)",
        [=](const Pt& x) { return Pt(a(x[0], 0) * (1 + x[1]), a(x[1], 1) * x[0] * x[0], 0); },
        [=](const Pt& x) {
          Mat3 J = Mat3::Zero();
          J(0, 0) = da(x[0], 0) * (1 + x[1]);
          J(0, 1) = a(x[0], 0);
          J(1, 0) = 2 * a(x[1], 1) * x[0];
          J(1, 1) = da(x[1], 1) * x[0] * x[0];
          return J;
        },
        16));
    // Rotated gradient of the stream function a(x)^2 a(y)^2: divergence free.
    b.no_flux.push_back(field_fn(
        "curl a(x)^2 a(y)^2",
        [=](const Pt& x) {
          double A = a(x[0], 0), B = a(x[1], 1), dA = da(x[0], 0), dB = da(x[1], 1);
          return Pt(2 * A * A * B * dB, -2 * A * dA * B * B, 0);
        },
        [=](const Pt& x) {
          double A = a(x[0], 0), B = a(x[1], 1), dA = da(x[0], 0), dB = da(x[1], 1);
          Mat3 J = Mat3::Zero();
          J(0, 0) = 4 * A * dA * B * dB;
          J(0, 1) = 2 * A * A * (dB * dB - 2 * B);
          J(1, 0) = -2 * (dA * dA - 2 * A) * B * B;
          J(1, 1) = -4 * A * dA * B * dB;
          return J;
        },
        64));
  }
}

void sphere_battery(Battery& b) {
  b.scalars.push_back(scalar_fn("x", [](const Pt& x) { return x[0]; }, [](const Pt&) { return Pt(1, 0, 0); }, true, 2));
  b.scalars.push_back(scalar_fn("yz", [](const Pt& x) { return x[1] * x[2]; },
                                [](const Pt& x) { return Pt(0, x[2], x[1]); }, true, 4));
  b.scalars.push_back(scalar_fn("x^2-y^2", [](const Pt& x) { return x[0] * x[0] - x[1] * x[1]; },
                                [](const Pt& x) { return Pt(2 * x[0], -2 * x[1], 0); }, true, 8));
  b.scalars.push_back(scalar_fn("xyz", [](const Pt& x) { return x[0] * x[1] * x[2]; },
                                [](const Pt& x) { return Pt(x[1] * x[2], x[0] * x[2], x[0] * x[1]); }, true, 8));
  for (const auto& s : b.scalars) b.gradients.push_back(gradient_field(s));
  b.densities.push_back(scalar_fn("1+x/2", [](const Pt& x) { return 1 + 0.5 * x[0]; },
                                  [](const Pt&) { return Pt(0.5, 0, 0); }, true, 1));
  b.densities.push_back(scalar_fn("1+yz/2", [](const Pt& x) { return 1 + 0.5 * x[1] * x[2]; },
                                  [](const Pt& x) { return Pt(0, 0.5 * x[2], 0.5 * x[1]); }, true, 2));

  // Tangent fields: a rotation and projected gradients of polynomials.
  auto rotation = field_fn("e_z x p", [](const Pt& x) { return Pt(-x[1], x[0], 0); },
                           [](const Pt&) {
                             Mat3 J = Mat3::Zero();
                             J(0, 1) = -1;
                             J(1, 0) = 1;
                             return J;
                           },
                           1);
  auto projected = [](std::string name, std::function<Pt(const Pt&)> g, std::function<Mat3(const Pt&)> H) {
    return field_fn(std::move(name),
                    [g](const Pt& x) {
                      Pt d = g(x);
                      return (d - x * x.dot(d)).eval();
                    },
                    [g, H](const Pt& x) {
                      Pt d = g(x);
                      Mat3 J = H(x) - x.dot(d) * Mat3::Identity() - x * (H(x).transpose() * x + d).transpose();
                      return J;
                    },
                    8);
  };
  auto grad_x = projected("P grad x", [](const Pt&) { return Pt(1, 0, 0); }, [](const Pt&) { return Mat3::Zero().eval(); });
  auto grad_yz = projected("P grad yz", [](const Pt& x) { return Pt(0, x[2], x[1]); },
                           [](const Pt&) {
                             Mat3 H = Mat3::Zero();
                             H(1, 2) = H(2, 1) = 1;
                             return H;
                           });
  b.fields = {rotation, grad_x};
  b.no_flux = {rotation, grad_x, grad_yz};
}

}  // namespace

Battery default_battery(const ModelFamily& family) {
  Battery b;
  if (family.kind == ModelKind::kTri && family.surface == SurfaceKind::kSphere) {
    sphere_battery(b);
  } else {
    box_battery(family, b);
  }
  return b;
}

const char* assumption_name(Assumption a) {
  switch (a) {
    case Assumption::kA1: return "A1";
    case Assumption::kA2: return "A2";
    case Assumption::kA3: return "A3";
    case Assumption::kA4: return "A4";
    case Assumption::kA5: return "A5";
    case Assumption::kA5Prime: return "A'5";
    case Assumption::kA6: return "A6";
    case Assumption::kA8: return "A8";
    case Assumption::kA9: return "A9";
  }
  return "?";
}

Assumption assumption_from_name(const std::string& s) {
  static const std::map<std::string, Assumption> names{
      {"A1", Assumption::kA1}, {"A2", Assumption::kA2}, {"A3", Assumption::kA3},
      {"A4", Assumption::kA4}, {"A5", Assumption::kA5}, {"A'5", Assumption::kA5Prime},
      {"A5p", Assumption::kA5Prime}, {"A6", Assumption::kA6}, {"A8", Assumption::kA8},
      {"A9", Assumption::kA9}};
  auto it = names.find(s);
  if (it == names.end()) fail(ErrorCode::kInvalidArgument, "unknown assumption '" + s + "'");
  return it->second;
}

namespace {

// Surface divergence of a field from its ambient jacobian.
double field_divergence(const TestFunction& m, const Pt& x, bool sphere) {
  Mat3 J = m.jacobian(x);
  double d = J.trace();
  if (sphere) d -= x.dot(J * x);
  return d;
}

double integrate(const DiscreteModel& model, const std::function<double(const Pt&)>& f, int order) {
  double acc = 0;
  for (const auto& q : model.domain_quadrature(order)) acc += q.w * f(q.x);
  return acc;
}

bool is_sphere(const DiscreteModel& model) { return model.metric() == Metric::kSphere; }

// Continuous action of a density measure and a vector measure reconstructed on the same pieces.
double matched_action(const GenericMeasure& rho, const GenericMeasure& m, int order) {
  require(rho.atoms().empty() && m.atoms().empty() && rho.pieces().size() == m.pieces().size(),
          "action of reconstructions needs matching pieces");
  double acc = 0;
  for (size_t i = 0; i < m.pieces().size(); ++i) {
    const Piece& pr = rho.pieces()[i];
    const Piece& pm = m.pieces()[i];
    require(pr.region.v == pm.region.v, "action of reconstructions needs matching pieces");
    double s = 0;
    for (const auto& q : pm.region.quadrature(order)) s += q.w * piece_vector_density(pm, q.x).squaredNorm();
    if (s == 0) continue;
    if (pr.density <= 0) return kInf;
    acc += s / (2 * pr.density);
  }
  return acc;
}

FinalPenalty sweep_penalty(const DiscreteModel& model, const SweepOptions& o, std::function<double(const Pt&)>* V) {
  const bool sphere = is_sphere(model);
  *V = [sphere](const Pt& x) { return sphere ? 1 + x[2] : 0.5 + x.squaredNorm(); };
  switch (o.penalty) {
    case PenaltyKind::kPotential: return FinalPenalty::potential(model, o.lambda, *V);
    case PenaltyKind::kQuadratic: return FinalPenalty::quadratic(o.lambda);
    case PenaltyKind::kEntropy: return FinalPenalty::entropy(model, o.lambda);
    case PenaltyKind::kNone: break;
  }
  fail(ErrorCode::kInvalidArgument, "A8/A9 sweeps need a penalty kind");
}

// G of a smooth density given by a function.
double penalty_of_density(const DiscreteModel& model, const FinalPenalty& g, const TestFunction& rho,
                          const std::function<double(const Pt&)>& V, int order) {
  switch (g.kind) {
    case PenaltyKind::kPotential:
      return g.lambda * integrate(model, [&](const Pt& x) { return V(x) * rho.value(x); }, order);
    case PenaltyKind::kQuadratic:
      return g.lambda * integrate(model, [&](const Pt& x) { return 0.5 * std::pow(rho.value(x), 2); }, order);
    case PenaltyKind::kEntropy:
      return g.lambda * integrate(model, [&](const Pt& x) {
               double r = rho.value(x);
               return r > 0 ? r * std::log(r) : 0.0;
             }, order) + g.offset;
    case PenaltyKind::kNone: break;
  }
  return 0;
}

double level_error(const DiscreteModel& model, const Battery& bat, Assumption which, const SweepOptions& o,
                   std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&](int n, double a, double b) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = a + (b - a) * unit(rng);
    return v;
  };
  const int order = o.order, nd = model.n_density(), nm = model.n_momentum();
  double err = 0;
  switch (which) {
    case Assumption::kA1:
      for (const auto& rho : bat.densities) {
        GenericMeasure rec = model.reconstruct_density(Recon::kCE, model.sample_density_fn(rho, order));
        for (const auto& phi : bat.scalars) {
          double exact = integrate(model, [&](const Pt& x) { return rho.value(x) * phi.value(x); }, order + 2);
          err = std::max(err, std::abs(pair(rec, phi, order).value - exact));
        }
      }
      break;
    case Assumption::kA2:
      for (int d = 0; d < o.draws; ++d) {
        Vec P = draw(nd, 0, 1);
        GenericMeasure ce = model.reconstruct_density(Recon::kCE, P), a = model.reconstruct_density(Recon::kA, P);
        double norm = total_variation(ce, order);
        for (const auto& phi : bat.scalars)
          err = std::max(err, std::abs(pair(ce, phi, order).value - pair(a, phi, order).value) / norm);
      }
      break;
    case Assumption::kA3:
      for (int d = 0; d < o.draws; ++d) {
        Vec M = draw(nm, -1, 1);
        GenericMeasure div = model.reconstruct_density(Recon::kCE, model.divergence(M));
        GenericMeasure rm = model.reconstruct_momentum(M);
        double norm = total_variation(rm, order);
        for (size_t i = 0; i < bat.scalars.size(); ++i)
          err = std::max(err, std::abs(pair(div, bat.scalars[i], order).value +
                                       pair(rm, bat.gradients[i], order).value) / norm);
      }
      break;
    case Assumption::kA4:
      for (const auto& m : bat.no_flux) err = std::max(err, check_a4(model, m, std::max(order, 12)));
      break;
    case Assumption::kA5:
      for (int d = 0; d < o.draws; ++d) {
        Vec P = draw(nd, 0, 1);
        GenericMeasure ra = model.reconstruct_density(Recon::kA, P);
        double norm = total_variation(ra, order);
        for (const auto& b : bat.fields) {
          TestFunction half;
          half.value = [&b](const Pt& x) { return 0.5 * b.vvalue(x).squaredNorm(); };
          double cont = pair(ra, half, order).value;
          double disc = model.action_conjugate(P, model.sample_momentum(b, order));
          err = std::max(err, std::max(0.0, disc - cont) / norm);
        }
      }
      break;
    case Assumption::kA5Prime: {
      if (model.kind() != ModelKind::kTri)
        fail(ErrorCode::kInvalidArgument, "A'5 needs density and momentum reconstructions on the same pieces (triangle model)");
      for (int d = 0; d < o.draws; ++d) {
        Vec P = draw(nd, 0.1, 1), M = draw(nm, -1, 1);
        double disc = model.action(P, M);
        double cont = matched_action(model.reconstruct_density(Recon::kA, P), model.reconstruct_momentum(M), order);
        err = std::max(err, std::max(0.0, cont / disc - 1));
      }
      break;
    }
    case Assumption::kA6:
      for (const auto& rho : bat.densities)
        for (const auto& m : bat.fields) {
          double disc = model.action(model.sample_density_fn(rho, order), model.sample_momentum(m, order));
          double cont = integrate(model, [&](const Pt& x) { return m.vvalue(x).squaredNorm() / (2 * rho.value(x)); },
                                  order + 2);
          err = std::max(err, std::max(0.0, disc - cont));
        }
      break;
    case Assumption::kA8: {
      std::function<double(const Pt&)> V;
      FinalPenalty g = sweep_penalty(model, o, &V);
      for (int d = 0; d < o.draws; ++d) {
        Vec P = draw(nd, 0, 1);
        double disc = g.value(model, P);
        double cont = g.continuous_value(model.reconstruct_density(Recon::kA, P), V, order);
        if (disc > 0) err = std::max(err, std::max(0.0, cont / disc - 1));
      }
      break;
    }
    case Assumption::kA9: {
      std::function<double(const Pt&)> V;
      FinalPenalty g = sweep_penalty(model, o, &V);
      for (const auto& rho : bat.densities) {
        double disc = g.value(model, model.sample_density_fn(rho, order));
        double cont = penalty_of_density(model, g, rho, V, order + 2);
        err = std::max(err, std::max(0.0, disc - cont));
      }
      break;
    }
  }
  return err;
}

}  // namespace

double check_a4(const DiscreteModel& model, const TestFunction& m, int order) {
  require(m.vector && m.jacobian, "A4 check needs a vector field with a jacobian");
  const bool sphere = is_sphere(model);
  TestFunction div;
  div.value = [&](const Pt& x) { return field_divergence(m, x, sphere); };
  Vec lhs = model.sample_density_fn(div, order);
  Vec rhs = model.divergence(model.sample_momentum(m, order));
  return lhs.size() ? (lhs - rhs).cwiseAbs().maxCoeff() : 0.0;
}

AssumptionSweep assumption_sweep(const ModelFamily& family, Assumption which, const SweepOptions& opts) {
  if (opts.levels < 3) fail(ErrorCode::kInvalidArgument, "an assumption sweep needs at least 3 levels");
  require(opts.draws >= 1 && opts.order >= 1, "draws and quadrature order must be positive");
  AssumptionSweep sw;
  sw.which = which;
  sw.family = family.describe();
  sw.seed = opts.seed;
  const Battery bat = default_battery(family);
  for (int l = 0; l < opts.levels; ++l) {
    auto model = family.at_level(l);
    std::mt19937_64 rng(opts.seed + 7919ULL * static_cast<std::uint64_t>(l));
    SweepLevel lv;
    lv.resolution = family.resolution(l);
    lv.sigma = model->sigma();
    lv.error = level_error(*model, bat, which, opts, rng);
    sw.levels.push_back(lv);
  }
  std::vector<double> s, e;
  for (const auto& lv : sw.levels) {
    s.push_back(lv.sigma);
    e.push_back(lv.error);
  }
  sw.slope = loglog_slope(s, e);
  sw.pass = true;
  if (which == Assumption::kA4) {
    for (double v : e) sw.pass = sw.pass && v <= 1e-10;
  } else {
    for (size_t i = 1; i < e.size(); ++i) sw.pass = sw.pass && (e[i] <= 1e-12 || e[i] * 1.5 <= e[i - 1]);
  }
  return sw;
}

std::string AssumptionSweep::to_csv() const {
  std::ostringstream os;
  os << "assumption,family,level,resolution,sigma,error\n";
  for (size_t i = 0; i < levels.size(); ++i)
    os << assumption_name(which) << ',' << family << ',' << i << ',' << levels[i].resolution << ','
       << fmt_double(levels[i].sigma) << ',' << fmt_double(levels[i].error) << '\n';
  return os.str();
}

namespace {

json num(double v) {
  if (std::isfinite(v)) return v;
  return fmt_double(v);
}

}  // namespace

std::string AssumptionSweep::to_json() const {
  json j;
  j["assumption"] = assumption_name(which);
  j["family"] = family;
  j["seed"] = seed;
  j["slope"] = num(slope);
  j["pass"] = pass;
  for (const auto& lv : levels)
    j["levels"].push_back({{"resolution", lv.resolution}, {"sigma", lv.sigma}, {"error", num(lv.error)}});
  return j.dump();
}

const char* oracle_name(Oracle o) {
  switch (o) {
    case Oracle::kDirac: return "dirac";
    case Oracle::kQuantile: return "quantile";
    case Oracle::kLP: return "lp";
  }
  return "?";
}

Oracle oracle_from_name(const std::string& s) {
  if (s == "dirac") return Oracle::kDirac;
  if (s == "quantile" || s == "1d-quantile") return Oracle::kQuantile;
  if (s == "lp") return Oracle::kLP;
  fail(ErrorCode::kInvalidArgument, "unknown oracle '" + s + "'");
}

double ground_truth(Oracle oracle, const GenericMeasure& rho0, const GenericMeasure& rho1, Metric metric) {
  switch (oracle) {
    case Oracle::kDirac: {
      require(rho0.pieces().empty() && rho1.pieces().empty() && rho0.atoms().size() == 1 && rho1.atoms().size() == 1,
              "the dirac oracle needs one atom per marginal");
      double w0 = rho0.atoms()[0].w, w1 = rho1.atoms()[0].w;
      if (std::abs(w0 - w1) > kMassTol * std::max(1.0, std::abs(w0)))
        fail(ErrorCode::kMassMismatch, "marginal masses differ: " + fmt_double(w0) + " vs " + fmt_double(w1));
      return 0.5 * w0 * w2_dirac(rho0.atoms()[0].x, rho1.atoms()[0].x, metric);
    }
    case Oracle::kQuantile: return 0.5 * w2_1d_quantile(rho0, rho1);
    case Oracle::kLP: return 0.5 * w2_lp_bruteforce(rho0, rho1, metric).value;
  }
  return kInf;
}

ConvergenceTable convergence_experiment(const ConvergenceSpec& spec) {
  require(!spec.schedule.empty(), "convergence schedule is empty");
  spec.solver.validate();
  ConvergenceTable tab;
  const Metric metric =
      spec.family.kind == ModelKind::kTri && spec.family.surface == SurfaceKind::kSphere ? Metric::kSphere : Metric::kFlat;
  tab.truth = ground_truth(spec.oracle, spec.rho0, spec.rho1, metric);
  tab.rows.resize(spec.schedule.size());
  parallel_for(static_cast<int>(spec.schedule.size()), [&](int i) {
    ConvergenceRow& row = tab.rows[i];
    row.N = spec.schedule[i].first;
    row.resolution = spec.schedule[i].second;
    row.truth = tab.truth;
    try {
      auto model = spec.family.build(row.resolution);
      row.sigma = model->sigma();
      DiscreteProblem pb = assemble(model, model->sample_density(spec.rho0), model->sample_density(spec.rho1), row.N);
      SolveResult res = solve(pb, spec.solver);
      row.stats = res.stats;
      row.objective = res.stats.objective;
      row.flagged = !res.stats.converged || !std::isfinite(row.objective);
    } catch (const Error&) {
      row.flagged = true;
    }
    if (std::isfinite(row.objective))
      row.rel_error = tab.truth != 0 ? std::abs(row.objective - tab.truth) / tab.truth : std::abs(row.objective);
  });
  std::map<int, std::vector<const ConvergenceRow*>> by_res;
  for (const auto& r : tab.rows) by_res[r.resolution].push_back(&r);
  for (auto& [res, rows] : by_res) {
    std::sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->N < b->N; });
    for (size_t i = 1; i < rows.size(); ++i) {
      double slack = 10 * spec.solver.tol * std::max(1.0, std::abs(rows[i - 1]->objective));
      if (!(rows[i]->objective <= rows[i - 1]->objective + slack)) tab.monotone_in_N = false;
    }
  }
  return tab;
}

std::string ConvergenceTable::to_csv() const {
  std::ostringstream os;
  os << "N,resolution,sigma,objective,truth,rel_error,iterations,converged,flagged,primal,dual,continuity\n";
  for (const auto& r : rows)
    os << r.N << ',' << r.resolution << ',' << fmt_double(r.sigma) << ',' << fmt_double(r.objective) << ','
       << fmt_double(r.truth) << ',' << fmt_double(r.rel_error) << ',' << r.stats.iterations << ','
       << (r.stats.converged ? 1 : 0) << ',' << (r.flagged ? 1 : 0) << ',' << fmt_double(r.stats.primal) << ','
       << fmt_double(r.stats.dual) << ',' << fmt_double(r.stats.continuity) << '\n';
  return os.str();
}

std::string ConvergenceTable::to_json() const {
  json j;
  j["truth"] = num(truth);
  j["monotone_in_N"] = monotone_in_N;
  j["rows"] = json::array();
  for (const auto& r : rows)
    j["rows"].push_back({{"N", r.N},
                         {"resolution", r.resolution},
                         {"sigma", num(r.sigma)},
                         {"objective", num(r.objective)},
                         {"rel_error", num(r.rel_error)},
                         {"flagged", r.flagged},
                         {"stats", json::parse(r.stats.to_json())}});
  return j.dump();
}

namespace {

Pt controllability_target(const ModelFamily& fam, const Pt& x, const Pt& dir, double d) {
  if (fam.kind == ModelKind::kTri && fam.surface == SurfaceKind::kSphere)
    return Eigen::AngleAxisd(d, dir.normalized()) * x;
  return x + d * dir.normalized();
}

struct KappaFit {
  double kappa = 0, r2 = 0, max_factor = 0;
  std::vector<double> costs;
};

KappaFit fit_kappa(const ControllabilitySpec& s, int res, int N) {
  auto model = s.family.build(res);
  KappaFit f;
  double num = 0, den = 0;
  for (double d : s.distances) {
    ControllabilityPath cp = model->controllability(s.x, controllability_target(s.family, s.x, s.direction, d), N);
    f.costs.push_back(cp.cost);
    for (double t : cp.time_factors) f.max_factor = std::max(f.max_factor, t * N);
    num += cp.cost * d * d;
    den += d * d * d * d;
  }
  f.kappa = den > 0 ? num / den : 0;
  double mean = 0;
  for (double c : f.costs) mean += c / f.costs.size();
  double ss_res = 0, ss_tot = 0;
  for (size_t i = 0; i < f.costs.size(); ++i) {
    double d = s.distances[i];
    ss_res += std::pow(f.costs[i] - f.kappa * d * d, 2);
    ss_tot += std::pow(f.costs[i] - mean, 2);
  }
  f.r2 = ss_tot > 0 ? 1 - ss_res / ss_tot : (ss_res == 0 ? 1.0 : 0.0);
  return f;
}

}  // namespace

ControllabilityReport controllability_bound(const ControllabilitySpec& spec) {
  require(spec.distances.size() >= 2, "controllability fit needs at least two distances");
  require(spec.N >= 1, "N must be positive");
  for (double d : spec.distances) require(d > 0, "distances must be positive");
  ControllabilityReport rep;
  KappaFit base = fit_kappa(spec, spec.resolution, spec.N);
  rep.distances = spec.distances;
  rep.costs = base.costs;
  rep.kappa = base.kappa;
  rep.r2 = base.r2;
  rep.max_time_factor = base.max_factor;
  const bool sphere = spec.family.kind == ModelKind::kTri && spec.family.surface == SurfaceKind::kSphere;
  KappaFit n2 = fit_kappa(spec, spec.resolution, 2 * spec.N);
  KappaFit fine = fit_kappa(spec, sphere ? spec.resolution + 1 : 2 * spec.resolution, spec.N);
  rep.kappa_N2 = n2.kappa;
  rep.kappa_fine = fine.kappa;
  rep.max_time_factor = std::max({base.max_factor, n2.max_factor, fine.max_factor});
  rep.pass_fit = std::isfinite(rep.kappa) && rep.r2 >= 0.95;
  rep.pass_time = rep.max_time_factor <= 16 * (1 + 1e-12);
  rep.pass_stable = rep.kappa > 0 && std::abs(rep.kappa_N2 / rep.kappa - 1) <= 0.2 &&
                    std::abs(rep.kappa_fine / rep.kappa - 1) <= 0.2;
  return rep;
}

std::string ControllabilityReport::to_csv() const {
  std::ostringstream os;
  os << "distance,cost\n";
  for (size_t i = 0; i < distances.size(); ++i) os << fmt_double(distances[i]) << ',' << fmt_double(costs[i]) << '\n';
  return os.str();
}

std::string ControllabilityReport::to_json() const {
  json j;
  j["kappa"] = num(kappa);
  j["r2"] = num(r2);
  j["max_time_factor_over_tau"] = num(max_time_factor);
  j["kappa_2N"] = num(kappa_N2);
  j["kappa_fine"] = num(kappa_fine);
  j["pass_fit"] = pass_fit;
  j["pass_time"] = pass_time;
  j["pass_stable"] = pass_stable;
  j["distances"] = distances;
  j["costs"] = json::array();
  for (double c : costs) j["costs"].push_back(num(c));
  return j.dump();
}

}  // namespace otbb
