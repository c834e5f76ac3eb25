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

#include "otbb/timedisc.hpp"

#include <algorithm>
#include <cmath>

namespace otbb {

const char* penalty_name(PenaltyKind k) {
  switch (k) {
    case PenaltyKind::kNone: return "none";
    case PenaltyKind::kPotential: return "potential";
    case PenaltyKind::kQuadratic: return "quadratic";
    case PenaltyKind::kEntropy: return "entropy";
  }
  return "?";
}

PenaltyKind penalty_from_name(const std::string& s) {
  if (s == "none") return PenaltyKind::kNone;
  if (s == "potential") return PenaltyKind::kPotential;
  if (s == "quadratic") return PenaltyKind::kQuadratic;
  if (s == "entropy") return PenaltyKind::kEntropy;
  fail(ErrorCode::kInvalidArgument, "unknown penalty '" + s + "'");
}

FinalPenalty FinalPenalty::none() { return FinalPenalty{}; }

FinalPenalty FinalPenalty::potential(const DiscreteModel& model, double lambda,
                                     const std::function<double(const Pt&)>& V) {
  require(lambda >= 0, "penalty weight must be nonnegative");
  FinalPenalty g;
  g.kind = PenaltyKind::kPotential;
  g.lambda = lambda;
  auto pos = model.positions();
  g.V.resize(static_cast<Eigen::Index>(pos.size()));
  for (size_t j = 0; j < pos.size(); ++j) g.V[static_cast<Eigen::Index>(j)] = V(pos[j]);
  return g;
}

FinalPenalty FinalPenalty::quadratic(double lambda) {
  require(lambda >= 0, "penalty weight must be nonnegative");
  FinalPenalty g;
  g.kind = PenaltyKind::kQuadratic;
  g.lambda = lambda;
  return g;
}

FinalPenalty FinalPenalty::entropy(const DiscreteModel& model, double lambda) {
  require(lambda >= 0, "penalty weight must be nonnegative");
  FinalPenalty g;
  g.kind = PenaltyKind::kEntropy;
  g.lambda = lambda;
  g.offset = lambda * model.volumes().sum() / std::exp(1.0);
  return g;
}

double FinalPenalty::value(const DiscreteModel& model, const Vec& P) const {
  const Vec& vol = model.volumes();
  require(P.size() == vol.size(), "penalty argument does not match the model");
  double acc = 0;
  for (Eigen::Index j = 0; j < P.size(); ++j) {
    double p = P[j];
    switch (kind) {
      case PenaltyKind::kNone: break;
      case PenaltyKind::kPotential: acc += vol[j] * V[j] * p; break;
      case PenaltyKind::kQuadratic: acc += vol[j] * 0.5 * p * p; break;
      case PenaltyKind::kEntropy:
        if (p < 0) return kInf;
        if (p > 0) acc += vol[j] * p * std::log(p);
        break;
    }
  }
  return lambda * acc + offset;
}

double FinalPenalty::prox(int j, double q, double rho) const {
  switch (kind) {
    case PenaltyKind::kNone: return std::max(0.0, q);
    case PenaltyKind::kPotential: return std::max(0.0, q - lambda * V[j] / rho);
    case PenaltyKind::kQuadratic: return std::max(0.0, rho * q / (rho + lambda));
    case PenaltyKind::kEntropy: {
      if (lambda == 0) return std::max(0.0, q);
      // lambda (log p + 1) + rho (p - q) = 0, solved in u = log p
      double c = rho / lambda;
      double u = q > 1 ? std::log(q) : std::max(-50.0, q - 1);
      for (int it = 0; it < 100; ++it) {
        double e = std::exp(u);
        double h = u + 1 + c * (e - q);
        double dh = 1 + c * e;
        double step = h / dh;
        u -= step;
        if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(u))) break;
      }
      return std::exp(u);
    }
  }
  return q;
}

double FinalPenalty::continuous_value(const GenericMeasure& mu, const std::function<double(const Pt&)>& Vf,
                                      int order) const {
  if (mu.is_vector()) fail(ErrorCode::kTypeMismatch, "penalty needs a scalar measure");
  if (kind == PenaltyKind::kNone) return offset;
  if (kind == PenaltyKind::kPotential) {
    TestFunction f;
    f.value = Vf;
    return lambda * pair(mu, f, order).value + offset;
  }
  if (!mu.atoms().empty()) return kInf;
  double acc = 0;
  for (const auto& p : mu.pieces()) {
    double d = p.density, m = p.region.measure();
    if (kind == PenaltyKind::kQuadratic) acc += 0.5 * d * d * m;
    else if (d < 0) return kInf;
    else if (d > 0) acc += d * std::log(d) * m;
  }
  return lambda * acc + offset;
}

namespace {

void check_density(const DiscreteModel& model, const Vec& P, const char* what) {
  if (P.size() != model.n_density()) fail(ErrorCode::kInvalidArgument, std::string(what) + " does not match the model");
  for (Eigen::Index j = 0; j < P.size(); ++j)
    if (!std::isfinite(P[j]) || P[j] < -kNegDensityTol)
      fail(ErrorCode::kInvalidArgument, std::string(what) + " is not a nonnegative density");
}

}  // namespace

DiscreteProblem assemble(std::shared_ptr<const DiscreteModel> model, const Vec& P0, const Vec& P1, int N) {
  require(model != nullptr, "missing model");
  require(N >= 1, "N must be positive");
  check_density(*model, P0, "initial density");
  check_density(*model, P1, "final density");
  double m0 = model->mass(P0), m1 = model->mass(P1);
  if (std::abs(m0 - m1) > kPinnedMassTol * std::max(1.0, std::max(std::abs(m0), std::abs(m1))))
    fail(ErrorCode::kMassMismatch, "boundary masses differ: " + fmt_double(m0) + " vs " + fmt_double(m1));
  DiscreteProblem pb;
  pb.model = std::move(model);
  pb.N = N;
  pb.P0 = P0.cwiseMax(0.0);
  pb.P1 = P1.cwiseMax(0.0);
  return pb;
}

DiscreteProblem assemble_jko(std::shared_ptr<const DiscreteModel> model, const Vec& P0, FinalPenalty penalty, int N) {
  require(model != nullptr, "missing model");
  require(N >= 1, "N must be positive");
  check_density(*model, P0, "initial density");
  if (penalty.kind == PenaltyKind::kPotential)
    require(penalty.V.size() == model->n_density(), "potential does not match the model");
  DiscreteProblem pb;
  pb.model = std::move(model);
  pb.N = N;
  pb.P0 = P0.cwiseMax(0.0);
  pb.jko = true;
  pb.penalty = std::move(penalty);
  return pb;
}

AffineConstraint continuity_operator(const DiscreteProblem& pb) {
  const int nd = pb.n_density(), nm = pb.n_momentum(), N = pb.N;
  const int np = (N + 1) * nd;
  const Vec& vol = pb.model->volumes();
  const SpMat& G = pb.model->weighted_divergence();
  std::vector<Eigen::Triplet<double>> t;
  int rows = N * nd;
  for (int k = 1; k <= N; ++k) {
    for (int j = 0; j < nd; ++j) {
      int r = (k - 1) * nd + j;
      t.emplace_back(r, k * nd + j, N);
      t.emplace_back(r, (k - 1) * nd + j, -N);
    }
    for (int j = 0; j < nd; ++j)
      for (SpMat::InnerIterator it(G, j); it; ++it)
        t.emplace_back((k - 1) * nd + j, np + (k - 1) * nm + it.col(), it.value() / vol[j]);
  }
  AffineConstraint c;
  int pins = pb.jko ? 1 : 2;
  c.b = Vec::Zero(rows + pins * nd);
  for (int j = 0; j < nd; ++j) {
    t.emplace_back(rows + j, j, 1.0);
    c.b[rows + j] = pb.P0[j];
    if (!pb.jko) {
      t.emplace_back(rows + nd + j, N * nd + j, 1.0);
      c.b[rows + nd + j] = pb.P1[j];
    }
  }
  c.A.resize(rows + pins * nd, np + N * nm);
  c.A.setFromTriplets(t.begin(), t.end());
  return c;
}

SpaceTimePath initial_path(const DiscreteProblem& pb) {
  SpaceTimePath p;
  p.N = pb.N;
  const Vec& end = pb.jko ? pb.P0 : pb.P1;
  for (int k = 0; k <= pb.N; ++k) {
    double s = static_cast<double>(k) / pb.N;
    p.P.push_back((1 - s) * pb.P0 + s * end);
  }
  p.M.assign(pb.N, Vec::Zero(pb.n_momentum()));
  return p;
}

double continuity_residual(const DiscreteProblem& pb, const SpaceTimePath& path) {
  if (path.N != pb.N || !path.shapes_ok(pb.n_density(), pb.n_momentum()))
    fail(ErrorCode::kInvalidArgument, "path shape does not match the problem");
  std::vector<double> r(pb.N, 0.0);
  parallel_for(pb.N, [&](int k) {
    Vec e = (path.P[k + 1] - path.P[k]) * pb.N + pb.model->divergence(path.M[k]);
    r[k] = e.size() ? e.cwiseAbs().maxCoeff() : 0.0;
  });
  return *std::max_element(r.begin(), r.end());
}

double evaluate_cost(const DiscreteProblem& pb, const SpaceTimePath& path) {
  if (path.N != pb.N || !path.shapes_ok(pb.n_density(), pb.n_momentum()))
    fail(ErrorCode::kInvalidArgument, "path shape does not match the problem");
  if (!path.nonnegative(kNegDensityTol)) return kInf;
  if (continuity_residual(pb, path) > kContinuityTol) return kInf;
  if ((path.P[0] - pb.P0).cwiseAbs().maxCoeff() > kContinuityTol) return kInf;
  if (!pb.jko && (path.P[pb.N] - pb.P1).cwiseAbs().maxCoeff() > kContinuityTol) return kInf;
  std::vector<double> c(pb.N, 0.0);
  parallel_for(pb.N, [&](int k) {
    Vec Q = (0.5 * (path.P[k] + path.P[k + 1])).cwiseMax(0.0);
    c[k] = pb.model->action(Q, path.M[k]);
  });
  double acc = 0;
  for (double v : c) acc += pb.tau() * v;
  if (pb.jko) acc += pb.penalty.value(*pb.model, path.P[pb.N].cwiseMax(0.0));
  return acc;
}

SpaceTimeMeasure spacetime_reconstruct(const DiscreteModel& model, const SpaceTimePath& path, Recon which) {
  if (!path.shapes_ok(model.n_density(), model.n_momentum()))
    fail(ErrorCode::kInvalidArgument, "path shape does not match the model");
  SpaceTimeMeasure out;
  out.vector = which == Recon::kY;
  const double tau = path.tau();
  for (int k = 1; k <= path.N; ++k) {
    SpaceTimeSlab s{(k - 1) * tau, k * tau, {}, {}, which != Recon::kCE};
    if (which == Recon::kCE) {
      s.start = model.reconstruct_density(Recon::kCE, path.P[k - 1]);
      s.end = model.reconstruct_density(Recon::kCE, path.P[k]);
    } else if (which == Recon::kA) {
      s.start = s.end = model.reconstruct_density(Recon::kA, 0.5 * (path.P[k - 1] + path.P[k]));
    } else {
      s.start = s.end = model.reconstruct_momentum(path.M[k - 1]);
    }
    out.slabs.push_back(std::move(s));
  }
  return out;
}

double spacetime_pair(const SpaceTimeMeasure& mu, const SpaceTimeFunction& f, int time_order, int space_order) {
  std::vector<double> x, w;
  gauss_legendre01(time_order, x, w);
  double acc = 0;
  for (const auto& s : mu.slabs) {
    const double len = s.t1 - s.t0;
    for (size_t q = 0; q < x.size(); ++q) {
      double t = s.t0 + x[q] * len;
      TestFunction g;
      g.vector = mu.vector;
      if (mu.vector)
        g.vvalue = [&f, t](const Pt& p) { return f.vvalue(t, p); };
      else
        g.value = [&f, t](const Pt& p) { return f.value(t, p); };
      double a = pair(s.start, g, space_order).value;
      double b = s.constant ? a : pair(s.end, g, space_order).value;
      acc += w[q] * len * ((1 - x[q]) * a + x[q] * b);
    }
  }
  return acc;
}

}  // namespace otbb
