/*************************************************************************************************
 * ADMM solver for the discrete transport problem
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

#include "otbb/solver.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/CholmodSupport>
#include <Eigen/SparseCholesky>
#include <chrono>
#include <cmath>
#include <deque>
#include <fstream>

#include "json.hpp"
#include "otbb/prox.hpp"

namespace otbb {

using ColSpMat = Eigen::SparseMatrix<double>;

const char* linear_solver_name(LinearSolverKind k) { return k == LinearSolverKind::kDirect ? "direct" : "cg"; }

LinearSolverKind linear_solver_from_name(const std::string& s) {
  if (s == "direct" || s == "ldlt") return LinearSolverKind::kDirect;
  if (s == "cg") return LinearSolverKind::kCG;
  fail(ErrorCode::kInvalidArgument, "unknown linear solver '" + s + "'");
}

void SolverOptions::validate() const {
  require(tol > 0 && tol < 1, "tolerance must be in (0,1)");
  require(max_iter >= 1, "max_iter must be positive");
  require(r > 0 && std::isfinite(r), "penalty parameter must be positive");
  require(alpha >= 1 && alpha < 2, "over-relaxation must be in [1,2)");
}

std::string SolveStats::to_json() const {
  nlohmann::json j;
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return fmt_double(v);
  };
  j["iterations"] = iterations;
  j["primal_residual"] = num(primal);
  j["dual_residual"] = num(dual);
  j["objective"] = num(objective);
  j["continuity_residual"] = num(continuity);
  j["consensus_residual"] = num(consensus);
  j["wall_time"] = wall_time;
  j["r_final"] = r_final;
  j["converged"] = converged;
  return j.dump();
}

namespace {

void check_connected(const DiscreteModel& model) {
  const int nd = model.n_density();
  const SpMat& G = model.weighted_divergence();
  ColSpMat Gc = G;
  // Two density nodes are adjacent when a momentum unknown touches both.
  std::vector<std::vector<int>> adj(nd);
  for (int c = 0; c < Gc.outerSize(); ++c) {
    std::vector<int> nodes;
    for (ColSpMat::InnerIterator it(Gc, c); it; ++it)
      if (it.value() != 0) nodes.push_back(static_cast<int>(it.row()));
    for (size_t i = 1; i < nodes.size(); ++i) {
      adj[nodes[0]].push_back(nodes[i]);
      adj[nodes[i]].push_back(nodes[0]);
    }
  }
  std::vector<char> seen(nd, 0);
  std::deque<int> q{0};
  seen[0] = 1;
  int count = 1;
  while (!q.empty()) {
    int a = q.front();
    q.pop_front();
    for (int b : adj[a])
      if (!seen[b]) {
        seen[b] = 1;
        ++count;
        q.push_back(b);
      }
  }
  if (count != nd) fail(ErrorCode::kSingular, "singular normal matrix: the mesh is disconnected");
}

}  // namespace

SplittingLayout::SplittingLayout(const DiscreteProblem& pb) {
  const DiscreteModel& model = *pb.model;
  nd_ = model.n_density();
  nm_ = model.n_momentum();
  const auto& els = model.elements();
  ne_ = static_cast<int>(els.size());
  N_ = pb.N;
  jko_ = pb.jko;
  nfree_ = jko_ ? N_ : N_ - 1;
  eoff_.assign(1, 0);
  for (const KineticElement& el : els) {
    if (model.two_copy()) {
      nodes_.insert(nodes_.end(), {el.a, el.b});
      coefs_.insert(coefs_.end(), {1.0, 1.0});
    } else {
      for (const auto& [j, c] : el.s_coef) {
        nodes_.push_back(j);
        coefs_.push_back(c);
      }
    }
    eoff_.push_back(2 * static_cast<int>(nodes_.size()));
  }
  step_copies_ = eoff_.back();
  oM_ = nfree_ * nd_;
  oS_ = oM_ + N_ * nm_;
  n_ = oS_ + N_ * step_copies_;
  check_connected(model);

  const Vec& vol = model.volumes();
  const SpMat& G = model.weighted_divergence();
  const double tau = pb.tau();
  auto pinned_value = [&](int k, int j) { return (k == 0 ? pb.P0 : pb.P1)[j]; };
  std::vector<Eigen::Triplet<double>> t;
  std::vector<double> rhs;
  int row = 0;
  auto add_p = [&](int r, int k, int j, double coef) {
    int id = p_index(k, j);
    if (id >= 0) t.emplace_back(r, id, coef);
    else rhs[r] -= coef * pinned_value(k, j);
  };
  for (int k = 1; k <= N_; ++k)
    for (int j = 0; j < nd_; ++j) {
      if (!jko_ && k == N_ && j == nd_ - 1) continue;
      rhs.push_back(0);
      add_p(row, k, j, vol[j]);
      add_p(row, k - 1, j, -vol[j]);
      for (SpMat::InnerIterator it(G, j); it; ++it) t.emplace_back(row, m_index(k, static_cast<int>(it.col())), tau * it.value());
      ++row;
    }
  ncont_ = row;
  src_.assign(n_ - oS_, -1);
  pinned_.assign(n_ - oS_, 0.0);
  D_.resize(n_);
  for (int k = 1; k <= nfree_; ++k) D_.segment((k - 1) * nd_, nd_) = tau * vol;
  const Vec& mw = model.momentum_weights();
  for (int k = 1; k <= N_; ++k) {
    D_.segment(m_index(k, 0), nm_) = tau * mw;
    for (int e = 0; e < ne_; ++e) {
      const int nl = n_local(e);
      // Copy weights make the metric along the mean direction equal tau * metric.
      double a2 = 0.5;
      if (!model.two_copy()) {
        a2 = 0;
        for (int l = 0; l < nl; ++l) a2 += 0.5 * local_coef(e, l) * local_coef(e, l);
      }
      for (int side = 0; side < 2; ++side)
        for (int l = 0; l < nl; ++l) {
          const int c = copy_index(k, e, side * nl + l), j = local_node(e, l), ks = k - 1 + side;
          D_[c] = tau * els[e].metric * a2;
          rhs.push_back(0);
          t.emplace_back(row, c, 1.0);
          add_p(row, ks, j, -1.0);
          src_[c - oS_] = p_index(ks, j);
          if (src_[c - oS_] < 0) pinned_[c - oS_] = pinned_value(ks, j);
          ++row;
        }
    }
  }
  E_.resize(row, n_);
  E_.setFromTriplets(t.begin(), t.end());
  rhs_ = Eigen::Map<Vec>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
}

int SplittingLayout::p_index(int k, int j) const {
  if (k == 0 || k > nfree_) return -1;
  return (k - 1) * nd_ + j;
}

Vec SplittingLayout::pack(const DiscreteProblem& pb, const SpaceTimePath& path) const {
  require(pb.N == N_ && path.N == N_ && path.shapes_ok(nd_, nm_), "path shape does not match the problem");
  Vec v = Vec::Zero(n_);
  for (int k = 1; k <= nfree_; ++k) v.segment((k - 1) * nd_, nd_) = path.P[k];
  for (int k = 1; k <= N_; ++k) {
    v.segment(m_index(k, 0), nm_) = path.M[k - 1];
    for (int e = 0; e < ne_; ++e)
      for (int side = 0; side < 2; ++side)
        for (int l = 0; l < n_local(e); ++l) v[copy_index(k, e, side * n_local(e) + l)] = path.P[k - 1 + side][local_node(e, l)];
  }
  return v;
}

SpaceTimePath SplittingLayout::unpack(const DiscreteProblem& pb, const Vec& v) const {
  require(v.size() == n_, "vector does not match the splitting layout");
  SpaceTimePath p;
  p.N = N_;
  p.P.push_back(pb.P0);
  for (int k = 1; k <= nfree_; ++k) p.P.push_back(v.segment((k - 1) * nd_, nd_));
  if (!jko_) p.P.push_back(pb.P1);
  for (int k = 1; k <= N_; ++k) p.M.push_back(v.segment(m_index(k, 0), nm_));
  return p;
}

struct AffineProjector::Impl {
  const SplittingLayout* layout;
  LinearSolverKind kind;
  SpMat Ec;   // continuity rows over the P and M entries
  Vec bc;
  Vec Hinv;   // inverse Hessian over the P and M entries after eliminating the copies
  SpMat HEt;  // H^-1 Ec^T
  ColSpMat Nmat;
  Eigen::CholmodSupernodalLLT<ColSpMat> ldlt;
  Eigen::ConjugateGradient<ColSpMat, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
  mutable Vec guess;

  Vec solve(const Vec& rhs) const {
    if (kind == LinearSolverKind::kDirect) return ldlt.solve(rhs);
    Vec y = cg.solveWithGuess(rhs, guess);
    guess = y;
    return y;
  }
};

AffineProjector::AffineProjector(const SplittingLayout& layout, LinearSolverKind kind) : impl_(new Impl) {
  Impl& I = *impl_;
  I.layout = &layout;
  I.kind = kind;
  const int nv = layout.copy_offset(), n = layout.size();
  const Vec& D = layout.metric();
  Vec H = D.head(nv);
  for (int i = nv; i < n; ++i)
    if (int s = layout.copy_source(i - nv); s >= 0) H[s] += D[i];
  I.Hinv = H.cwiseInverse();
  I.Ec = layout.E().topRows(layout.n_continuity_rows()).leftCols(nv);
  I.bc = layout.rhs().head(layout.n_continuity_rows());
  I.HEt = I.Hinv.asDiagonal() * SpMat(I.Ec.transpose());
  I.Nmat = ColSpMat(ColSpMat(I.Ec) * I.HEt);
  if (kind == LinearSolverKind::kDirect) {
    I.ldlt.compute(I.Nmat);
    if (I.ldlt.info() != Eigen::Success) fail(ErrorCode::kSingular, "normal matrix factorization failed");
    // A semidefinite matrix can slip through the factorization with a tiny pivot; a probe solve exposes it.
    if (I.Nmat.rows() > 0) {
      Vec probe = Vec::Ones(I.Nmat.rows());
      Vec y = I.ldlt.solve(probe);
      if (!y.allFinite() || (I.Nmat * y - probe).cwiseAbs().maxCoeff() > 1e-6)
        fail(ErrorCode::kSingular, "singular normal matrix (over-pinned problem or disconnected mesh)");
    }
  } else {
    I.cg.setTolerance(1e-13);
    I.cg.setMaxIterations(std::max<Eigen::Index>(1000, 4 * I.Nmat.rows()));
    I.cg.compute(I.Nmat);
    if (I.cg.info() != Eigen::Success) fail(ErrorCode::kSingular, "normal matrix setup failed");
    I.guess = Vec::Zero(I.Nmat.rows());
  }
}

AffineProjector::~AffineProjector() = default;

Vec AffineProjector::project_impl(const Vec& w, bool homogeneous, Vec* lambda) const {
  const Impl& I = *impl_;
  const SplittingLayout& L = *I.layout;
  const int nv = L.copy_offset(), n = L.size();
  const Vec& D = L.metric();
  Vec g = D.head(nv).cwiseProduct(w.head(nv));
  for (int i = nv; i < n; ++i)
    if (int s = L.copy_source(i - nv); s >= 0) g[s] += D[i] * w[i];
  Vec y0 = I.Hinv.cwiseProduct(g);
  Vec b = I.Ec * y0;
  if (!homogeneous) b -= I.bc;
  Vec lam = I.solve(b);
  Vec y = y0 - I.HEt * lam;
  Vec res = I.Ec * y;
  if (!homogeneous) res -= I.bc;
  if (res.size() > 0 && res.cwiseAbs().maxCoeff() > 1e-12 * (1 + w.cwiseAbs().maxCoeff())) {
    Vec corr = I.solve(res);
    y -= I.HEt * corr;
    lam += corr;
  }
  Vec z(n);
  z.head(nv) = y;
  for (int i = nv; i < n; ++i) {
    int s = L.copy_source(i - nv);
    z[i] = s >= 0 ? y[s] : (homogeneous ? 0.0 : L.copy_pinned(i - nv));
  }
  if (lambda) *lambda = lam;
  return z;
}

Vec AffineProjector::project(const Vec& w, Vec* lambda) const { return project_impl(w, false, lambda); }

Vec AffineProjector::continuity_multipliers(const Vec& w) const {
  Vec lam;
  project_impl(w, true, &lam);
  return lam;
}

double AffineProjector::residual(const Vec& v) const {
  const SplittingLayout& L = *impl_->layout;
  Vec r = L.E() * v - L.rhs();
  return r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
}

Vec project_affine(const DiscreteProblem& pb, const Vec& point, LinearSolverKind kind) {
  SplittingLayout L(pb);
  require(point.size() == L.size(), "point does not match the splitting layout");
  AffineProjector P(L, kind);
  return P.project(point);
}

namespace {

double dnorm(const Vec& v, const Vec& D) { return std::sqrt(v.cwiseProduct(v).dot(D)); }

// Mean of element e at step k read from the copies.
double copy_mean(const DiscreteModel& model, const SplittingLayout& L, const Vec& x, int k, int e) {
  const int nl = L.n_local(e);
  if (model.two_copy()) {
    double a = 0.5 * (x[L.copy_index(k, e, 0)] + x[L.copy_index(k, e, 2)]);
    double b = 0.5 * (x[L.copy_index(k, e, 1)] + x[L.copy_index(k, e, 3)]);
    return mean_value(model.mean(), std::max(a, 0.0), std::max(b, 0.0));
  }
  double s = 0;
  for (int side = 0; side < 2; ++side)
    for (int l = 0; l < nl; ++l) s += 0.5 * L.local_coef(e, l) * x[L.copy_index(k, e, side * nl + l)];
  return s;
}

// Kinetic value of the splitting vector (copies and momenta) plus the final penalty.
double split_objective(const DiscreteProblem& pb, const SplittingLayout& L, const Vec& x) {
  const DiscreteModel& model = *pb.model;
  const auto& els = model.elements();
  double acc = 0;
  for (int k = 1; k <= pb.N; ++k)
    for (size_t e = 0; e < els.size(); ++e) {
      const KineticElement& el = els[e];
      double m2 = 0;
      for (int c = 0; c < el.m_dim; ++c) m2 += std::pow(x[L.m_index(k, el.m_offset + c)], 2);
      if (m2 == 0) continue;
      double s = copy_mean(model, L, x, k, static_cast<int>(e));
      if (s <= 0) return kInf;
      acc += pb.tau() * el.weight * m2 / (2 * s);
    }
  if (pb.jko) {
    Vec PN(pb.n_density());
    for (int j = 0; j < pb.n_density(); ++j) PN[j] = std::max(0.0, x[L.p_index(pb.N, j)]);
    acc += pb.penalty.value(model, PN);
  }
  return acc;
}

// The kinetic term sees the copies only through their mean, so its prox moves the copies along
// the mean direction and reduces to the scalar (or two-mean) kinetic prox.
void prox_step(const DiscreteProblem& pb, const SplittingLayout& L, const Vec& v, double r, Vec& x) {
  const DiscreteModel& model = *pb.model;
  const int nd = pb.n_density();
  const double tau = pb.tau();
  x = v;
  for (int k = 1; k <= L.n_free_steps(); ++k) {
    bool final = pb.jko && k == pb.N;
    for (int j = 0; j < nd; ++j) {
      int id = L.p_index(k, j);
      x[id] = final ? pb.penalty.prox(j, v[id], r * tau) : std::max(0.0, v[id]);
    }
  }
  const auto& els = model.elements();
  const double gamma = 1 / r;
  const bool two = model.two_copy();
  parallel_for(pb.N, [&](int k0) {
    const int k = k0 + 1;
    double m0[3];
    for (size_t e = 0; e < els.size(); ++e) {
      const KineticElement& el = els[e];
      const double w = el.weight / el.metric;
      const int ie = static_cast<int>(e), nl = L.n_local(ie);
      for (int c = 0; c < el.m_dim; ++c) m0[c] = v[L.m_index(k, el.m_offset + c)];
      if (!two) {
        double s0 = 0, a2 = 0;
        for (int l = 0; l < nl; ++l) {
          const double h = 0.5 * L.local_coef(ie, l);
          s0 += h * (v[L.copy_index(k, ie, l)] + v[L.copy_index(k, ie, nl + l)]);
          a2 += 2 * h * h;
        }
        KineticProxResult p = prox_kinetic(s0, m0, el.m_dim, gamma, w);
        const double step = (p.s - s0) / a2;
        for (int l = 0; l < nl; ++l) {
          const double h = 0.5 * L.local_coef(ie, l);
          x[L.copy_index(k, ie, l)] += step * h;
          x[L.copy_index(k, ie, nl + l)] += step * h;
        }
        for (int c = 0; c < el.m_dim; ++c) x[L.m_index(k, el.m_offset + c)] = p.m[c];
      } else {
        const int i0 = L.copy_index(k, ie, 0);
        const double a0 = 0.5 * (v[i0] + v[i0 + 2]), b0 = 0.5 * (v[i0 + 1] + v[i0 + 3]);
        MeanProxResult p = prox_mean(model.mean(), a0, b0, m0[0], gamma, w);
        x[i0] += p.a - a0;
        x[i0 + 2] += p.a - a0;
        x[i0 + 1] += p.b - b0;
        x[i0 + 3] += p.b - b0;
        x[L.m_index(k, el.m_offset)] = p.m;
      }
    }
  });
}

double element_mean(const DiscreteModel& model, const KineticElement& el, const Vec& Q) {
  if (model.two_copy()) return mean_value(model.mean(), Q[el.a], Q[el.b]);
  double th = 0;
  for (const auto& [j, c] : el.s_coef) th += c * Q[j];
  return th;
}

// Restores an exactly feasible, nonnegative path near the prox iterate z. Densities are clamped and momenta on
// massless elements dropped; the continuity rows are then restored by a projection whose metric
// scales each correction with the local mass (density for P, element mean for M), so empty
// regions stay empty. Repeats while the projection leaves negative densities.
SpaceTimePath polish(const DiscreteProblem& pb, const SplittingLayout& L, const Vec& z) {
  const DiscreteModel& model = *pb.model;
  const int N = pb.N;
  const int np = L.n_free_steps() * pb.n_density();
  const int nv = L.copy_offset();  // P and M entries only
  const ColSpMat A = L.E().topRows(L.n_continuity_rows()).leftCols(nv);
  const SpMat At = A.transpose();
  const Vec bc = L.rhs().head(L.n_continuity_rows());
  const Vec& D = L.metric();
  auto unpack = [&](const Vec& y) {
    Vec full = z;
    full.head(nv) = y;
    return L.unpack(pb, full);
  };
  Vec y = z.head(nv);
  Eigen::CholmodSupernodalLLT<ColSpMat> chol;
  bool analyzed = false;
  for (int round = 0; round < 20; ++round) {
    y.head(np) = y.head(np).cwiseMax(0.0);
    const double pmax = np ? y.head(np).maxCoeff() : 0.0;
    SpaceTimePath cur = unpack(y);
    Vec w = Vec::Zero(nv);
    for (int i = 0; i < np; ++i)
      if (y[i] > 1e-12 * pmax) w[i] = y[i] / (pmax * D[i]);
    Vec theta = Vec::Zero(nv);
    double thmax = 0;
    for (int k = 1; k <= N; ++k) {
      Vec Q = (0.5 * (cur.P[k - 1] + cur.P[k])).cwiseMax(0.0);
      for (const auto& el : model.elements()) {
        double th = element_mean(model, el, Q);
        thmax = std::max(thmax, th);
        for (int c = 0; c < el.m_dim; ++c) theta[L.m_index(k, el.m_offset + c)] = th;
      }
    }
    for (int i = L.m_offset(); i < nv; ++i) {
      if (theta[i] > 1e-12 * thmax) w[i] = theta[i] / (thmax * D[i]);
      else y[i] = 0;
    }
    Vec b = A * y - bc;
    // Rows without movable entries decouple.
    Vec rowfree = A.cwiseAbs() * w;
    for (int r = 0; r < b.size(); ++r)
      if (rowfree[r] == 0) b[r] = 0;
    if (b.size() == 0 || b.cwiseAbs().maxCoeff() <= 1e-14 * (1 + y.cwiseAbs().maxCoeff())) break;
    SpMat AWT = w.asDiagonal() * At;
    ColSpMat Nm = ColSpMat(A * AWT);
    const double reg = 1e-14 * (Nm.nonZeros() ? Nm.coeffs().cwiseAbs().maxCoeff() : 1.0);
    ColSpMat Nr = Nm;
    for (int i = 0; i < Nr.rows(); ++i) Nr.coeffRef(i, i) += reg;
    if (!analyzed) {
      chol.analyzePattern(Nr);
      analyzed = true;
    }
    chol.factorize(Nr);
    if (chol.info() != Eigen::Success) break;
    // Iterative refinement of the regularized solve on the consistent system.
    Vec lam = Vec::Zero(b.size()), res = b;
    const double bscale = 1e-15 * (1 + b.cwiseAbs().maxCoeff());
    for (int ref = 0; ref < 50 && res.cwiseAbs().maxCoeff() > bscale; ++ref) {
      lam += chol.solve(res);
      res = b - Nm * lam;
    }
    y -= AWT * lam;
    if (np == 0 || y.head(np).minCoeff() >= 0) break;
  }
  SpaceTimePath p = unpack(y);
  for (int k = 1; k <= L.n_free_steps(); ++k) p.P[k] = p.P[k].cwiseMax(0.0);
  return p;
}

}  // namespace

SolveResult solve(const DiscreteProblem& pb, const SolverOptions& opts) {
  opts.validate();
  auto t_start = std::chrono::steady_clock::now();
  SplittingLayout L(pb);
  AffineProjector proj(L, opts.linear);
  const Vec& D = L.metric();
  const int n = L.size();

  std::ofstream trace;
  if (!opts.trace_csv.empty()) {
    trace.open(opts.trace_csv, std::ios::binary);
    if (!trace) fail(ErrorCode::kIo, "cannot open trace file " + opts.trace_csv);
    trace << "iter,primal,dual,objective\n";
  }

  Vec z = proj.project(L.pack(pb, initial_path(pb)));
  Vec u = Vec::Zero(n), x(n), xh(n), zold(n);
  double r = opts.r, tol = opts.tol;
  const double alpha = opts.alpha;
  SolveResult out;
  SolveStats& st = out.stats;
  bool met = false, polished = false;
  int tightenings = 0;
  double rp = kInf, rd = kInf;
  int it = 0;
  while (it < opts.max_iter) {
    ++it;
    prox_step(pb, L, z - u, r, x);
    xh = alpha * x + (1 - alpha) * z;
    zold = z;
    z = proj.project(xh + u);
    u += xh - z;

    double nx = dnorm(x, D), nz = dnorm(z, D), nu = r * dnorm(u, D);
    rp = dnorm(x - z, D);
    rd = r * dnorm(z - zold, D);
    double eps_p = tol * std::max({nx, nz, 1e-12});
    double eps_d = tol * std::max(nu, 1e-12);
    if (trace) {
      trace << it << ',' << fmt_double(rp / std::max({nx, nz, 1e-300})) << ','
            << fmt_double(rd / std::max(nu, 1e-300)) << ',' << fmt_double(split_objective(pb, L, x)) << '\n';
    }
    if (rp <= eps_p && rd <= eps_d) {
      if (!met) {
        met = true;
        st.converged = true;
      }
      out.path = polish(pb, L, x);
      polished = true;
      // A loose iterate can polish into a feasible but far costlier path; tighten and retry.
      const double cost = evaluate_cost(pb, out.path), ref = split_objective(pb, L, x);
      if ((std::isfinite(cost) && cost <= 1.05 * std::max(ref, 0.0) + 1e-8) || tightenings >= 4) break;
      polished = false;
      tol *= 0.1;
      ++tightenings;
      continue;
    }
    if (opts.adapt && it % 25 == 0) {
      double a = rp / eps_p, b = rd / eps_d;
      if (a > 10 * b && r < 1e8) {
        r *= 2;
        u /= 2;
      } else if (b > 10 * a && r > 1e-8) {
        r /= 2;
        u *= 2;
      }
    }
  }

  if (!polished) out.path = polish(pb, L, x);
  st.iterations = it;
  st.primal = rp / std::max({dnorm(x, D), dnorm(z, D), 1e-300});
  st.dual = rd / std::max(r * dnorm(u, D), 1e-300);
  st.objective = evaluate_cost(pb, out.path);
  st.continuity = continuity_residual(pb, out.path);
  const int oS = L.copy_offset();
  st.consensus = n > oS ? (x.tail(n - oS) - z.tail(n - oS)).cwiseAbs().maxCoeff() : 0.0;
  st.r_final = r;

  Vec mu = proj.continuity_multipliers(u);
  const int nd = pb.n_density();
  out.multipliers.assign(pb.N, Vec::Zero(nd));
  for (int row = 0; row < L.n_continuity_rows(); ++row) out.multipliers[row / nd][row % nd] = -r * mu[row];
  st.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return out;
}

SolveResult solve_jko(std::shared_ptr<const DiscreteModel> model, const Vec& P0, FinalPenalty penalty, int N,
                      const SolverOptions& opts) {
  return solve(assemble_jko(std::move(model), P0, std::move(penalty), N), opts);
}

KKTReport kkt_report(const DiscreteProblem& pb, const SpaceTimePath& path, const std::vector<Vec>& multipliers,
                     double consensus) {
  const DiscreteModel& model = *pb.model;
  const int N = pb.N, nd = pb.n_density();
  const double tau = pb.tau();
  KKTReport rep;
  rep.continuity = continuity_residual(pb, path);
  rep.consensus = consensus;
  rep.primal_value = evaluate_cost(pb, path);
  rep.feasible = std::isfinite(rep.primal_value);
  std::vector<Vec> phi = multipliers;
  if (phi.empty()) phi.assign(N, Vec::Zero(nd));
  require(static_cast<int>(phi.size()) == N, "expected one multiplier vector per time step");
  for (const auto& p : phi) require(p.size() == nd, "multiplier does not match the model");

  const Vec& vol = model.volumes();
  std::vector<Vec> grad(N), a(N);
  for (int k = 0; k < N; ++k) {
    grad[k] = model.gradient(phi[k]);
    a[k] = model.conjugate_coefficients(grad[k]);
  }
  double dual = (vol.cwiseProduct(pb.P0)).dot(phi[0] - 0.5 * tau * a[0]);
  Vec cN = phi[N - 1] + 0.5 * tau * a[N - 1];
  double infeas = 0;
  if (!pb.jko) {
    dual -= vol.cwiseProduct(pb.P1).dot(cN);
  } else {
    const FinalPenalty& g = pb.penalty;
    for (int j = 0; j < nd; ++j) {
      double c = cN[j], t = 0;
      switch (g.kind) {
        case PenaltyKind::kNone: infeas = std::max(infeas, c); break;
        case PenaltyKind::kPotential: infeas = std::max(infeas, c - g.lambda * g.V[j]); break;
        case PenaltyKind::kQuadratic:
          if (g.lambda > 0) t = -std::pow(std::max(c, 0.0), 2) / (2 * g.lambda);
          else infeas = std::max(infeas, c);
          break;
        case PenaltyKind::kEntropy:
          if (g.lambda > 0) t = -g.lambda * std::exp(c / g.lambda - 1);
          else infeas = std::max(infeas, c);
          break;
      }
      dual += vol[j] * t;
    }
    dual += g.offset;
  }
  for (int k = 1; k < N; ++k) {
    Vec c = (phi[k] - phi[k - 1]) - 0.5 * tau * (a[k - 1] + a[k]);
    infeas = std::max(infeas, -c.minCoeff());
  }
  rep.dual_value = dual;
  rep.dual_infeasibility = std::max(0.0, infeas);
  rep.gap = rep.primal_value - dual;

  double mmax = 0, st = 0;
  for (int k = 1; k <= N; ++k) {
    Vec Q = (0.5 * (path.P[k - 1] + path.P[k])).cwiseMax(0.0);
    const Vec& M = path.M[k - 1];
    mmax = std::max(mmax, M.size() ? M.cwiseAbs().maxCoeff() : 0.0);
    for (const auto& el : model.elements()) {
      double th;
      if (model.two_copy()) {
        th = mean_value(model.mean(), Q[el.a], Q[el.b]);
      } else {
        th = 0;
        for (const auto& [j, c] : el.s_coef) th += c * Q[j];
        if (model.kind() == ModelKind::kFV) th *= 0.5;
      }
      for (int c = 0; c < el.m_dim; ++c) {
        int i = el.m_offset + c;
        st = std::max(st, std::abs(M[i] + th * grad[k - 1][i]));
      }
    }
  }
  rep.stationarity = st / (1 + mmax);
  return rep;
}

}  // namespace otbb
