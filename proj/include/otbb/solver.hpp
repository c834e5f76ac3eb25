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

#ifndef OTBB_SOLVER_HPP
#define OTBB_SOLVER_HPP

#include <memory>
#include <string>
#include <vector>

#include "otbb/timedisc.hpp"

namespace otbb {

enum class LinearSolverKind { kDirect, kCG };

const char* linear_solver_name(LinearSolverKind k);
LinearSolverKind linear_solver_from_name(const std::string& s);

struct SolverOptions {
  double tol = 1e-6;
  int max_iter = 20000;
  double r = 1.0;
  bool adapt = true;
  double alpha = 1.8;
  LinearSolverKind linear = LinearSolverKind::kDirect;
  std::string trace_csv;  // per-iteration residual trace, empty to disable

  void validate() const;
};

struct SolveStats {
  int iterations = 0;
  double primal = 0;
  double dual = 0;
  double objective = kInf;
  double continuity = 0;
  double consensus = 0;
  double wall_time = 0;
  double r_final = 0;
  bool converged = false;

  std::string to_json() const;
};

// Splitting variables: free densities, momenta and per-element copies of the node densities
// feeding the kinetic terms.
//   v = [P_1..P_{N-1} (or P_1..P_N in JKO mode), M_1..M_N, copies per (step, element)]
// Element e at step k holds 2 n_e copies ordered (side, local node), side 0 reading P_{k-1} and
// side 1 reading P_k. The affine set collects continuity rows (scaled by the node volumes)
// followed by the copy relations. In pinned mode one continuity row is redundant and dropped.
class SplittingLayout {
 public:
  explicit SplittingLayout(const DiscreteProblem& pb);

  int size() const { return n_; }
  int n_free_steps() const { return nfree_; }
  int p_index(int k, int j) const;  // -1 for pinned entries
  int m_index(int k, int i) const { return oM_ + (k - 1) * nm_ + i; }
  int copy_index(int k, int e, int c) const { return oS_ + (k - 1) * step_copies_ + eoff_[e] + c; }
  int n_local(int e) const { return (eoff_[e + 1] - eoff_[e]) / 2; }
  int local_node(int e, int l) const { return nodes_[eoff_[e] / 2 + l]; }
  double local_coef(int e, int l) const { return coefs_[eoff_[e] / 2 + l]; }
  int m_offset() const { return oM_; }
  int copy_offset() const { return oS_; }
  int n_continuity_rows() const { return ncont_; }
  // Source of copy i (offset by copy_offset()): a P/M index, or -1 with a pinned value.
  int copy_source(int i) const { return src_[i]; }
  double copy_pinned(int i) const { return pinned_[i]; }

  const SpMat& E() const { return E_; }
  const Vec& rhs() const { return rhs_; }
  const Vec& metric() const { return D_; }

  Vec pack(const DiscreteProblem& pb, const SpaceTimePath& path) const;
  SpaceTimePath unpack(const DiscreteProblem& pb, const Vec& v) const;

 private:
  int nd_, nm_, ne_, N_, nfree_, step_copies_, oM_, oS_, n_, ncont_;
  bool jko_;
  std::vector<int> eoff_, nodes_, src_;
  std::vector<double> coefs_, pinned_;
  SpMat E_;
  Vec rhs_, D_;
};

// Projection onto {E v = rhs} in the metric diag(D). The copy relations are eliminated, which
// leaves a diagonal Hessian on the densities; only the continuity normal matrix is factorized.
class AffineProjector {
 public:
  AffineProjector(const SplittingLayout& layout, LinearSolverKind kind);
  ~AffineProjector();
  AffineProjector(const AffineProjector&) = delete;
  AffineProjector& operator=(const AffineProjector&) = delete;

  Vec project(const Vec& w, Vec* lambda = nullptr) const;
  // Continuity multipliers of the projection of w onto {E v = 0}.
  Vec continuity_multipliers(const Vec& w) const;
  double residual(const Vec& v) const;

 private:
  Vec project_impl(const Vec& w, bool homogeneous, Vec* lambda) const;
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

Vec project_affine(const DiscreteProblem& pb, const Vec& point, LinearSolverKind kind = LinearSolverKind::kDirect);

struct SolveResult {
  SpaceTimePath path;
  SolveStats stats;
  std::vector<Vec> multipliers;  // continuity multipliers phi_1..phi_N
};

SolveResult solve(const DiscreteProblem& pb, const SolverOptions& opts = {});
SolveResult solve_jko(std::shared_ptr<const DiscreteModel> model, const Vec& P0, FinalPenalty penalty, int N,
                      const SolverOptions& opts = {});

struct KKTReport {
  double continuity = 0;
  double consensus = 0;
  double stationarity = 0;
  double primal_value = kInf;
  double dual_value = -kInf;
  double gap = kInf;
  double dual_infeasibility = 0;
  bool feasible = false;
};

// Lower bound from the multipliers through the conjugate action; consensus is passed through.
KKTReport kkt_report(const DiscreteProblem& pb, const SpaceTimePath& path, const std::vector<Vec>& multipliers,
                     double consensus = 0);

}  // namespace otbb

#endif
