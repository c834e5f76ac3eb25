/*************************************************************************************************
 * Finite-volume meshes and operators
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

#ifndef OTBB_FVMODEL_HPP
#define OTBB_FVMODEL_HPP

#include <array>
#include <string>
#include <vector>

#include "otbb/measures.hpp"
#include "otbb/path.hpp"

namespace otbb {

enum class MeanKind { kArithmetic, kGeometric, kHarmonic, kLogarithmic };

const char* mean_name(MeanKind k);
MeanKind mean_from_name(const std::string& s);

// Symmetric mean with theta(0,b) = 0 for the non-arithmetic kinds.
double mean_value(MeanKind k, double a, double b);
// Partial derivatives; finite for a, b > 0.
void mean_gradient(MeanKind k, double a, double b, double& da, double& db);

struct FVCell {
  Pt center;
  double volume;
  Region geom;
};

// Interior face between cells K < L (normal oriented K -> L).
struct FVFace {
  int K, L;
  double area;
  double dist;
  Pt normal;
  Region geom;
};

struct FVBoundaryFace {
  int K;
  double area;
  Pt normal;
  Region geom;
};

struct FVMesh {
  int dim = 1;
  std::vector<FVCell> cells;
  std::vector<FVFace> faces;
  std::vector<FVBoundaryFace> boundary;
  std::vector<std::vector<int>> cell_faces;  // interior faces touching each cell
  double sigma = 0;                          // max cell diameter
  double domain_volume = 0;
  // Grid metadata (valid when `grid` is true).
  bool grid = false;
  Pt lo = Pt::Zero(), hi = Pt::Zero();
  std::array<int, 3> res{1, 1, 1};

  int n_cells() const { return static_cast<int>(cells.size()); }
  int n_faces() const { return static_cast<int>(faces.size()); }
  // Cell containing x; a point on a shared face goes to the smaller cell index. -1 if outside.
  int locate(const Pt& x) const;
  Vec volumes() const;
  // Admissibility, partition and orientation checks; throws on failure.
  void validate() const;
  // Smallest c with B(x_K, c sigma) in K and |(K|L)| >= c sigma^(d-1) for all cells/faces.
  double regularity_witness() const;
  Region cell_region(int k) const { return cells[k].geom; }
};

FVMesh build_grid_mesh(int dim, const Pt& lo, const Pt& hi, const std::array<int, 3>& res);
FVMesh fv_mesh_from_json(const std::string& text);
std::string fv_mesh_to_json(const FVMesh& mesh);

struct IsotropyReport {
  double deficit = 0;      // max(0, largest eigenvalue - 1) over cells
  double max_eigen = 0;    // largest eigenvalue over cells
  int worst_cell = -1;
};

IsotropyReport isotropy_report(const FVMesh& mesh);
double isotropy_deficit(const FVMesh& mesh);

// (Div M)_K = sum_L |(K|L)|/|K| M_KL, M stored once per interior face along n_KL.
Vec fv_divergence(const FVMesh& mesh, const Vec& M);
double fv_action(const FVMesh& mesh, MeanKind mean, const Vec& P, const Vec& M);
double fv_action_conjugate(const FVMesh& mesh, MeanKind mean, const Vec& P, const Vec& B);
double fv_scalar_product(const FVMesh& mesh, const Vec& M, const Vec& B);

Vec fv_sample_density(const FVMesh& mesh, const GenericMeasure& rho, int order = 5);
// Cell averages of a density given by a function.
Vec fv_sample_density_fn(const FVMesh& mesh, const TestFunction& f, int order = 5);
// Face averages of m . n_KL; also the adjoint R_Y^T of the momentum reconstruction.
Vec fv_sample_momentum(const FVMesh& mesh, const TestFunction& m, int order = 5);

enum class Recon { kCE, kA, kY };

GenericMeasure fv_reconstruct_density(const FVMesh& mesh, Recon which, const Vec& P);
GenericMeasure fv_reconstruct_momentum(const FVMesh& mesh, const Vec& M);

// Cell chain from the cell of x to the cell of y (axis-ordered walk on grids, BFS otherwise).
std::vector<int> fv_cell_chain(const FVMesh& mesh, int from, int to);
ControllabilityPath fv_controllability_path(const FVMesh& mesh, MeanKind mean, const Pt& x, const Pt& y, int N);

}  // namespace otbb

#endif
