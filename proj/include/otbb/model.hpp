/*************************************************************************************************
 * Discrete model facade
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

#ifndef OTBB_MODEL_HPP
#define OTBB_MODEL_HPP

#include <Eigen/SparseCore>
#include <memory>
#include <vector>

#include "otbb/fvmodel.hpp"
#include "otbb/trimodel.hpp"

namespace otbb {

enum class ModelKind { kFV, kTri };

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// One kinetic term of the action: w |m|^2 / (2 s) with s = sum coef_j P_j (arithmetic
// FV faces and triangles), or |f| d m^2 / (2 theta(P_a, P_b)) for the other FV means.
struct KineticElement {
  std::vector<std::pair<int, double>> s_coef;  // arithmetic: s = sum c P
  int a = -1, b = -1;                          // non-arithmetic: cells K, L
  int m_offset = 0;
  int m_dim = 1;
  double weight = 0;                           // w
  double metric = 0;                           // scalar-product weight of one momentum coordinate
};

// Uniform view over the finite-volume and triangle models.
class DiscreteModel {
 public:
  static DiscreteModel fv(FVMesh mesh, MeanKind mean = MeanKind::kArithmetic);
  static DiscreteModel tri(TriMesh mesh);

  ModelKind kind() const { return kind_; }
  MeanKind mean() const { return mean_; }
  bool two_copy() const { return kind_ == ModelKind::kFV && mean_ != MeanKind::kArithmetic; }
  const FVMesh& fv_mesh() const { return *fv_; }
  const TriMesh& tri_mesh() const { return *tri_; }

  int n_density() const { return static_cast<int>(vol_.size()); }
  int n_momentum() const { return static_cast<int>(mweight_.size()); }
  // Measure space dimension of reconstructions.
  int space_dim() const;
  Metric metric() const;
  double sigma() const;
  const Vec& volumes() const { return vol_; }
  // Scalar-product weights per momentum coordinate: <M,B> = sum mweight M B.
  const Vec& momentum_weights() const { return mweight_; }
  // vol .* Div as a sparse matrix (n_density x n_momentum).
  const SpMat& weighted_divergence() const { return wdiv_; }
  const std::vector<KineticElement>& elements() const { return elements_; }
  // Density node positions (cell centers or vertices on the surface).
  std::vector<Pt> positions() const;

  Vec divergence(const Vec& M) const;
  // Discrete gradient, the negative adjoint of Div: <M, grad phi> = -sum vol phi Div M.
  Vec gradient(const Vec& phi) const;
  double action(const Vec& P, const Vec& M) const;
  double action_conjugate(const Vec& P, const Vec& B) const;
  // Coefficients a with the arithmetic-mean conjugate equal to sum_j P_j vol_j a_j.
  Vec conjugate_coefficients(const Vec& B) const;
  double scalar_product(const Vec& M, const Vec& B) const;
  double mass(const Vec& P) const { return P.dot(vol_); }

  Vec sample_density(const GenericMeasure& rho, int order = 5) const;
  Vec sample_density_fn(const TestFunction& f, int order = 5) const;
  Vec sample_momentum(const TestFunction& m, int order = 5) const;
  GenericMeasure reconstruct_density(Recon which, const Vec& P) const;
  GenericMeasure reconstruct_momentum(const Vec& M) const;
  ControllabilityPath controllability(const Pt& x, const Pt& y, int N) const;
  // Quadrature nodes covering the domain, used for continuous reference functionals.
  std::vector<QuadNode> domain_quadrature(int order = 5) const;

 private:
  void finish();

  ModelKind kind_ = ModelKind::kFV;
  MeanKind mean_ = MeanKind::kArithmetic;
  std::shared_ptr<const FVMesh> fv_;
  std::shared_ptr<const TriMesh> tri_;
  Vec vol_, mweight_;
  SpMat wdiv_;
  std::vector<KineticElement> elements_;
};

}  // namespace otbb

#endif
