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

#include "otbb/model.hpp"

#include <cmath>

namespace otbb {

DiscreteModel DiscreteModel::fv(FVMesh mesh, MeanKind mean) {
  DiscreteModel m;
  m.kind_ = ModelKind::kFV;
  m.mean_ = mean;
  m.fv_ = std::make_shared<const FVMesh>(std::move(mesh));
  m.finish();
  return m;
}

DiscreteModel DiscreteModel::tri(TriMesh mesh) {
  DiscreteModel m;
  m.kind_ = ModelKind::kTri;
  m.tri_ = std::make_shared<const TriMesh>(std::move(mesh));
  m.finish();
  return m;
}

void DiscreteModel::finish() {
  std::vector<Eigen::Triplet<double>> trip;
  if (kind_ == ModelKind::kFV) {
    const FVMesh& mesh = *fv_;
    vol_ = mesh.volumes();
    mweight_.resize(mesh.n_faces());
    for (int i = 0; i < mesh.n_faces(); ++i) {
      const FVFace& f = mesh.faces[i];
      mweight_[i] = f.area * f.dist;
      trip.emplace_back(f.K, i, f.area);
      trip.emplace_back(f.L, i, -f.area);
      KineticElement e;
      e.m_offset = i;
      e.m_dim = 1;
      e.metric = f.area * f.dist;
      if (mean_ == MeanKind::kArithmetic) {
        e.s_coef = {{f.K, 1.0}, {f.L, 1.0}};
        e.weight = 2 * f.area * f.dist;
      } else {
        e.a = f.K;
        e.b = f.L;
        e.weight = f.area * f.dist;
      }
      elements_.push_back(std::move(e));
    }
  } else {
    const TriMesh& mesh = *tri_;
    vol_ = mesh.vertex_area;
    mweight_.resize(2 * mesh.n_triangles());
    for (int K = 0; K < mesh.n_triangles(); ++K) {
      mweight_[2 * K] = mweight_[2 * K + 1] = mesh.area[K];
      KineticElement e;
      e.m_offset = 2 * K;
      e.m_dim = 2;
      e.weight = mesh.area[K];
      e.metric = mesh.area[K];
      for (int i = 0; i < 3; ++i) {
        int v = mesh.tris[K][i];
        e.s_coef.emplace_back(v, 1.0 / 3);
        for (int c = 0; c < 2; ++c)
          trip.emplace_back(v, 2 * K + c, -mesh.area[K] * mesh.grad[K][i].dot(mesh.tbasis[K][c]));
      }
      elements_.push_back(std::move(e));
    }
  }
  wdiv_.resize(n_density(), n_momentum());
  wdiv_.setFromTriplets(trip.begin(), trip.end());
}

int DiscreteModel::space_dim() const { return kind_ == ModelKind::kFV ? fv_->dim : 3; }

Metric DiscreteModel::metric() const {
  return kind_ == ModelKind::kTri && tri_->kind == SurfaceKind::kSphere ? Metric::kSphere : Metric::kFlat;
}

double DiscreteModel::sigma() const { return kind_ == ModelKind::kFV ? fv_->sigma : tri_->sigma; }

std::vector<Pt> DiscreteModel::positions() const {
  std::vector<Pt> out;
  if (kind_ == ModelKind::kFV) {
    for (const auto& c : fv_->cells) out.push_back(c.center);
  } else {
    for (int v = 0; v < tri_->n_vertices(); ++v) out.push_back(tri_->surface_point(v));
  }
  return out;
}

Vec DiscreteModel::divergence(const Vec& M) const {
  require(M.size() == n_momentum(), "momentum does not match the model");
  return (wdiv_ * M).cwiseQuotient(vol_);
}

Vec DiscreteModel::gradient(const Vec& phi) const {
  require(phi.size() == n_density(), "potential does not match the model");
  return -(wdiv_.transpose() * phi).cwiseQuotient(mweight_);
}

double DiscreteModel::action(const Vec& P, const Vec& M) const {
  return kind_ == ModelKind::kFV ? fv_action(*fv_, mean_, P, M) : tri_action(*tri_, P, M);
}

double DiscreteModel::action_conjugate(const Vec& P, const Vec& B) const {
  return kind_ == ModelKind::kFV ? fv_action_conjugate(*fv_, mean_, P, B) : tri_action_conjugate(*tri_, P, B);
}

Vec DiscreteModel::conjugate_coefficients(const Vec& B) const {
  require(B.size() == n_momentum(), "momentum does not match the model");
  Vec a = Vec::Zero(n_density());
  for (const auto& e : elements_) {
    double b2 = 0;
    for (int c = 0; c < e.m_dim; ++c) b2 += B[e.m_offset + c] * B[e.m_offset + c];
    if (kind_ == ModelKind::kFV) {
      const FVFace& f = fv_->faces[e.m_offset];
      a[f.K] += 0.25 * b2 * e.metric;
      a[f.L] += 0.25 * b2 * e.metric;
    } else {
      for (const auto& [v, c] : e.s_coef) a[v] += 0.5 * c * b2 * e.metric;
    }
  }
  return a.cwiseQuotient(vol_);
}

double DiscreteModel::scalar_product(const Vec& M, const Vec& B) const {
  require(M.size() == n_momentum() && B.size() == n_momentum(), "momentum does not match the model");
  return M.cwiseProduct(B).dot(mweight_);
}

Vec DiscreteModel::sample_density(const GenericMeasure& rho, int order) const {
  return kind_ == ModelKind::kFV ? fv_sample_density(*fv_, rho, order) : tri_sample_density(*tri_, rho, order);
}

Vec DiscreteModel::sample_density_fn(const TestFunction& f, int order) const {
  return kind_ == ModelKind::kFV ? fv_sample_density_fn(*fv_, f, order) : tri_sample_density_fn(*tri_, f, order);
}

Vec DiscreteModel::sample_momentum(const TestFunction& m, int order) const {
  return kind_ == ModelKind::kFV ? fv_sample_momentum(*fv_, m, order) : tri_sample_momentum(*tri_, m, order);
}

GenericMeasure DiscreteModel::reconstruct_density(Recon which, const Vec& P) const {
  return kind_ == ModelKind::kFV ? fv_reconstruct_density(*fv_, which, P) : tri_reconstruct_density(*tri_, which, P);
}

GenericMeasure DiscreteModel::reconstruct_momentum(const Vec& M) const {
  return kind_ == ModelKind::kFV ? fv_reconstruct_momentum(*fv_, M) : tri_reconstruct_momentum(*tri_, M);
}

ControllabilityPath DiscreteModel::controllability(const Pt& x, const Pt& y, int N) const {
  return kind_ == ModelKind::kFV ? fv_controllability_path(*fv_, mean_, x, y, N)
                                 : tri_controllability_path(*tri_, x, y, N);
}

std::vector<QuadNode> DiscreteModel::domain_quadrature(int order) const {
  std::vector<QuadNode> out;
  if (kind_ == ModelKind::kFV) {
    for (const auto& c : fv_->cells)
      for (const auto& q : c.geom.quadrature(order)) out.push_back(q);
  } else {
    for (int K = 0; K < tri_->n_triangles(); ++K)
      for (const auto& q : tri_->preimage(K).quadrature(order)) out.push_back(q);
  }
  return out;
}

}  // namespace otbb
