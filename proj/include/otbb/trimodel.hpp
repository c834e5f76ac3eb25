/*************************************************************************************************
 * Triangulated surface meshes and operators
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

#ifndef OTBB_TRIMODEL_HPP
#define OTBB_TRIMODEL_HPP

#include <array>
#include <string>
#include <vector>

#include "otbb/fvmodel.hpp"
#include "otbb/measures.hpp"
#include "otbb/path.hpp"

namespace otbb {

enum class SurfaceKind { kSphere, kFlat };

// Densities live on vertices. Momenta are tangent vectors per triangle, stored as
// two coordinates in the orthonormal basis (t1_K, t2_K) of the triangle plane.
struct TriMesh {
  SurfaceKind kind = SurfaceKind::kSphere;
  std::vector<Pt> verts;
  std::vector<std::array<int, 3>> tris;
  std::vector<double> area;
  std::vector<Pt> normal;
  std::vector<double> offset;                 // plane n_K . x = offset_K
  std::vector<std::array<Pt, 3>> grad;        // hat gradients per corner
  std::vector<std::array<Pt, 2>> tbasis;
  Vec vertex_area;                            // |T_v| = (1/3) sum |K|
  std::vector<std::vector<int>> vert_tris;
  double sigma = 0;                           // max triangle diameter

  int n_vertices() const { return static_cast<int>(verts.size()); }
  int n_triangles() const { return static_cast<int>(tris.size()); }

  // Surface point x -> triangle whose preimage contains it (smallest index on ties) and
  // barycentric coordinates of Psi(x). Returns -1 when x is not on the surface.
  int locate(const Pt& x, Pt* bary = nullptr) const;
  // Psi restricted to the plane of K.
  Pt psi(int K, const Pt& x) const;
  // DPsi(x) w for x on the surface, w tangent at x.
  Pt dpsi(int K, const Pt& x, const Pt& w) const;
  // Preimage region Psi^{-1}(K) (spherical or flat triangle).
  Region preimage(int K) const;
  // Surface point for a vertex: v/|v| on the sphere.
  Pt surface_point(int v) const;
  double regularity_witness() const;  // min inradius/diameter
};

TriMesh build_icosphere(int subdiv);
// Unit square [0,1]^2 split into n x n squares, each cut along the same diagonal.
TriMesh build_flat_grid(int n);
TriMesh build_tri_mesh(SurfaceKind kind, std::vector<Pt> verts, std::vector<std::array<int, 3>> tris);
// ASCII OFF; the surface kind is detected from vertex norms unless forced.
TriMesh tri_mesh_from_off(const std::string& text);

Vec tri_momentum_from_ambient(const TriMesh& mesh, const std::vector<Pt>& M);
std::vector<Pt> tri_momentum_to_ambient(const TriMesh& mesh, const Vec& M);

Vec tri_divergence(const TriMesh& mesh, const Vec& M);
double tri_action(const TriMesh& mesh, const Vec& P, const Vec& M);
double tri_action_conjugate(const TriMesh& mesh, const Vec& P, const Vec& B);
double tri_scalar_product(const TriMesh& mesh, const Vec& M, const Vec& B);

Vec tri_sample_density(const TriMesh& mesh, const GenericMeasure& rho, int order = 5);
Vec tri_sample_density_fn(const TriMesh& mesh, const TestFunction& f, int order = 5);
// (1/|K|) int_{Psi^{-1}K} DPsi m; also the adjoint R_Y^T of the momentum reconstruction.
Vec tri_sample_momentum(const TriMesh& mesh, const TestFunction& m, int order = 5);

GenericMeasure tri_reconstruct_density(const TriMesh& mesh, Recon which, const Vec& P);
GenericMeasure tri_reconstruct_momentum(const TriMesh& mesh, const Vec& M);

struct DistortionReport {
  double normal_deviation = 0;
  double alpha_max = 0;   // max |alpha_v|
  double beta_max = 0;    // max |beta_K|
  double theta_max = 0;   // max theta_K
  Vec alpha, beta, theta;
};

DistortionReport tri_distortion(const TriMesh& mesh, int order = 5);

ControllabilityPath tri_controllability_path(const TriMesh& mesh, const Pt& x, const Pt& y, int N);

}  // namespace otbb

#endif
